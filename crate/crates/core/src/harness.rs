// harness is implemented after the pilot numerics
