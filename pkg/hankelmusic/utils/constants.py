"""Module containing useful constants
"""

import numpy as np

# math constants
sqrt2 = np.sqrt(2e0)
two_over_pi = 2e0 / np.pi

# default knobs of the estimator
DEFAULT_M = 100
DEFAULT_GRID_STEP_RL = 0.05  # scan grid spacing in Rayleigh lengths
DEFAULT_REFINE_TOL = 1e-10  # golden-section tolerance, in omega units
DEFAULT_THREADS = 1

# numerical floors
SINGULAR_VALUE_FLOOR = 1e-14  # absolute floor used by model-order estimation
ORACLE_RANK_TOL = 1e-10  # relative cut for nonzero singular values
ZERO_MATRIX_TOL = 1e-300  # below this the Hankel matrix is taken as zero
IMAGING_CAP = 1e16  # value of J where R vanishes
WEYL_SLACK = 1e-9

# random streams of a trial seed
MODEL_STREAM = 0
NOISE_STREAM = 1

# amplitude phase laws
PHASE_MODES = ("random-complex", "real-positive", "alternating-sign")
LAYOUTS = ("random", "equispaced")

# exponents e(R*) of the noise tolerance q^e(R*) fitted on phase-transition
# plots with M = 100 and 100 trials per cell
PUBLISHED_EXPONENTS = {2: 3.6691, 3: 6.0565, 4: 8.3861, 5: 11.2392}
EXPONENT_TREND_SLOPE = 2.504
EXPONENT_TREND_INTERCEPT = -1.4262

# success criterion on d(S, S^) / q
SUCCESS_RATIO = 0.5

# SVG reproducibility
SVG_HASHSALT = "hankelmusic"
