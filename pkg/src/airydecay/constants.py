# Nystrom / truncation
DEFAULT_NODES = 60
MAX_TRUNCATION_LENGTH = 40.0
MIN_TRUNCATION_LENGTH = 4.0
AIRY_TAIL_CUT = 16.0
SERIES_RADIUS = 0.5
ROUNDOFF_FACTOR = 10.0
HEAT_RESOLUTION_U = 0.5

# Airy function
AIRY_BRANCH_CUT = 8.0
AIRY_MAX_ARGUMENT = 1.0e4
AIRY_SERIES_TERMS = 30

# Airy1 kernel
MIN_KERNEL_U = 0.05
MAX_KERNEL_U = 8.0
MIN_THRESHOLD = -12.0
MAX_THRESHOLD = 12.0
RELIABLE_MARGINAL_PRODUCT = 1.0e-13
R1_CONSTANT = 10.0
R2_CONSTANT = 10.0
CALIBRATION_SAFETY = 2.0

# Covariance
ASYMPTOTIC_REGIME_U = 3.0
DEFAULT_WINDOW = (-10.0, 6.0)
DEFAULT_GRID = 64
MIN_GRID = 16
SKIP_MARGINAL_PRODUCT = 1.0e-30
COARSE_GRID_GAP = 0.1
MIN_LOWER_WINDOW_U = 1.1
MIN_DECAY_FIT_U = 1.2

# Last passage percolation
MAX_FIELD_SIZE = 4000
MIN_COV_SAMPLES = 100
JACKKNIFE_BLOCKS = 100
MC_BATCH_SIZE = 4096
MAX_SEED = 2 ** 63

# Command line
SCHEMA_VERSION = 1
THREADS_ENV_VAR = "AIRY_DECAY_THREADS"
