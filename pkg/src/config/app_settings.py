#-------------------------------------
# Constants to Adjust
#-------------------------------------
# Library version recorded in every run manifest
LIBRARY_VERSION = "0.4.0"

# Default log file (relative to the working directory); override with VOLTERRA_LOG_FILE
LOG_FILE = "volterra_lab.log"

# Default Monte Carlo size and grid resolution when a config leaves them out
DEFAULT_N_PATHS = 10_000
DEFAULT_N_POINTS = 512
DEFAULT_HORIZON = 1.0

# Paths are generated in fixed-size chunks so results never depend on the thread count
PATH_CHUNK_SIZE = 256

# Number of sample paths written to paths.csv (the full ensemble stays in memory only)
EXPORT_PATH_LIMIT = 16

#-------------------------------------
# Special functions
#-------------------------------------
HYPERGEOMETRIC_MAX_TERMS = 10_000
HYPERGEOMETRIC_TERM_TOL = 1e-14
# Above this Pfaff argument the 1-w connection formula takes over
HYPERGEOMETRIC_CONNECTION_THRESHOLD = 0.5

#-------------------------------------
# Quadrature
#-------------------------------------
QUADRATURE_POINTS = 32
QUADRATURE_MAX_POINTS = 2048
QUADRATURE_REL_TOL = 1e-8
# Absolute floor below which an integral is treated as zero when checking the relative error
QUADRATURE_ABS_FLOOR = 1e-300
# Windows starting at s = 0 are split at hi * 2^-k, k = 1..QUADRATURE_ORIGIN_LEVELS
QUADRATURE_ORIGIN_LEVELS = 36

#-------------------------------------
# Covariance factorization (jitter policy)
#-------------------------------------
JITTER_INITIAL = 1e-12   # times trace / n
JITTER_ESCALATED = 1e-10  # times max diagonal

#-------------------------------------
# Drifts
#-------------------------------------
MOLLIFIER_NODES = 64
MOLLIFIER_SHAPES = ("symmetric", "one_sided")
LAMPERTI_CACHE_POINTS = 20_001
LAMPERTI_INVERSE_TOL = 1e-12

#-------------------------------------
# Solver
#-------------------------------------
# Geometric mollification ladder n_j = 4^j, j = 1..4
LADDER_LEVELS = (4, 16, 64, 256)

#-------------------------------------
# Statistics
#-------------------------------------
SMALL_BALL_MIN_HITS = 50
NORMALITY_MIN_SAMPLES = 100
JACKKNIFE_BLOCKS = 20
CI95_Z = 1.96

#-------------------------------------
# Verdict thresholds (configs may override these in their [verdict] section)
#-------------------------------------
VERDICT_DEFAULTS = {
    'slope_tolerance': 0.02,          # kernel slope must lie within H +/- this
    'small_ball_slope_tolerance': 0.15,
    'bound_ratio_factor': 2.0,
    'standard_errors': 3.0,
    'centering_standard_errors': 4.0,
    'cgp_mean': 0.04,
    'cgp_variance_low': 0.95,
    'cgp_variance_high': 1.05,
    'cgp_kurtosis': 0.15,
    'l2_slope_max': -1.8,
    'besov_stable_low': 0.8,
    'besov_stable_high': 1.25,
    'besov_growth': 1.3,
    'residual_tol': 1e-9,
    'indicator_gap_cells': 2.0,
    'ladder_fraction': 0.95,          # share of ladder traces that must decrease strictly
    'shape_gap_factor': 5.0,
    'besov_oracle_tolerance': 0.02,
    'identity_rel_tol': 1e-9,
}

#-------------------------------------
# Commands understood by the experiment runner (Don't change these)
#-------------------------------------
COMMANDS = (
    'paths',
    'solve',
    'verify-kernel',
    'small-ball',
    'dirichlet',
    'mixed-convergence',
    'besov',
    'cgp-check',
)

#-------------------------------------
# Per-command parameter defaults (filled into configs before hashing)
#-------------------------------------
COMMAND_PARAM_DEFAULTS = {
    'paths': {'method': 'both'},
    'solve': {
        'x0': 0.0,
        'levels': list(LADDER_LEVELS),
        'shapes': list(MOLLIFIER_SHAPES),
        'ladder_paths': 200,
    },
    'verify-kernel': {
        'eps_grid': [2.0 ** -k for k in range(2, 11)],
        't_grid': [0.25, 0.5, 0.75, 1.0],
    },
    'small-ball': {'x': 0.0, 'x0': 0.0, 'alphas': [2.0 ** -k for k in range(3, 9)]},
    # x0 off every truncated-rational set so b(0, x0) vanishes
    'dirichlet': {'x0': 0.7071067811865476},
    'mixed-convergence': {'h1': 0.3, 'h2': 0.75, 'ns': [2, 4, 8, 16, 32, 64], 'beta': 0.2, 'x0': 0.0},
    'besov': {
        'h1': 0.3,
        'h2': 0.75,
        'n': 1,
        'x0': 0.0,
        'stable_beta': 0.2,
        'rough_beta': 0.8,
        'oracle_points': 1024,
    },
    'cgp-check': {'epsilon': 0.0625, 'x0': 0.0},
}

# Commands whose noise is built from [params] h1/h2 instead of a [kernel] section
MIXED_COMMANDS = ('mixed-convergence', 'besov')
KERNEL_COMMANDS = ('paths', 'solve', 'verify-kernel', 'small-ball', 'dirichlet', 'cgp-check')
DRIFT_COMMANDS = ('solve', 'small-ball', 'dirichlet', 'mixed-convergence', 'cgp-check')
