# ============================================================================
# Q-FAVARD-SZASZ OPERATOR LAB - CONFIGURATION
# ============================================================================
# Central configuration file for all numerical and CLI settings
# Modify this file to customize behavior without changing code
# ============================================================================

# ============================================================================
# SERIES TRUNCATION
# ============================================================================

TOL_REL = 1e-13  # Stop when tail bounds fall below TOL_REL * |partial sum| ...
TOL_ABS = 1e-300  # ... + TOL_ABS
TAIL_TOL_FRACTION = 0.1  # Tail bound t_k / (1 - r_k) is held to this share of the tolerance
K_MAX = 20000  # Hard cap on the number of series terms
CONSECUTIVE_SMALL_TERMS = 3  # How many small terms in a row end a series
DOMAIN_MARGIN = 0.05  # Reject (1 - q) * z >= 1 - DOMAIN_MARGIN for e_q
SERIES_CHUNK = 256  # First block size when generating series terms
PRODUCT_TAIL_START = 0.5  # E_q products: factors with |(1 - q) q^k z| above this are multiplied out
PRODUCT_TAIL_TERMS = 128  # Terms of the log1p series summing the remaining factors

# Brute-force oracle runs with a tightened policy
ORACLE_TOL_DIVISOR = 100
ORACLE_KMAX_FACTOR = 4

# ============================================================================
# APPELL SYMBOL
# ============================================================================

A1_MIN_ABS = 1e-12  # |A(1)| must exceed this

# ============================================================================
# GRIDS & SUPREMUM ESTIMATES
# ============================================================================

SUP_GRID_POINTS = 256  # Uniform grid used for sup estimates on [0, b]
REFINE_REL_TOL = 1e-6  # Argmax refinement tolerance (relative)
MIN_GRID_POINTS = 64
X_MAX_FRACTION = 0.9  # Weighted norms stop at this fraction of the domain bound
CLASSICAL_X_MAX = 50.0  # Sweep end when q = 1 (no domain bound)
SWEEP_KMAX_FRACTION = 0.5  # Sweeps keep the series peak below this share of k_max
TAIL_X0_FRACTION = 0.5  # converge tail ratio covers [TAIL_X0_FRACTION * x_max, x_max]
DEFAULT_X_POINTS = 32  # x-points per domain when no --x list is given
HYBRID_GEOMETRIC_START = 1e-4  # First geometric node of the hybrid layout (x_max units)

# ============================================================================
# MODULUS OF CONTINUITY
# ============================================================================

MODULUS_STEP_DIVISOR = 8  # grid_step must not exceed delta / 8
MODULUS_REL_TOL = 1e-4  # Refine until two estimates agree to this
MODULUS_MAX_REFINEMENTS = 10
MODULUS_MAX_POINTS = 2 ** 22

# ============================================================================
# ERROR BOUND (MODULUS FORM)
# ============================================================================

NF_FACTOR = 6  # N_f = 6 * M_f
THEOREM3_SLACK = 1.05  # lhs <= slack * rhs absorbs grid under-estimation

# ============================================================================
# VALIDATION THRESHOLDS
# ============================================================================

MOMENT_ABS_TOL = 1e-8  # |closed - oracle| <= MOMENT_ABS_TOL * (1 + |x|) for r <= 1
GROWTH_CHECK_TOL = 1e-12

# ============================================================================
# CLI DEFAULTS
# ============================================================================

DEFAULT_Q_SCHEDULE = "one_minus_inv_n"
DEFAULT_BN = "power:0.3333333333333333"
DEFAULT_COEFFS = (1.0,)
DEFAULT_FUNCTION = "e2"
DEFAULT_N = (10, 100, 1000)
DEFAULT_B = (1.0, 2.0)
DEFAULT_ALPHA = 0.0
DEFAULT_WORKERS = 1
CSV_SIGNIFICANT_DIGITS = 17

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED_CHECK = 2
EXIT_IO = 3
EXIT_INTERNAL = 4  # Unexpected exception (traceback in FAILED_LOG)

# ============================================================================
# LOGGING
# ============================================================================

MASTER_LOG = "qfavard_log.txt"  # Activity log (None disables)
FAILED_LOG = "failed_steps.txt"  # Error log (None disables)
USE_COLOR = True  # colorama console colors
