from commons.definitions import StringEnumWithChoices

# theta / products
THETA_TRUNCATION_RATIO = 1e-17
THETA_CONSECUTIVE_SMALL_TERMS = 3
# theta uses the triple product instead of the bilateral series from this |q| on
THETA_PRODUCT_MIN_MODULUS = 0.9
PRODUCT_DEFAULT_TOL = 1e-16

# series
SERIES_DEFAULT_TOL = 1e-15
SERIES_CONSECUTIVE_SMALL_TERMS = 3
MIN_TERM_CAP = 1000
TERM_CAP_SCALE = 1000.0  # cap grows like TERM_CAP_SCALE / (1 - |q|)

# parameter validation
SPIRAL_DEFAULT_TOL = 1e-9
MAX_SPIRAL_SHIFT = 200
TERMINATION_TOL = 1e-12

# q-Borel / q-Laplace
BOREL_INNER_RADIUS = 0.6
BOREL_OUTER_SWITCH = 0.9
BOREL_SPIRAL_GUARD = 0.05
JACKSON_CONSECUTIVE_SMALL_TERMS = 5
JACKSON_MAX_WINDOW = 400
POLE_PROXIMITY_TOL = 1e-6
JACKSON_DEFAULT_TOL = 1e-16
OPTIMAL_TRUNCATION_MAX_TERMS = 60

# classical side
GAMMA_POLE_TOL = 1e-14
LIMIT_SCAN_ERROR_FLOOR = 1e-300

# reports
REPORT_SCHEMA_VERSION = 1
CSV_COLUMNS = ("q", "x_re", "x_im", "value_re", "value_im", "method", "terms_used", "rel_error")

# command-line options whose values may start with a minus sign
VALUE_OPTIONS = ("--q", "--a", "--b", "--alpha", "--beta", "--lambda", "--x", "--q-list")


class SumMethod(StringEnumWithChoices):
    """How a [lambda;p]-sum is evaluated."""

    DIRECT = "direct"
    CLOSED = "closed"
    BOTH = "both"


class JobCommand(StringEnumWithChoices):
    """Sub-commands of the ``qsum`` management command."""

    EVAL = "eval"
    THETA = "theta"
    QSUM = "qsum"
    VERIFY = "verify"
    STOKES = "stokes"
    LIMIT_SCAN = "limit-scan"


class OutputFormat(StringEnumWithChoices):
    JSON = "json"
    CSV = "csv"
