"""Module-level names shared across iso_lab."""

LOG_FILE = "iso_lab.log"

# Size caps
MAX_MATRIX_DIM = 64
ENUMERATION_CAP = 24  # families are enumerated over at most 2^24 subsets
SIMPLEX_COLUMN_CAP = 100_000  # above this the witness game falls back to MWU

# Eigensolver
JACOBI_TOL = 1e-12  # off-diagonal Frobenius norm relative to 1 + ||A||_HS
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12

# Membership and ledger tolerances
BOUNDARY_TOL = 1e-9  # inclusive slack on spectral bounds
ZERO_COLUMN_TOL = 1e-12
ZERO_DIAGONAL_TOL = 1e-12
NORM_ONE_TOL = 1e-9
UNIT_COLUMN_TOL = 1e-9
PROBABILITY_TOL = 1e-12  # probability weights sum to 1; also the mu tie margin

# Witness game
PIVOT_TOL = 1e-12
SIMPLEX_PIVOT_CAP = 200_000
CERTIFICATE_GAP_TOL = 1e-9
MWU_ITERATIONS = 20_000

# Pipeline
DEFAULT_C = 2.0
DEFAULT_EPSILON = 0.5

# Testbed
DOWNWARD_CLOSURE_SAMPLES = 64
DEFAULT_RATE_TRIALS = 10_000

# Output files
PLOT_TSV = "constants_plot.tsv"
PLOT_JSON = "constants_plot.json"
PLOT_HTML = "constants_plot.html"
