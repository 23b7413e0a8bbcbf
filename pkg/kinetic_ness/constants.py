"""All (global/common) constants for the kinetic simulator."""

from typing import Final

# safety factor applied to the transport CFL bound dx / v_max
CFL_SAFETY: Final[float] = 0.9

# default velocity truncation: v_max = VMAX_SIGMAS * sqrt(max temperature)
VMAX_SIGMAS: Final[float] = 8.0

DEFAULT_STEADY_TOL: Final[float] = 1e-10
DEFAULT_TOL_FP: Final[float] = 1e-4
DEFAULT_THETA: Final[float] = 0.5
DEFAULT_MAX_OUTER: Final[int] = 50

# largest alpha treated as inside the proven (small nonlinearity) regime
ALPHA_BUDGET: Final[float] = 0.1
# relative slack on the invariant interval [0, 2 E0] absorbing discretization error
INTERVAL_MARGIN: Final[float] = 0.05

# default monitoring weight: k = d + 2, zeta = 0.01, s = 1
DEFAULT_WEIGHT_ZETA: Final[float] = 0.01
DEFAULT_WEIGHT_S: Final[float] = 1.0

# relative negative mass tolerated when clipping a perturbed state
CLIP_TOLERANCE: Final[float] = 1e-6

THREADS_ENV: Final[str] = "KINETIC_NESS_THREADS"

RUN_CSV_COLUMNS: Final[tuple[str, ...]] = (
    "t",
    "mass",
    "energy",
    "l2w_distance",
    "boundary_energy_flux",
)
SNAPSHOT_HEADER: Final[tuple[str, ...]] = ("d", "Nx", "Nv", "v_max", "t", "mass", "energy")

# 17 significant digits: every float64 survives a CSV round trip bit for bit
CSV_FLOAT_FORMAT: Final[str] = "%.17g"
