"""Small-divisor analysis and Newton trivialization of cocycles over complex tori."""

__version__ = "0.1.0"

from .cocycle_lab import (  # noqa: E402
    SynthesisSpec, inject_resonance, random_near_identity, synthesize_cocycle,
)
from .cohomology import (  # noqa: E402
    CohomologySolution, SolverSettings, apply_L, check_compatibility, solve_cohomology,
)
from .errors import (  # noqa: E402
    BadJet, ConfigError, DegreeOverflow, Diverged, Incompatible, ResonantMode,
    ScheduleError, SpecMismatch, TorikamError,
)
from .lattice import (  # noqa: E402
    DeckMaps, DiophantineReport, FlatBundleData, TorusLattice, deck_multipliers,
    diophantine_scan, small_divisor, unit_divisor,
)
from .newton import (  # noqa: E402
    Cocycle, ConvergenceReport, DomainSchedule, automorphy_residual, newton_step,
    schedule, trivialize,
)
from .series import (  # noqa: E402
    FourierTaylorSeries, MajorantWeight, MatrixSeries, TruncationSpec, add,
    compose_deck, evaluate, jet_truncate, majorant_norm, mul, neumann_inverse,
)
