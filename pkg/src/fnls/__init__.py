"""Matrix-free pseudo-spectral simulator for the fractional NLS equation."""

from .invariants import (
    InvariantSample,
    discrete_energy_rho,
    discrete_energy_single,
    discrete_energy_two_step,
    discrete_mass,
)
from .krylov import (
    BreakdownError,
    SolverConfig,
    SolverMethod,
    SolverReport,
    bicgstab,
    cocg,
    cocr,
)
from .operators import (
    DiagonalPreconditioner,
    StepOperator,
    TransformedOperator,
    make_preconditioner,
    precond_solve,
    rhs_build,
    step_apply,
    step_operator,
    step_operator_from_density,
    transform_operator,
    transformed_apply,
)
from .schemes import (
    ModulatedSech,
    ProblemSpec,
    SchemeState,
    StarterError,
    StepSolveError,
    Strategy,
    Trajectory,
    cn_integrate,
    cn_start,
    integrate,
    li_rho_step,
    li_step,
)
from .spectral import (
    DimensionError,
    FractionalSymbol,
    Grid,
    apply_multiplier,
    build_symbol,
    dft_forward,
    dft_inverse,
    wavenumbers,
)

__version__ = "0.1.0"
