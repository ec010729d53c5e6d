"""
splitlab: classical and initial-corrected Strang splitting for
convection-diffusion-reaction problems with Dirichlet boundary data.

The pieces, bottom to top:

- :mod:`splitlab.grid` uniform interior grids and fields
- :mod:`splitlab.operators` finite-difference Laplacian and upwind convection
- :mod:`splitlab.integrators` Dormand-Prince 5(4) and fixed-step RK4
- :mod:`splitlab.scenarios` built-in problems and scenario files
- :mod:`splitlab.splitting` the splitting schemes
- :mod:`splitlab.lab` reference solutions and convergence studies
"""

from .errors import *  # noqa: F401,F403
from .grid import Field, Grid, field_from_fn, inf_norm_diff, make_grid
from .integrators import OdeProblem, OdeResult, ToleranceSpec, rk4_fixed, rk45_adaptive
from .lab import (
    ConvergenceReport,
    ReferenceCache,
    convergence_study,
    emit_csv,
    emit_plot,
    observed_orders,
    read_csv,
    reference_solution,
)
from .operators import (
    BoundaryTrace,
    Discretization,
    VelocityField,
    apply_laplacian,
    apply_upwind_convection,
    full_rhs,
    inflow_boundary,
)
from .scenarios import Scenario, builtin_scenario, exact_solution, load_scenario
from .splitting import (
    SchemeKind,
    build_correction,
    integrate,
    modified_nonlinearity,
    run_scheme,
    strang_step_classical,
    strang_step_corrected,
)

__version__ = "0.1.0"
