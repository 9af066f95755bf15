"""Pseudo-spectral 2D incompressible MHD with anisotropic dissipation."""

from .kernels import BACKEND
from .spectral import (
    Grid,
    RealField,
    SpectralField,
    biot_savart,
    dealias,
    hs_norm,
    lp_norm,
    make_grid,
    spectral_derivative,
)
from .solver import (
    BlowUpError,
    CflError,
    MhdParams,
    MhdState,
    MollifierSpec,
    analytic_reference,
    mollify_initial_data,
    step,
)
from .diagnostics import (
    DiagnosticsRecord,
    DiagnosticsSeries,
    bound_monitor,
    energy_budget_residual,
    record_state,
    regularity_criterion,
)
from .inequalities import (
    DegenerateInputError,
    InequalityReport,
    RandomFieldSpec,
    check_inequality,
    run_campaign,
    sample_field,
)
from .config import ConfigError, RunConfig, parse_config
from .runner import main_run, run
from .experiments import epsilon_refinement_experiment, swap_symmetry_experiment

__version__ = "0.1.0"
