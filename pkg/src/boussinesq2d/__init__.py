"""Pseudo-spectral simulator and verification harness for the anisotropic 2D Boussinesq equations."""

from boussinesq2d.cases import (
    CASE_ROWS,
    case_matrix,
    identify_case,
    reflect_config,
    reflect_state,
    verify_symmetry,
)
from boussinesq2d.config import RunConfig
from boussinesq2d.diagnostics import BudgetLedger, DiagnosticsRecord, record
from boussinesq2d.errors import (
    BlowUpError,
    BoussinesqError,
    BuoyancyEvaluationError,
    ConfigurationError,
    ContractViolationError,
    CorruptedSpectrumError,
    FormatError,
    IncompatibleDataError,
)
from boussinesq2d.estimates import (
    check_case_bounds,
    check_F_equation,
    check_theta_energy,
    check_velocity_energy,
    monitor_criteria,
    stability_experiment,
)
from boussinesq2d.inequalities import FieldSampler, InequalityReport, run_identity_checks, run_inequalities
from boussinesq2d.initial import make_state
from boussinesq2d.model import (
    BuoyancyLaw,
    State,
    StepperConfig,
    ViscosityMatrix,
    buoyancy_law,
    recover_pressure,
    rhs,
    step,
)
from boussinesq2d.runner import RunResult, simulate
from boussinesq2d.snapshot import Snapshot
from boussinesq2d.spectral import (
    Grid,
    SpectralField,
    VectorField,
    dealias,
    deriv,
    leray_project,
    mollify,
    norm,
    transform_forward,
    transform_inverse,
    velocity_from_vorticity,
    vorticity,
)

__version__ = "0.1.0"
