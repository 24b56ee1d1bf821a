"""Dirichlet-Neumann waveform relaxation for 1-D delayed reaction-diffusion."""
from .errors import (
    ArityMismatchError,
    ConfigError,
    DnwrError,
    EvenSubdomainCountError,
    InterfaceMismatchError,
    MisalignedBreakpointError,
    NonCommensurateError,
    ShapeMismatchError,
    SingularSystemError,
    TooFewNodesError,
    TooThinSubdomainError,
)
from .model import (
    INITIALIZERS,
    ConvergenceRecord,
    Decomposition,
    FluxTrace,
    InterfaceTrace,
    ProblemSpec,
    SpaceTimeGrid,
    SubdomainField,
    build_grid,
    equal_partition,
    initialize_interfaces,
    partition,
)
from .oracle import (
    GlobalField,
    glue,
    interface_norm,
    manufactured_problem,
    monodomain_solve,
    norm_l2t_linfx,
    restrict,
)
from .orchestrator import (
    ArrangementKind,
    DnwrResult,
    DnwrState,
    RunParams,
    iterate_central,
    iterate_redblack,
    iterate_sweep,
    relax_update,
    run_dnwr,
)
from .stepper import (
    DelayBuffer,
    EndCondition,
    extract_dirichlet_trace,
    extract_flux,
    solve_subdomain,
    step_subdomain,
    transmission_flux,
)

__version__ = "0.1.0"
