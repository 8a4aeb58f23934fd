"""KS-regularized Coulomb-type Hamiltonian flows and trapping diagnostics."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AtSingularity,
    BadIndex,
    BudgetExceeded,
    ConfigError,
    DegenerateFiber,
    EmptyShell,
    EventOverflow,
    GridTooSmall,
    KSFlowError,
    LiftFailure,
    NoRadiusFound,
    StepRejected,
    WrongFamily,
    ZeroBasePoint,
)
from .quat_hopf import (  # noqa: F401
    Quaternion,
    bilinear_constraint,
    circle_act,
    fiber_average_inverse_square,
    hopf,
    hopf_distance,
    ks_lift,
    ks_project,
    section,
)
from .potential import (  # noqa: F401
    PotentialSpec,
    eval_grad,
    eval_potential,
    free,
    hill_member,
    local_chart_data,
    multi_coulomb,
    potential_from_dict,
    smeared_molecular,
    yukawa,
)
from .dynamics import (  # noqa: F401
    BrokenTrajectory,
    IntegratorOptions,
    PhaseState,
    direct_step,
    hamiltonian,
    ks_segment,
    propagate,
)
from .analysis import (  # noqa: F401
    Verdict,
    classify,
    dilation_bracket,
    escape_radius,
    hill_components,
    nontrap_scan,
    nontrap_threshold_repulsive,
    regularized_virial_residual,
)
