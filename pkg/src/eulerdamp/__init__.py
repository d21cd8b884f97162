"""Numerical laboratory for the 1D p-system with time-decaying damping."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    GasState,
    Parameters,
    RiemannPair,
    VacuumError,
    damping_coefficient,
    damping_weight,
    eta,
    eta_inv,
    from_riemann,
    log_damping_weight,
    pressure,
    sound_speed,
    theta_gamma,
    to_riemann,
)
from .solver import (  # noqa: F401
    BLOWUP,
    CFL_FAILURE,
    GLOBAL,
    VACUUM,
    CflError,
    Grid,
    HistoryCoverageError,
    InitialData,
    RiemannField,
    RunOutcome,
    RunStatus,
    SnapshotPolicy,
    SolutionHistory,
    init,
    run,
    step,
)
from .fv import ConservativeField, fv_init, fv_run, fv_step  # noqa: F401
from .characteristics import (  # noqa: F401
    CharTrace,
    lax_oracle_blowup_time,
    riccati_integrate,
    simple_wave_oracle_lifespan,
    theta_transport_residual,
    trace,
    trace_many,
    verify_theta_identity,
    weighted_gradient_along,
)
from .analysis import (  # noqa: F401
    DegenerateWindowError,
    FitResult,
    check_lemma_decA,
    check_lemma_esP,
    fit_decay_exponent,
    fit_lifespan_scaling,
    measure_lifespan,
    predicted_regime,
    threshold_map,
    weighted_damping_integral,
)
