"""Double-quantum-dot quantum battery under Markovian feedback control."""

from .ergotropy import (
    BlochState,
    QubitHamiltonian,
    ergotropy_closed_form,
    ergotropy_nc,
    ergotropy_spectral,
    ergotropy_surface,
    max_ergotropy,
    passive_state,
)
from .feedback import (
    ControlParams,
    LiouvilleVector,
    ReservoirRates,
    TargetState,
    build_generator,
    effective_spectrum,
    solve_control_angles,
    steady_state_controlled,
    target_state,
)
from .phonons import PhononParams, PhononRates, dephasing_rates, spectral_density
from .dynamics import (
    ProtocolSchedule,
    Stage,
    Trajectory,
    TruncationWarning,
    IntegrationError,
    direct_schedule,
    integrate,
    observables,
    staged_schedule,
    run_protocol,
    self_discharge_sweep,
)

__version__ = "0.1.0"
