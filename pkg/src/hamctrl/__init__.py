"""Hamiltonian engineering toolbox for finite-dimensional quantum systems."""
from .core import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    commutator,
    expectation,
    expm_skew,
    hs_inner,
    is_generic_ensemble,
    pure_state_density,
    validate_density,
)
from .dynamics import (
    ControlSystem,
    LindbladChannel,
    PulseSchedule,
    Trajectory,
    gate_fidelity,
    propagate_density,
    propagate_ket,
    propagate_open,
    slice_hamiltonian,
    total_propagator,
    transfer_fidelity,
)

__version__ = "0.1.0"
