"""Strain-coupled NV-center spin Hamiltonians, optical-cycle dynamics and fits."""

__version__ = "0.1.0"

from .hamiltonian import (  # noqa: E402
    EigenSolution,
    LifetimeModel,
    SpinHamiltonian,
    build,
    effective_lifetimes,
    eigensolve,
    field_sweep,
    transition_frequencies,
    upper_pair_splitting,
)
from .photodynamics import (  # noqa: E402
    PhotoRateParams,
    PopulationState,
    cw_contrast,
    decay_curve,
    excite_pulse,
    odmr_spectrum,
    pulse_matrix,
    pulse_step,
    relax,
    steady_state,
)
from .presets import PRESETS, get_preset  # noqa: E402
from .strain import (  # noqa: E402
    CouplingModel,
    HamiltonianCouplings,
    StressTensor,
    couple,
    decompose,
    rotate_to_nv_frame,
)

__all__ = [
    "__version__",
    "CouplingModel",
    "EigenSolution",
    "HamiltonianCouplings",
    "LifetimeModel",
    "PRESETS",
    "PhotoRateParams",
    "PopulationState",
    "SpinHamiltonian",
    "StressTensor",
    "build",
    "couple",
    "cw_contrast",
    "decay_curve",
    "decompose",
    "effective_lifetimes",
    "eigensolve",
    "excite_pulse",
    "field_sweep",
    "get_preset",
    "odmr_spectrum",
    "pulse_matrix",
    "pulse_step",
    "relax",
    "rotate_to_nv_frame",
    "steady_state",
    "transition_frequencies",
    "upper_pair_splitting",
]
