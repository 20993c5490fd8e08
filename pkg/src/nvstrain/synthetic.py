"""Synthetic measurement records generated from the forward models."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .hamiltonian import GAMMA_E_MHZ_PER_G, LifetimeModel, field_sweep
from .inference import LifetimeData, OdmrData, PulseTrajectory, trajectory_model
from .photodynamics import PhotoRateParams
from .strain import HamiltonianCouplings

__all__ = ["es_sweep_data", "pulse_trajectories"]


def es_sweep_data(
    couplings: HamiltonianCouplings,
    lm: LifetimeModel,
    bz: np.ndarray,
    rel_noise: float = 0.0,
    rng: np.random.Generator | None = None,
    gamma_e: float = GAMMA_E_MHZ_PER_G,
) -> tuple[OdmrData, LifetimeData]:
    """Excited-state lines (|4> to |5> and |4> to |6>) and lifetimes versus field.

    Gaussian noise of relative size ``rel_noise`` is added when an ``rng``
    is given; the quoted errors are ``rel_noise`` times the true values.
    """
    bz = np.asarray(bz, dtype=float)
    sweep = field_sweep(couplings, bz, lm, gamma_e)
    freqs = sweep.pair_frequencies()[:, :2]
    f_true = freqs.ravel()
    f_bz = np.repeat(bz, 2)
    tau_true = sweep.lifetimes
    f_err = rel_noise * f_true if rel_noise > 0 else None
    t_err = rel_noise * tau_true if rel_noise > 0 else None
    f_obs, t_obs = f_true.copy(), tau_true.copy()
    if rng is not None and rel_noise > 0:
        f_obs = f_true + f_err * rng.standard_normal(f_true.shape)
        t_obs = tau_true + t_err * rng.standard_normal(tau_true.shape)
    return OdmrData(f_bz, f_obs, f_err), LifetimeData(bz, t_obs, t_err)


def pulse_trajectories(
    couplings: HamiltonianCouplings,
    rates: PhotoRateParams,
    fields: Sequence[float],
    n_pulses: int,
    initials: Sequence[str] = ("optical", "swapped"),
    rel_noise: float = 0.0,
    rng: np.random.Generator | None = None,
    gamma_e: float = GAMMA_E_MHZ_PER_G,
) -> list[PulseTrajectory]:
    """One P4 trajectory per (field, initial state) combination."""
    out = []
    for bz in fields:
        for init in initials:
            p4 = trajectory_model(couplings, rates, bz, n_pulses, init, gamma_e)
            err = rel_noise * p4 if rel_noise > 0 else None
            if rng is not None and rel_noise > 0:
                p4 = p4 + err * rng.standard_normal(p4.shape)
            out.append(PulseTrajectory(float(bz), p4, err, init))
    return out
