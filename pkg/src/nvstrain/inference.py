"""Parameter extraction from decay traces, field sweeps and pulse trains."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .hamiltonian import GAMMA_E_MHZ_PER_G, LifetimeModel, build, eigensolve, field_sweep
from .lsq import FitError, FitProblem, FitResult, levenberg_marquardt
from .photodynamics import PhotoRateParams, pulse_matrix, steady_state
from .strain import HamiltonianCouplings

__all__ = [
    "IllConditionedError",
    "DecayFit",
    "OdmrData",
    "LifetimeData",
    "PulseTrajectory",
    "fit_decay",
    "fit_thermal_lifetimes",
    "thermal_decay_model",
    "fit_joint_es",
    "joint_es_residuals",
    "fit_pulse_dynamics",
    "trajectory_model",
    "initial_ground",
]

_TIE_RTOL = 1e-9


class IllConditionedError(FitError):
    def __init__(self, condition: float) -> None:
        super().__init__(f"decay basis is ill-conditioned (condition number {condition:.3g}); lifetimes too close")
        self.condition = condition


@dataclass(frozen=True)
class DecayFit:
    populations: np.ndarray
    populations_err: np.ndarray
    amplitude: float
    condition: float
    residual_norm: float

    @property
    def p4(self) -> float:
        return float(self.populations[0])


def _check_decay_grid(t: np.ndarray, longest: float) -> None:
    if len(t) < 10:
        raise ValueError(f"need at least 10 time points, got {len(t)}")
    if np.ptp(t) < 3.0 * longest:
        raise ValueError(f"time window {np.ptp(t):.3g} ns is shorter than 3x the longest lifetime")


def fit_decay(
    t: np.ndarray,
    counts: np.ndarray,
    lifetimes: Sequence[float],
    sigma: np.ndarray | None = None,
    max_condition: float = 1e8,
) -> DecayFit:
    """Populations of a multi-exponential decay with fixed lifetimes.

    Non-negative linear least squares on ``A * P_j``, then normalization.
    Exactly equal lifetimes cannot be told apart; they are fitted as one
    component whose population is split evenly between them.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(counts, dtype=float)
    taus = np.asarray(lifetimes, dtype=float)
    if np.any(taus <= 0):
        raise ValueError("lifetimes must be positive")
    _check_decay_grid(t, float(taus.max()))
    groups: list[list[int]] = []
    for j, tau in enumerate(taus):
        for grp in groups:
            if abs(taus[grp[0]] - tau) <= _TIE_RTOL * tau:
                grp.append(j)
                break
        else:
            groups.append([j])
    basis = np.exp(-t[:, None] / np.array([taus[g[0]] for g in groups])[None, :])
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    xw = basis * w[:, None]
    yw = y * w
    cond = float(np.linalg.cond(xw))
    if cond > max_condition:
        raise IllConditionedError(cond)
    coef, rnorm = nnls(xw, yw)
    amp = float(coef.sum())
    if amp <= 0:
        raise FitError("decay amplitude fitted to zero")
    # covariance of the group amplitudes
    cov = np.linalg.inv(xw.T @ xw)
    if sigma is None:
        dof = len(y) - len(groups)
        cov = cov * (rnorm**2 / dof if dof > 0 else np.inf)
    # P_g = c_g / sum(c) -> dP_g/dc_k = (delta_gk - P_g) / A
    pg = coef / amp
    jac = (np.eye(len(groups)) - pg[:, None]) / amp
    pg_err = np.sqrt(np.clip(np.diag(jac @ cov @ jac.T), 0.0, None))
    pops = np.empty(len(taus))
    errs = np.empty(len(taus))
    for k, grp in enumerate(groups):
        pops[grp] = pg[k] / len(grp)
        errs[grp] = pg_err[k] / len(grp)
    return DecayFit(pops, errs, amp, cond, float(rnorm))


def thermal_decay_model(t: np.ndarray, amplitude: float, tau_bright: float, tau_dark: float) -> np.ndarray:
    """Decay after thermal preparation: equal populations, tau5 = tau6."""
    return amplitude * (np.exp(-t / tau_bright) + 2.0 * np.exp(-t / tau_dark)) / 3.0


def _thermal_jacobian(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    a, tb, td = x
    eb = np.exp(-t / tb)
    ed = np.exp(-t / td)
    return np.stack(
        [
            (eb + 2.0 * ed) / 3.0,
            a * t * eb / (3.0 * tb**2),
            2.0 * a * t * ed / (3.0 * td**2),
        ],
        axis=1,
    )


def _log_slope_lifetime(t: np.ndarray, y: np.ndarray) -> float:
    half = t >= t[len(t) // 2]
    keep = half & (y > 0)
    if keep.sum() < 2:
        return float(np.ptp(t) / 5.0)
    slope = np.polyfit(t[keep], np.log(y[keep]), 1)[0]
    return float(-1.0 / slope) if slope < 0 else float(np.ptp(t) / 5.0)


def fit_thermal_lifetimes(
    t: np.ndarray,
    counts: np.ndarray,
    sigma: np.ndarray | None = None,
    x0: Sequence[float] | None = None,
    max_iter: int = 500,
) -> FitResult:
    """Bright and dark lifetimes from a decay recorded after thermalization.

    Populations are fixed to 1/3 each and the two dark lifetimes are tied.
    Nearly equal lifetimes make the problem degenerate; the result then
    carries the ``non-identifiable`` flag.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(counts, dtype=float)
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    if x0 is None:
        tb0 = _log_slope_lifetime(t, y)
        x0 = (max(float(y[np.argmin(t)]), 1e-12), tb0, tb0 / 3.0)
    _check_decay_grid(t, float(x0[1]))

    def residual(x: np.ndarray) -> np.ndarray:
        return (thermal_decay_model(t, *x) - y) * w

    problem = FitProblem(
        residual,
        np.asarray(x0, dtype=float),
        ("amplitude", "tau_bright", "tau_dark"),
        lower=np.array([0.0, 1e-6, 1e-6]),
        jacobian=lambda x: _thermal_jacobian(t, x) * w[:, None],
        absolute_sigma=sigma is not None,
    )
    result = levenberg_marquardt(problem, max_iter=max_iter)
    tb, td = result.x[1], result.x[2]
    if abs(tb - td) <= 1e-3 * max(tb, td) and "non-identifiable" not in result.flags:
        result.flags.append("non-identifiable")
    return result


@dataclass(frozen=True)
class OdmrData:
    """Excited-state resonance positions, one row per observed line."""

    bz: np.ndarray
    freq: np.ndarray
    freq_err: np.ndarray | None = None


@dataclass(frozen=True)
class LifetimeData:
    """Lifetimes (ns) of states |4>, |5>, |6> per field point."""

    bz: np.ndarray
    tau: np.ndarray
    tau_err: np.ndarray | None = None


def joint_es_residuals(
    x: np.ndarray,
    odmr: OdmrData,
    lifetimes: LifetimeData,
    lm: LifetimeModel,
    gamma_e: float = GAMMA_E_MHZ_PER_G,
) -> np.ndarray:
    """Stacked, uncertainty-weighted residuals of the joint excited-state fit.

    Each observed line is compared with the nearest model level spacing at
    its field; lifetimes are compared after sorting both model and data in
    descending order.  Each block is scaled so the two datasets carry equal
    total weight regardless of how many points they have.
    """
    d, e1, e2 = x
    couplings = HamiltonianCouplings(d, e1, e2)
    f_err = np.ones_like(odmr.freq) if odmr.freq_err is None else odmr.freq_err
    t_err = np.ones_like(lifetimes.tau) if lifetimes.tau_err is None else lifetimes.tau_err

    sweep_f = field_sweep(couplings, odmr.bz, None, gamma_e)
    spacings = sweep_f.pair_frequencies()
    nearest = np.take_along_axis(
        spacings, np.argmin(np.abs(spacings - odmr.freq[:, None]), axis=1)[:, None], axis=1
    )[:, 0]
    r_f = (nearest - odmr.freq) / f_err

    sweep_t = field_sweep(couplings, lifetimes.bz, lm, gamma_e)
    tau_model = -np.sort(-sweep_t.lifetimes, axis=1)
    order = np.argsort(-lifetimes.tau, axis=1)
    tau_data = np.take_along_axis(lifetimes.tau, order, axis=1)
    err_data = np.take_along_axis(t_err, order, axis=1)
    r_t = ((tau_model - tau_data) / err_data).ravel()

    n_total = r_f.size + r_t.size
    return np.concatenate(
        [r_f * np.sqrt(n_total / (2.0 * r_f.size)), r_t * np.sqrt(n_total / (2.0 * r_t.size))]
    )


def fit_joint_es(
    odmr: OdmrData,
    lifetimes: LifetimeData,
    lm: LifetimeModel,
    x0: Sequence[float] | None = None,
    gamma_e: float = GAMMA_E_MHZ_PER_G,
    max_iter: int = 500,
) -> FitResult:
    """|D|, |E1|, |E2| of the excited state from field-dependent lines and lifetimes.

    E1 and E2 are kept real and non-negative.  Without a start point the
    fit begins at D = median line position at the lowest field and
    E1 = E2 = D / 10.
    """
    bz_all = np.unique(np.concatenate([odmr.bz, lifetimes.bz]))
    if len(bz_all) < 3:
        raise ValueError("joint fit needs at least 3 distinct field points")
    if x0 is None:
        low = odmr.freq[odmr.bz == odmr.bz.min()]
        d0 = float(np.median(low))
        x0 = (d0, 0.1 * d0, 0.1 * d0)
    has_err = odmr.freq_err is not None and lifetimes.tau_err is not None
    problem = FitProblem(
        lambda x: joint_es_residuals(x, odmr, lifetimes, lm, gamma_e),
        np.asarray(x0, dtype=float),
        ("d", "e1", "e2"),
        lower=np.zeros(3),
        absolute_sigma=has_err,
    )
    return levenberg_marquardt(problem, max_iter=max_iter)


@dataclass(frozen=True)
class PulseTrajectory:
    """Bright-state population read out by each pulse of a train.

    ``initial`` is ``"thermal"``, ``"optical"`` (the optically pumped steady
    state), ``"swapped"`` (that state after a pi pulse on |0> <-> |+1>) or
    an explicit ground population vector in (|+1>, |0>, |-1>) order.
    """

    bz: float
    p4: np.ndarray
    p4_err: np.ndarray | None = None
    initial: str | tuple[float, float, float] = "swapped"


def initial_ground(kind: str | Sequence[float], sol, rates: PhotoRateParams) -> np.ndarray:
    if not isinstance(kind, str):
        p = np.asarray(kind, dtype=float)
        return p / p.sum()
    if kind == "thermal":
        return np.full(3, 1.0 / 3.0)
    if kind in ("optical", "swapped"):
        p = steady_state(sol, rates).ground.ground.copy()
        if kind == "swapped":
            p[[0, 1]] = p[[1, 0]]
        return p
    raise ValueError(f"unknown initial state {kind!r}")


def trajectory_model(
    couplings: HamiltonianCouplings,
    rates: PhotoRateParams,
    bz: float,
    n_pulses: int,
    initial: str | Sequence[float] = "swapped",
    gamma_e: float = GAMMA_E_MHZ_PER_G,
) -> np.ndarray:
    """P4 read out by pulses 1..n_pulses (index 0 is the first pulse)."""
    sol = eigensolve(build(couplings, bz, gamma_e))
    m = pulse_matrix(sol, rates)
    p = initial_ground(initial, sol, rates)
    bright = sol.weights[:, sol.bright]
    out = np.empty(n_pulses)
    for n in range(n_pulses):
        out[n] = bright @ p
        p = m @ p
    return out


def fit_pulse_dynamics(
    trajectories: Sequence[PulseTrajectory],
    couplings: HamiltonianCouplings,
    eta: float,
    tau_bright: float,
    tau_dark: float,
    tau_bright_err: float,
    tau_dark_err: float,
    x0: Sequence[float] = (100.0, 20.0, 200.0, 0.4),
    gamma_e: float = GAMMA_E_MHZ_PER_G,
    max_iter: int = 500,
) -> FitResult:
    """(k_r, k_isc0, k_isc1, q0) from multi-pulse P4 trajectories.

    Trajectories only fix rate ratios; the pure-state lifetimes
    ``1000 / (k_r + k_isc0) = tau_bright`` and ``1000 / (k_r + k_isc1) =
    tau_dark`` enter as two extra residuals weighted by their errors.
    Strain terms stay fixed at ``couplings``.
    """
    if len(trajectories) < 2:
        raise ValueError("need at least two trajectories with different initial states")
    gb = 1000.0 / tau_bright
    gd = 1000.0 / tau_dark
    sb = 1000.0 * tau_bright_err / tau_bright**2
    sd = 1000.0 * tau_dark_err / tau_dark**2
    has_err = all(tr.p4_err is not None for tr in trajectories)

    def residual(x: np.ndarray) -> np.ndarray:
        k_r, k0, k1, q0 = x
        rates = PhotoRateParams(eta, k_r, k0, k1, q0)
        parts = []
        for tr in trajectories:
            model = trajectory_model(couplings, rates, tr.bz, len(tr.p4), tr.initial, gamma_e)
            err = np.ones_like(tr.p4) if tr.p4_err is None else tr.p4_err
            parts.append((model - tr.p4) / err)
        parts.append(np.array([(k_r + k0 - gb) / sb, (k_r + k1 - gd) / sd]))
        return np.concatenate(parts)

    problem = FitProblem(
        residual,
        np.asarray(x0, dtype=float),
        ("k_r", "k_isc0", "k_isc1", "q0"),
        lower=np.array([1e-6, 0.0, 0.0, 0.0]),
        upper=np.array([np.inf, np.inf, np.inf, 1.0]),
        absolute_sigma=has_err,
    )
    return levenberg_marquardt(problem, max_iter=max_iter)
