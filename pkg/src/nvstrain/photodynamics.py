"""Seven-level optical cycle: ground triplet, excited triplet, metastable singlet.

Ground populations are kept in the spin basis (|+1>, |0>, |-1>); excited
populations are indexed by excited-state eigen index (the order of
:class:`~nvstrain.hamiltonian.EigenSolution`).  Optical excitation and
radiative decay conserve spin, so both use the weights
``|<g|psi_j>|^2``.  ISC from excited state j runs at
``m_j k_isc0 + (1 - m_j) k_isc1``; the singlet returns a fraction ``q0``
to |0> and splits the rest evenly between |+1> and |-1>.

The multi-pulse recursion is a 3x3 column-stochastic map on the ground
populations, valid when the pulse spacing is long compared with the singlet
lifetime (the singlet empties between pulses).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .hamiltonian import BASIS_MS, ZERO, EigenSolution, LifetimeModel

__all__ = [
    "PhotoRateParams",
    "PopulationState",
    "DecayCurve",
    "SteadyState",
    "DegenerateDynamicsError",
    "excite_pulse",
    "relax",
    "pulse_matrix",
    "pulse_step",
    "pulse_train",
    "steady_state",
    "brightness",
    "decay_curve",
    "cw_contrast",
    "cw_steady_state",
    "odmr_spectrum",
    "lorentzian",
]

_NORM_TOL = 1e-9


class DegenerateDynamicsError(RuntimeError):
    """The pulse map has no unique fixed point."""


@dataclass(frozen=True)
class PhotoRateParams:
    eta: float
    k_r: float
    k_isc0: float
    k_isc1: float
    q0: float
    tau_singlet: float = 250.0
    pulse_spacing: float = 1000.0

    def __post_init__(self) -> None:
        for name in ("eta", "k_r", "k_isc0", "k_isc1", "q0", "tau_singlet", "pulse_spacing"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
            object.__setattr__(self, name, value)
        if self.eta > 1 or self.q0 > 1:
            raise ValueError("eta and q0 are probabilities and must lie in [0, 1]")
        if self.k_r + self.k_isc0 == 0 or self.k_r + self.k_isc1 == 0:
            raise ValueError("excited states need a non-zero total decay rate")

    @property
    def lifetime_model(self) -> LifetimeModel:
        return LifetimeModel(self.k_r, self.k_isc0, self.k_isc1)

    @property
    def singlet_branching(self) -> np.ndarray:
        """Down-ISC branching into (|+1>, |0>, |-1>)."""
        side = 0.5 * (1.0 - self.q0)
        return np.array([side, self.q0, side])

    def with_(self, **changes: float) -> "PhotoRateParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PopulationState:
    ground: np.ndarray
    excited: np.ndarray
    singlet: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ground", np.asarray(self.ground, dtype=float).copy())
        object.__setattr__(self, "excited", np.asarray(self.excited, dtype=float).copy())
        object.__setattr__(self, "singlet", float(self.singlet))
        if self.ground.shape != (3,) or self.excited.shape != (3,):
            raise ValueError("ground and excited populations need three entries each")
        vec = self.as_vector()
        if not np.all(np.isfinite(vec)):
            raise ValueError("populations must be finite")
        # allow round-off from repeated stochastic products
        if vec.min() < -1e-12:
            raise ValueError(f"populations must be non-negative, got {vec.min()!r}")

    @classmethod
    def from_ground(cls, p_plus: float, p0: float, p_minus: float) -> "PopulationState":
        return cls(np.array([p_plus, p0, p_minus]), np.zeros(3), 0.0)

    @classmethod
    def thermal(cls) -> "PopulationState":
        return cls(np.full(3, 1.0 / 3.0), np.zeros(3), 0.0)

    @property
    def p0(self) -> float:
        return float(self.ground[ZERO])

    @property
    def p_plus(self) -> float:
        return float(self.ground[0])

    @property
    def p_minus(self) -> float:
        return float(self.ground[2])

    @property
    def total(self) -> float:
        return float(self.ground.sum() + self.excited.sum() + self.singlet)

    @property
    def in_ground_manifold(self) -> bool:
        return bool(np.all(self.excited == 0) and self.singlet == 0)

    def as_vector(self) -> np.ndarray:
        """Seven-entry vector (g+, g0, g-, e_0, e_1, e_2, singlet)."""
        return np.concatenate([self.ground, self.excited, [self.singlet]])


@dataclass(frozen=True)
class DecayCurve:
    t: np.ndarray
    intensity: np.ndarray
    populations: np.ndarray
    lifetimes: np.ndarray


@dataclass(frozen=True)
class SteadyState:
    """Fixed point of the pulse map.

    ``ground`` is the state just before a pulse; ``excited`` holds the
    normalized excited populations right after it (eigen-index order) and
    ``p4`` the bright-state share of them.
    """

    ground: PopulationState
    excited: np.ndarray
    p4: float
    second_eigenvalue: float


def _decay_branches(sol: EigenSolution, rates: PhotoRateParams) -> np.ndarray:
    """Column j: where population leaving excited state j ends up (ground basis)."""
    w = sol.weights
    isc = rates.lifetime_model.isc_rate(sol.mixing)
    total = rates.k_r + isc
    radiative = rates.k_r / total
    return w * radiative[None, :] + np.outer(rates.singlet_branching, isc / total)


def excite_pulse(ground: PopulationState, sol: EigenSolution, eta: float) -> PopulationState:
    """Promote a fraction ``eta`` of the ground populations, conserving spin."""
    if not ground.in_ground_manifold:
        raise ValueError("excitation expects all population in the ground manifold")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    promoted = eta * (sol.weights.T @ ground.ground)
    return PopulationState((1.0 - eta) * ground.ground, promoted, 0.0)


def relax(state: PopulationState, sol: EigenSolution, rates: PhotoRateParams) -> PopulationState:
    """Let every excited and singlet population decay back to the ground triplet."""
    ground = state.ground + _decay_branches(sol, rates) @ state.excited
    ground = ground + state.singlet * rates.singlet_branching
    return PopulationState(ground, np.zeros(3), 0.0)


def pulse_matrix(sol: EigenSolution, rates: PhotoRateParams) -> np.ndarray:
    """Column-stochastic map of the ground populations for one pulse cycle."""
    cycle = _decay_branches(sol, rates) @ sol.weights.T
    return (1.0 - rates.eta) * np.eye(3) + rates.eta * cycle


def pulse_step(ground: PopulationState, sol: EigenSolution, rates: PhotoRateParams) -> PopulationState:
    return relax(excite_pulse(ground, sol, rates.eta), sol, rates)


def brightness(sol: EigenSolution, rates: PhotoRateParams | LifetimeModel) -> np.ndarray:
    """Photons per excitation from each ground spin state (radiative yield)."""
    lm = rates.lifetime_model if isinstance(rates, PhotoRateParams) else rates
    yield_ = lm.k_r / lm.total_rate(sol.mixing)
    return sol.weights @ yield_


def pulse_train(
    initial: PopulationState,
    sol: EigenSolution,
    rates: PhotoRateParams,
    n_pulses: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Ground populations before each pulse and the normalized P4 it reads out.

    Returns ``(ground, p4)`` with shapes ``(n_pulses + 1, 3)`` and
    ``(n_pulses + 1,)``; row 0 is the initial state.
    """
    if n_pulses < 0:
        raise ValueError("n_pulses must be non-negative")
    m = pulse_matrix(sol, rates)
    out = np.empty((n_pulses + 1, 3))
    p = np.asarray(initial.ground, dtype=float)
    out[0] = p
    for n in range(1, n_pulses + 1):
        p = m @ p
        out[n] = p
    p4 = out @ sol.weights[:, sol.bright]
    return out, p4


def _stationary(m: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    evals = np.linalg.eigvals(m)
    near_one = np.sum(np.abs(evals - 1.0) < tol)
    if near_one != 1:
        raise DegenerateDynamicsError(
            f"pulse map has {near_one} eigenvalues at 1; the fixed point is not unique"
        )
    # null space of (M - I)
    _, s, vh = np.linalg.svd(m - np.eye(len(m)))
    p = np.real(vh[-1].conj())
    p = p / p.sum()
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    second = float(np.sort(np.abs(evals))[-2])
    return p, second


def steady_state(sol: EigenSolution, rates: PhotoRateParams) -> SteadyState:
    if rates.eta <= 0:
        raise ValueError("steady state needs eta > 0")
    p, second = _stationary(pulse_matrix(sol, rates))
    excited = sol.weights.T @ p
    excited = excited / excited.sum()
    return SteadyState(
        PopulationState(p, np.zeros(3), 0.0), excited, float(excited[sol.bright]), second
    )


def decay_curve(
    populations: Sequence[float],
    lifetimes: Sequence[float],
    t: np.ndarray,
    amplitude: float = 1.0,
    peak_counts: float | None = None,
    rng: np.random.Generator | None = None,
) -> DecayCurve:
    """Multi-exponential fluorescence decay ``A * sum_j P_j exp(-t / tau_j)``.

    With ``peak_counts`` set, the curve is scaled so that ``t = 0`` has that
    mean count and Poisson noise is drawn from ``rng``.
    """
    pops = np.asarray(populations, dtype=float)
    taus = np.asarray(lifetimes, dtype=float)
    t = np.asarray(t, dtype=float)
    if pops.shape != taus.shape:
        raise ValueError("populations and lifetimes must have the same length")
    if np.any(pops < 0) or abs(pops.sum() - 1.0) > _NORM_TOL:
        raise ValueError(f"populations must be non-negative and sum to 1, got {pops.sum()!r}")
    if np.any(taus <= 0):
        raise ValueError("lifetimes must be positive")
    shape = np.exp(-t[:, None] / taus[None, :]) @ pops
    if peak_counts is None:
        intensity = amplitude * shape
    else:
        mean = peak_counts * shape
        if rng is None:
            intensity = mean
        else:
            intensity = rng.poisson(mean).astype(float)
    return DecayCurve(t, intensity, pops, taus)


def _pair_indices(pairs: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    index = {ms: i for i, ms in enumerate(BASIS_MS)}
    out = []
    for a, b in pairs:
        if a not in index or b not in index or a == b:
            raise ValueError(f"invalid resonance pair {(a, b)}; use spin projections from {BASIS_MS}")
        out.append((index[a], index[b]))
    return out


def _exchange_matrix(pairs: list[tuple[int, int]], strength: float) -> np.ndarray:
    """Incoherent population exchange; ``strength`` in [0, 1/2] per interval."""
    x = np.eye(3)
    for a, b in pairs:
        step = np.eye(3)
        step[a, a] = step[b, b] = 1.0 - strength
        step[a, b] = step[b, a] = strength
        x = step @ x
    return x


def cw_steady_state(
    sol: EigenSolution,
    rates: PhotoRateParams,
    mw_rate: float = 0.0,
    pairs: Sequence[tuple[int, int]] = ((0, 1),),
    pump_rate: float | None = None,
) -> np.ndarray:
    """Seven-level steady state under continuous excitation.

    Rates in MHz.  The pump rate defaults to the time-averaged excitation
    rate of the pulse train, ``eta / pulse_spacing``.  Returns the vector
    (g+, g0, g-, e_0, e_1, e_2, singlet).
    """
    if pump_rate is None:
        pump_rate = 1000.0 * rates.eta / rates.pulse_spacing
    w = sol.weights
    lm = rates.lifetime_model
    isc = lm.isc_rate(sol.mixing)
    gen = np.zeros((7, 7))
    for g in range(3):
        for j in range(3):
            gen[3 + j, g] += pump_rate * w[g, j]
            gen[g, 3 + j] += rates.k_r * w[g, j]
    gen[6, 3:6] += isc
    gen[:3, 6] += rates.singlet_branching * (1000.0 / rates.tau_singlet)
    for a, b in _pair_indices(pairs):
        gen[a, b] += mw_rate
        gen[b, a] += mw_rate
    gen -= np.diag(gen.sum(axis=0))
    _, _, vh = np.linalg.svd(gen)
    p = np.real(vh[-1])
    return p / p.sum()


def cw_contrast(
    sol_gs: EigenSolution | None,
    sol_es: EigenSolution,
    rates: PhotoRateParams,
    mw_rate: float,
    resonance_pair: tuple[int, int] | Sequence[tuple[int, int]] = (0, 1),
    mode: str = "pulsed",
) -> float:
    """Relative fluorescence change when the resonant ground pair is driven.

    ``resonance_pair`` names spin projections, e.g. ``(0, 1)`` for the
    |0> <-> |+1> line; a sequence of pairs drives several degenerate lines
    together.  ``mode="pulsed"`` uses the pulse-train fixed point with the
    drive acting between pulses; ``mode="cw"`` solves the seven-level rate
    equations.  Negative contrast means the drive lowers fluorescence,
    which happens when optical pumping polarizes into the brighter state.

    ``sol_gs`` only matters for choosing the pair when ``resonance_pair``
    is given as ground eigen indices via :func:`odmr_spectrum`; the drive
    acts on spin-basis populations.
    """
    if mw_rate < 0:
        raise ValueError("mw_rate must be non-negative")
    if mw_rate == 0:
        return 0.0
    pairs = [resonance_pair] if np.ndim(resonance_pair[0]) == 0 else list(resonance_pair)
    idx = _pair_indices(pairs)
    if mode == "pulsed":
        b = brightness(sol_es, rates)
        m = pulse_matrix(sol_es, rates)
        decay = np.exp(-2.0 * mw_rate * 1e-3 * rates.pulse_spacing)
        x = _exchange_matrix(idx, 0.5 * (1.0 - decay))
        p_off, _ = _stationary(m)
        p_on, _ = _stationary(x @ m)
        i_off = float(b @ p_off)
        i_on = float(b @ p_on)
    elif mode == "cw":
        off = cw_steady_state(sol_es, rates, 0.0, pairs)
        on = cw_steady_state(sol_es, rates, mw_rate, pairs)
        i_off = rates.k_r * float(off[3:6].sum())
        i_on = rates.k_r * float(on[3:6].sum())
    else:
        raise ValueError(f"unknown contrast mode {mode!r}")
    return (i_on - i_off) / i_off


def lorentzian(f: np.ndarray, center: float, fwhm: float) -> np.ndarray:
    """Unit-peak Lorentzian."""
    half = 0.5 * fwhm
    return half**2 / ((np.asarray(f) - center) ** 2 + half**2)


def odmr_spectrum(
    sol_gs: EigenSolution,
    sol_es: EigenSolution,
    rates: PhotoRateParams,
    freqs: np.ndarray,
    linewidth: float,
    mw_rate: float,
    mode: str = "pulsed",
) -> tuple[np.ndarray, list[tuple[float, float]]]:
    """Ground-state ODMR spectrum, contrast versus drive frequency (GHz).

    Lines are the transitions from the ground eigenstate with the most |0>
    character to the other two; lines closer than ``linewidth / 1000`` are
    driven together.  Returns the spectrum and the ``(frequency, contrast)``
    list of lines.
    """
    if linewidth <= 0:
        raise ValueError("linewidth must be positive")
    freqs = np.asarray(freqs, dtype=float)
    if not np.all(np.isfinite(freqs)):
        raise ValueError("sweep frequencies must be finite")
    b = sol_gs.bright
    others = [j for j in range(3) if j != b]
    ms = list(sol_gs.dominant_ms)
    if ms[others[0]] == ms[others[1]] or 0 in (ms[others[0]], ms[others[1]]):
        # fully mixed |+-1> pair: label by energy order
        ms[others[0]], ms[others[1]] = -1, 1
    lines: list[tuple[float, list[tuple[int, int]]]] = []
    for j in others:
        f = abs(float(sol_gs.energies[j] - sol_gs.energies[b]))
        pair = (0, ms[j])
        for entry in lines:
            if abs(entry[0] - f) < linewidth * 1e-3:
                entry[1].append(pair)
                break
        else:
            lines.append((f, [pair]))
    spectrum = np.zeros_like(freqs)
    out = []
    for f, pairs in lines:
        c = cw_contrast(sol_gs, sol_es, rates, mw_rate, pairs, mode=mode)
        out.append((f, c))
        spectrum += c * lorentzian(freqs, f, linewidth)
    return spectrum, out
