"""Spin-1 Hamiltonian with strain terms and an axial magnetic field.

Basis order is (|+1>, |0>, |-1>) throughout.  Energies are in GHz, fields
in gauss and rates in MHz (so lifetimes in ns are ``1000 / rate``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .strain import HamiltonianCouplings

__all__ = [
    "GAMMA_E_MHZ_PER_G",
    "BASIS_MS",
    "SpinHamiltonian",
    "EigenSolution",
    "LifetimeModel",
    "Transition",
    "FieldSweep",
    "build",
    "hamiltonian_matrix",
    "eigensolve",
    "transition_frequencies",
    "effective_lifetimes",
    "upper_pair_splitting",
    "field_sweep",
]

GAMMA_E_MHZ_PER_G = 2.8025
BASIS_MS = (1, 0, -1)
ZERO = 1  # index of |0> in the basis

_TIE_TOL_GHZ = 1e-12


def hamiltonian_matrix(
    d: float | np.ndarray,
    e1: complex | np.ndarray,
    e2: complex | np.ndarray,
    bz: float | np.ndarray,
    gamma_e: float = GAMMA_E_MHZ_PER_G,
) -> np.ndarray:
    """Matrix (or stack of matrices) for broadcastable d, e1, e2, bz."""
    d, e1, e2, bz = np.broadcast_arrays(
        np.asarray(d, dtype=float),
        np.asarray(e1, dtype=complex),
        np.asarray(e2, dtype=complex),
        np.asarray(bz, dtype=float),
    )
    zeeman = gamma_e * 1e-3 * bz
    h = np.zeros(d.shape + (3, 3), dtype=complex)
    h[..., 0, 0] = d + zeeman
    h[..., 0, 1] = e1
    h[..., 0, 2] = e2
    h[..., 1, 0] = np.conj(e1)
    h[..., 1, 2] = -e1
    h[..., 2, 0] = np.conj(e2)
    h[..., 2, 1] = -np.conj(e1)
    h[..., 2, 2] = d - zeeman
    return h


@dataclass(frozen=True)
class SpinHamiltonian:
    couplings: HamiltonianCouplings
    bz: float = 0.0
    gamma_e: float = GAMMA_E_MHZ_PER_G

    @property
    def matrix(self) -> np.ndarray:
        c = self.couplings
        return hamiltonian_matrix(c.d, c.e1, c.e2, self.bz, self.gamma_e)


@dataclass(frozen=True)
class EigenSolution:
    """Eigen-decomposition of a spin Hamiltonian.

    ``vectors[:, j]`` is the eigenvector for ``energies[j]``;
    ``mixing[j]`` is its |0> weight.  ``bright`` indexes the state with the
    largest |0> character (labelled |4>).
    """

    energies: np.ndarray
    vectors: np.ndarray
    mixing: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mixing", np.abs(self.vectors[ZERO, :]) ** 2)

    @property
    def weights(self) -> np.ndarray:
        """``weights[g, j] = |<g|psi_j>|^2``; rows and columns sum to one."""
        return np.abs(self.vectors) ** 2

    @property
    def bright(self) -> int:
        return int(np.argmax(self.mixing))

    @property
    def label_order(self) -> np.ndarray:
        """Eigen indices ordered as states |4>, |5>, |6>.

        |4> is the bright state; |5> and |6> are the others by ascending
        energy.
        """
        b = self.bright
        rest = [j for j in range(3) if j != b]
        return np.array([b, *rest])

    @property
    def dominant_ms(self) -> tuple[int, ...]:
        """Spin projection with the largest weight in each eigenstate."""
        return tuple(BASIS_MS[int(g)] for g in np.argmax(self.weights, axis=0))


@dataclass(frozen=True)
class LifetimeModel:
    """Radiative and spin-dependent ISC rates of the excited triplet (MHz)."""

    k_r: float
    k_isc0: float
    k_isc1: float

    def __post_init__(self) -> None:
        for name in ("k_r", "k_isc0", "k_isc1"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite non-negative rate, got {value}")
            object.__setattr__(self, name, value)

    def isc_rate(self, mixing: np.ndarray | float) -> np.ndarray:
        m = np.asarray(mixing, dtype=float)
        return m * self.k_isc0 + (1.0 - m) * self.k_isc1

    def total_rate(self, mixing: np.ndarray | float) -> np.ndarray:
        return self.k_r + self.isc_rate(mixing)

    @property
    def pure_lifetimes(self) -> tuple[float, float]:
        """Lifetimes (ns) of pure |0> and pure |+-1> excited states."""
        return 1000.0 / (self.k_r + self.k_isc0), 1000.0 / (self.k_r + self.k_isc1)


class Transition(NamedTuple):
    frequency: float
    pair: tuple[int, int]


def build(
    couplings: HamiltonianCouplings, bz: float = 0.0, gamma_e: float = GAMMA_E_MHZ_PER_G
) -> SpinHamiltonian:
    if not np.isfinite(bz):
        raise ValueError("bz must be finite")
    return SpinHamiltonian(couplings, float(bz), float(gamma_e))


def _sorted_eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(h)
    m = np.abs(v[..., ZERO, :]) ** 2
    # ascending energy, ties broken by descending |0> weight
    key = np.round(w / _TIE_TOL_GHZ)
    order = np.lexsort((-m, key), axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return w, v


def eigensolve(h: SpinHamiltonian | np.ndarray) -> EigenSolution:
    matrix = h.matrix if isinstance(h, SpinHamiltonian) else np.asarray(h, dtype=complex)
    if matrix.shape != (3, 3):
        raise ValueError(f"expected a 3x3 Hamiltonian, got shape {matrix.shape}")
    w, v = _sorted_eigh(matrix)
    return EigenSolution(w, v)


def transition_frequencies(sol: EigenSolution) -> list[Transition]:
    """All pairwise level spacings, labelled by eigen index pairs (i < j)."""
    e = sol.energies
    return [Transition(float(e[j] - e[i]), (i, j)) for i in range(3) for j in range(i + 1, 3)]


def effective_lifetimes(sol: EigenSolution, lm: LifetimeModel) -> np.ndarray:
    """Mixing-weighted lifetimes in ns, in eigen-index order."""
    if lm.k_r == 0 and lm.k_isc0 == 0 and lm.k_isc1 == 0:
        raise ValueError("all rates are zero: lifetimes are infinite")
    gamma = lm.total_rate(sol.mixing)
    with np.errstate(divide="ignore"):
        return 1000.0 / gamma


def upper_pair_splitting(sol: EigenSolution) -> float:
    """Energy gap between the two states other than the bright one."""
    rest = sol.label_order[1:]
    return float(abs(sol.energies[rest[1]] - sol.energies[rest[0]]))


@dataclass(frozen=True)
class FieldSweep:
    """Eigen-solutions over an axial field grid, in |4>, |5>, |6> order."""

    bz: np.ndarray
    energies: np.ndarray
    mixing: np.ndarray
    lifetimes: np.ndarray | None

    def pair_frequencies(self) -> np.ndarray:
        """Spacings |E4 - E5|, |E4 - E6| and |E5 - E6| per field point."""
        e = self.energies
        return np.stack(
            [np.abs(e[:, 0] - e[:, 1]), np.abs(e[:, 0] - e[:, 2]), np.abs(e[:, 1] - e[:, 2])],
            axis=1,
        )


def field_sweep(
    couplings: HamiltonianCouplings,
    bz: np.ndarray,
    lm: LifetimeModel | None = None,
    gamma_e: float = GAMMA_E_MHZ_PER_G,
) -> FieldSweep:
    """Vectorized eigen-solutions for every field value in ``bz``."""
    bz = np.atleast_1d(np.asarray(bz, dtype=float))
    h = hamiltonian_matrix(couplings.d, couplings.e1, couplings.e2, bz, gamma_e)
    w, v = _sorted_eigh(h)
    m = np.abs(v[:, ZERO, :]) ** 2
    bright = np.argmax(m, axis=1)
    n = len(bz)
    order = np.empty((n, 3), dtype=int)
    order[:, 0] = bright
    # remaining two in ascending energy, which is their index order
    others = np.array([[j for j in range(3) if j != b] for b in range(3)])
    order[:, 1:] = others[bright]
    energies = np.take_along_axis(w, order, axis=1)
    mixing = np.take_along_axis(m, order, axis=1)
    tau = None
    if lm is not None:
        tau = 1000.0 / lm.total_rate(mixing)
    return FieldSweep(bz, energies, mixing, tau)
