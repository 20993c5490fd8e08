"""Spatial strain profiles, contrast maps and polarization-reversal analysis.

Positions are in micrometres.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import build, eigensolve
from .photodynamics import PhotoRateParams, cw_contrast
from .strain import CouplingModel, HamiltonianCouplings, StressTensor, couple

__all__ = [
    "StrainProfile",
    "CouplingProfile",
    "ContrastProfile",
    "Reversal",
    "NoReversalError",
    "logistic_profile",
    "profile_couplings",
    "profile_contrast",
    "gaussian_blur",
    "find_reversal",
    "DEFAULT_PSF_FWHM_UM",
]

DEFAULT_PSF_FWHM_UM = 0.55
_FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


class NoReversalError(ValueError):
    """The contrast profile never changes sign."""


@dataclass(frozen=True)
class StrainProfile:
    positions: np.ndarray
    tensors: tuple[StressTensor, ...]

    def __post_init__(self) -> None:
        x = np.asarray(self.positions, dtype=float)
        if x.ndim != 1 or len(x) != len(self.tensors):
            raise ValueError("need one stress tensor per position")
        if not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
            raise ValueError("positions must be finite and strictly increasing")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "tensors", tuple(self.tensors))

    @classmethod
    def from_array(cls, positions: Sequence[float], components: np.ndarray) -> "StrainProfile":
        """``components`` has shape (n, 6) as [xx, yy, zz, xy, xz, yz]."""
        comps = np.asarray(components, dtype=float)
        return cls(np.asarray(positions, dtype=float), tuple(StressTensor.from_array(c) for c in comps))

    def to_array(self) -> np.ndarray:
        return np.array([s.to_array() for s in self.tensors])


def logistic_profile(
    positions: Sequence[float],
    baseline: StressTensor,
    breaking: StressTensor,
    center: float,
    width: float,
) -> StrainProfile:
    """Baseline stress plus a breaking component switched on by a logistic ramp."""
    if width <= 0:
        raise ValueError("ramp width must be positive")
    x = np.asarray(positions, dtype=float)
    ramp = 0.5 * (1.0 + np.tanh(0.5 * (x - center) / width))
    base = baseline.to_array()
    extra = breaking.to_array()
    return StrainProfile.from_array(x, base[None, :] + ramp[:, None] * extra[None, :])


@dataclass(frozen=True)
class CouplingProfile:
    positions: np.ndarray
    couplings: tuple[HamiltonianCouplings, ...]

    @property
    def d(self) -> np.ndarray:
        return np.array([abs(c.d) for c in self.couplings])

    @property
    def e1(self) -> np.ndarray:
        return np.array([abs(c.e1) for c in self.couplings])

    @property
    def e2(self) -> np.ndarray:
        return np.array([abs(c.e2) for c in self.couplings])


@dataclass(frozen=True)
class ContrastProfile:
    positions: np.ndarray
    raw: np.ndarray
    convolved: np.ndarray
    psf_fwhm: float


@dataclass(frozen=True)
class Reversal:
    position: float
    width: float
    crossings: tuple[float, ...]
    ambiguous: bool
    plateaus: tuple[float, float]


def profile_couplings(profile: StrainProfile, model: CouplingModel) -> CouplingProfile:
    return CouplingProfile(profile.positions, tuple(couple(s, model) for s in profile.tensors))


def gaussian_blur(x: np.ndarray, y: np.ndarray, fwhm: float) -> np.ndarray:
    """Gaussian smoothing on a (possibly non-uniform) grid.

    The kernel is renormalized over the available samples, so the result is
    a weighted average of ``y`` everywhere, including near the edges.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if fwhm < 0:
        raise ValueError("PSF FWHM must be non-negative")
    if fwhm == 0 or len(x) < 2:
        return y.copy()
    sigma = fwhm * _FWHM_TO_SIGMA
    # trapezoid cell widths
    dx = np.empty_like(x)
    dx[1:-1] = 0.5 * (x[2:] - x[:-2])
    dx[0] = 0.5 * (x[1] - x[0])
    dx[-1] = 0.5 * (x[-1] - x[-2])
    kernel = np.exp(-0.5 * ((x[:, None] - x[None, :]) / sigma) ** 2) * dx[None, :]
    kernel /= kernel.sum(axis=1, keepdims=True)
    return kernel @ y


def profile_contrast(
    profile: StrainProfile,
    model: CouplingModel,
    rates: PhotoRateParams,
    bz: float = 0.0,
    psf_fwhm: float = DEFAULT_PSF_FWHM_UM,
    gs_couplings: HamiltonianCouplings | None = None,
    mw_rate: float = 5.0,
    resonance_pair: tuple[int, int] = (0, 1),
) -> ContrastProfile:
    """Pointwise ODMR contrast along the profile, then PSF blurring.

    ``model`` maps stress to excited-state terms.  The ground state only
    selects the driven line; it defaults to an unstrained 2.87 GHz triplet.
    """
    if psf_fwhm < 0:
        raise ValueError("psf_fwhm must be non-negative")
    gs = eigensolve(build(gs_couplings or HamiltonianCouplings(2.87), bz))
    raw = np.array(
        [
            cw_contrast(gs, eigensolve(build(couple(s, model), bz)), rates, mw_rate, resonance_pair)
            for s in profile.tensors
        ]
    )
    return ContrastProfile(profile.positions, raw, gaussian_blur(profile.positions, raw, psf_fwhm), psf_fwhm)


def _zero_crossings(x: np.ndarray, y: np.ndarray) -> list[tuple[float, int, int]]:
    """(position, left index, right index) of every sign change, zeros skipped."""
    nz = np.flatnonzero(y != 0)
    out = []
    for i, k in zip(nz[:-1], nz[1:]):
        if np.sign(y[i]) == np.sign(y[k]):
            continue
        if k == i + 1:
            xc = x[i] - y[i] * (x[k] - x[i]) / (y[k] - y[i])
        else:
            xc = 0.5 * (x[i + 1] + x[k - 1])
        out.append((float(xc), int(i), int(k)))
    return out


def _level_crossing(x: np.ndarray, y: np.ndarray, level: float, start: int, step: int) -> float:
    """Walk from ``start`` in direction ``step`` until ``y`` passes ``level``."""
    i = start
    while 0 <= i + step < len(x):
        a, b = y[i], y[i + step]
        if (a - level) * (b - level) <= 0 and a != b:
            return float(x[i] + (level - a) * (x[i + step] - x[i]) / (b - a))
        i += step
    return float(x[0] if step < 0 else x[-1])


def find_reversal(cp: ContrastProfile | tuple[np.ndarray, np.ndarray], use: str = "convolved") -> Reversal:
    """Locate the contrast sign change and its transition width.

    The width is the distance between the points where the contrast reaches
    half of the plateau on either side of the crossing; each plateau is the
    median of the outer 20% of samples on its side.
    """
    if isinstance(cp, ContrastProfile):
        x = cp.positions
        y = cp.convolved if use == "convolved" else cp.raw
    else:
        x, y = (np.asarray(a, dtype=float) for a in cp)
    crossings = _zero_crossings(x, y)
    if not crossings:
        raise NoReversalError("contrast profile has no sign change")
    xc, left, right = crossings[0]
    n_edge = max(1, int(round(0.2 * len(x))))
    plateau_left = float(np.median(y[:n_edge]))
    plateau_right = float(np.median(y[-n_edge:]))
    x_a = _level_crossing(x, y, 0.5 * plateau_left, left + 1, -1) if plateau_left != 0 else float(xc)
    x_b = _level_crossing(x, y, 0.5 * plateau_right, right - 1, 1) if plateau_right != 0 else float(xc)
    return Reversal(
        position=float(xc),
        width=float(abs(x_b - x_a)),
        crossings=tuple(c[0] for c in crossings),
        ambiguous=len(crossings) > 1,
        plateaus=(plateau_left, plateau_right),
    )
