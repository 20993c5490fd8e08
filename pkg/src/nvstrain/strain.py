"""Stress tensors in the NV frame and their coupling to the spin Hamiltonian.

Stress is in GPa, coupling constants in MHz/GPa and the resulting
Hamiltonian terms in GHz.  The NV frame has z along [111], x along [-110]
and y along [-1-12] of the cubic crystal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "StressTensor",
    "StressDecomposition",
    "CouplingModel",
    "HamiltonianCouplings",
    "NV_FRAME_ROTATION",
    "decompose",
    "couple",
    "rotate_to_nv_frame",
]

_MHZ_TO_GHZ = 1e-3

# rows are the NV-frame axes expressed in the cubic frame
NV_FRAME_ROTATION = np.array(
    [
        np.array([-1.0, 1.0, 0.0]) / np.sqrt(2.0),
        np.array([-1.0, -1.0, 2.0]) / np.sqrt(6.0),
        np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0),
    ]
)


@dataclass(frozen=True)
class StressTensor:
    """Symmetric stress tensor, six independent components in GPa."""

    xx: float = 0.0
    yy: float = 0.0
    zz: float = 0.0
    xy: float = 0.0
    xz: float = 0.0
    yz: float = 0.0

    def __post_init__(self) -> None:
        for name in ("xx", "yy", "zz", "xy", "xz", "yz"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"stress component {name} is not finite: {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "StressTensor":
        """Build from ``[xx, yy, zz, xy, xz, yz]``."""
        comps = [float(v) for v in values]
        if len(comps) != 6:
            raise ValueError(f"expected 6 stress components, got {len(comps)}")
        return cls(*comps)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, atol: float = 1e-9) -> "StressTensor":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"stress matrix must be 3x3, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if not np.allclose(m, m.T, atol=atol * scale, rtol=0.0):
            raise ValueError("stress matrix is not symmetric")
        m = 0.5 * (m + m.T)
        return cls(m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[0, 2], m[1, 2])

    @classmethod
    def hydrostatic(cls, pressure: float) -> "StressTensor":
        return cls(pressure, pressure, pressure)

    def to_array(self) -> np.ndarray:
        return np.array([self.xx, self.yy, self.zz, self.xy, self.xz, self.yz])

    def to_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.xx, self.xy, self.xz],
                [self.xy, self.yy, self.yz],
                [self.xz, self.yz, self.zz],
            ]
        )

    @property
    def mean_inplane(self) -> float:
        """In-plane mean normal stress, (xx + yy) / 2."""
        return 0.5 * (self.xx + self.yy)

    @property
    def deviatoric_inplane(self) -> float:
        """In-plane deviatoric normal stress, (xx - yy) / 2."""
        return 0.5 * (self.xx - self.yy)

    def __add__(self, other: "StressTensor") -> "StressTensor":
        if not isinstance(other, StressTensor):
            return NotImplemented
        return StressTensor.from_array(self.to_array() + other.to_array())

    def __sub__(self, other: "StressTensor") -> "StressTensor":
        if not isinstance(other, StressTensor):
            return NotImplemented
        return StressTensor.from_array(self.to_array() - other.to_array())

    def __mul__(self, scalar: float) -> "StressTensor":
        return StressTensor.from_array(float(scalar) * self.to_array())

    __rmul__ = __mul__


@dataclass(frozen=True)
class StressDecomposition:
    preserving: StressTensor
    breaking: StressTensor

    def reassemble(self) -> StressTensor:
        return self.preserving + self.breaking


@dataclass(frozen=True)
class CouplingModel:
    """Spin-stress coupling constants for one spin manifold.

    The axial couplings ``g41``/``g43`` shift D; the transverse ones feed
    E1 (``g25``, ``g26``) and E2 (``g15``, ``g16``).  There are no
    built-in values: every constant has to be supplied.
    """

    g41: float
    g43: float
    g15: float
    g16: float
    g25: float
    g26: float
    d0_ghz: float

    def __post_init__(self) -> None:
        for name in ("g41", "g43", "g15", "g16", "g25", "g26", "d0_ghz"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"coupling {name} is not finite")
            object.__setattr__(self, name, value)
        if self.d0_ghz <= 0:
            raise ValueError(f"d0_ghz must be positive, got {self.d0_ghz}")

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "CouplingModel":
        return cls(**{k: float(data[k]) for k in ("g41", "g43", "g15", "g16", "g25", "g26", "d0_ghz")})

    def to_dict(self) -> dict[str, float]:
        return {
            "g41": self.g41,
            "g43": self.g43,
            "g15": self.g15,
            "g16": self.g16,
            "g25": self.g25,
            "g26": self.g26,
            "d0_ghz": self.d0_ghz,
        }


@dataclass(frozen=True)
class HamiltonianCouplings:
    """Diagonal shift ``d`` and complex off-diagonal terms, all in GHz."""

    d: float
    e1: complex = 0j
    e2: complex = 0j

    def __post_init__(self) -> None:
        d = float(self.d)
        e1 = complex(self.e1)
        e2 = complex(self.e2)
        if not (np.isfinite(d) and np.isfinite(e1) and np.isfinite(e2)):
            raise ValueError("Hamiltonian couplings must be finite")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e1", e1)
        object.__setattr__(self, "e2", e2)

    @classmethod
    def from_moduli(
        cls,
        d: float,
        e1_abs: float,
        e2_abs: float,
        e1_phase: float = 0.0,
        e2_phase: float = 0.0,
    ) -> "HamiltonianCouplings":
        """Couplings from moduli and optional phases (radians)."""
        return cls(d, e1_abs * np.exp(1j * e1_phase), e2_abs * np.exp(1j * e2_phase))

    @property
    def moduli(self) -> tuple[float, float, float]:
        return abs(self.d), abs(self.e1), abs(self.e2)


def decompose(sigma: StressTensor) -> StressDecomposition:
    """Split stress into its C3v-preserving and C3v-breaking parts.

    The preserving part is ``diag(s_m, s_m, s_zz)`` with ``s_m`` the in-plane
    mean normal stress; everything else (in-plane deviatoric and shear
    components) is symmetry breaking.
    """
    sm = sigma.mean_inplane
    preserving = StressTensor(sm, sm, sigma.zz)
    breaking = StressTensor(
        sigma.xx - sm,
        sigma.yy - sm,
        0.0,
        sigma.xy,
        sigma.xz,
        sigma.yz,
    )
    return StressDecomposition(preserving, breaking)


def couple(sigma: StressTensor, model: CouplingModel) -> HamiltonianCouplings:
    """Map NV-frame stress to (D, E1, E2)."""
    sm = sigma.mean_inplane
    sd = sigma.deviatoric_inplane
    g = _MHZ_TO_GHZ
    d = model.d0_ghz + g * (model.g41 * sm + model.g43 * sigma.zz)
    e1 = g * complex(
        model.g26 * sigma.xz - model.g25 * sd,
        -(model.g26 * sigma.yz + model.g25 * sigma.xy),
    )
    e2 = g * complex(
        model.g16 * sigma.xz - model.g15 * sd,
        -(model.g16 * sigma.yz + model.g15 * sigma.xy),
    )
    return HamiltonianCouplings(d, e1, e2)


def rotate_to_nv_frame(sigma_lab: StressTensor) -> StressTensor:
    """Express a cubic-frame stress tensor in the NV frame."""
    r = NV_FRAME_ROTATION
    return StressTensor.from_matrix(r @ sigma_lab.to_matrix() @ r.T, atol=1e-9)
