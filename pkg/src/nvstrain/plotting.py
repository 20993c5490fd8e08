"""Figures written next to the CSV outputs of ``nvstrain simulate``."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_odmr", "plot_decay", "plot_pulses", "plot_sweep", "plot_map"]


def _figure(width: float = 6.0, height: float | None = None):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    fig, ax = plt.subplots(figsize=(width, height or width * golden))
    return fig, ax


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_odmr(f_ghz: np.ndarray, contrast: np.ndarray, path: str | Path, title: str = "") -> Path:
    fig, ax = _figure()
    ax.plot(f_ghz, 100.0 * np.asarray(contrast), color="k", lw=1.2)
    ax.axhline(0.0, color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("Microwave frequency (GHz)")
    ax.set_ylabel("ODMR contrast (%)")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_decay(t_ns: np.ndarray, counts: np.ndarray, path: str | Path, reference: np.ndarray | None = None) -> Path:
    fig, ax = _figure()
    ax.semilogy(t_ns, np.clip(counts, 1e-12, None), ".", ms=2, color="tab:blue", label="decay")
    if reference is not None:
        ax.semilogy(t_ns, reference, "k-.", lw=1.0, label="P4 = 0.5 reference")
        ax.legend(frameon=False)
    ax.set_xlabel("Time (ns)")
    ax.set_ylabel("Counts")
    return _save(fig, path)


def plot_pulses(index: np.ndarray, p4: np.ndarray, path: str | Path) -> Path:
    fig, ax = _figure()
    ax.plot(index, p4, "o-", ms=3, color="tab:red")
    ax.set_xlabel("Pulse number")
    ax.set_ylabel("Bright-state population P4")
    return _save(fig, path)


def plot_sweep(bz: np.ndarray, energies: np.ndarray, tau: np.ndarray, path: str | Path) -> Path:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    for k, label in enumerate(("|4>", "|5>", "|6>")):
        ax1.plot(bz, energies[:, k], label=label)
        ax2.plot(bz, tau[:, k], label=label)
    ax1.set_ylabel("Energy (GHz)")
    ax2.set_ylabel("Lifetime (ns)")
    ax2.set_xlabel("Bz (G)")
    ax1.legend(frameon=False, ncol=3)
    return _save(fig, path)


def plot_map(x_um: np.ndarray, raw: np.ndarray, convolved: np.ndarray, path: str | Path, reversal: float | None = None) -> Path:
    fig, ax = _figure()
    ax.plot(x_um, 100.0 * np.asarray(raw), color="k", lw=1.0, label="raw")
    ax.plot(x_um, 100.0 * np.asarray(convolved), color="tab:purple", lw=1.5, label="PSF-blurred")
    ax.axhline(0.0, color="0.6", lw=0.8, ls="--")
    if reversal is not None:
        ax.axvline(reversal, color="tab:red", lw=0.8)
    ax.set_xlabel("Position (um)")
    ax.set_ylabel("ODMR contrast (%)")
    ax.legend(frameon=False)
    return _save(fig, path)
