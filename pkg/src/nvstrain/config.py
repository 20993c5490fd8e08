"""Run configuration: defaults, presets, user file and CLI overrides.

Later layers win.  The merged result is validated against
``config_schema.json`` (unknown keys are errors) and written next to every
run's outputs.
"""
from __future__ import annotations

import copy
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .hamiltonian import GAMMA_E_MHZ_PER_G, LifetimeModel
from .photodynamics import PhotoRateParams
from .presets import get_preset
from .strain import CouplingModel, HamiltonianCouplings

__all__ = ["ConfigError", "DEFAULTS", "load_schema", "resolve_config", "RunConfig"]


class ConfigError(ValueError):
    pass


# eta, tau_singlet and the drive settings are not fitted quantities; they are
# placeholders chosen for simulation only.
DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "output_dir": "nvstrain-out",
    "site_preset": None,
    "gamma_e_mhz_per_g": GAMMA_E_MHZ_PER_G,
    "bz_G": 0.0,
    "es_terms": {"d_ghz": 1.42, "e1_ghz": 0.0, "e2_ghz": 0.0, "e1_phase_rad": 0.0, "e2_phase_rad": 0.0},
    "gs_terms": {"d_ghz": 2.87, "e1_ghz": 0.0, "e2_ghz": 0.0, "e1_phase_rad": 0.0, "e2_phase_rad": 0.0},
    "photodynamics": {
        "eta": 0.2,
        "k_r_mhz": 67.7,
        "k_isc0_mhz": 6.4,
        "k_isc1_mhz": 50.7,
        "q0": 0.54,
        "tau_singlet_ns": 250.0,
        "pulse_spacing_ns": 1000.0,
        "mw_rate_mhz": 5.0,
        "linewidth_mhz": 10.0,
        "mode": "pulsed",
    },
    "lifetimes": {},
    "sweep": {"start_G": 0.0, "stop_G": 800.0, "steps": 81, "rel_noise": 0.0},
    "odmr": {},
    "decay": {"t_stop_ns": 40.0, "points": 401, "peak_counts": 1e5, "initial": "optical"},
    "pulses": {"n_pulses": 50, "initial": "swapped", "rel_noise": 0.0},
    "profile": {
        "x_start_um": 7.15,
        "x_stop_um": 7.95,
        "points": 161,
        "center_um": 7.55,
        "width_um": 0.01,
        "baseline": [0.0, 0.0, 0.0, 0.0, 0.5, 0.0],
        "breaking": [0.0, 0.0, 0.0, 0.0, 9.5, 0.0],
        "psf_fwhm_um": 0.55,
    },
    "fit": {"max_iter": 500, "starts": 1},
}


@lru_cache(maxsize=1)
def load_schema() -> dict:
    text = resources.files("nvstrain").joinpath("config_schema.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _preset_layer(name: str) -> dict:
    p = get_preset(name)
    layer = {
        "site_preset": p.name,
        "es_terms": {"d_ghz": p.d_es_ghz, "e1_ghz": p.e1_es_ghz, "e2_ghz": p.e2_es_ghz},
        "gs_terms": {"d_ghz": p.d_gs_ghz},
        "photodynamics": {"k_r_mhz": p.k_r_mhz, "k_isc0_mhz": p.k_isc0_mhz, "k_isc1_mhz": p.k_isc1_mhz, "q0": p.q0},
        "lifetimes": {"tau_bright_ns": p.tau_bright_ns, "tau_dark_ns": p.tau_dark_ns},
    }
    if p.tau_bright_err_ns is not None:
        layer["lifetimes"]["tau_bright_err_ns"] = p.tau_bright_err_ns
        layer["lifetimes"]["tau_dark_err_ns"] = p.tau_dark_err_ns
    return layer


def validate(config: Mapping) -> None:
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None


def resolve_config(
    file_config: Mapping | str | Path | None = None,
    overrides: Mapping | None = None,
    preset: str | None = None,
) -> dict:
    """Merge defaults, preset, config file and overrides, then validate.

    The preset comes from ``preset`` if given, else from the file's
    ``site_preset`` key; explicit values in the file still override it.
    """
    if isinstance(file_config, (str, Path)):
        try:
            file_config = json.loads(Path(file_config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
    file_config = dict(file_config or {})
    # a resolved_config.json written by an earlier run can be fed straight back in
    file_config.pop("generated_by", None)
    if file_config.get("site_preset"):
        try:
            file_config["site_preset"] = get_preset(file_config["site_preset"]).name
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    validate(file_config)
    name = preset or file_config.get("site_preset")
    config = copy.deepcopy(DEFAULTS)
    if name:
        try:
            config = _merge(config, _preset_layer(name))
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    config = _merge(config, file_config)
    if name:
        config["site_preset"] = get_preset(name).name
    config = _merge(config, overrides or {})
    validate(config)
    return config


class RunConfig:
    """Typed accessors over a resolved configuration dict."""

    def __init__(self, data: Mapping) -> None:
        self.data = dict(data)

    @property
    def gamma_e(self) -> float:
        return float(self.data["gamma_e_mhz_per_g"])

    @property
    def bz(self) -> float:
        return float(self.data["bz_G"])

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def _terms(self, key: str) -> HamiltonianCouplings:
        t = self.data[key]
        return HamiltonianCouplings.from_moduli(
            t["d_ghz"], t.get("e1_ghz", 0.0), t.get("e2_ghz", 0.0), t.get("e1_phase_rad", 0.0), t.get("e2_phase_rad", 0.0)
        )

    @property
    def es_couplings(self) -> HamiltonianCouplings:
        return self._terms("es_terms")

    @property
    def gs_couplings(self) -> HamiltonianCouplings:
        return self._terms("gs_terms")

    @property
    def rates(self) -> PhotoRateParams:
        p = self.data["photodynamics"]
        return PhotoRateParams(
            p["eta"], p["k_r_mhz"], p["k_isc0_mhz"], p["k_isc1_mhz"], p["q0"], p["tau_singlet_ns"], p["pulse_spacing_ns"]
        )

    @property
    def lifetime_model(self) -> LifetimeModel:
        return self.rates.lifetime_model

    def coupling_model(self, which: str) -> CouplingModel:
        cm = self.data.get("coupling_model", {}).get(which)
        if cm is None:
            raise ConfigError(f"coupling_model.{which} is required for this command")
        return CouplingModel.from_dict(cm)
