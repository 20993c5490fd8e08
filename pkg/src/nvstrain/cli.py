"""Command-line front end.

    nvstrain presets
    nvstrain simulate {odmr,decay,pulses,sweep-bz,map} [--site-preset I] [--config run.json]
    nvstrain fit {decay,thermal,joint-es,pulse-dynamics} ...

Exit codes: 0 success, 2 invalid config or input file, 3 numerical failure
or non-converged fit, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, resolve_config
from .hamiltonian import build, eigensolve, field_sweep
from .inference import (
    LifetimeData,
    OdmrData,
    PulseTrajectory,
    fit_decay,
    fit_joint_es,
    fit_pulse_dynamics,
    fit_thermal_lifetimes,
)
from .io import SchemaError, read_csv, require_columns, write_csv, write_json
from .lsq import FitError, FitResult
from .mapping import NoReversalError, find_reversal, logistic_profile, profile_contrast, profile_couplings
from .photodynamics import DegenerateDynamicsError, PopulationState, decay_curve, odmr_spectrum, pulse_train, steady_state
from .presets import PRESETS
from .strain import StressTensor
from .synthetic import es_sweep_data

EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class NotConverged(RuntimeError):
    pass


def _out_dir(cfg: dict) -> Path:
    path = Path(cfg["output_dir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _resolved(args: argparse.Namespace, extra: dict | None = None) -> dict:
    overrides: dict = dict(extra or {})
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if getattr(args, "bz", None) is not None:
        overrides["bz_G"] = args.bz
    return resolve_config(args.config, overrides, args.site_preset)


def _finish(cfg: dict, written: list[Path]) -> int:
    out = _out_dir(cfg)
    write_json(out / "resolved_config.json", cfg, cfg)
    for path in written:
        print(path)
    return 0


# -- simulate ---------------------------------------------------------------


def sim_odmr(args: argparse.Namespace) -> int:
    cfg = _resolved(args)
    rc = RunConfig(cfg)
    out = _out_dir(cfg)
    pd = cfg["photodynamics"]
    gs = eigensolve(build(rc.gs_couplings, rc.bz, rc.gamma_e))
    es = eigensolve(build(rc.es_couplings, rc.bz, rc.gamma_e))
    odmr = cfg["odmr"]
    span = 1e-3 * rc.gamma_e * abs(rc.bz) + 0.2
    d = rc.gs_couplings.d
    f = np.linspace(odmr.get("f_start_ghz", d - span), odmr.get("f_stop_ghz", d + span), odmr.get("points", 801))
    spectrum, lines = odmr_spectrum(gs, es, rc.rates, f, pd["linewidth_mhz"] * 1e-3, pd["mw_rate_mhz"], pd["mode"])
    meta = {"bz_G": rc.bz}
    for k, (fl, c) in enumerate(lines):
        meta[f"line{k}"] = f"{fl!r} GHz contrast {c!r}"
    written = [write_csv(out / "odmr.csv", {"f_ghz": f, "contrast": spectrum}, cfg, meta)]
    if args.plot:
        from .plotting import plot_odmr

        written.append(plot_odmr(f, spectrum, out / "odmr.png", f"{cfg['site_preset'] or 'custom'}, Bz = {rc.bz:g} G"))
    return _finish(cfg, written)


def sim_decay(args: argparse.Namespace) -> int:
    cfg = _resolved(args)
    rc = RunConfig(cfg)
    out = _out_dir(cfg)
    dc = cfg["decay"]
    es = eigensolve(build(rc.es_couplings, rc.bz, rc.gamma_e))
    rates = rc.rates
    tau = 1000.0 / rates.lifetime_model.total_rate(es.mixing)
    if dc["initial"] == "thermal":
        pops = es.weights.T @ np.full(3, 1.0 / 3.0)
    else:
        pops = steady_state(es, rates).excited
    pops = pops / pops.sum()
    t = np.linspace(0.0, dc["t_stop_ns"], dc["points"])
    rng = np.random.default_rng(rc.seed)
    curve = decay_curve(pops, tau, t, peak_counts=dc["peak_counts"], rng=rng if dc["peak_counts"] else None)
    order = es.label_order
    meta = {
        "bz_G": rc.bz,
        "initial": dc["initial"],
        "P4_P5_P6": " ".join(repr(float(pops[j])) for j in order),
        "tau4_tau5_tau6_ns": " ".join(repr(float(tau[j])) for j in order),
    }
    written = [write_csv(out / "decay.csv", {"t_ns": t, "counts": curve.intensity}, cfg, meta)]
    if args.plot:
        from .plotting import plot_decay

        ref = decay_curve([0.5, 0.25, 0.25], tau[order], t, peak_counts=dc["peak_counts"]).intensity
        written.append(plot_decay(t, curve.intensity, out / "decay.png", ref))
    return _finish(cfg, written)


def sim_pulses(args: argparse.Namespace) -> int:
    extra = {}
    if args.pulses is not None:
        extra["pulses"] = {"n_pulses": args.pulses}
    cfg = _resolved(args, extra)
    rc = RunConfig(cfg)
    out = _out_dir(cfg)
    pc = cfg["pulses"]
    es = eigensolve(build(rc.es_couplings, rc.bz, rc.gamma_e))
    rates = rc.rates
    from .inference import initial_ground

    p_init = initial_ground(pc["initial"], es, rates)
    ground, p4 = pulse_train(PopulationState(p_init, np.zeros(3)), es, rates, pc["n_pulses"])
    columns = {
        "pulse_index": np.arange(len(p4)),
        "p0": ground[:, 1],
        "p_plus": ground[:, 0],
        "p_minus": ground[:, 2],
        "P4": p4,
    }
    if pc["rel_noise"] > 0:
        rng = np.random.default_rng(rc.seed)
        err = pc["rel_noise"] * p4
        columns["P4"] = p4 + err * rng.standard_normal(p4.shape)
        columns["p4_err"] = err
    meta = {"bz_G": rc.bz, "initial": pc["initial"], "eta": rates.eta}
    written = [write_csv(out / "pulses.csv", columns, cfg, meta)]
    if args.plot:
        from .plotting import plot_pulses

        written.append(plot_pulses(columns["pulse_index"], columns["P4"], out / "pulses.png"))
    return _finish(cfg, written)


def sim_sweep(args: argparse.Namespace) -> int:
    cfg = _resolved(args)
    rc = RunConfig(cfg)
    out = _out_dir(cfg)
    sw = cfg["sweep"]
    bz = np.linspace(sw["start_G"], sw["stop_G"], sw["steps"])
    lm = rc.lifetime_model
    res = field_sweep(rc.es_couplings, bz, lm, rc.gamma_e)
    cols = {"bz_G": bz}
    for k in range(3):
        cols[f"e{k + 4}_ghz"] = res.energies[:, k]
    for k in range(3):
        cols[f"m{k + 4}"] = res.mixing[:, k]
    for k in range(3):
        cols[f"tau{k + 4}_ns"] = res.lifetimes[:, k]
    written = [write_csv(out / "sweep_bz.csv", cols, cfg, {"gamma_e_mhz_per_g": rc.gamma_e})]
    noise = sw["rel_noise"]
    rng = np.random.default_rng(rc.seed) if noise > 0 else None
    odmr, lt = es_sweep_data(rc.es_couplings, lm, bz, noise, rng, rc.gamma_e)
    f_err = odmr.freq_err if odmr.freq_err is not None else np.zeros_like(odmr.freq)
    written.append(write_csv(out / "es_odmr.csv", {"bz_G": odmr.bz, "f_ghz": odmr.freq, "f_err_ghz": f_err}, cfg))
    lt_cols = {"bz_G": lt.bz}
    for k in range(3):
        lt_cols[f"tau{k + 4}_ns"] = lt.tau[:, k]
    if lt.tau_err is not None:
        for k in range(3):
            lt_cols[f"tau{k + 4}_err_ns"] = lt.tau_err[:, k]
    written.append(write_csv(out / "lifetimes.csv", lt_cols, cfg))
    if args.plot:
        from .plotting import plot_sweep

        written.append(plot_sweep(bz, res.energies, res.lifetimes, out / "sweep_bz.png"))
    return _finish(cfg, written)


def sim_map(args: argparse.Namespace) -> int:
    cfg = _resolved(args)
    rc = RunConfig(cfg)
    out = _out_dir(cfg)
    pf = cfg["profile"]
    model = rc.coupling_model("excited")
    x = np.linspace(pf["x_start_um"], pf["x_stop_um"], pf["points"])
    profile = logistic_profile(
        x, StressTensor.from_array(pf["baseline"]), StressTensor.from_array(pf["breaking"]), pf["center_um"], pf["width_um"]
    )
    cpl = profile_couplings(profile, model)
    cp = profile_contrast(
        profile, model, rc.rates, rc.bz, pf["psf_fwhm_um"], rc.gs_couplings, cfg["photodynamics"]["mw_rate_mhz"]
    )
    cols = {
        "x_um": x,
        "d_ghz": cpl.d,
        "e1_ghz": cpl.e1,
        "e2_ghz": cpl.e2,
        "contrast_raw": cp.raw,
        "contrast_psf": cp.convolved,
    }
    written = [write_csv(out / "map.csv", cols, cfg, {"psf_fwhm_um": pf["psf_fwhm_um"]})]
    summary = {}
    for key in ("raw", "convolved"):
        try:
            rev = find_reversal(cp, use=key)
            summary[key] = {
                "x_rev_um": rev.position,
                "width_um": rev.width,
                "crossings_um": list(rev.crossings),
                "ambiguous": rev.ambiguous,
            }
        except NoReversalError as exc:
            summary[key] = {"error": str(exc)}
    written.append(write_json(out / "reversal.json", summary, cfg))
    if args.plot:
        from .plotting import plot_map

        x_rev = summary["raw"].get("x_rev_um")
        written.append(plot_map(x, cp.raw, cp.convolved, out / "map.png", x_rev))
    return _finish(cfg, written)


# -- fit ----------------------------------------------------------------------


def _report(cfg: dict, command: str, inputs: Sequence[str], body: dict) -> dict:
    return {"command": command, "inputs": list(inputs), **body, "config": cfg}


def _emit(cfg: dict, name: str, report: dict, converged: bool) -> int:
    out = _out_dir(cfg)
    path = write_json(out / f"fit_{name}.json", report, cfg)
    write_json(out / "resolved_config.json", cfg, cfg)
    print(json.dumps({k: report[k] for k in ("parameters", "errors") if k in report}, sort_keys=True))
    print(path)
    if not converged:
        raise NotConverged(f"fit {name} did not converge: {report.get('message', '')}")
    return 0


def _result_body(result: FitResult) -> dict:
    return result.to_dict()


def fit_decay_cmd(args: argparse.Namespace) -> int:
    cfg = _resolved(args)
    table = read_csv(args.data)
    require_columns(table, ["t_ns", "counts"])
    taus = args.tau or cfg["fit"].get("tau_ns")
    if taus is None:
        # lifetimes of the configured excited state at this field, |4> first
        rc = RunConfig(cfg)
        es = eigensolve(build(rc.es_couplings, rc.bz, rc.gamma_e))
        taus = (1000.0 / rc.lifetime_model.total_rate(es.mixing))[es.label_order].tolist()
    counts = table["counts"]
    sigma = np.sqrt(np.clip(counts, 1.0, None))
    res = fit_decay(table["t_ns"], counts, taus, sigma)
    names = [f"P{k + 4}" for k in range(len(taus))]
    body = {
        "parameters": {**dict(zip(names, res.populations.tolist())), "amplitude": res.amplitude},
        "errors": dict(zip(names, res.populations_err.tolist())),
        "residual_norm": res.residual_norm,
        "condition": res.condition,
        "lifetimes_ns": list(taus),
        "converged": True,
    }
    return _emit(cfg, "decay", _report(cfg, "fit decay", [args.data], body), True)


def fit_thermal_cmd(args: argparse.Namespace) -> int:
    cfg = _resolved(args)
    table = read_csv(args.data)
    require_columns(table, ["t_ns", "counts"])
    counts = table["counts"]
    res = fit_thermal_lifetimes(table["t_ns"], counts, np.sqrt(np.clip(counts, 1.0, None)), max_iter=cfg["fit"]["max_iter"])
    return _emit(cfg, "thermal", _report(cfg, "fit thermal", [args.data], _result_body(res)), res.converged)


def _read_odmr(path: str) -> OdmrData:
    t = read_csv(path)
    require_columns(t, ["bz_G", "f_ghz"], ["f_err_ghz"])
    err = t.get("f_err_ghz")
    if err is not None and np.any(err <= 0):
        err = None
    return OdmrData(t["bz_G"], t["f_ghz"], err)


def _read_lifetimes(path: str) -> LifetimeData:
    t = read_csv(path)
    cols = ["tau4_ns", "tau5_ns", "tau6_ns"]
    errs = ["tau4_err_ns", "tau5_err_ns", "tau6_err_ns"]
    require_columns(t, ["bz_G", *cols], errs)
    tau = np.stack([t[c] for c in cols], axis=1)
    err = None
    if all(t.get(e) is not None for e in errs):
        err = np.stack([t[e] for e in errs], axis=1)
        if np.any(err <= 0):
            err = None
    return LifetimeData(t["bz_G"], tau, err)


def fit_joint_cmd(args: argparse.Namespace) -> int:
    cfg = _resolved(args)
    rc = RunConfig(cfg)
    odmr = _read_odmr(args.odmr)
    lt = _read_lifetimes(args.lifetimes)
    starts = args.starts or cfg["fit"]["starts"]
    rng = np.random.default_rng(rc.seed)
    x0 = cfg["fit"].get("x0")
    candidates = [None if x0 is None else np.asarray(x0, dtype=float)]
    d0 = float(np.median(odmr.freq))
    for _ in range(starts - 1):
        candidates.append(np.array([d0, d0, d0]) * rng.uniform([0.3, 0.0, 0.0], [1.5, 0.6, 1.5]))
    best = None
    for start in candidates:
        res = fit_joint_es(odmr, lt, rc.lifetime_model, start, rc.gamma_e, cfg["fit"]["max_iter"])
        if best is None or res.cost < best.cost:
            best = res
    body = _result_body(best)
    body["starts"] = starts
    return _emit(cfg, "joint_es", _report(cfg, "fit joint-es", [args.odmr, args.lifetimes], body), best.converged)


def fit_pulses_cmd(args: argparse.Namespace) -> int:
    cfg = _resolved(args)
    rc = RunConfig(cfg)
    trajectories = []
    for path in args.data:
        t = read_csv(path)
        require_columns(t, ["pulse_index", "p4"], ["p4_err"])
        if "bz_G" not in t.meta or "initial" not in t.meta:
            raise SchemaError(f"{path}: header needs '# bz_G=...' and '# initial=...' lines")
        order = np.argsort(t["pulse_index"])
        err = t.get("p4_err")
        trajectories.append(
            PulseTrajectory(float(t.meta["bz_G"]), t["p4"][order], None if err is None else err[order], t.meta["initial"])
        )
    lt = cfg.get("lifetimes", {})
    if "tau_bright_ns" not in lt:
        raise ConfigError("lifetimes.tau_bright_ns / tau_dark_ns required (use a site preset or config)")
    tb, td = lt["tau_bright_ns"], lt["tau_dark_ns"]
    tbe = lt.get("tau_bright_err_ns", 0.01 * tb)
    tde = lt.get("tau_dark_err_ns", 0.01 * td)
    kw = {}
    if cfg["fit"].get("x0") is not None:
        kw["x0"] = cfg["fit"]["x0"]
    res = fit_pulse_dynamics(
        trajectories, rc.es_couplings, rc.rates.eta, tb, td, tbe, tde, gamma_e=rc.gamma_e, max_iter=cfg["fit"]["max_iter"], **kw
    )
    return _emit(cfg, "pulse_dynamics", _report(cfg, "fit pulse-dynamics", list(args.data), _result_body(res)), res.converged)


# -- presets --------------------------------------------------------------------


def _pm(value: float, err: float | None, unit: str = "") -> str:
    text = f"{value:g}" if err is None else f"{value:g} +- {err:g}"
    return f"{text} {unit}".rstrip()


def presets_cmd(args: argparse.Namespace) -> int:
    if args.json:
        print(json.dumps({k: p.to_dict() for k, p in PRESETS.items()}, indent=2, sort_keys=True))
        return 0
    for p in PRESETS.values():
        print(f"[{p.name}] {p.description}")
        print(f"  source: {p.provenance}")
        print(f"  tau_bright = {_pm(p.tau_bright_ns, p.tau_bright_err_ns, 'ns')}")
        print(f"  tau_dark   = {_pm(p.tau_dark_ns, p.tau_dark_err_ns, 'ns')}")
        print(f"  ES |D|     = {_pm(p.d_es_ghz, p.d_es_err_ghz, 'GHz')}")
        print(f"  ES |E1|    = {_pm(p.e1_es_ghz, p.e1_es_err_ghz, 'GHz')}")
        print(f"  ES |E2|    = {_pm(p.e2_es_ghz, p.e2_es_err_ghz, 'GHz')}")
        print(f"  k_r        = {_pm(p.k_r_mhz, p.k_r_err_mhz, 'MHz')}")
        print(f"  k_isc0     = {_pm(p.k_isc0_mhz, p.k_isc0_err_mhz, 'MHz')}")
        print(f"  k_isc1     = {_pm(p.k_isc1_mhz, p.k_isc1_err_mhz, 'MHz')}")
        print(f"  q0         = {_pm(p.q0, p.q0_err)}")
        print(f"  GS D       = {p.d_gs_ghz:g} GHz")
    return 0


# -- parser ---------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--site-preset", help="site-I, site-IV or ambient (aliases I, IV)")
    p.add_argument("--seed", type=int, help="RNG seed for synthetic noise")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nvstrain", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"nvstrain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("presets", help="list built-in parameter presets")
    pr.add_argument("--json", action="store_true", help="machine-readable output")
    pr.set_defaults(func=presets_cmd)

    sim = sub.add_parser("simulate", help="run a forward simulation")
    simsub = sim.add_subparsers(dest="what", required=True)
    for name, func, text in (
        ("odmr", sim_odmr, "ground-state ODMR contrast spectrum"),
        ("decay", sim_decay, "excited-state fluorescence decay"),
        ("pulses", sim_pulses, "ground populations over a pulse train"),
        ("sweep-bz", sim_sweep, "ES levels, mixing and lifetimes versus field"),
        ("map", sim_map, "contrast along a strain profile"),
    ):
        p = simsub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--bz", type=float, help="axial field in gauss")
        p.add_argument("--plot", action="store_true", help="also render PNG figures")
        if name == "pulses":
            p.add_argument("--pulses", type=int, help="number of pulses")
        p.set_defaults(func=func)

    fit = sub.add_parser("fit", help="fit measured or synthetic data")
    fitsub = fit.add_subparsers(dest="what", required=True)
    p = fitsub.add_parser("decay", help="populations from a decay curve with fixed lifetimes")
    _common(p)
    p.add_argument("--data", required=True, help="CSV with t_ns,counts")
    p.add_argument("--tau", type=float, nargs="+", help="fixed lifetimes in ns")
    p.set_defaults(func=fit_decay_cmd)
    p = fitsub.add_parser("thermal", help="bright/dark lifetimes from a thermal-start decay")
    _common(p)
    p.add_argument("--data", required=True, help="CSV with t_ns,counts")
    p.set_defaults(func=fit_thermal_cmd)
    p = fitsub.add_parser("joint-es", help="|D|, |E1|, |E2| from ES ODMR lines and lifetimes")
    _common(p)
    p.add_argument("--odmr", required=True, help="CSV with bz_G,f_ghz[,f_err_ghz]")
    p.add_argument("--lifetimes", required=True, help="CSV with bz_G,tau4_ns..tau6_ns[,errors]")
    p.add_argument("--starts", type=int, help="number of start points (multi-start)")
    p.set_defaults(func=fit_joint_cmd)
    p = fitsub.add_parser("pulse-dynamics", help="k_r, k_isc0, k_isc1, q0 from pulse trains")
    _common(p)
    p.add_argument("--data", required=True, nargs="+", help="pulse-train CSVs")
    p.set_defaults(func=fit_pulses_cmd)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (FitError, DegenerateDynamicsError, NoReversalError, NotConverged, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
