"""Command line entry point: ``thermosafe <command> [options]``.

Commands
--------
optimize        run one safe-optimization campaign from a YAML config
eigmap          eigenvalue map of the network over a gain/delay grid
simulate        one time-domain run of the network, traces as CSV
context-chain   campaigns at successive operating points with transfer
presets         list or show the hyperparameter presets

Exit codes
----------
0 success, 1 unexpected failure, 2 command-line usage, 3 invalid
configuration, 4 plant failure, 5 campaign failure (for example an empty
safe set), 6 simulation failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .benchmarks import (AnalyticPlant, ExternalPlant, NetworkPlant, demo1_constraint,
                         demo2_constraint, list_presets, load_preset, make_demo_plant, PRESETS)
from .errors import CampaignError, ConfigError, PlantError
from .gp import KernelSpec
from .safe_bo import (AlgoConfig, ParameterGrid, best_entry, context_factor, continue_campaign,
                      initialize_transfer, run_campaign, write_history_csv, write_surfaces_jsonl)

logger = logging.getLogger("thermosafe.cli")

EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE, EXIT_CONFIG, EXIT_PLANT, EXIT_CAMPAIGN, EXIT_SIMULATION = range(7)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

CAMPAIGN_KEYS = {
    "plant", "noise", "preset", "grid", "objective_kernel", "constraint_kernel", "algorithm",
    "init_points", "fixed", "duration", "seed", "surfaces", "context", "context_shift",
    "context_ref", "network",
}
KERNEL_KEYS = {"amplitude", "length_scales", "noise_std", "prior_mean", "context_length_scales"}
ALGO_KEYS = {"name", "safety_threshold", "objective_threshold", "switch_iteration",
             "max_iterations", "beta", "use_expander"}
GRID_KEYS = {"bounds", "counts", "names"}


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(unknown))}")


def load_yaml(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping")
    return data


def _kernel_from(raw: dict, fallback: KernelSpec = None, where: str = "kernel") -> KernelSpec:
    raw = raw or {}
    _check_keys(raw, KERNEL_KEYS, where)
    base = {} if fallback is None else dict(
        amplitude=fallback.amplitude, length_scales=list(fallback.length_scales),
        noise_std=fallback.noise_std, prior_mean=fallback.prior_mean,
        context_length_scales=(None if fallback.context_length_scales is None
                               else list(fallback.context_length_scales)))
    base.update(raw)
    missing = {"amplitude", "length_scales", "noise_std"} - set(base)
    if missing:
        raise ConfigError(f"{where} lacks {', '.join(sorted(missing))}")
    try:
        return KernelSpec(float(base["amplitude"]), tuple(base["length_scales"]),
                          float(base["noise_std"]),
                          None if base.get("prior_mean") is None else float(base["prior_mean"]),
                          base.get("context_length_scales"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _kernel_dict(spec: KernelSpec) -> dict:
    return {"amplitude": spec.amplitude, "length_scales": list(spec.length_scales),
            "noise_std": spec.noise_std, "prior_mean": spec.prior_mean,
            "context_length_scales": (None if spec.context_length_scales is None
                                      else list(spec.context_length_scales))}


def resolve_campaign_config(raw: dict, seed=None, algo_override=None, iterations=None) -> dict:
    """Validate a campaign mapping and fill every default explicitly.

    The result is plain data (suitable for the manifest) from which
    :func:`build_campaign` constructs the objects.
    """
    raw = copy.deepcopy(raw)
    _check_keys(raw, CAMPAIGN_KEYS, "campaign config")
    preset = load_preset(raw["preset"]) if raw.get("preset") else None
    plant = raw.get("plant", preset.name if preset and preset.name in ("demo1", "demo2") else None)
    if plant is None:
        raise ConfigError("campaign config needs a plant")

    grid = raw.get("grid") or {}
    _check_keys(grid, GRID_KEYS, "grid")
    if preset is not None:
        grid.setdefault("bounds", [list(b) for b in preset.grid_bounds])
        grid.setdefault("counts", list(preset.grid_counts))
        grid.setdefault("names", list(preset.param_names))
    if "bounds" not in grid or "counts" not in grid:
        raise ConfigError("grid needs bounds and counts (or a preset)")
    grid.setdefault("names", [f"p{i + 1}" for i in range(len(grid["bounds"]))])

    obj = _kernel_from(raw.get("objective_kernel"), preset.objective if preset else None,
                       "objective_kernel")
    con = _kernel_from(raw.get("constraint_kernel"), preset.constraint if preset else None,
                       "constraint_kernel")

    algo = dict(raw.get("algorithm") or {})
    _check_keys(algo, ALGO_KEYS, "algorithm")
    if algo_override is not None:
        algo["name"] = algo_override
    if iterations is not None:
        algo["max_iterations"] = int(iterations)
    algo.setdefault("name", "safeOpt")
    if preset is not None:
        algo.setdefault("safety_threshold", preset.safety_threshold)
        if str(algo["name"]).lower() == "shrinkalgo":
            algo.setdefault("objective_threshold", preset.objective_threshold)
    algo.setdefault("safety_threshold", 1.0)
    algo.setdefault("objective_threshold", None)
    algo.setdefault("switch_iteration", 0)
    algo.setdefault("max_iterations", 30)
    algo.setdefault("beta", 2.0)
    algo.setdefault("use_expander", False)
    if str(algo["name"]).lower() != "shrinkalgo":
        algo["objective_threshold"] = None
    _algo_from(algo)  # validate now, before anything is written

    init = raw.get("init_points")
    if init is None:
        init = [list(p) for p in preset.init_points] if preset and preset.init_points else None
    if not init:
        raise ConfigError("init_points are required")
    init = [list(np.atleast_1d(np.asarray(p, dtype=float)).tolist()) for p in init]

    fixed = dict(preset.fixed) if preset else {}
    fixed.update(raw.get("fixed") or {})
    resolved = {
        "plant": plant,
        "noise": bool(raw.get("noise", False)),
        "preset": raw.get("preset"),
        "grid": grid,
        "objective_kernel": _kernel_dict(obj),
        "constraint_kernel": _kernel_dict(con),
        "algorithm": algo,
        "init_points": init,
        "fixed": fixed,
        "duration": raw.get("duration"),
        "seed": int(seed if seed is not None else raw.get("seed", 0)),
        "surfaces": bool(raw.get("surfaces", True)),
        "context": raw.get("context"),
        "context_shift": float(raw.get("context_shift", 0.0)),
        "context_ref": float(raw.get("context_ref", 0.0)),
        "network": raw.get("network"),
    }
    return resolved


def _algo_from(algo: dict) -> AlgoConfig:
    try:
        return AlgoConfig(algo["name"], float(algo["safety_threshold"]),
                          None if algo.get("objective_threshold") is None
                          else float(algo["objective_threshold"]),
                          int(algo["switch_iteration"]), int(algo["max_iterations"]),
                          float(algo["beta"]), bool(algo["use_expander"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"algorithm: {exc}") from None


def _parse_plant_selector(plant):
    if isinstance(plant, dict):
        kind = plant.get("type")
        return kind, plant
    text = str(plant)
    kind, _, arg = text.partition(":")
    return kind, {"type": kind, "arg": arg or None}


def build_plant(cfg: dict, base_dir: Path = Path(".")):
    """Instantiate the plant named in a resolved campaign config."""
    kind, opts = _parse_plant_selector(cfg["plant"])
    if kind in ("demo1", "demo2"):
        return make_demo_plant(kind, cfg["noise"], cfg["seed"], cfg["context_shift"],
                               cfg["context_ref"])
    if kind == "ta-network":
        from .network import assemble_network, load_network_config

        path = opts.get("arg") or opts.get("config") or cfg.get("network")
        net_cfg = load_network_config(None if path is None else _resolve(path, base_dir))
        model = assemble_network(net_cfg)
        return NetworkPlant(model, tuple(cfg["grid"]["names"]), dict(cfg["fixed"]),
                            cfg["duration"], cfg["seed"])
    if kind == "external":
        if "arg" in opts:
            return ExternalPlant(command=opts["arg"])
        return ExternalPlant(command=opts.get("command"), mailbox=opts.get("mailbox"),
                             timeout=float(opts.get("timeout", 60.0)))
    raise ConfigError(f"unknown plant selector {cfg['plant']!r}")


def _resolve(path, base_dir: Path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else (base_dir / p)


def build_campaign(cfg: dict):
    grid_cfg = cfg["grid"]
    grid = ParameterGrid.uniform([tuple(b) for b in grid_cfg["bounds"]], grid_cfg["counts"],
                                 cfg.get("context"), tuple(grid_cfg["names"]))
    obj = _kernel_from(cfg["objective_kernel"], where="objective_kernel")
    con = _kernel_from(cfg["constraint_kernel"], where="constraint_kernel")
    return grid, obj, con, _algo_from(cfg["algorithm"])


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def _versions() -> dict:
    out = {"thermosafe": __version__, "python": platform.python_version(),
           "numpy": np.__version__}
    for mod in ("scipy", "numba", "yaml"):
        try:
            out[mod] = __import__(mod).__version__
        except ImportError:
            out[mod] = None
    from ._jit import HAVE_NUMBA

    out["numba_active"] = HAVE_NUMBA
    return out


def config_hash(cfg) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(out: Path, command: str, cfg: dict, seed, extra: dict = None):
    manifest = {"command": command, "config": cfg, "config_hash": config_hash(cfg),
                "seed": seed, "versions": _versions()}
    if extra:
        manifest.update(extra)
    _write_json(out / "manifest.json", manifest)


def _write_json(path: Path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _true_constraint(cfg):
    kind, _ = _parse_plant_selector(cfg["plant"])
    if kind == "demo1":
        return demo1_constraint
    if kind == "demo2":
        return demo2_constraint
    return None


def _summary(history, cfg, algo: AlgoConfig, wall: float, plant) -> dict:
    best = best_entry(history, algo.safety_threshold)
    evals = [h for h in history if not h.was_initializer]
    summary = {
        "best_point": None if best is None else list(best.point),
        "best_objective": None if best is None else best.objective,
        "best_constraint": None if best is None else best.constraint,
        "iterations": len(evals),
        "initializers": len(history) - len(evals),
        "measured_violations": sum(h.constraint > algo.safety_threshold for h in evals),
        "wall_time_s": round(wall, 3),
    }
    truth = _true_constraint(cfg)
    if truth is not None and isinstance(plant, AnalyticPlant):
        shift = plant.context_shift
        summary["true_violations"] = int(sum(
            float(truth(h.point[0] - (shift * (h.context[0] - plant.context_ref)
                                      if shift and h.context else 0.0))) > algo.safety_threshold
            for h in evals))
    return summary


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_optimize(args) -> int:
    base_dir = Path(args.config).resolve().parent
    raw = load_yaml(args.config)
    cfg = resolve_campaign_config(raw, args.seed, args.algo_override, args.iterations)
    grid, obj, con, algo = build_campaign(cfg)
    plant = build_plant(cfg, base_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, "optimize", cfg, cfg["seed"])
    start = time.perf_counter()
    try:
        res = run_campaign(plant, grid, obj, con, algo, cfg["init_points"],
                           record_surfaces=cfg["surfaces"])
    except (CampaignError, PlantError) as exc:
        if exc.history:
            write_history_csv(exc.history, grid, algo.safety_threshold, out / "history.csv")
        _write_json(out / "summary.json", {"error": str(exc), "error_type": type(exc).__name__,
                                           "evaluations": len(exc.history)})
        raise
    finally:
        if isinstance(plant, ExternalPlant):
            plant.close()
    wall = time.perf_counter() - start
    res.write_history_csv(out / "history.csv")
    if cfg["surfaces"]:
        write_surfaces_jsonl(res.surfaces, out / "surfaces.jsonl")
    summary = _summary(res.history, cfg, algo, wall, plant)
    _write_json(out / "summary.json", summary)
    print(f"best point {summary['best_point']} objective {summary['best_objective']} "
          f"after {summary['iterations']} iterations; artifacts in {out}")
    return EXIT_OK


def _axis(spec, name, scale=1.0) -> np.ndarray:
    lo, hi, count = spec
    count = int(count)
    if count < 1:
        raise ConfigError(f"{name} range is empty")
    if count > 1 and not hi > lo:
        raise ConfigError(f"{name} range needs hi > lo")
    return np.linspace(float(lo), float(hi), count) * scale


def cmd_eigmap(args) -> int:
    from .network import assemble_network, load_network_config
    from .network.linear import eigenvalue_map, write_eigenmap_csv

    net_cfg = load_network_config(args.config)
    model = assemble_network(net_cfg)
    gains = _axis(args.n, "n")
    delays = _axis(args.tau, "tau", 1e-3)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = eigenvalue_map(model, gains, delays, n_modes=args.modes)
    write_eigenmap_csv(entries, out / "eigmap.csv")
    stable = [(e.gain, e.delay * 1e3) for e in entries if e.stable]
    write_manifest(out, "eigmap", {"network": net_cfg, "n": list(args.n), "tau_ms": list(args.tau),
                                   "modes": args.modes}, None)
    _write_json(out / "summary.json", {"points": len(entries), "stable_points": len(stable),
                                       "stable": stable})
    print(f"{len(entries)} map points, {len(stable)} fully stable; written to {out / 'eigmap.csv'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .network import assemble_network, load_network_config
    from .network.signals import psd
    from .network.simulate import simulate

    net_cfg = load_network_config(args.config)
    model = assemble_network(net_cfg).with_controller(args.n, args.tau * 1e-3)
    res = simulate(model, args.duration, args.seed, args.warmup, linear=args.linear)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res.to_csv(out / "trace.csv")
    summary = {"n": args.n, "tau_ms": args.tau, "rms_pressure_pa": res.rms_pressure,
               "rms_voltage_v": res.rms_voltage, "duration_s": res.duration, "fs": res.fs,
               "warmup_s": res.warmup}
    start = int(round(res.warmup * res.fs))
    if args.psd and res.pressure_trace.size - start >= 2 * args.segment:
        f, pxx = psd(res.pressure_trace[start:], res.fs, segment=args.segment)
        with open(out / "psd.csv", "w") as fh:
            fh.write("f_hz,psd\n")
            for fi, pi in zip(f, pxx):
                fh.write(f"{fi!r},{float(pi)!r}\n")
        summary["peak_frequency_hz"] = float(f[np.argmax(pxx)])
    _write_json(out / "summary.json", summary)
    write_manifest(out, "simulate", {"network": net_cfg, "n": args.n, "tau_ms": args.tau,
                                     "duration": args.duration, "warmup": args.warmup,
                                     "linear": args.linear}, args.seed)
    print(f"rms pressure {res.rms_pressure:.4g} Pa, rms voltage {res.rms_voltage:.4g} V")
    return EXIT_OK


def cmd_context_chain(args) -> int:
    """Stage 1 runs cold; each later stage transfers all earlier evaluations."""
    base_dir = Path(args.config).resolve().parent
    raw = load_yaml(args.config)
    _check_keys(raw, {"campaign", "stages", "context_length_scales"}, "context-chain config")
    stages = raw.get("stages") or []
    if len(stages) < 2:
        raise ConfigError("a context chain needs at least two stages")
    campaign_raw = raw.get("campaign") or {}
    if isinstance(campaign_raw, str):
        campaign_raw = load_yaml(_resolve(campaign_raw, base_dir))
    cfg = resolve_campaign_config(campaign_raw, args.seed, args.algo_override, None)
    ctx_ls = raw.get("context_length_scales")
    if ctx_ls is None:
        raise ConfigError("context-chain config needs context_length_scales")
    cfg["objective_kernel"]["context_length_scales"] = list(np.atleast_1d(ctx_ls).tolist())
    cfg["constraint_kernel"]["context_length_scales"] = list(np.atleast_1d(ctx_ls).tolist())
    for i, st in enumerate(stages):
        _check_keys(st, {"context", "iterations", "plant", "network", "init_points"},
                    f"stage {i + 1}")
        if "context" not in st or "iterations" not in st:
            raise ConfigError(f"stage {i + 1} needs context and iterations")
    if args.iterations is not None:
        for st in stages:
            st["iterations"] = int(args.iterations)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, "context-chain", {"campaign": cfg, "stages": stages,
                                          "context_length_scales": ctx_ls}, cfg["seed"])
    report = []
    history = []
    prev_ctx = None
    start = time.perf_counter()
    for i, st in enumerate(stages, 1):
        stage_cfg = copy.deepcopy(cfg)
        stage_cfg["context"] = list(np.atleast_1d(st["context"]).astype(float).tolist())
        stage_cfg["algorithm"]["max_iterations"] = int(st["iterations"])
        if "plant" in st:
            stage_cfg["plant"] = st["plant"]
        if "network" in st:
            stage_cfg["network"] = st["network"]
        grid, obj, con, algo = build_campaign(stage_cfg)
        plant = build_plant(stage_cfg, base_dir)
        if i == 1:
            res = run_campaign(plant, grid, obj, con, algo, stage_cfg["init_points"])
            state = res.state
            factors = {"objective": 1.0, "constraint": 1.0}
        else:
            state = initialize_transfer(plant, history, stage_cfg["context"], obj, con, grid,
                                        algo, st.get("init_points") or ())
            continue_campaign(state, plant, algo.max_iterations)
            factors = {"objective": context_factor(obj, prev_ctx, stage_cfg["context"]),
                       "constraint": context_factor(con, prev_ctx, stage_cfg["context"])}
        n_prev = len(history)
        history = state.history
        here = history[n_prev:]
        write_history_csv(history, state.grid, algo.safety_threshold, out / f"stage{i}_history.csv")
        best = best_entry(here, algo.safety_threshold)
        report.append({"stage": i, "context": stage_cfg["context"], "previous_context": prev_ctx,
                       "covariance_factor": factors,
                       "seed_evaluations": sum(h.was_initializer for h in here),
                       "iterations": sum(not h.was_initializer for h in here),
                       "best_point": None if best is None else list(best.point),
                       "best_objective": None if best is None else best.objective})
        prev_ctx = stage_cfg["context"]
        if isinstance(plant, ExternalPlant):
            plant.close()
    with open(out / "transfer_report.csv", "w") as fh:
        fh.write("stage,context,previous_context,factor_objective,factor_constraint,"
                 "seed_evaluations,iterations,best_objective\n")
        for r in report:
            fh.write(",".join([str(r["stage"]), " ".join(map(repr, r["context"])),
                               "" if r["previous_context"] is None else " ".join(map(repr, r["previous_context"])),
                               repr(r["covariance_factor"]["objective"]),
                               repr(r["covariance_factor"]["constraint"]),
                               str(r["seed_evaluations"]), str(r["iterations"]),
                               "" if r["best_objective"] is None else repr(r["best_objective"])]) + "\n")
    _write_json(out / "summary.json", {"stages": report,
                                       "wall_time_s": round(time.perf_counter() - start, 3)})
    for r in report:
        print(f"stage {r['stage']} context {r['context']}: factor "
              f"{r['covariance_factor']['objective']:.6f}, best {r['best_objective']}")
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.show:
        p = load_preset(args.show)
        data = {"name": p.name, "source": p.source,
                "objective_kernel": _kernel_dict(p.objective),
                "constraint_kernel": _kernel_dict(p.constraint),
                "safety_threshold": p.safety_threshold,
                "objective_threshold": p.objective_threshold,
                "grid": {"bounds": [list(b) for b in p.grid_bounds], "counts": list(p.grid_counts),
                         "names": list(p.param_names)},
                "fixed": dict(p.fixed), "init_points": [list(x) for x in p.init_points]}
        print(yaml.safe_dump(data, sort_keys=False), end="")
        return EXIT_OK
    for name in list_presets():
        p = PRESETS[name]
        print(f"{name:14s} {p.source}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _range3(text_values):
    return [float(text_values[0]), float(text_values[1]), int(float(text_values[2]))]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermosafe", description="Safe Bayesian optimization of "
                                 "thermoacoustic controllers.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run one campaign")
    p.add_argument("--config", required=True, help="campaign YAML")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--algo-override", default=None, help="safeOpt, stageOpt or shrinkAlgo")
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("eigmap", help="eigenvalue map over (n, tau)")
    p.add_argument("--config", default=None, help="network YAML (default: shipped network)")
    p.add_argument("--n", nargs=3, default=[0.0, 2.5, 26], metavar=("LO", "HI", "COUNT"))
    p.add_argument("--tau", nargs=3, default=[0.5, 7.0, 27], metavar=("LO_MS", "HI_MS", "COUNT"))
    p.add_argument("--modes", type=int, default=6)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_eigmap)

    p = sub.add_parser("simulate", help="single time-domain run")
    p.add_argument("--config", default=None, help="network YAML (default: shipped network)")
    p.add_argument("--n", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=0.0, help="delay in ms")
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--warmup", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--linear", action="store_true", help="disable tanh and voltage clipping")
    p.add_argument("--psd", action="store_true", help="also write the Welch spectrum")
    p.add_argument("--segment", type=int, default=4096)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("context-chain", help="campaigns over successive operating points")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--algo-override", default=None)
    p.add_argument("--iterations", type=int, default=None, help="iterations of every stage")
    p.set_defaults(func=cmd_context_chain)

    p = sub.add_parser("presets", help="list hyperparameter presets")
    p.add_argument("--show", default=None, metavar="NAME")
    p.set_defaults(func=cmd_presets)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    for attr in ("n", "tau"):
        if args.command == "eigmap":
            try:
                setattr(args, attr, _range3(getattr(args, attr)))
            except ValueError:
                parser.error(f"--{attr} needs LO HI COUNT")
    from .network.simulate import SimulationError

    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlantError as exc:
        print(f"plant error: {exc}", file=sys.stderr)
        return EXIT_PLANT
    except CampaignError as exc:
        print(f"campaign error: {exc}", file=sys.stderr)
        return EXIT_CAMPAIGN
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except ValueError as exc:  # bad numeric input reaching a library call
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
