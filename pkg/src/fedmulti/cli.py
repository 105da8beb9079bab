"""Command-line interface: run experiments, list presets, compare run directories.

Exit codes: 0 success, 1 runtime failure (non-finite iterates, unreadable
artifacts), 2 invalid configuration or arguments.  Artifacts land in
--out, else $FEDMULTI_OUT_DIR, else ./out; every directory gets a
manifest.json whose embedded config reproduces it byte for byte via
``fedmulti run --config manifest.json``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import bound_report_dict, inverse_decay_bound, sqrt_decay_bound
from .config import ConfigError, ExperimentSpec, parse_config, read_config_file
from .engine import calibrate_g_bound, run_training
from .metrics import gain_from_rounds, seed_statistics
from .presets import PRESETS, GainSweepPreset, SuitePreset, get_preset, sweep_run_config
from .problem import build_quadratic_problem, compute_constants
from .sweeps import crossing_search

TRACE_HEADER = ["algo", "M", "E", "seed", "round", "model", "lr", "sample_size", "delta", "gap"]
SUMMARY_HEADER = [
    "algo", "M", "E", "round",
    "delta_mean", "delta_var", "gap_mean", "gap_var", "gap_low", "gap_high",
]
GAIN_HEADER = ["algo", "M", "E", "epsilon", "T1", "TP", "gain"]


def _f(x) -> str:
    return str(float(x))


def write_trace_csv(path: Path, traces: list) -> None:
    """One row per (seed, round, model), all indices 1-based."""
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for trace in traces:
            n_rounds, n_models = trace.delta.shape
            for t in range(n_rounds):
                for m in range(n_models):
                    writer.writerow([
                        trace.algo, n_models, trace.local_steps, trace.seed_index + 1,
                        t + 1, m + 1, _f(trace.lr[t]), int(trace.sample_size[t]),
                        _f(trace.delta[t, m]), _f(trace.gap[t, m]),
                    ])


def write_summary_csv(path: Path, traces: list) -> None:
    """Cross-seed statistics of the per-seed model-mean error and gap."""
    delta = np.stack([t.delta.mean(axis=1) for t in traces])  # (S, T)
    gap = np.stack([t.gap.mean(axis=1) for t in traces])
    ds, gs = seed_statistics(delta), seed_statistics(gap)
    first = traces[0]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for t in range(delta.shape[1]):
            writer.writerow([
                first.algo, first.n_models, first.local_steps, t + 1,
                _f(ds.mean[t]), _f(ds.var[t]), _f(gs.mean[t]), _f(gs.var[t]),
                _f(gs.low[t]), _f(gs.high[t]),
            ])


def write_gain_csv(path: Path, reports: list) -> None:
    """Reached gain reports only; withheld ones go to the manifest."""
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GAIN_HEADER)
        for rep in reports:
            if not rep.reached:
                continue
            writer.writerow([
                rep.algo, rep.n_models, rep.local_steps, _f(rep.epsilon),
                rep.t_single, rep.t_multi, _f(rep.gain),
            ])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _manifest(kind: str, config: dict, extras: dict) -> dict:
    payload = {
        "kind": kind,
        "config": config,
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }
    payload.update(extras)
    return payload


def _seed_worker(payload):
    problem, config, master_seed, seed_index, constants = payload
    return run_training(problem, config, master_seed, seed_index, constants=constants)


def _run_seeds(problem, config, master_seed, n_seeds, constants, jobs: int) -> list:
    payloads = [(problem, config, master_seed, i, constants) for i in range(n_seeds)]
    if jobs <= 1 or n_seeds == 1:
        return [_seed_worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=min(jobs, n_seeds)) as pool:
        return list(pool.map(_seed_worker, payloads))


def execute_run(spec: ExperimentSpec, out_dir: Path, jobs: int = 1) -> dict:
    """Run one experiment spec and write its artifact directory."""
    run = spec.run
    if spec.emit_bounds and run.lr.kind != "inverse":
        raise ConfigError("'outputs.bounds' needs a decaying learning rate ('lr.kind: inverse')")
    if spec.gain_epsilon_fracs and run.algo == "fedavg-seq":
        raise ConfigError("'gain' compares against the sequential baseline; pick a multi-model algo")
    problem = build_quadratic_problem(**spec.problem.to_dict())
    constants = compute_constants(problem)
    g_bound = None
    if run.sampling.kind == "lr-scaled" or spec.emit_bounds:
        cal = calibrate_g_bound(problem, run, spec.master_seed, constants=constants)
        g_bound = cal.g_bound
        constants = constants.with_g_bound(g_bound)

    out_dir.mkdir(parents=True, exist_ok=True)
    traces = _run_seeds(problem, run, spec.master_seed, spec.n_seeds, constants, jobs)
    artifacts = ["trace.csv"]
    write_trace_csv(out_dir / "trace.csv", traces)
    if spec.emit_summary and spec.n_seeds >= 2:
        write_summary_csv(out_dir / "summary.csv", traces)
        artifacts.append("summary.csv")

    if spec.emit_bounds:
        mean_delta = np.stack([t.delta for t in traces]).mean(axis=0)  # (T, M)
        if run.algo == "mfa-rr":
            curve = inverse_decay_bound(
                constants, run.lr.beta, run.lr.gamma, run.n_models, run.local_steps,
                run.rounds, v_scale=run.sampling.v_scale, on_violation="flag",
            )
        else:
            curve = sqrt_decay_bound(
                constants, run.lr.beta, run.lr.gamma, run.n_models, run.local_steps,
                problem.n_clients, run.rounds, on_violation="flag",
            )
        report = bound_report_dict(curve, constants, mean_delta=mean_delta.max(axis=1),
                                   extras={"algo": run.algo})
        _write_json(out_dir / "bounds.json", report)
        artifacts.append("bounds.json")

    gain_extras: dict = {}
    if spec.gain_epsilon_fracs:
        reports, withheld = _run_gain(problem, spec, constants)
        write_gain_csv(out_dir / "gain.csv", reports)
        artifacts.append("gain.csv")
        gain_extras = {"withheld_gains": withheld}

    manifest = _manifest("run", spec.to_dict(), {
        "artifacts": sorted(artifacts),
        "g_bound": g_bound,
        "gap_floor_hits": int(sum(t.floored for t in traces)),
        "max_grad_norm": max(t.max_grad_norm for t in traces),
        **gain_extras,
    })
    _write_json(out_dir / "manifest.json", manifest)
    return manifest


def _run_gain(problem, spec: ExperimentSpec, constants):
    """Baseline + multi crossings for each requested epsilon fraction."""
    from .sweeps import single_model_baseline

    run = spec.run
    epsilons = [frac * constants.delta_init for frac in spec.gain_epsilon_fracs]
    cap = spec.gain_rounds_cap
    base = crossing_search(problem, single_model_baseline(run), spec.master_seed,
                           spec.n_seeds, epsilons, cap, constants)
    multi = crossing_search(problem, run, spec.master_seed, spec.n_seeds, epsilons, cap, constants)
    reports, withheld = [], []
    for frac, eps in zip(spec.gain_epsilon_fracs, epsilons):
        rep = gain_from_rounds(base.crossing(eps), multi.crossing(eps), run.n_models,
                               eps, algo=run.algo, local_steps=run.local_steps)
        if rep.reached:
            reports.append(rep)
        else:
            withheld.append({"epsilon_frac": frac, "epsilon": eps, "reason": rep.reason})
    return reports, withheld


def execute_suite(preset: SuitePreset, out_dir: Path, jobs: int = 1,
                  master_seed: int | None = None) -> dict:
    master = preset.master_seed if master_seed is None else master_seed
    out_dir.mkdir(parents=True, exist_ok=True)
    run_names = []
    for run_name, config in preset.runs:
        spec = ExperimentSpec(
            problem=preset.problem,
            run=config,
            master_seed=master,
            n_seeds=preset.n_seeds,
        )
        execute_run(spec, out_dir / run_name, jobs=jobs)
        run_names.append(run_name)
    manifest = _manifest("suite", {"preset": preset.name, "master_seed": master}, {
        "runs": run_names,
        "artifacts": [f"{name}/" for name in run_names],
    })
    _write_json(out_dir / "manifest.json", manifest)
    return manifest


def execute_gain_sweep(preset: GainSweepPreset, out_dir: Path,
                       master_seed: int | None = None) -> dict:
    master = preset.master_seed if master_seed is None else master_seed
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = build_quadratic_problem(**preset.problem.to_dict())
    constants = compute_constants(problem)
    epsilons = [frac * constants.delta_init for frac in preset.epsilon_fracs]
    reports, withheld = [], []
    for local_steps in preset.local_steps_grid:
        base_cfg = sweep_run_config(preset, "fedavg-seq", local_steps, 1)
        base = crossing_search(problem, base_cfg, master, preset.n_seeds,
                               epsilons, preset.rounds_cap, constants)
        for algo in preset.algos:
            for n_models in preset.n_models_grid:
                cfg = sweep_run_config(preset, algo, local_steps, n_models)
                multi = crossing_search(problem, cfg, master, preset.n_seeds,
                                        epsilons, preset.rounds_cap, constants)
                for frac, eps in zip(preset.epsilon_fracs, epsilons):
                    rep = gain_from_rounds(base.crossing(eps), multi.crossing(eps),
                                           n_models, eps, algo=algo, local_steps=local_steps)
                    if rep.reached:
                        reports.append(rep)
                    else:
                        withheld.append({
                            "algo": algo, "n_models": n_models, "local_steps": local_steps,
                            "epsilon_frac": frac, "reason": rep.reason,
                        })
    write_gain_csv(out_dir / "gain.csv", reports)
    manifest = _manifest("gain-sweep", {"preset": preset.name, "master_seed": master}, {
        "artifacts": ["gain.csv"],
        "delta_init": constants.delta_init,
        "epsilon_fracs": list(preset.epsilon_fracs),
        "withheld_gains": withheld,
    })
    _write_json(out_dir / "manifest.json", manifest)
    return manifest


def _out_root(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    env = os.environ.get("FEDMULTI_OUT_DIR")
    return Path(env) if env else Path("out")


def _dispatch_preset(name: str, args) -> int:
    try:
        preset = get_preset(name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    out_dir = Path(args.out) if args.out else _out_root(None) / name
    if isinstance(preset, SuitePreset):
        execute_suite(preset, out_dir, jobs=args.jobs, master_seed=args.seed)
    else:
        execute_gain_sweep(preset, out_dir, master_seed=args.seed)
    print(f"wrote {out_dir}")
    return 0


def _cmd_run(args) -> int:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("pass exactly one of --config or --preset")
    if args.preset is not None:
        return _dispatch_preset(args.preset, args)
    raw = read_config_file(args.config)
    if "config" in raw and "kind" in raw and isinstance(raw["config"], dict) \
            and "preset" in raw["config"]:
        inner = raw["config"]
        if args.seed is None and "master_seed" in inner:
            args.seed = int(inner["master_seed"])
        return _dispatch_preset(str(inner["preset"]), args)
    spec = parse_config(raw)
    if args.seed is not None:
        spec = ExperimentSpec(
            problem=spec.problem, run=spec.run, master_seed=args.seed,
            n_seeds=spec.n_seeds, emit_bounds=spec.emit_bounds,
            emit_summary=spec.emit_summary, gain_epsilon_fracs=spec.gain_epsilon_fracs,
            gain_rounds_cap=spec.gain_rounds_cap,
        )
    out_dir = Path(args.out) if args.out else _out_root(None)
    execute_run(spec, out_dir, jobs=args.jobs)
    print(f"wrote {out_dir}")
    return 0


def _cmd_presets(_args) -> int:
    width = max(len(name) for name in PRESETS)
    for name in sorted(PRESETS):
        print(f"{name:<{width}}  {PRESETS[name].description}")
    return 0


def _read_run_dir(path: Path) -> tuple[dict, dict]:
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(f"no manifest.json in {path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("kind") != "run":
        raise ConfigError(f"{path} is not a single-run directory (kind={manifest.get('kind')!r})")
    trace_path = path / "trace.csv"
    if not trace_path.exists():
        raise ConfigError(f"no trace.csv in {path}")
    with trace_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ConfigError(
                f"trace.csv schema mismatch in {path}: expected {','.join(TRACE_HEADER)}"
            )
        gaps: dict = {}
        for row in reader:
            seed, rnd = int(row[3]), int(row[4])
            gaps.setdefault(seed, {}).setdefault(rnd, []).append(float(row[9]))
    seeds = sorted(gaps)
    rounds = sorted(gaps[seeds[0]])
    per_seed = np.array([[np.mean(gaps[s][t]) for t in rounds] for s in seeds])
    return manifest, {"per_seed_gap": per_seed, "rounds": rounds}


def _cmd_compare(args) -> int:
    man_a, data_a = _read_run_dir(Path(args.run_a))
    man_b, data_b = _read_run_dir(Path(args.run_b))
    cfg_a, cfg_b = man_a["config"], man_b["config"]
    for field in ("problem", "seeds"):
        if cfg_a.get(field) != cfg_b.get(field):
            raise ConfigError(f"cannot compare: '{field}' sections differ")
    for field in ("n_models", "local_steps", "rounds"):
        if cfg_a["run"].get(field) != cfg_b["run"].get(field):
            raise ConfigError(
                f"cannot compare: 'run.{field}' differs "
                f"({cfg_a['run'].get(field)} vs {cfg_b['run'].get(field)})"
            )
    algo_a, algo_b = cfg_a["run"]["algo"], cfg_b["run"]["algo"]
    gap_a, gap_b = data_a["per_seed_gap"], data_b["per_seed_gap"]
    n_rounds = gap_a.shape[1]
    tail = slice(max(0, n_rounds - n_rounds // 4), n_rounds)
    mean_a, mean_b = float(gap_a[:, tail].mean()), float(gap_b[:, tail].mean())
    var_a = float(gap_a[:, tail].var(axis=0, ddof=1).mean())
    var_b = float(gap_b[:, tail].var(axis=0, ddof=1).mean())
    run_cfg = cfg_a["run"]
    print(f"comparing {algo_a} vs {algo_b} "
          f"(M={run_cfg['n_models']}, E={run_cfg['local_steps']}, "
          f"T={run_cfg['rounds']}, seeds={cfg_a['seeds']['count']})")
    print(f"mean gap, final quarter: {algo_a}={mean_a:.4f}  {algo_b}={mean_b:.4f}  "
          f"diff={mean_a - mean_b:+.4f}")
    print(f"cross-seed gap variance, final quarter: {algo_a}={var_a:.4e}  "
          f"{algo_b}={var_b:.4e}  ratio={var_a / max(var_b, 1e-300):.3f}")
    if {algo_a, algo_b} == {"mfa-rand", "mfa-rr"}:
        var_rand = var_a if algo_a == "mfa-rand" else var_b
        var_rr = var_b if algo_a == "mfa-rand" else var_a
        verdict = "PASS" if var_rand > var_rr else "FAIL"
        print(f"variance ordering (mfa-rand > mfa-rr): {verdict}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedmulti",
        description="deterministic multi-model federated averaging simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run an experiment from a config file or preset")
    runp.add_argument("--config", help="YAML config or a previously written manifest.json")
    runp.add_argument("--preset", help="built-in preset name (see 'fedmulti presets')")
    runp.add_argument("--out", help="artifact directory (default $FEDMULTI_OUT_DIR or ./out)")
    runp.add_argument("--jobs", type=int, default=1, help="worker processes for the seed sweep")
    runp.add_argument("--seed", type=int, default=None, help="override the master seed")
    runp.set_defaults(func=_cmd_run)

    listp = sub.add_parser("presets", help="list built-in presets")
    listp.set_defaults(func=_cmd_presets)

    cmpp = sub.add_parser("compare", help="compare two run directories")
    cmpp.add_argument("run_a")
    cmpp.add_argument("run_b")
    cmpp.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
