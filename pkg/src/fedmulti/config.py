"""Experiment configuration: YAML schema, validation, resolution.

One config file describes one run: the problem, the algorithm and its
hyperparameters, the seed sweep, and which artifacts to emit.  Unknown
keys are rejected (typo safety) and every error names the offending
field.  A manifest written by the CLI embeds the fully resolved config
under a "config" key; the loader accepts such manifests directly, so any
artifact directory can be reproduced from its manifest alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .engine import LRSchedule, RunConfig, SampleSchedule


class ConfigError(ValueError):
    """Invalid configuration; message names the field."""


_PROBLEM_KEYS = {"n_clients", "block_size", "mu", "n_data", "sigma_z", "seed"}
_RUN_KEYS = {"algo", "n_models", "local_steps", "rounds"}
_LR_KEYS = {"kind", "eta", "beta", "gamma", "granularity"}
_SAMPLING_KEYS = {"kind", "v"}
_SEED_KEYS = {"master", "count"}
_OUTPUT_KEYS = {"bounds", "summary", "diagnostics", "record_weights"}
_GAIN_KEYS = {"epsilon_fracs", "rounds_cap"}
_TOP_KEYS = {"problem", "run", "lr", "sampling", "seeds", "outputs", "gain"}


def _section(raw: dict, name: str, allowed: set[str], required: bool = True) -> dict:
    if name not in raw:
        if required:
            raise ConfigError(f"missing section '{name}'")
        return {}
    sec = raw[name]
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    return sec


def _need(sec: dict, section: str, key: str, kind, positive: bool = False):
    if key not in sec:
        raise ConfigError(f"missing '{section}.{key}'")
    value = sec[key]
    try:
        value = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{section}.{key}' must be {kind.__name__}, got {value!r}") from None
    if positive and value <= 0:
        raise ConfigError(f"'{section}.{key}' must be positive, got {value!r}")
    return value


@dataclass(frozen=True)
class ProblemSpec:
    n_clients: int
    block_size: int
    mu: float
    n_data: int = 16
    sigma_z: float = 0.01
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "n_clients": self.n_clients,
            "block_size": self.block_size,
            "mu": self.mu,
            "n_data": self.n_data,
            "sigma_z": self.sigma_z,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully validated experiment: problem + run + seeds + outputs."""

    problem: ProblemSpec
    run: RunConfig
    master_seed: int
    n_seeds: int
    emit_bounds: bool = False
    emit_summary: bool = True
    gain_epsilon_fracs: tuple[float, ...] = ()
    gain_rounds_cap: int = 5000

    def to_dict(self) -> dict:
        lr = self.run.lr
        lr_dict = (
            {"kind": "constant", "eta": lr.eta}
            if lr.kind == "constant"
            else {"kind": "inverse", "beta": lr.beta, "gamma": lr.gamma, "granularity": lr.granularity}
        )
        out: dict = {
            "problem": self.problem.to_dict(),
            "run": {
                "algo": self.run.algo,
                "n_models": self.run.n_models,
                "local_steps": self.run.local_steps,
                "rounds": self.run.rounds,
            },
            "lr": lr_dict,
            "sampling": {"kind": self.run.sampling.kind, "v": self.run.sampling.v_scale},
            "seeds": {"master": self.master_seed, "count": self.n_seeds},
            "outputs": {
                "bounds": self.emit_bounds,
                "summary": self.emit_summary,
                "diagnostics": self.run.diagnostics,
                "record_weights": self.run.record_weights,
            },
        }
        if self.gain_epsilon_fracs:
            out["gain"] = {
                "epsilon_fracs": list(self.gain_epsilon_fracs),
                "rounds_cap": self.gain_rounds_cap,
            }
        return out


def parse_config(raw: dict) -> ExperimentSpec:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    if "config" in raw and "kind" in raw:  # a manifest: unwrap the embedded config
        raw = raw["config"]
        if not isinstance(raw, dict):
            raise ConfigError("manifest 'config' entry must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    psec = _section(raw, "problem", _PROBLEM_KEYS)
    problem = ProblemSpec(
        n_clients=_need(psec, "problem", "n_clients", int, positive=True),
        block_size=_need(psec, "problem", "block_size", int, positive=True),
        mu=_need(psec, "problem", "mu", float, positive=True),
        n_data=int(psec.get("n_data", 16)),
        sigma_z=float(psec.get("sigma_z", 0.01)),
        seed=int(psec.get("seed", 0)),
    )
    if problem.n_data < 1:
        raise ConfigError("'problem.n_data' must be at least 1")

    rsec = _section(raw, "run", _RUN_KEYS)
    algo = _need(rsec, "run", "algo", str)
    if algo not in ("mfa-rand", "mfa-rr", "fedavg-seq"):
        raise ConfigError(f"'run.algo' must be mfa-rand, mfa-rr, or fedavg-seq, got {algo!r}")
    n_models = _need(rsec, "run", "n_models", int, positive=True)
    rounds = _need(rsec, "run", "rounds", int)
    if rounds < 1:
        raise ConfigError("'run.rounds' must be at least 1")
    if problem.n_clients % n_models != 0:
        raise ConfigError(
            f"'run.n_models': N must be an integral multiple of M "
            f"(N={problem.n_clients}, M={n_models})"
        )

    lsec = _section(raw, "lr", _LR_KEYS)
    kind = _need(lsec, "lr", "kind", str)
    try:
        if kind == "constant":
            lr = LRSchedule(kind="constant", eta=_need(lsec, "lr", "eta", float, positive=True))
        elif kind == "inverse":
            lr = LRSchedule(
                kind="inverse",
                beta=_need(lsec, "lr", "beta", float, positive=True),
                gamma=_need(lsec, "lr", "gamma", float),
                granularity=str(lsec.get("granularity", "round")),
            )
        else:
            raise ConfigError(f"'lr.kind' must be constant or inverse, got {kind!r}")
    except ValueError as exc:
        raise ConfigError(f"'lr': {exc}") from None

    ssec = _section(raw, "sampling", _SAMPLING_KEYS, required=False)
    try:
        sampling = SampleSchedule(
            kind=str(ssec.get("kind", "full")),
            v_scale=float(ssec.get("v", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"'sampling': {exc}") from None

    dsec = _section(raw, "seeds", _SEED_KEYS)
    master = _need(dsec, "seeds", "master", int)
    n_seeds = _need(dsec, "seeds", "count", int, positive=True)

    osec = _section(raw, "outputs", _OUTPUT_KEYS, required=False)
    for key in osec:
        if not isinstance(osec[key], bool):
            raise ConfigError(f"'outputs.{key}' must be true or false")

    gsec = _section(raw, "gain", _GAIN_KEYS, required=False)
    fracs: tuple[float, ...] = ()
    cap = 5000
    if gsec:
        raw_fracs = gsec.get("epsilon_fracs", [0.5, 0.2, 0.1])
        if not isinstance(raw_fracs, list) or not raw_fracs:
            raise ConfigError("'gain.epsilon_fracs' must be a non-empty list")
        fracs = tuple(float(f) for f in raw_fracs)
        if any(not 0.0 < f < 1.0 for f in fracs):
            raise ConfigError("'gain.epsilon_fracs' entries must lie in (0, 1)")
        cap = int(gsec.get("rounds_cap", 5000))
        if cap < 1:
            raise ConfigError("'gain.rounds_cap' must be at least 1")

    run = RunConfig(
        algo=algo,
        n_models=n_models,
        local_steps=_need(rsec, "run", "local_steps", int, positive=True),
        rounds=rounds,
        lr=lr,
        sampling=sampling,
        record_weights=bool(osec.get("record_weights", False)),
        diagnostics=bool(osec.get("diagnostics", False)),
    )
    if run.algo == "fedavg-seq" and run.n_models != 1:
        raise ConfigError("'run.algo' fedavg-seq trains one model at a time; set n_models: 1")
    return ExperimentSpec(
        problem=problem,
        run=run,
        master_seed=master,
        n_seeds=n_seeds,
        emit_bounds=bool(osec.get("bounds", False)),
        emit_summary=bool(osec.get("summary", True)),
        gain_epsilon_fracs=fracs,
        gain_rounds_cap=cap,
    )


def read_config_file(path: str | Path) -> dict:
    """Raw mapping from a YAML (or JSON) config or manifest file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config root in {path} must be a mapping")
    return raw


def load_config(path: str | Path) -> ExperimentSpec:
    return parse_config(read_config_file(path))


def dump_config(spec: ExperimentSpec) -> str:
    return yaml.safe_dump(spec.to_dict(), sort_keys=True)
