"""Experiment orchestration: config files, seeded Monte-Carlo sweeps, output.

Trials are embarrassingly parallel; each derives its random streams from
(master seed, sweep index, trial index), so results are bit-identical for
any worker count.
"""

from __future__ import annotations

import json
import math
import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .adapt import AutoSelectConfig, kernel_width
from .channel import ChannelConfig, vehicular_a_profile
from .constellations import Constellation
from .errors import ConfigError
from .metrics import SerCurve
from .receivers import RunResult, TrialSpec, run_trial

__all__ = [
    "ExperimentConfig",
    "RunSummary",
    "load_config",
    "run_experiment",
    "emit_results",
    "resolve_receiver_params",
]

SWEEP_AXES = ("snr_db", "users", "fd_ts", "rank", "preproc_len", "branches")

# Tuned per-algorithm hyperparameters (BPSK / QAM operating points).
TABLE_DEFAULTS = {
    ("fullrank-lms", "bpsk"): {"mu_w": 0.015},
    ("fullrank-mser", "bpsk"): {"mu_w": 0.02},
    ("mser-jpdf", "bpsk"): {"mu_w": 0.01, "mu_p": 0.01, "D": 10, "I": 12, "B": 4},
    ("mser-jpdf-auto", "bpsk"): {
        "mu_w": 0.006, "mu_p": 0.006,
        "d_max": 10, "d_min": 6, "i_max": 12, "i_min": 6, "B": 4,
    },
    ("fullrank-lms", "qam"): {"mu_w": 0.0015},
    ("fullrank-mser", "qam"): {"mu_w": 0.004},
    ("mser-jpdf", "qam"): {"mu_w": 0.006, "mu_p": 0.006, "D": 12, "I": 12, "B": 4},
    ("mser-jpdf-auto", "qam"): {
        "mu_w": 0.003, "mu_p": 0.003,
        "d_max": 12, "d_min": 6, "i_max": 12, "i_min": 6, "B": 4,
    },
    ("matched-filter", "bpsk"): {},
    ("matched-filter", "qam"): {},
}

_ALGORITHM_ALIASES = {
    "mser-jpdf": "mser-jpdf",
    "mser-jpdf-auto": "mser-jpdf-auto",
    "mser-jpdf (auto)": "mser-jpdf-auto",
    "full-rank-lms": "fullrank-lms",
    "fullrank-lms": "fullrank-lms",
    "mmse-lms": "fullrank-lms",
    "lms": "fullrank-lms",
    "full-rank-mser": "fullrank-mser",
    "fullrank-mser": "fullrank-mser",
    "matched-filter": "matched-filter",
}


def normalize_algorithm(name: str) -> str:
    key = name.strip().lower()
    if key not in _ALGORITHM_ALIASES:
        raise ConfigError(
            f"unknown algorithm {name!r}; expected one of {sorted(set(_ALGORITHM_ALIASES))}"
        )
    return _ALGORITHM_ALIASES[key]


def parse_constellation(name: str) -> Constellation:
    key = str(name).strip().lower().replace("-", "")
    if key == "bpsk":
        return Constellation.bpsk()
    if key.startswith("qam"):
        return Constellation.qam(int(key[3:]))
    if key.endswith("qam"):
        return Constellation.qam(int(key[:-3]))
    raise ConfigError(f"unknown constellation {name!r} (use BPSK or QAM<M>)")


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment description."""

    algorithm: str
    constellation: Constellation
    K: int = 6
    L: int = 40
    P: int = 3
    Lp: int = 3
    fd_ts: float = 1e-5
    snr_db: float = 10.0
    profile: tuple[float, ...] | None = None
    runs: int = 1
    n_symbols: int = 1500
    n_train: int = 300
    seed: int = 0
    receiver: dict = field(default_factory=dict)
    sweep_axis: str | None = None
    sweep_values: tuple[float, ...] = ()

    def __post_init__(self):
        problems = []
        if self.runs < 1:
            problems.append("runs must be >= 1")
        if self.n_symbols < self.n_train:
            problems.append("symbols must be >= training")
        if self.sweep_axis is not None and self.sweep_axis not in SWEEP_AXES:
            problems.append(f"sweep axis must be one of {SWEEP_AXES}")
        if self.sweep_axis is not None and len(self.sweep_values) == 0:
            problems.append("sweep values must be non-empty")
        if problems:
            raise ConfigError("; ".join(problems))


def resolve_receiver_params(algorithm: str, constellation: Constellation, given: dict) -> dict:
    """Merge user-provided hyperparameters over the tuned table defaults."""
    defaults = dict(TABLE_DEFAULTS[(algorithm, constellation.kind)])
    unknown = set(given) - (set(defaults) | {"rho", "mu_w", "mu_p"})
    if unknown:
        raise ConfigError(f"unknown receiver parameters: {sorted(unknown)}")
    defaults.update(given)
    return defaults


def noise_variance(constellation: Constellation, snr_db: float) -> float:
    """Noise variance for a target SNR with unit-power channels.

    SNR is average received symbol energy per user over the noise variance;
    the raw-alphabet average energy enters so SNR is comparable across M.
    """
    return constellation.avg_energy * 10.0 ** (-snr_db / 10.0)


def _apply_sweep(cfg: ExperimentConfig, axis: str | None, value):
    k, fd_ts, snr_db = cfg.K, cfg.fd_ts, cfg.snr_db
    params = resolve_receiver_params(cfg.algorithm, cfg.constellation, cfg.receiver)
    if axis == "users":
        k = int(value)
    elif axis == "fd_ts":
        fd_ts = float(value)
    elif axis == "snr_db":
        snr_db = float(value)
    elif axis == "rank":
        params["D"] = int(value)
    elif axis == "preproc_len":
        params["I"] = int(value)
    elif axis == "branches":
        params["B"] = int(value)
    return k, fd_ts, snr_db, params


def build_trial_spec(cfg: ExperimentConfig, sweep_value=None) -> TrialSpec:
    """TrialSpec for one sweep point (or the single configured point)."""
    k, fd_ts, snr_db, params = _apply_sweep(cfg, cfg.sweep_axis, sweep_value)
    nv = noise_variance(cfg.constellation, snr_db)
    channel = ChannelConfig(
        K=k,
        L=cfg.L,
        P=cfg.P,
        Lp=cfg.Lp,
        fd_ts=fd_ts,
        profile=cfg.profile or vehicular_a_profile(cfg.Lp),
        noise_var=nv,
    )
    rho = params.get("rho")
    if rho is None:
        rho = kernel_width(nv) if nv > 0 else 0.0
    auto = None
    if cfg.algorithm == "mser-jpdf-auto":
        auto = AutoSelectConfig(
            d_min=params["d_min"], d_max=params["d_max"],
            i_min=params["i_min"], i_max=params["i_max"],
        )
    return TrialSpec(
        channel=channel,
        constellation=cfg.constellation,
        algorithm=cfg.algorithm,
        n_symbols=cfg.n_symbols,
        n_train=cfg.n_train,
        rho=rho,
        mu_w=params.get("mu_w", 0.0),
        mu_p=params.get("mu_p", 0.0),
        B=params.get("B", 4),
        D=params.get("D", params.get("d_max", 10)),
        I=params.get("I", params.get("i_max", 12)),
        auto=auto,
    )


@dataclass
class RunSummary:
    """Aggregated outcome of one trial at one sweep point."""

    sweep_value: float | None
    trial: int
    ser_post: float
    ser_all: float
    final_norms: dict[str, float]
    elapsed: float


def _run_task(args) -> RunResult:
    spec, entropy = args
    return run_trial(spec, np.random.SeedSequence(entropy))


def run_experiment(
    cfg: ExperimentConfig, workers: int = 1
) -> tuple[SerCurve, list[RunSummary]]:
    """Execute all trials for all sweep points.

    Results are deterministic in (config, master seed) regardless of the
    worker count: trial streams derive from (seed, point, trial) and the
    reduction follows task order.
    """
    values = list(cfg.sweep_values) if cfg.sweep_axis else [None]
    tasks = []
    for pi, value in enumerate(values):
        spec = build_trial_spec(cfg, value)
        for ti in range(cfg.runs):
            tasks.append((spec, [cfg.seed, pi, ti]))
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_run_task, tasks)
    else:
        results = [_run_task(t) for t in tasks]

    curve = SerCurve(
        kind=cfg.sweep_axis or "single",
        runs=cfg.runs,
        algorithm=cfg.algorithm,
        seed=cfg.seed,
    )
    summaries: list[RunSummary] = []
    for pi, value in enumerate(values):
        point = results[pi * cfg.runs : (pi + 1) * cfg.runs]
        post = np.concatenate([res.errors[cfg.n_train :] for res in point])
        ser = float(np.mean(post)) if post.size else 0.0
        hw = 1.96 * math.sqrt(ser * (1.0 - ser) / post.size) if post.size else 0.0
        x = float(value) if value is not None else 0.0
        curve.points.append((x, ser, hw))
        for ti, res in enumerate(point):
            summaries.append(
                RunSummary(
                    sweep_value=None if value is None else float(value),
                    trial=ti,
                    ser_post=float(np.mean(res.errors[cfg.n_train :]))
                    if cfg.n_train < cfg.n_symbols
                    else 0.0,
                    ser_all=float(np.mean(res.errors)),
                    final_norms=res.final_norms,
                    elapsed=res.elapsed,
                )
            )
    return curve, summaries


def emit_results(curve: SerCurve, path, config: dict | None = None) -> Path:
    """Write the curve as CSV plus a JSON sidecar with the resolved config."""
    if not curve.points:
        raise ValueError("cannot emit an empty curve")
    path = Path(path)
    try:
        path.write_text(curve.to_csv())
        sidecar = path.with_suffix(".json")
        payload = {
            "kind": curve.kind,
            "runs": curve.runs,
            "algorithm": curve.algorithm,
            "seed": curve.seed,
            "config": config or {},
        }
        sidecar.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing results to {path}: {exc}") from exc
    return path


# ---------------------------------------------------------------------------
# Config file ingestion
# ---------------------------------------------------------------------------

_TOP_KEYS = {
    "algorithm", "constellation", "channel", "runs", "symbols", "training",
    "seed", "receiver", "sweep",
}
_CHANNEL_KEYS = {"K", "L", "P", "Lp", "fd_ts", "snr_db", "profile"}
_SWEEP_KEYS = {"axis", "values"}


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file (YAML key/value sections).

    Unknown keys are rejected; hyperparameters absent from ``receiver``
    default from the tuned tables. Semantic problems are aggregated into a
    single error.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"config parse error in {path}{loc}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")

    problems = []
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown top-level keys: {sorted(unknown)}")
    if "algorithm" not in raw:
        problems.append("missing required key: algorithm")
    if "constellation" not in raw:
        problems.append("missing required key: constellation")
    channel = raw.get("channel") or {}
    if not isinstance(channel, dict):
        problems.append("channel must be a mapping")
        channel = {}
    bad_channel = set(channel) - _CHANNEL_KEYS
    if bad_channel:
        problems.append(f"unknown channel keys: {sorted(bad_channel)}")
    receiver = raw.get("receiver") or {}
    if not isinstance(receiver, dict):
        problems.append("receiver must be a mapping")
        receiver = {}
    sweep = raw.get("sweep")
    sweep_axis, sweep_values = None, ()
    if sweep is not None:
        if not isinstance(sweep, dict) or set(sweep) - _SWEEP_KEYS:
            problems.append(f"sweep must be a mapping with keys {sorted(_SWEEP_KEYS)}")
        else:
            sweep_axis = sweep.get("axis")
            sweep_values = tuple(sweep.get("values") or ())
    if problems:
        raise ConfigError(f"{path}: " + "; ".join(problems))

    algorithm = normalize_algorithm(str(raw["algorithm"]))
    constellation = parse_constellation(str(raw["constellation"]))
    params = resolve_receiver_params(algorithm, constellation, receiver)
    profile = channel.get("profile")
    return ExperimentConfig(
        algorithm=algorithm,
        constellation=constellation,
        K=int(channel.get("K", 6)),
        L=int(channel.get("L", 40)),
        P=int(channel.get("P", 3)),
        Lp=int(channel.get("Lp", 3)),
        fd_ts=float(channel.get("fd_ts", 1e-5)),
        snr_db=float(channel.get("snr_db", 10.0)),
        profile=tuple(profile) if profile else None,
        runs=int(raw.get("runs", 1)),
        n_symbols=int(raw.get("symbols", 1500)),
        n_train=int(raw.get("training", 300)),
        seed=int(raw.get("seed", 0)),
        receiver=params,
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
    )
