"""Experiment orchestration: configs, presets, multi-seed sweeps and result files.

Usage::

    qcbm-fdiv run CONFIG.json [--seed-count N] [--out DIR] [--workers W] [--dry-run] [--charts]
    qcbm-fdiv estimate-ft CONFIG.json [--out DIR]
    qcbm-fdiv list-divergences
    qcbm-fdiv presets [--write DIR]

``CONFIG.json`` may also be a manifest written by an earlier run; the run is
then repeated with exactly the recorded configuration.
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import json
import math
import os
import re
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import ClassifierTrainConfig
from .dist import DiscreteDistribution, target_gaussian
from .fdiv import REGISTRY, exact_divergence_definition
from .ftq import (estimate_kl_trials, estimate_pearson_trials, estimate_tv_trials, kl_subroutine_moments,
                  pearson_subroutine_moments, random_bounded_pair, tv_subroutine_moments)
from .sim import AnsatzSpec, born_probs
from .train import F_SWITCH_DEFAULT, BootstrapSummary, TrainConfig, TrainRecord, bootstrap_summary, fmt, run_training

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
KINDS = ("f_switch", "f_local", "ft_estimate", "single_divergence")
DEFAULT_SEEDS = tuple(range(9))
MANIFEST_VERSION = 1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- regimes

# (D_p, D_q) for the five three-qubit parameterisation regimes
REGIMES = {"OO": (1, 4), "O": (1, 3), "E": (1, 1), "U": (4, 2), "UU": (4, 1)}


def regime_label(n_qubits: int, depth_p: int, depth_q: int) -> str:
    """``CODE(params_p,params_q)``, e.g. ``OO(12,30)`` for three qubits at depths 1 and 4.

    Depth pairs listed in :data:`REGIMES` get their code directly; other pairs
    are classified by the depth ratio (>= 4 or <= 1/4 counts as severe).
    """
    codes = {v: k for k, v in REGIMES.items()}
    code = codes.get((depth_p, depth_q))
    if code is None:
        ratio = depth_q / depth_p if depth_p else math.inf
        code = "E" if ratio == 1 else ("OO" if ratio >= 4 else "O") if ratio > 1 else ("UU" if ratio <= 0.25 else "U")
    n_p = AnsatzSpec(n_qubits, depth_p).n_params
    n_q = AnsatzSpec(n_qubits, depth_q).n_params
    return f"{code}({n_p},{n_q})"


# ---------------------------------------------------------------- configs

@dataclass
class TargetSpec:
    kind: str = "qcbm_random"
    depth: int = 1
    seed: int = 1234
    mean: float | None = None
    std: float | None = None

    def __post_init__(self):
        if self.kind not in ("qcbm_random", "gaussian"):
            raise ValueError(f"target kind must be 'qcbm_random' or 'gaussian', got {self.kind!r}")
        if self.kind == "qcbm_random" and self.depth < 0:
            raise ValueError("target depth must be >= 0")


@dataclass
class FTConfig:
    estimator: str = "pearson"
    n_values: tuple[int, ...] = (4, 8, 16)
    pairs: int = 20
    eps: float = 0.05
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        self.n_values = tuple(self.n_values)
        if self.estimator not in ("pearson", "tv", "kl"):
            raise ValueError(f"estimator must be pearson, tv or kl, got {self.estimator!r}")
        if self.eps <= 0 or self.pairs < 1 or self.trials < 1 or not self.n_values or min(self.n_values) < 1:
            raise ValueError("eps, pairs, trials and n_values must be positive")


@dataclass
class ExperimentConfig:
    kind: str = "f_switch"
    n_qubits: int = 3
    target: TargetSpec = field(default_factory=TargetSpec)
    model_depth: int = 4
    train: TrainConfig = field(default_factory=lambda: TrainConfig(generators=F_SWITCH_DEFAULT, heuristic="f_switch"))
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    out: str = "results"
    workers: int | None = None
    bootstrap_resamples: int = 10_000
    bootstrap_seed: int = 0
    name: str = ""
    ft: FTConfig | None = None

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n_qubits < 1 or self.model_depth < 0:
            raise ValueError("n_qubits must be >= 1 and model_depth >= 0")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be a non-empty list of distinct integers")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")
        h = self.train.heuristic
        expected = {"f_switch": ("f_switch",), "f_local": ("k_local", "single"), "single_divergence": ("single",)}
        if self.kind in expected and h not in expected[self.kind]:
            raise ValueError(f"kind {self.kind} needs heuristic in {expected[self.kind]}, got {h!r}")
        if h == "k_local" and self.train.k > self.n_qubits:
            raise ValueError(f"k={self.train.k} exceeds n_qubits={self.n_qubits}")
        if self.kind == "ft_estimate" and self.ft is None:
            self.ft = FTConfig()

    @property
    def regime(self) -> str | None:
        if self.kind == "ft_estimate" or self.target.kind != "qcbm_random":
            return None
        return regime_label(self.n_qubits, self.target.depth, self.model_depth)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"] = self.train.to_dict()
        d["seeds"] = list(self.seeds)
        if self.ft is not None:
            d["ft"]["n_values"] = list(self.ft.n_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if isinstance(d.get("target"), dict):
            d["target"] = TargetSpec(**d["target"])
        if isinstance(d.get("train"), dict):
            d["train"] = TrainConfig.from_dict(d["train"])
        if isinstance(d.get("ft"), dict):
            d["ft"] = FTConfig(**d["ft"])
        return cls(**d)


# Accepted JSON fields and their types; nested objects list their own fields.
_SCHEMA = {
    "kind": str, "n_qubits": int, "model_depth": int, "seeds": list, "out": str, "workers": (int, type(None)),
    "bootstrap_resamples": int, "bootstrap_seed": int, "name": str,
    "target": {"kind": str, "depth": int, "seed": int, "mean": (int, float, type(None)),
               "std": (int, float, type(None))},
    "train": {"generators": list, "heuristic": str, "k": (int, type(None)), "shots": (int, type(None)),
              "lr": (int, float), "epochs": int, "classifier": str, "classifier_shots": (int, type(None)),
              "seed": int, "record_params": bool,
              "classifier_cfg": {"lr": (int, float), "epochs": int, "batch_size": int, "seed": int},
              "clamp": {"r_min": (int, float), "r_max": (int, float)}},
    "ft": {"estimator": str, "n_values": list, "pairs": int, "eps": (int, float), "trials": int, "seed": int},
}


def _key_pos(text: str, key: str, start: int = 0) -> int:
    m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, start)
    return m.start() if m else start


def _line_of(text: str, key: str, start: int = 0) -> int:
    return text.count("\n", 0, _key_pos(text, key, start)) + 1


def _check_types(obj: dict, schema: dict, text: str, source: str, prefix: str = "", start: int = 0) -> None:
    for key, value in obj.items():
        where = f"{source}:{_line_of(text, key, start)}"
        if key not in schema:
            raise ConfigError(f"{where}: unknown field '{prefix}{key}'")
        rule = schema[key]
        if isinstance(rule, dict):
            if value is None and key == "ft":
                continue
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: field '{prefix}{key}' must be an object")
            _check_types(value, rule, text, source, f"{prefix}{key}.", _key_pos(text, key, start))
            continue
        types = rule if isinstance(rule, tuple) else (rule,)
        # JSON booleans are Python ints; never accept them for numeric fields
        if isinstance(value, bool) and bool not in types or not isinstance(value, types):
            names = "/".join("null" if t is type(None) else t.__name__ for t in types)
            raise ConfigError(f"{where}: field '{prefix}{key}' must be {names}, got {json.dumps(value)}")


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate a JSON config (or a run manifest) into an :class:`ExperimentConfig`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}: invalid JSON: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be an object")
    if "manifest_version" in data:
        data = data["config"]
    if "kind" not in data:
        raise ConfigError(f"{source}:1: missing required field 'kind'")
    _check_types(data, _SCHEMA, text, source)
    try:
        return ExperimentConfig.from_dict(data)
    except (ValueError, TypeError, KeyError) as e:
        key = next((k for k in re.findall(r"[a-z_]+", str(e)) if f'"{k}"' in text), "kind")
        raise ConfigError(f"{source}:{_line_of(text, key)}: {e}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    return parse_config(text, str(path))


# ---------------------------------------------------------------- targets

def make_target(spec: TargetSpec, n_qubits: int) -> DiscreteDistribution:
    if spec.kind == "gaussian":
        return target_gaussian(n_qubits, spec.mean, spec.std)
    if spec.kind == "qcbm_random":
        ansatz = AnsatzSpec(n_qubits, spec.depth)
        theta = np.random.default_rng(spec.seed).uniform(-np.pi, np.pi, ansatz.n_params)
        return DiscreteDistribution.from_weights(born_probs(ansatz, theta))
    raise ConfigError(f"unknown target kind {spec.kind!r}")


# ---------------------------------------------------------------- presets

# Generator learning rates for the Gaussian k-local runs at n = 4: per k, the
# grid value with the smallest area under the median reverse-KL curve on seeds
# 100-108 (k = 1 on 100-102), see scripts/tune_local_lr.py. Wider windows reuse 0.1.
LOCAL_LR = {1: 0.4, 2: 0.1, 3: 0.2}
GLOBAL_LR = 0.05
LOCAL_CLASSIFIER = ClassifierTrainConfig(lr=0.01, epochs=10, batch_size=100)


def _regime_preset(code: str, training: str) -> ExperimentConfig:
    d_p, d_q = REGIMES[code]
    if training == "f_switch":
        kind, train = "f_switch", TrainConfig(generators=F_SWITCH_DEFAULT, heuristic="f_switch")
    else:
        kind, train = "single_divergence", TrainConfig(generators=("tv",), heuristic="single")
    train = replace(train, shots=1000, lr=0.05, epochs=500, classifier="exact")
    return ExperimentConfig(kind=kind, n_qubits=3, target=TargetSpec("qcbm_random", d_p, 1234), model_depth=d_q,
                            train=train, name=f"{code.lower()}_{training}", out=f"results/{code.lower()}_{training}")


def _local_preset(n: int, k: int) -> ExperimentConfig:
    glob = k == n
    train = TrainConfig(generators=("kl_i_rev",), heuristic="single" if glob else "k_local", k=None if glob else k,
                        shots=500, lr=GLOBAL_LR if glob else LOCAL_LR.get(k, 0.1),
                        epochs=1000 if n == 6 else 500, classifier="trained", classifier_cfg=LOCAL_CLASSIFIER)
    tag = "global" if glob else f"k{k}"
    seeds = (0,) if n == 6 else DEFAULT_SEEDS  # six qubits: one illustrative run
    return ExperimentConfig(kind="f_local", n_qubits=n, target=TargetSpec("gaussian"), model_depth=n, train=train,
                            seeds=seeds, name=f"gaussian_n{n}_{tag}", out=f"results/gaussian_n{n}_{tag}")


def _ft_preset(estimator: str) -> ExperimentConfig:
    return ExperimentConfig(kind="ft_estimate", ft=FTConfig(estimator=estimator), name=f"ft_{estimator}",
                            out=f"results/ft_{estimator}", seeds=(0,))


def presets() -> dict[str, ExperimentConfig]:
    out = {}
    for code in REGIMES:
        for training in ("f_switch", "tv"):
            cfg = _regime_preset(code, training)
            out[cfg.name] = cfg
    for n in (4, 5, 6):
        for k in range(1, n + 1):
            cfg = _local_preset(n, k)
            out[cfg.name] = cfg
    for est in ("pearson", "tv", "kl"):
        cfg = _ft_preset(est)
        out[cfg.name] = cfg
    return out


def get_preset(name: str) -> ExperimentConfig:
    table = presets()
    if name not in table:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(table)}")
    return table[name]


# ---------------------------------------------------------------- running

def _version() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _train_one(args) -> tuple[int, TrainRecord]:
    cfg, seed = args
    target = make_target(cfg.target, cfg.n_qubits)
    record = run_training(replace(cfg.train, seed=seed), target, AnsatzSpec(cfg.n_qubits, cfg.model_depth))
    return seed, record


def _pool_map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with cf.ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


SUMMARY_METRICS = ("tv", "kl", "kl_rev")


def summary_rows(records: list[TrainRecord], resamples: int, seed: int) -> list[list]:
    header = ["epoch"] + [f"{m}_{s}" for m in SUMMARY_METRICS for s in ("median", "p5", "p95")]
    if len(records) == 1:
        # a single run has no spread to resample: the band collapses onto the curve
        sums = [BootstrapSummary(r, r, r, 0) for r in (records[0].metric(m) for m in SUMMARY_METRICS)]
    else:
        sums = [bootstrap_summary([r.metric(m) for r in records], resamples, seed) for m in SUMMARY_METRICS]
    rows: list[list] = [header]
    for e in range(records[0].epochs):
        row: list = [e]
        for s in sums:
            row += [fmt(s.median[e]), fmt(s.p5[e]), fmt(s.p95[e])]
        rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None, dry_run: bool = False,
                   charts: bool = False) -> dict:
    """Run every seed of ``cfg`` and write CSVs plus a manifest; returns the manifest."""
    out_dir = Path(out if out is not None else cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = cfg.workers or os.cpu_count() or 1
    manifest = {"manifest_version": MANIFEST_VERSION, "config": cfg.to_dict(), "regime": cfg.regime,
                "version": _version(), "dry_run": dry_run, "files": []}
    start = time.perf_counter()
    if not dry_run:
        if cfg.kind == "ft_estimate":
            files = _run_ft(cfg, out_dir, workers)
        else:
            files = _run_training_sweep(cfg, out_dir, workers)
            if charts:
                files += write_charts(out_dir / "summary.csv", out_dir)
        manifest["files"] = files
    manifest["wall_time_s"] = time.perf_counter() - start
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def _run_training_sweep(cfg: ExperimentConfig, out_dir: Path, workers: int) -> list[str]:
    results = dict(_pool_map(_train_one, [(cfg, s) for s in cfg.seeds], workers))
    files = []
    for seed in cfg.seeds:
        rec = results[seed]
        _write_csv(out_dir / f"seed_{seed}.csv", rec.csv_rows())
        (out_dir / f"seed_{seed}.json").write_text(rec.to_json() + "\n")
        files += [f"seed_{seed}.csv", f"seed_{seed}.json"]
    records = [results[s] for s in cfg.seeds]
    _write_csv(out_dir / "summary.csv", summary_rows(records, cfg.bootstrap_resamples, cfg.bootstrap_seed))
    return files + ["summary.csv"]


FT_TRUTH = {"pearson": "pearson_fwd", "tv": "tv", "kl": "kl_i_fwd"}


def _ft_pair(args):
    ft, index, n = args
    rng = np.random.default_rng([ft.seed, index])
    pair = random_bounded_pair(n, rng)
    p, q = pair.p, pair.q
    if ft.estimator == "kl":
        # KL(p || q) with p_i / q_i bounded: reuse the pair with roles swapped
        p, q = pair.q, pair.p
    truth = exact_divergence_definition(FT_TRUTH[ft.estimator], p, q)
    trial_seed = np.random.SeedSequence([ft.seed, index, 1])
    if ft.estimator == "pearson":
        est, ledger = estimate_pearson_trials(pair, ft.eps, ft.trials, trial_seed)
        mom = pearson_subroutine_moments(pair, ft.eps)
    elif ft.estimator == "tv":
        est, ledger = estimate_tv_trials(p, q, ft.eps, ft.trials, seed=trial_seed)
        mom = tv_subroutine_moments(p, q, ft.eps)
    else:
        est, ledger = estimate_kl_trials(p, q, ft.eps, ft.trials, seed=trial_seed)
        mom = kl_subroutine_moments(p, q, ft.eps)
    g = pair.g
    return index, n, g, truth, est, ledger, mom


def _run_ft(cfg: ExperimentConfig, out_dir: Path, workers: int) -> list[str]:
    ft = cfg.ft
    ns = [ft.n_values[i * len(ft.n_values) // ft.pairs] for i in range(ft.pairs)]
    results = _pool_map(_ft_pair, [(ft, i, n) for i, n in enumerate(ns)], workers)
    trial_rows = [["pair", "n", "g", "trial", "estimate", "truth", "success", "queries_to_p", "queries_to_q",
                   "executions_of_A"]]
    pair_rows = [["pair", "n", "g", "truth", "subroutine_mean", "subroutine_variance", "bias", "success_rate"]]
    for index, n, g, truth, est, ledger, mom in results:
        ok = np.abs(est - truth) <= ft.eps
        for t, e in enumerate(est):
            trial_rows.append([index, n, fmt(g), t, fmt(e), fmt(truth), int(ok[t]), ledger.queries_to_p,
                               ledger.queries_to_q, ledger.executions_of_A])
        pair_rows.append([index, n, fmt(g), fmt(truth), fmt(mom.mean), fmt(mom.variance), fmt(mom.bias),
                          fmt(ok.mean())])
    _write_csv(out_dir / "trials.csv", trial_rows)
    _write_csv(out_dir / "pairs.csv", pair_rows)
    return ["trials.csv", "pairs.csv"]


# ---------------------------------------------------------------- charts

def _svg_chart(title: str, epochs, med, lo, hi, width=640, height=400) -> str:
    pad = 55
    floor = 1e-16
    vals = np.concatenate([med, lo, hi])
    vals = vals[np.isfinite(vals) & (vals > floor)]
    y_lo, y_hi = (np.floor(np.log10(vals.min())), np.ceil(np.log10(vals.max()))) if vals.size else (-1.0, 0.0)
    if y_hi <= y_lo:
        y_hi = y_lo + 1

    def px(e):
        return pad + (width - 2 * pad) * (e - epochs[0]) / max(epochs[-1] - epochs[0], 1)

    def py(v):
        v = np.log10(np.clip(np.nan_to_num(v, nan=10**y_lo, posinf=10**y_hi), 10**y_lo, 10**y_hi))
        return height - pad - (height - 2 * pad) * (v - y_lo) / (y_hi - y_lo)

    band = " ".join(f"{px(e):.2f},{py(v):.2f}" for e, v in zip(epochs, hi))
    band += " " + " ".join(f"{px(e):.2f},{py(v):.2f}" for e, v in zip(epochs[::-1], lo[::-1]))
    line = " ".join(f"{px(e):.2f},{py(v):.2f}" for e, v in zip(epochs, med))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" '
             f'font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
             f'<polygon points="{band}" fill="#d62728" fill-opacity="0.2" stroke="none"/>',
             f'<polyline points="{line}" fill="none" stroke="#d62728" stroke-width="1.5"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>']
    for k in range(int(y_lo), int(y_hi) + 1):
        y = py(10.0**k)
        parts.append(f'<text x="{pad - 6}" y="{y + 4:.2f}" text-anchor="end">1e{k}</text>')
        parts.append(f'<line x1="{pad}" y1="{y:.2f}" x2="{width - pad}" y2="{y:.2f}" stroke="#ddd"/>')
    for e in np.linspace(epochs[0], epochs[-1], 6).round().astype(int):
        parts.append(f'<text x="{px(e):.2f}" y="{height - pad + 16}" text-anchor="middle">{e}</text>')
    parts.append(f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">epoch</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_charts(summary_csv: Path, out_dir: Path) -> list[str]:
    """Log-scale median and 5-95 band charts, one SVG per metric in the summary CSV."""
    with open(summary_csv) as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    epochs = body[:, 0].astype(int)
    files = []
    for m in SUMMARY_METRICS:
        if f"{m}_median" not in header:
            continue
        cols = [header.index(f"{m}_{s}") for s in ("median", "p5", "p95")]
        name = f"summary_{m}.svg"
        (out_dir / name).write_text(_svg_chart(f"exact {m} (median, 5-95% band)", epochs,
                                               *(body[:, c] for c in cols)))
        files.append(name)
    return files


# ---------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcbm-fdiv", description="QCBM f-divergence training experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a training experiment from a JSON config, manifest or preset name")
    run.add_argument("config")
    run.add_argument("--seed-count", type=int, help="use seeds 0..N-1 instead of the configured list")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--workers", type=int, help="worker processes (default: config, then CPU count)")
    run.add_argument("--dry-run", action="store_true", help="validate and write the manifest only")
    run.add_argument("--charts", action="store_true", help="also write SVG charts of the summary")
    ft = sub.add_parser("estimate-ft", help="run a fault-tolerant estimator simulation")
    ft.add_argument("config")
    ft.add_argument("--out")
    ft.add_argument("--workers", type=int)
    sub.add_parser("list-divergences", help="print the registered generator names")
    pre = sub.add_parser("presets", help="list presets or write them as JSON configs")
    pre.add_argument("--write", metavar="DIR")
    return ap


def _resolve(spec: str) -> ExperimentConfig:
    if not os.path.exists(spec) and spec in presets():
        return get_preset(spec)
    return load_config(spec)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-divergences":
        for name, gen in REGISTRY.items():
            print(f"{name}\t{gen.label}")
        return EXIT_OK
    if args.command == "presets":
        for name, cfg in presets().items():
            if args.write:
                Path(args.write).mkdir(parents=True, exist_ok=True)
                (Path(args.write) / f"{name}.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
            print(f"{name}\t{cfg.kind}\t{cfg.regime or ''}")
        return EXIT_OK
    try:
        cfg = _resolve(args.config)
        if args.command == "estimate-ft" and cfg.kind != "ft_estimate":
            raise ConfigError(f"{args.config}: estimate-ft needs kind 'ft_estimate', got {cfg.kind!r}")
        if args.command == "run" and cfg.kind == "ft_estimate":
            raise ConfigError(f"{args.config}: use estimate-ft for kind 'ft_estimate'")
        if getattr(args, "seed_count", None) is not None:
            if args.seed_count < 1:
                raise ConfigError("--seed-count must be >= 1")
            cfg = replace(cfg, seeds=tuple(range(args.seed_count)))
        if args.workers is not None:
            cfg = replace(cfg, workers=args.workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_experiment(cfg, args.out, dry_run=getattr(args, "dry_run", False),
                                  charts=getattr(args, "charts", False))
    except Exception as e:  # noqa: BLE001 - any failure past validation is a runtime failure
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    out = args.out or cfg.out
    print(f"wrote {len(manifest['files'])} files and manifest.json to {out} ({manifest['wall_time_s']:.1f} s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
