"""Adversarial QCBM training through parameter-shift f-divergence gradients.

For generator ``f`` the gradient along parameter ``i`` is::

    dD/dtheta_i = E_{x ~ q_{theta_i^+}}[f*'(r(x))] - E_{x ~ q_{theta_i^-}}[f*'(r(x))]

with the ratio ``r = q_theta / p`` taken at the *unshifted* parameters. In
sampling mode each expectation is a mean over ``shots`` draws from the shifted
circuit; with ``shots=None`` both expectations are computed from the exact
probability tables (used for gradient oracles, not a physical protocol).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dist as _dist
from .classifier import ClassifierTrainConfig, ExactClassifier, NeuralClassifier, ratio_table, train_classifier
from .dist import DiscreteDistribution, Window, marginal_probs, window_index, windows
from .fdiv import (DEFAULT_CLAMP, GENERATOR_NAMES, RatioClampPolicy, SupportError, conjugate_derivative,
                   exact_divergence, get_generator)
from .sim import AnsatzSpec, born_probs, born_probs_batch, random_parameters, shifted_parameters, shifted_probs

RatioFn = Callable[[np.ndarray], np.ndarray]

HEURISTICS = ("single", "f_switch", "k_local")
# TV is left out: its sign-valued f*' never shrinks near the optimum, so it
# would win every f-switch comparison late in training.
F_SWITCH_DEFAULT = tuple(g for g in GENERATOR_NAMES if g != "tv")


@dataclass
class TrainConfig:
    generators: tuple[str, ...] = ("kl_i_rev",)
    heuristic: str = "single"
    k: int | None = None
    shots: int | None = 1000
    lr: float = 0.05
    epochs: int = 500
    classifier: str = "exact"
    classifier_cfg: ClassifierTrainConfig = field(default_factory=ClassifierTrainConfig)
    classifier_shots: int | None = None
    clamp: RatioClampPolicy = DEFAULT_CLAMP
    seed: int = 0
    record_params: bool = False

    def __post_init__(self):
        self.generators = tuple(self.generators)
        for g in self.generators:
            get_generator(g)
        if not self.generators:
            raise ValueError("at least one generator required")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"heuristic must be one of {HEURISTICS}, got {self.heuristic!r}")
        if self.heuristic != "f_switch" and len(self.generators) != 1:
            raise ValueError(f"{self.heuristic} training takes exactly one generator")
        if self.heuristic == "k_local" and (self.k is None or self.k < 1):
            raise ValueError("k_local training needs k >= 1")
        if self.classifier not in ("exact", "trained"):
            raise ValueError(f"classifier must be 'exact' or 'trained', got {self.classifier!r}")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive or None")
        if self.lr < 0 or self.epochs < 1:
            raise ValueError("lr must be >= 0 and epochs >= 1")

    @property
    def n_classifier_samples(self) -> int:
        return self.classifier_shots or self.shots or 1000

    def to_dict(self) -> dict:
        d = asdict(self)
        d["generators"] = list(self.generators)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "classifier_cfg" in d and isinstance(d["classifier_cfg"], dict):
            d["classifier_cfg"] = ClassifierTrainConfig(**d["classifier_cfg"])
        if "clamp" in d and isinstance(d["clamp"], dict):
            d["clamp"] = RatioClampPolicy(**d["clamp"])
        return cls(**d)


# ---------------------------------------------------------------- ratios

def exact_ratio_fn(p, q, clamp: RatioClampPolicy = DEFAULT_CLAMP) -> RatioFn:
    """Ratio lookup from the exact Bayes classifier for tables ``p`` and ``q``."""
    p = p if isinstance(p, DiscreteDistribution) else DiscreteDistribution.from_weights(p)
    q = q if isinstance(q, DiscreteDistribution) else DiscreteDistribution.from_weights(q)
    table = ExactClassifier(p, q).ratio_table(clamp)
    return lambda x: table[np.asarray(x)]


def table_ratio_fn(table) -> RatioFn:
    table = np.asarray(table, dtype=float)
    return lambda x: table[np.asarray(x)]


def _ratio_table(fn: RatioFn, size: int) -> np.ndarray:
    return np.asarray(fn(np.arange(size)), dtype=float)


# ---------------------------------------------------------------- gradients

def _shift_weights(plus: np.ndarray, minus: np.ndarray, shots: int | None, rng) -> np.ndarray:
    """Per-outcome weights whose dot product with ``h`` gives ``E_+[h] - E_-[h]``."""
    if shots is None:
        return plus - minus
    rng = np.random.default_rng(rng)
    return (rng.multinomial(shots, plus) - rng.multinomial(shots, minus)) / shots


def _derivs(gen, r: np.ndarray, clamp: RatioClampPolicy) -> np.ndarray:
    return np.asarray(conjugate_derivative(gen, r, clamp), dtype=float)


def gradient_component(gen, ansatz: AnsatzSpec, theta, i: int, ratio_fn: RatioFn, shots: int | None = None,
                       seed=None, clamp: RatioClampPolicy = DEFAULT_CLAMP) -> float:
    theta = ansatz.check_params(theta)
    plus = shifted_parameters(theta, i, +1)
    minus = shifted_parameters(theta, i, -1)
    probs = born_probs_batch(ansatz, np.stack([plus, minus]))
    w = _shift_weights(probs[0], probs[1], shots, seed)
    return float(w @ _derivs(gen, _ratio_table(ratio_fn, ansatz.dim), clamp))


def shift_weights(ansatz: AnsatzSpec, theta, shots: int | None, rng) -> np.ndarray:
    """Weights for every direction at once, shape ``(P, 2**n)``; one batch of shifted circuits."""
    plus, minus = shifted_probs(ansatz, theta)
    return _shift_weights(plus, minus, shots, rng)


def generator_gradients(gens: Sequence, weights: np.ndarray, ratios: np.ndarray,
                        clamp: RatioClampPolicy = DEFAULT_CLAMP) -> np.ndarray:
    """Gradients of every generator from one set of shift weights, shape ``(G, P)``."""
    return np.stack([weights @ _derivs(g, ratios, clamp) for g in gens])


def full_gradient(gen, ansatz: AnsatzSpec, theta, ratio_fn: RatioFn, shots: int | None = None, seed=None,
                  clamp: RatioClampPolicy = DEFAULT_CLAMP) -> np.ndarray:
    w = shift_weights(ansatz, theta, shots, seed)
    return generator_gradients([gen], w, _ratio_table(ratio_fn, ansatz.dim), clamp)[0]


def switch_select(grads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per column, the entry of largest magnitude; ties go to the earliest row."""
    chosen = np.argmax(np.abs(grads), axis=0)
    return grads[chosen, np.arange(grads.shape[1])], chosen


def f_switch_gradient(gens: Sequence, ansatz: AnsatzSpec, theta, ratio_fn: RatioFn, shots: int | None = None,
                      seed=None, clamp: RatioClampPolicy = DEFAULT_CLAMP) -> tuple[np.ndarray, list[str]]:
    """Per direction, the gradient of whichever generator is steepest there.

    All generators share one batch of shifted-circuit samples.
    """
    gens = list(gens)
    if not gens:
        raise ValueError("f-switch needs at least one generator")
    names = [get_generator(g).name for g in gens]
    w = shift_weights(ansatz, theta, shots, seed)
    grad, chosen = switch_select(generator_gradients(gens, w, _ratio_table(ratio_fn, ansatz.dim), clamp))
    return grad, [names[j] for j in chosen]


def k_local_weights(weights: np.ndarray, n_bits: int, k: int) -> list[np.ndarray]:
    return [marginal_probs(weights, n_bits, w) for w in windows(n_bits, k)]


def k_local_from_weights(gen, weights: np.ndarray, n_bits: int, k: int, local_ratios: Sequence[np.ndarray],
                         clamp: RatioClampPolicy = DEFAULT_CLAMP) -> np.ndarray:
    wins = windows(n_bits, k)
    if len(local_ratios) != len(wins):
        raise ValueError(f"need {len(wins)} window ratio tables, got {len(local_ratios)}")
    total = np.zeros(weights.shape[0])
    for win, r in zip(wins, local_ratios):
        total += marginal_probs(weights, n_bits, win) @ _derivs(gen, np.asarray(r, dtype=float), clamp)
    return total / len(wins)


def k_local_gradient(gen, ansatz: AnsatzSpec, theta, k: int, local_ratio_fns: Sequence[RatioFn],
                     shots: int | None = None, seed=None, clamp: RatioClampPolicy = DEFAULT_CLAMP) -> np.ndarray:
    """Gradient of the window-averaged divergence between k-bit marginals.

    Full bitstrings from each shifted circuit are restricted to every window
    of ``k`` neighbouring bits; ``local_ratio_fns[j]`` maps window outcomes of
    window ``j`` to ratio estimates.
    """
    n = ansatz.n_qubits
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    if len(local_ratio_fns) != n - k + 1:
        raise ValueError(f"need {n - k + 1} window ratio functions, got {len(local_ratio_fns)}")
    w = shift_weights(ansatz, theta, shots, seed)
    tables = [_ratio_table(fn, 2**k) for fn in local_ratio_fns]
    return k_local_from_weights(gen, w, n, k, tables, clamp)


def local_cost(gen, p, q, k: int) -> float:
    """``mean_w D_f(p^w || q^w)`` over all contiguous width-``k`` windows."""
    p = p if isinstance(p, DiscreteDistribution) else DiscreteDistribution.from_weights(p)
    q = np.asarray(q.probs if isinstance(q, DiscreteDistribution) else q, dtype=float)
    vals = [exact_divergence(gen, marginal_probs(p.probs, p.n_bits, w), marginal_probs(q, p.n_bits, w))
            for w in windows(p.n_bits, k)]
    return float(np.mean(vals))


# ---------------------------------------------------------------- records

@dataclass
class TrainRecord:
    tv: np.ndarray
    kl: np.ndarray
    kl_rev: np.ndarray
    generators: tuple[str, ...] = ()
    chosen: np.ndarray | None = None  # (epochs, P) generator indices, f-switch only
    params: np.ndarray | None = None

    @property
    def epochs(self) -> int:
        return len(self.tv)

    def metric(self, name: str) -> np.ndarray:
        return {"tv": self.tv, "kl": self.kl, "kl_rev": self.kl_rev}[name]

    def csv_rows(self) -> list[list]:
        header = ["epoch", "exact_tv", "exact_kl", "exact_kl_rev"]
        if self.chosen is not None:
            header += [f"chosen_{i}" for i in range(self.chosen.shape[1])]
        rows: list[list] = [header]
        for e in range(self.epochs):
            row = [e, fmt(self.tv[e]), fmt(self.kl[e]), fmt(self.kl_rev[e])]
            if self.chosen is not None:
                row += [self.generators[j] for j in self.chosen[e]]
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.csv_rows())
        return buf.getvalue()

    def to_dict(self) -> dict:
        d = {"tv": self.tv.tolist(), "kl": self.kl.tolist(), "kl_rev": self.kl_rev.tolist(),
             "generators": list(self.generators)}
        if self.chosen is not None:
            d["chosen"] = self.chosen.tolist()
        if self.params is not None:
            d["params"] = self.params.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------- training loop

class _RatioEstimator:
    """Supplies ratio tables at the current parameters (exact or classifier-based)."""

    def __init__(self, cfg: TrainConfig, target: DiscreteDistribution, rng: np.random.Generator):
        self.cfg, self.target, self.rng = cfg, target, rng
        n = target.n_bits
        self.wins: list[Window] = windows(n, cfg.k) if cfg.heuristic == "k_local" else [Window(0, n)]
        self.models: list[NeuralClassifier | None] = [None] * len(self.wins)

    def tables(self, q: np.ndarray) -> list[np.ndarray]:
        n, clamp = self.target.n_bits, self.cfg.clamp
        if self.cfg.classifier == "exact":
            out = []
            for w in self.wins:
                pw = marginal_probs(self.target.probs, n, w)
                qw = marginal_probs(q, n, w)
                out.append(ExactClassifier(DiscreteDistribution.from_weights(pw),
                                           DiscreteDistribution.from_weights(qw)).ratio_table(clamp))
            return out
        m = self.cfg.n_classifier_samples
        sq = _dist.sample_probs(q, m, self.rng)
        sp = _dist.sample_probs(self.target.probs, m, self.rng)
        out = []
        for j, w in enumerate(self.wins):
            model = train_classifier(window_index(sq, n, w), window_index(sp, n, w), self.cfg.classifier_cfg,
                                     w.width, init=self.models[j], rng=self.rng)
            self.models[j] = model
            out.append(ratio_table(model, clamp))
        return out


def _metric(name: str, p: np.ndarray, q: np.ndarray) -> float:
    try:
        return exact_divergence(name, p, q)
    except SupportError:
        return np.inf


def initial_parameters(ansatz: AnsatzSpec, rng) -> np.ndarray:
    return random_parameters(ansatz, rng)


def run_training(cfg: TrainConfig, target: DiscreteDistribution, ansatz: AnsatzSpec,
                 theta0=None) -> TrainRecord:
    """SGD on the circuit parameters, refreshing the ratio estimate every epoch.

    Metrics for epoch ``e`` are measured before that epoch's update, so entry 0
    describes the initial parameters. Fully determined by ``cfg.seed``.
    """
    if target.n_bits != ansatz.n_qubits:
        raise ValueError("target and ansatz disagree on the number of bits")
    if cfg.heuristic == "k_local" and cfg.k > ansatz.n_qubits:
        raise ValueError(f"k={cfg.k} exceeds {ansatz.n_qubits} qubits")
    rng = np.random.default_rng(cfg.seed)
    theta = initial_parameters(ansatz, rng) if theta0 is None else ansatz.check_params(np.array(theta0, dtype=float))
    estimator = _RatioEstimator(cfg, target, rng)
    p, n = target.probs, ansatz.n_qubits
    gens = [get_generator(g) for g in cfg.generators]
    tv, kl, kl_rev = (np.empty(cfg.epochs) for _ in range(3))
    chosen = np.empty((cfg.epochs, ansatz.n_params), dtype=np.int16) if cfg.heuristic == "f_switch" else None
    params = np.empty((cfg.epochs, ansatz.n_params)) if cfg.record_params else None
    for epoch in range(cfg.epochs):
        q = born_probs(ansatz, theta)
        tv[epoch] = _metric("tv", p, q)
        kl[epoch] = _metric("kl_i_fwd", p, q)
        kl_rev[epoch] = _metric("kl_i_rev", p, q)
        if params is not None:
            params[epoch] = theta
        tables = estimator.tables(q)
        weights = shift_weights(ansatz, theta, cfg.shots, rng)
        if cfg.heuristic == "k_local":
            grad = k_local_from_weights(gens[0], weights, n, cfg.k, tables, cfg.clamp)
        else:
            grads = generator_gradients(gens, weights, tables[0], cfg.clamp)
            grad, pick = switch_select(grads)
            if chosen is not None:
                chosen[epoch] = pick
        theta = theta - cfg.lr * grad
    return TrainRecord(tv, kl, kl_rev, tuple(g.name for g in gens), chosen, params)


# ---------------------------------------------------------------- bootstrap

@dataclass
class BootstrapSummary:
    median: np.ndarray
    p5: np.ndarray
    p95: np.ndarray
    resamples: int

    def csv_rows(self, prefix: str = "") -> list[list]:
        rows: list[list] = [["epoch", f"{prefix}median", f"{prefix}p5", f"{prefix}p95"]]
        rows += [[e, fmt(m), fmt(lo), fmt(hi)] for e, (m, lo, hi) in enumerate(zip(self.median, self.p5, self.p95))]
        return rows


def bootstrap_summary(curves, resamples: int = 10_000, seed=0, chunk: int = 64) -> BootstrapSummary:
    """Bootstrapped median of per-run curves with a 5-95 percentile band.

    ``curves`` is either a sequence of equal-length arrays (one per run) or a
    ``(runs, epochs)`` array. Each resample draws ``runs`` indices with
    replacement and takes the median; values are sorted per epoch first so the
    result does not depend on the order the runs are listed in.
    """
    vals = np.asarray([np.asarray(c, dtype=float) for c in curves])
    if vals.ndim == 1:
        vals = vals[:, None]
    runs, epochs = vals.shape
    if runs < 2:
        raise ValueError("bootstrap needs at least two runs")
    vals = np.sort(vals, axis=0)
    idx = np.random.default_rng(seed).integers(0, runs, size=(resamples, runs))
    med, lo, hi = (np.empty(epochs) for _ in range(3))
    for start in range(0, epochs, chunk):
        block = vals[:, start:start + chunk][idx]  # (resamples, runs, chunk)
        meds = np.median(block, axis=1)
        med[start:start + chunk] = np.median(meds, axis=0)
        lo[start:start + chunk], hi[start:start + chunk] = np.percentile(meds, [5, 95], axis=0)
    return BootstrapSummary(med, lo, hi, resamples)


def bootstrap_records(records: Sequence[TrainRecord], metric: str, resamples: int = 10_000,
                      seed=0) -> BootstrapSummary:
    return bootstrap_summary([r.metric(metric) for r in records], resamples, seed)
