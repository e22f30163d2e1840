"""Density-ratio estimation through binary classifiers.

Label convention: class 1 is "drawn from the model q", class 0 is "drawn from
the target p". A classifier output ``d(x)`` therefore estimates
``q(x) / (p(x) + q(x))`` and the ratio is ``r(x) = d(x) / (1 - d(x)) = q(x)/p(x)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dist import DiscreteDistribution, to_bits
from .fdiv import DEFAULT_CLAMP, RatioClampPolicy


class RatioOverflow(ArithmeticError):
    """Exact ratio q/p requested where p = 0 < q."""


@dataclass(frozen=True)
class ExactClassifier:
    """Bayes-optimal classifier built from the two true tables."""

    p: DiscreteDistribution
    q: DiscreteDistribution

    def output(self, x: int) -> float:
        px, qx = self.p.probs[x], self.q.probs[x]
        if px + qx == 0:
            return 0.5
        return qx / (px + qx)

    def ratio_table(self, clamp: RatioClampPolicy | None = None) -> np.ndarray:
        """``q/p`` for every outcome; ``p = q = 0`` maps to 1, ``p = 0 < q`` to ``r_max``."""
        p, q = self.p.probs, self.q.probs
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(p > 0, q / np.where(p > 0, p, 1.0), np.where(q > 0, np.inf, 1.0))
        return r if clamp is None else clamp.apply(r)


def exact_ratio(c: ExactClassifier, x: int) -> float:
    px, qx = c.p.probs[x], c.q.probs[x]
    if px == 0:
        if qx == 0:
            return 1.0
        raise RatioOverflow(f"p({x}) = 0 < q({x})")
    # d/(1-d) with d = q/(p+q) reduces to q/p; divide directly to keep full precision
    return qx / px


@dataclass
class ClassifierTrainConfig:
    lr: float = 0.01
    epochs: int = 50
    batch_size: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError(f"classifier config values must be positive: {self}")


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class NeuralClassifier:
    """One hidden ReLU layer, logistic output."""

    w1: np.ndarray  # (hidden, width)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float = 0.0
    history: list[float] = field(default_factory=list, repr=False)

    @classmethod
    def init(cls, width: int, hidden: int | None = None, rng=None) -> "NeuralClassifier":
        rng = np.random.default_rng(rng)
        hidden = 10 * width if hidden is None else hidden
        w1 = rng.normal(0.0, np.sqrt(2.0 / width), (hidden, width))
        b1 = np.full(hidden, 0.01)
        w2 = rng.normal(0.0, np.sqrt(1.0 / hidden), hidden)
        return cls(w1, b1, w2, 0.0)

    @property
    def width(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def logits(self, bits) -> np.ndarray:
        x = np.asarray(bits, dtype=float)
        if x.shape[-1] != self.width:
            raise ValueError(f"input width {x.shape[-1]} does not match classifier width {self.width}")
        h = np.maximum(x @ self.w1.T + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def output(self, bits) -> np.ndarray:
        return _sigmoid(self.logits(bits))

    def loss_and_grads(self, x, weight_q, weight_p):
        """Weighted negative cross entropy and its gradients.

        ``x`` holds input rows; ``weight_q[j]`` / ``weight_p[j]`` are the
        empirical masses of row ``j`` in the model and target sample sets.
        """
        x = np.asarray(x, dtype=float)
        pre = x @ self.w1.T + self.b1
        h = np.maximum(pre, 0.0)
        z = h @ self.w2 + self.b2
        loss = float(weight_q @ _softplus(-z) + weight_p @ _softplus(z))
        d = _sigmoid(z)
        dz = weight_q * (d - 1.0) + weight_p * d
        g_w2 = h.T @ dz
        g_b2 = float(dz.sum())
        dpre = np.outer(dz, self.w2) * (pre > 0)
        g_w1 = dpre.T @ x
        g_b1 = dpre.sum(axis=0)
        return loss, (g_w1, g_b1, g_w2, g_b2)

    def step(self, grads, lr: float) -> None:
        g_w1, g_b1, g_w2, g_b2 = grads
        self.w1 = self.w1 - lr * g_w1
        self.b1 = self.b1 - lr * g_b1
        self.w2 = self.w2 - lr * g_w2
        self.b2 = self.b2 - lr * g_b2

    def copy(self) -> "NeuralClassifier":
        return NeuralClassifier(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2)

    def to_dict(self) -> dict:
        return {"w1": self.w1.tolist(), "b1": self.b1.tolist(), "w2": self.w2.tolist(), "b2": self.b2}

    @classmethod
    def from_dict(cls, d: dict) -> "NeuralClassifier":
        return cls(np.array(d["w1"], dtype=float), np.array(d["b1"], dtype=float),
                   np.array(d["w2"], dtype=float), float(d["b2"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "NeuralClassifier":
        return cls.from_dict(json.loads(s))


def _as_indices(samples, width: int) -> np.ndarray:
    s = np.asarray(samples)
    if s.ndim == 2:
        if s.shape[1] != width:
            raise ValueError(f"sample width {s.shape[1]} != {width}")
        s = (s.astype(np.int64) << np.arange(width - 1, -1, -1)).sum(axis=1)
    return s.astype(np.int64).ravel()


def train_classifier(samples_q, samples_p, cfg: ClassifierTrainConfig, width: int,
                     init: NeuralClassifier | None = None, rng=None) -> NeuralClassifier:
    """Minimise the empirical negative cross entropy with plain minibatch SGD.

    Samples are integer outcomes over ``width`` bits (or 0/1 rows). Because
    inputs are discrete, each minibatch is reduced to per-outcome counts; the
    loss is the same as summing over the individual samples.
    """
    sq, sp = _as_indices(samples_q, width), _as_indices(samples_p, width)
    if sq.size == 0 or sp.size == 0:
        raise ValueError("both sample sets must be non-empty")
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    clf = NeuralClassifier.init(width, rng=rng) if init is None else init.copy()
    size = 2**width
    x = to_bits(np.arange(size), width)
    labels = np.concatenate([np.ones(sq.size, dtype=bool), np.zeros(sp.size, dtype=bool)])
    pooled = np.concatenate([sq, sp])
    nq, np_ = sq.size, sp.size
    full_q = np.bincount(sq, minlength=size) / nq
    full_p = np.bincount(sp, minlength=size) / np_
    history = [clf.loss_and_grads(x, full_q, full_p)[0]]
    batch = min(cfg.batch_size, pooled.size)
    for _ in range(cfg.epochs):
        order = rng.permutation(pooled.size)
        for start in range(0, pooled.size, batch):
            idx = order[start:start + batch]
            # keep each class term an expectation, matching the per-sample loss
            frac = idx.size / pooled.size
            wq = np.bincount(pooled[idx][labels[idx]], minlength=size) / (nq * frac)
            wp = np.bincount(pooled[idx][~labels[idx]], minlength=size) / (np_ * frac)
            _, grads = clf.loss_and_grads(x, wq, wp)
            clf.step(grads, cfg.lr)
        history.append(clf.loss_and_grads(x, full_q, full_p)[0])
    clf.history = history
    return clf


def predict_ratio(c: NeuralClassifier, x, clamp: RatioClampPolicy = DEFAULT_CLAMP):
    """``d(x) / (1 - d(x))`` clamped into ``[r_min, r_max]``.

    Computed as ``exp(logit)``, which equals ``d/(1-d)`` without cancellation
    when ``d`` saturates.
    """
    z = np.asarray(c.logits(x), dtype=float)
    r = clamp.apply(np.exp(np.clip(z, -700.0, 700.0)))
    return float(r) if r.ndim == 0 else r


def ratio_from_output(d, clamp: RatioClampPolicy = DEFAULT_CLAMP):
    """Ratio for a raw classifier probability ``d``; saturated outputs land on the clamp bounds."""
    d = np.asarray(d, dtype=float)
    if np.any((d < 0) | (d > 1)):
        raise ValueError("classifier output must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        r = clamp.apply(d / (1.0 - d))
    return float(r) if r.ndim == 0 else r


def ratio_table(c: NeuralClassifier, clamp: RatioClampPolicy = DEFAULT_CLAMP) -> np.ndarray:
    """Predicted ratio for every outcome of the classifier's input width."""
    return predict_ratio(c, to_bits(np.arange(2**c.width), c.width), clamp)
