"""Discrete distributions over fixed-length bitstrings.

Bit order: bit 0 (qubit 0) is the most significant bit of the outcome index,
so for ``n_bits=3`` the outcome ``0b101 == 5`` has ``x_0 = 1, x_1 = 0, x_2 = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability table over ``2**n_bits`` outcomes."""

    n_bits: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if self.n_bits < 1:
            raise ValueError(f"n_bits must be >= 1, got {self.n_bits}")
        if probs.shape != (2**self.n_bits,):
            raise ValueError(f"expected {2**self.n_bits} probabilities, got shape {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_weights(cls, weights) -> "DiscreteDistribution":
        """Normalise non-negative ``weights`` (length a power of two)."""
        w = np.asarray(weights, dtype=float)
        n = int(round(np.log2(w.size)))
        if 2**n != w.size:
            raise ValueError(f"length {w.size} is not a power of two")
        return cls(n, w / w.sum())

    @property
    def size(self) -> int:
        return self.probs.size

    def to_list(self) -> list[float]:
        return [float(v) for v in self.probs]

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return self.n_bits == other.n_bits and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.n_bits, self.probs.tobytes()))


@dataclass(frozen=True)
class Window:
    """Contiguous block of bits ``start .. start + width - 1`` (0-based)."""

    start: int
    width: int

    def validate(self, n_bits: int) -> None:
        if self.width < 1 or self.width > n_bits:
            raise ValueError(f"window width {self.width} outside 1..{n_bits}")
        if self.start < 0 or self.start + self.width > n_bits:
            raise ValueError(f"window {self} does not fit in {n_bits} bits")

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(range(self.start, self.start + self.width))


def windows(n_bits: int, k: int) -> list[Window]:
    """All ``n_bits - k + 1`` contiguous windows of width ``k``."""
    if not 1 <= k <= n_bits:
        raise ValueError(f"k={k} outside 1..{n_bits}")
    return [Window(i, k) for i in range(n_bits - k + 1)]


def marginal_probs(probs: np.ndarray, n_bits: int, window: Window) -> np.ndarray:
    """Marginalise the trailing axis of ``probs`` (shape ``(..., 2**n_bits)``)."""
    window.validate(n_bits)
    lead = probs.shape[:-1]
    t = probs.reshape(lead + (2**window.start, 2**window.width, -1))
    return t.sum(axis=(-3, -1))


def marginal(dist: DiscreteDistribution, window: Window) -> DiscreteDistribution:
    m = marginal_probs(dist.probs, dist.n_bits, window)
    return DiscreteDistribution(window.width, m / m.sum())


def window_index(indices: np.ndarray, n_bits: int, window: Window) -> np.ndarray:
    """Restrict full outcome indices to the window's sub-bitstring index."""
    window.validate(n_bits)
    shift = n_bits - window.start - window.width
    return (np.asarray(indices) >> shift) & (2**window.width - 1)


def to_bits(indices, n_bits: int) -> np.ndarray:
    """Integer outcomes -> ``(m, n_bits)`` array of 0/1, bit 0 first."""
    idx = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((idx[..., None] >> shifts) & 1).astype(np.int8)


def from_bits(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    n = b.shape[-1]
    return (b << np.arange(n - 1, -1, -1)).sum(axis=-1)


def sample(dist: DiscreteDistribution, m: int, rng) -> np.ndarray:
    """Draw ``m`` i.i.d. outcome indices."""
    if m < 1:
        raise ValueError("m must be positive")
    rng = np.random.default_rng(rng)
    return sample_probs(dist.probs, m, rng)


def sample_probs(probs: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(m), side="right").clip(max=probs.size - 1)


def empirical(samples, n_bits: int) -> DiscreteDistribution:
    """Frequency table of integer outcome ``samples``."""
    s = np.asarray(samples, dtype=np.int64).ravel()
    if s.size == 0:
        raise ValueError("empirical distribution needs at least one sample")
    counts = np.bincount(s, minlength=2**n_bits)
    if counts.size != 2**n_bits:
        raise ValueError(f"sample outside 0..{2**n_bits - 1}")
    return DiscreteDistribution(n_bits, counts / s.size)


def target_gaussian(n_bits: int, mean: float | None = None, std: float | None = None) -> DiscreteDistribution:
    """Gaussian weights on the integers ``0 .. 2**n_bits - 1``, renormalised.

    Defaults: centred, ``std = 2**n_bits / 4``.
    """
    size = 2**n_bits
    mean = (size - 1) / 2 if mean is None else mean
    std = size / 4 if std is None else std
    if not std > 0:
        raise ValueError(f"std must be positive, got {std}")
    x = np.arange(size, dtype=float)
    w = np.exp(-((x - mean) ** 2) / (2 * std**2))
    return DiscreteDistribution(n_bits, w / w.sum())


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
