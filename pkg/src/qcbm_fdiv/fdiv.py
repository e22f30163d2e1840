"""Registry of f-divergence generators.

Every generator is stored through its conjugate ``f*(r) = r f(1/r)`` with the
ratio ``r = q/p``, so that ``D_f(p || q) = sum_x p(x) f*(q(x)/p(x))``. All
entries except TV are standardised: ``f*(1) = f*'(1) = 0`` and ``f*''(1) = 1``.

Each generator also carries the textbook definition of its divergence written
directly in ``p`` and ``q`` (no ratio). Those textbook forms are not
standardised, so ``definition_scale`` records the constant that maps the
textbook value onto the standardised one, e.g. the squared Hellinger distance
``sum (sqrt p - sqrt q)^2`` is half of ``sum p f*(q/p)`` for ``f*(r) = 2(sqrt r - 1)^2``.
Natural logarithms throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .dist import DiscreteDistribution

LOG2 = np.log(2.0)


class SupportError(ValueError):
    """Divergence is infinite because of a support mismatch."""


@dataclass(frozen=True)
class RatioClampPolicy:
    r_min: float = 1e-8
    r_max: float = 1e8

    def __post_init__(self):
        if not 0 < self.r_min < 1 < self.r_max:
            raise ValueError(f"need 0 < r_min < 1 < r_max, got {self.r_min}, {self.r_max}")

    def apply(self, r):
        return np.clip(r, self.r_min, self.r_max)


DEFAULT_CLAMP = RatioClampPolicy()


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    label: str
    conjugate: Callable[[np.ndarray], np.ndarray]
    conjugate_derivative: Callable[[np.ndarray], np.ndarray]
    # textbook definition in (p, q), evaluated on outcomes where p + q > 0
    definition: Callable[[np.ndarray, np.ndarray], float]
    definition_scale: float
    symmetric: bool
    # f*(0) and lim_{r -> inf} f*(r)/r; inf marks a singular boundary
    at_zero: float
    slope_at_inf: float
    standardised: bool = True

    def __repr__(self):
        return f"GeneratorSpec({self.name!r})"


def _sum(a) -> float:
    return float(np.sum(a))


def _kl(a, b) -> float:
    """sum a log(a/b); inf when a > 0 = b."""
    if np.any((a > 0) & (b == 0)):
        return np.inf
    return _sum(xlogy(a, a) - xlogy(a, b))


def _pearson(a, b) -> float:
    """sum (a - b)^2 / a, inf when a = 0 < b."""
    if np.any((a == 0) & (b > 0)):
        return np.inf
    m = a > 0
    return _sum((a[m] - b[m]) ** 2 / a[m])


def _tv_conj(r):
    return 0.5 * np.abs(r - 1.0)


def _tv_deriv(r):
    return 0.5 * np.sign(r - 1.0)


def _h2_conj(r):
    return 2.0 * (np.sqrt(r) - 1.0) ** 2


def _h2_deriv(r):
    return 2.0 - 2.0 / np.sqrt(r)


def _kl1f_conj(r):
    return -np.log(r) + r - 1.0


def _kl1f_deriv(r):
    return 1.0 - 1.0 / r


def _kl1r_conj(r):
    return xlogy(r, r) - r + 1.0


def _kl1r_deriv(r):
    return np.log(r)


def _kl2f_conj(r):
    return 4.0 * np.log(2.0 / (r + 1.0)) + 2.0 * (r - 1.0)


def _kl2f_deriv(r):
    return 2.0 - 4.0 / (r + 1.0)


def _kl2r_conj(r):
    return 4.0 * xlogy(r, 2.0 * r / (r + 1.0)) + 2.0 * (1.0 - r)


def _kl2r_deriv(r):
    return 4.0 * np.log(2.0 * r / (r + 1.0)) + 4.0 / (r + 1.0) - 2.0


def _pf_conj(r):
    return 0.5 * (r - 1.0) ** 2


def _pf_deriv(r):
    return r - 1.0


def _pr_conj(r):
    return (r - 1.0) ** 2 / (2.0 * r)


def _pr_deriv(r):
    return 0.5 - 0.5 / r**2


def _average(f, g):
    return lambda r: 0.5 * (f(r) + g(r))


REGISTRY: dict[str, GeneratorSpec] = {}


def _register(gen: GeneratorSpec) -> None:
    REGISTRY[gen.name] = gen


_register(GeneratorSpec(
    "tv", "total variation", _tv_conj, _tv_deriv,
    lambda p, q: 0.5 * _sum(np.abs(p - q)), 1.0, True,
    at_zero=0.5, slope_at_inf=0.5, standardised=False,
))
_register(GeneratorSpec(
    "h2", "squared Hellinger", _h2_conj, _h2_deriv,
    lambda p, q: _sum((np.sqrt(p) - np.sqrt(q)) ** 2), 2.0, True,
    at_zero=2.0, slope_at_inf=2.0,
))
_register(GeneratorSpec(
    "kl_i_fwd", "KL type I, forward  KL(p||q)", _kl1f_conj, _kl1f_deriv,
    lambda p, q: _kl(p, q), 1.0, False,
    at_zero=np.inf, slope_at_inf=1.0,
))
_register(GeneratorSpec(
    "kl_i_rev", "KL type I, reverse  KL(q||p)", _kl1r_conj, _kl1r_deriv,
    lambda p, q: _kl(q, p), 1.0, False,
    at_zero=1.0, slope_at_inf=np.inf,
))
_register(GeneratorSpec(
    "kl_ii_fwd", "KL type II, forward  KL(p||(p+q)/2)", _kl2f_conj, _kl2f_deriv,
    lambda p, q: _kl(p, 0.5 * (p + q)), 4.0, False,
    at_zero=4.0 * LOG2 - 2.0, slope_at_inf=2.0,
))
_register(GeneratorSpec(
    "kl_ii_rev", "KL type II, reverse  KL(q||(p+q)/2)", _kl2r_conj, _kl2r_deriv,
    lambda p, q: _kl(q, 0.5 * (p + q)), 4.0, False,
    at_zero=2.0, slope_at_inf=4.0 * LOG2 - 2.0,
))
_register(GeneratorSpec(
    "pearson_fwd", "Pearson forward  chi2(p||q)", _pf_conj, _pf_deriv,
    lambda p, q: _pearson(p, q), 0.5, False,
    at_zero=0.5, slope_at_inf=np.inf,
))
_register(GeneratorSpec(
    "pearson_rev", "Pearson reverse  chi2(q||p)", _pr_conj, _pr_deriv,
    lambda p, q: _pearson(q, p), 0.5, False,
    at_zero=np.inf, slope_at_inf=0.5,
))
_register(GeneratorSpec(
    "jeffrey", "Jeffrey  KL(p||q) + KL(q||p)",
    _average(_kl1f_conj, _kl1r_conj), _average(_kl1f_deriv, _kl1r_deriv),
    lambda p, q: _kl(p, q) + _kl(q, p), 0.5, True,
    at_zero=np.inf, slope_at_inf=np.inf,
))
_register(GeneratorSpec(
    "js", "Jensen-Shannon  KL(p||m) + KL(q||m)",
    _average(_kl2f_conj, _kl2r_conj), _average(_kl2f_deriv, _kl2r_deriv),
    lambda p, q: _kl(p, 0.5 * (p + q)) + _kl(q, 0.5 * (p + q)), 2.0, True,
    at_zero=2.0 * LOG2, slope_at_inf=2.0 * LOG2,
))
_register(GeneratorSpec(
    "pearson_sym", "symmetric Pearson  chi2(p||q) + chi2(q||p)",
    _average(_pf_conj, _pr_conj), _average(_pf_deriv, _pr_deriv),
    lambda p, q: _pearson(p, q) + _pearson(q, p), 0.25, True,
    at_zero=np.inf, slope_at_inf=np.inf,
))

GENERATOR_NAMES: tuple[str, ...] = tuple(REGISTRY)


def get_generator(name: str | GeneratorSpec) -> GeneratorSpec:
    if isinstance(name, GeneratorSpec):
        return name
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown divergence {name!r}; choose from {', '.join(GENERATOR_NAMES)}") from None


def _probs(d) -> np.ndarray:
    return d.probs if isinstance(d, DiscreteDistribution) else np.asarray(d, dtype=float)


def _check_pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p, q = _probs(p), _probs(q)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    return p, q


def exact_divergence_conjugate(gen, p, q) -> float:
    """``sum_x p(x) f*(q(x)/p(x))`` with the boundary limits of ``f*`` at 0 and infinity."""
    gen = get_generator(gen)
    p, q = _check_pair(p, q)
    both = (p > 0) & (q > 0)
    q_only = (p == 0) & (q > 0)
    p_only = (p > 0) & (q == 0)
    total = _sum(p[both] * gen.conjugate(q[both] / p[both]))
    if q_only.any():
        if np.isinf(gen.slope_at_inf):
            raise SupportError(f"{gen.name}: q > 0 where p = 0")
        total += gen.slope_at_inf * _sum(q[q_only])
    if p_only.any():
        if np.isinf(gen.at_zero):
            raise SupportError(f"{gen.name}: p > 0 where q = 0")
        total += gen.at_zero * _sum(p[p_only])
    return total


def raw_definition(gen, p, q) -> float:
    """The textbook formula, without the standardising constant."""
    gen = get_generator(gen)
    p, q = _check_pair(p, q)
    keep = (p + q) > 0
    return float(gen.definition(p[keep], q[keep]))


def exact_divergence_definition(gen, p, q) -> float:
    gen = get_generator(gen)
    value = gen.definition_scale * raw_definition(gen, p, q)
    if np.isinf(value):
        raise SupportError(f"{gen.name}: divergence is infinite for this support")
    return value


exact_divergence = exact_divergence_conjugate


def conjugate_derivative(gen, r, clamp: RatioClampPolicy = DEFAULT_CLAMP):
    """``f*'(r)`` after clamping ``r`` into ``[r_min, r_max]``; TV uses sgn(0) = 0."""
    gen = get_generator(gen)
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise ValueError("ratio must be positive")
    out = gen.conjugate_derivative(clamp.apply(r))
    return float(out) if out.ndim == 0 else out


def symmetry_check(gen, p, q, tol: float = 1e-10) -> bool:
    gen = get_generator(gen)
    return abs(exact_divergence_conjugate(gen, p, q) - exact_divergence_conjugate(gen, q, p)) <= tol


def is_symmetric(gen) -> bool:
    return get_generator(gen).symmetric
