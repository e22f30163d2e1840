"""Classical simulation of fault-tolerant divergence estimators.

Each estimator follows the same pattern: draw an index ``i`` from a sampling
distribution, obtain probability estimates ``p~_i``, ``q~_i`` from amplitude
estimation (EstAmp'), turn them into a random variable ``y~_i`` whose mean is
the divergence, and estimate that mean.

What is simulated:

* EstAmp is replaced by sampling its exact outcome distribution
  ``Pr[l] = sin^2(M d pi) / (M^2 sin^2(d pi))``, ``d = |w - l/M|``, ``w = arcsin(sqrt a)/pi``.
* Quantum mean estimation is replaced by a classical median of means sized so
  that ``Pr[|estimate - mean| >= eps/2] <= 1/5``.

The :class:`QueryLedger` records the number of *quantum* queries the quantum
mean-estimation routine would spend (executions times EstAmp queries), not the
classical work done here. The simulation checks correctness and accounting; it
says nothing about physical running time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ESTAMP = "EstAmp"
ESTAMP_PRIME = "EstAmpPrime"


@dataclass
class QueryLedger:
    queries_to_p: int = 0
    queries_to_q: int = 0
    executions_of_A: int = 0
    # index draws are classical bookkeeping, kept apart from amplitude-estimation queries
    index_draws: int = 0

    def credit(self, p: int = 0, q: int = 0, executions: int = 0, draws: int = 0) -> None:
        if min(p, q, executions, draws) < 0:
            raise ValueError("ledger counters never decrease")
        self.queries_to_p += p
        self.queries_to_q += q
        self.executions_of_A += executions
        self.index_draws += draws

    def merge(self, other: "QueryLedger") -> "QueryLedger":
        return QueryLedger(self.queries_to_p + other.queries_to_p, self.queries_to_q + other.queries_to_q,
                           self.executions_of_A + other.executions_of_A, self.index_draws + other.index_draws)


@dataclass(frozen=True)
class EstAmpConfig:
    M: int
    variant: str = ESTAMP_PRIME

    def __post_init__(self):
        if self.M < 2 or self.M & (self.M - 1):
            raise ValueError(f"M must be a power of two >= 2, got {self.M}")
        if self.variant not in (ESTAMP, ESTAMP_PRIME):
            raise ValueError(f"unknown variant {self.variant!r}")


def pow2_ceil(x: float) -> int:
    """``2**ceil(log2 x)``, at least 2."""
    return max(2, 2 ** max(1, math.ceil(math.log2(x))))


def estamp_distribution(a: float, M: int, variant: str = ESTAMP) -> tuple[np.ndarray, np.ndarray]:
    """Outcome values and probabilities of EstAmp with ``M`` queries on amplitude ``a``.

    Returns ``(values, probs)`` over ``l = 0 .. M-1`` with ``values[l] = sin^2(l pi / M)``.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"amplitude must lie in [0, 1], got {a}")
    EstAmpConfig(M, variant)
    l = np.arange(M)
    omega = math.asin(math.sqrt(a)) / math.pi
    delta = np.abs(omega - l / M)
    den = M**2 * np.sin(np.pi * delta) ** 2
    exact = den < 1e-300
    w = np.where(exact, 1.0, np.sin(M * np.pi * delta) ** 2 / np.where(exact, 1.0, den))
    if np.any(np.abs(delta) < 1e-13):
        w = (np.abs(delta) < 1e-13).astype(float)
    probs = w / w.sum()
    values = np.sin(l * np.pi / M) ** 2
    if variant == ESTAMP_PRIME:
        values[0] = math.sin(math.pi / (2 * M)) ** 2
    return values, probs


def estamp_sample(a: float, cfg: EstAmpConfig, seed=None, size: int | None = None):
    values, probs = estamp_distribution(a, cfg.M, cfg.variant)
    rng = np.random.default_rng(seed)
    out = values[_draw(probs, 1 if size is None else size, rng)]
    return float(out[0]) if size is None else out


def estamp_error_bound(a: float, M: int, k: int = 1) -> float:
    return 2 * math.pi * k * math.sqrt(a * (1 - a)) / M + k**2 * math.pi**2 / M**2


def _draw(probs: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), probs.size - 1)


# ---------------------------------------------------------------- oracles

@dataclass
class OracleDistribution:
    """Distribution over ``[n]`` reachable only through sampling and EstAmp probes.

    Every EstAmp probe credits its ``M`` queries to the attached ledger under ``name``.
    """

    probs: np.ndarray
    name: str = "p"
    ledger: QueryLedger | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-10:
            raise ValueError("oracle probabilities must be non-negative and sum to 1")
        if self.name not in ("p", "q"):
            raise ValueError("oracle name must be 'p' or 'q'")

    @property
    def n(self) -> int:
        return self.probs.size

    def outcome_table(self, i: int, M: int) -> tuple[np.ndarray, np.ndarray]:
        key = (i, M)
        if key not in self._cache:
            self._cache[key] = estamp_distribution(float(self.probs[i]), M, ESTAMP_PRIME)
        return self._cache[key]

    def _credit(self, M: int, count: int = 1) -> None:
        if self.ledger is not None:
            self.ledger.credit(**{self.name: M * count})

    def estimate(self, i: int, M: int, rng) -> float:
        values, probs = self.outcome_table(i, M)
        self._credit(M)
        return float(values[_draw(probs, 1, np.random.default_rng(rng))[0]])

    def sample_index(self, rng) -> int:
        if self.ledger is not None:
            self.ledger.credit(draws=1)
        return int(_draw(self.probs, 1, np.random.default_rng(rng))[0])


class RatioBoundError(ValueError):
    pass


@dataclass
class BoundedRatioPair:
    """Pair ``(p, q)`` on ``[n]`` with ``q_i / p_i <= g`` for every ``i``."""

    p: np.ndarray
    q: np.ndarray
    g: float

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if self.p.shape != self.q.shape:
            raise ValueError("p and q must have the same support size")
        for v in (self.p, self.q):
            if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-10:
                raise ValueError("p and q must be probability vectors")
        if np.any((self.p == 0) & (self.q > 0)):
            raise RatioBoundError("q_i > 0 where p_i = 0: ratio unbounded")
        ratio = max_ratio(self.q, self.p)
        if ratio > self.g * (1 + 1e-12):
            raise RatioBoundError(f"max q_i/p_i = {ratio:.6g} exceeds bound g = {self.g}")

    @classmethod
    def tight(cls, p, q) -> "BoundedRatioPair":
        """Pair with ``g`` set to the exact maximum ratio."""
        return cls(p, q, max_ratio(q, p))

    @property
    def n(self) -> int:
        return self.p.size


def random_bounded_pair(n: int, rng, mix: tuple[float, float] = (0.4, 0.6)) -> BoundedRatioPair:
    """``p ~ Dir(2)``, ``q = (1 - t) u + t p`` with ``u ~ Dir(2)``; ``g`` is the tight bound."""
    rng = np.random.default_rng(rng)
    p = rng.dirichlet(np.full(n, 2.0))
    t = rng.uniform(*mix)
    q = (1.0 - t) * rng.dirichlet(np.full(n, 2.0)) + t * p
    return BoundedRatioPair.tight(p, q / q.sum())


def max_ratio(num, den) -> float:
    num, den = np.asarray(num, dtype=float), np.asarray(den, dtype=float)
    m = num > 0
    if np.any(den[m] == 0):
        return math.inf
    return float((num[m] / den[m]).max()) if m.any() else 0.0


# ---------------------------------------------------------------- mean estimation

def variance_bound(n: int, g: float, eps: float) -> float:
    """Upper bound on the variance of one Pearson subroutine output."""
    return g**2 + math.exp(-(eps**2) / (2 * n * g**2))


def quantum_executions(sigma: float, eps: float) -> int:
    """Executions of the subroutine charged to quantum mean estimation at accuracy ``eps``.

    ``(s/eps) log^{3/2}(s/eps) loglog(s/eps)`` with unit constant; each log
    factor is floored at 1 so the count never drops below ``s/eps``.
    """
    x = sigma / eps
    if x <= 0:
        raise ValueError("sigma and eps must be positive")
    log_x = max(1.0, math.log(x))
    loglog_x = max(1.0, math.log(log_x))
    return math.ceil(x * log_x**1.5 * loglog_x)


# Median of GROUPS means, each of GROUP_FACTOR * var / t^2 samples. Chebyshev
# gives each group failure prob <= 1/4; with 3 groups the median fails with
# prob <= 3 (1/4)^2 (3/4) + (1/4)^3 = 0.15625 <= 1/5.
GROUPS = 3
GROUP_FACTOR = 4.0


def classical_group_size(var: float, t: float) -> int:
    return max(1, math.ceil(GROUP_FACTOR * var / t**2))


def median_of_means(draw, var: float, t: float, rng: np.random.Generator) -> float:
    """Median of ``GROUPS`` group means; ``draw(m, rng)`` returns ``m`` i.i.d. outputs."""
    m = classical_group_size(var, t)
    return float(np.median([np.mean(draw(m, rng)) for _ in range(GROUPS)]))


# ---------------------------------------------------------------- estimators

@dataclass(frozen=True)
class QueryPlan:
    """EstAmp sizes and the quantum execution count for one estimate."""

    M_p: int
    M_q: int
    executions: int
    sigma: float
    eps: float

    @property
    def queries_to_p(self) -> int:
        return self.executions * self.M_p

    @property
    def queries_to_q(self) -> int:
        return self.executions * self.M_q


# One extra doubling of both EstAmp sizes; the bias bound holds only up to an
# unspecified constant and at unit scale it sits right at eps/2 for small n.
PEARSON_SCALE = 2.0


def pearson_plan(n: int, g: float, eps: float, scale: float = PEARSON_SCALE) -> QueryPlan:
    if eps <= 0:
        raise ValueError("eps must be positive")
    M_q = pow2_ceil(scale * math.sqrt(n) * g / eps)
    M_p = pow2_ceil(scale * math.sqrt(n) * g**2 / eps)
    sigma = math.sqrt(variance_bound(n, g, eps))
    return QueryPlan(M_p, M_q, quantum_executions(sigma, eps / 2), sigma, eps)


class _IndexedEstimates:
    """Vectorised EstAmp' draws for many indices at fixed ``M``."""

    def __init__(self, probs: np.ndarray, M: int):
        tables = [estamp_distribution(float(a), M, ESTAMP_PRIME) for a in probs]
        self.values = np.stack([t[0] for t in tables])
        self.cdf = np.cumsum(np.stack([t[1] for t in tables]), axis=1)
        self.cdf[:, -1] = 1.0
        self.probs = np.stack([t[1] for t in tables])

    def draw(self, idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(idx.size)
        out = np.empty(idx.size)
        for i in np.unique(idx):
            m = idx == i
            k = np.minimum(np.searchsorted(self.cdf[i], u[m], side="right"), self.cdf.shape[1] - 1)
            out[m] = self.values[i, k]
        return out


def _capped_ratio(q_est, p_est, g):
    # the true ratio never exceeds g, so capping the estimate only moves it closer
    return np.minimum(q_est / p_est, g)


def pearson_subroutine_A(pair: BoundedRatioPair, eps: float, ledger: QueryLedger, seed=None,
                         scale: float = PEARSON_SCALE) -> float:
    """One execution: ``i ~ q``, EstAmp' estimates of ``q_i`` and ``p_i``, output ``(min(q~/p~, g) - 1)/2``."""
    plan = pearson_plan(pair.n, pair.g, eps, scale)
    rng = np.random.default_rng(seed)
    p_or = OracleDistribution(pair.p, "p", ledger)
    q_or = OracleDistribution(pair.q, "q", ledger)
    i = q_or.sample_index(rng)
    q_est = q_or.estimate(i, plan.M_q, rng)
    p_est = p_or.estimate(i, plan.M_p, rng)
    ledger.credit(executions=1)
    return 0.5 * (float(_capped_ratio(q_est, p_est, pair.g)) - 1.0)


@dataclass(frozen=True)
class SubroutineMoments:
    mean: float  # E~, expectation of the subroutine output
    variance: float
    target: float  # E, the exact divergence

    @property
    def bias(self) -> float:
        return abs(self.mean - self.target)


def _capped_ratio_moments(a_vals, a_probs, b_vals, b_probs, g):
    """``E[min(a/b, g)]`` and ``E[min(a/b, g)^2]`` for independent discrete ``a``, ``b``."""
    order = np.argsort(a_vals)
    av, ap = a_vals[order], a_probs[order]
    c0 = np.concatenate([[0.0], np.cumsum(ap)])
    c1 = np.concatenate([[0.0], np.cumsum(ap * av)])
    c2 = np.concatenate([[0.0], np.cumsum(ap * av**2)])
    k = np.searchsorted(av, g * b_vals, side="left")  # a < g b keeps the raw ratio
    tail = 1.0 - c0[k]
    m1 = c1[k] / b_vals + g * tail
    m2 = c2[k] / b_vals**2 + g * g * tail
    return float(b_probs @ m1), float(b_probs @ m2)


def pearson_subroutine_moments(pair: BoundedRatioPair, eps: float, scale: float = PEARSON_SCALE) -> SubroutineMoments:
    """Exact mean and variance of one subroutine output, summed over every EstAmp outcome."""
    plan = pearson_plan(pair.n, pair.g, eps, scale)
    qe, pe = _IndexedEstimates(pair.q, plan.M_q), _IndexedEstimates(pair.p, plan.M_p)
    mean = second = 0.0
    for i in np.flatnonzero(pair.q > 0):
        r1, r2 = _capped_ratio_moments(qe.values[i], qe.probs[i], pe.values[i], pe.probs[i], pair.g)
        mean += pair.q[i] * 0.5 * (r1 - 1.0)
        second += pair.q[i] * 0.25 * (r2 - 2.0 * r1 + 1.0)
    m = pair.q > 0
    target = float(0.5 * (pair.q[m] ** 2 / pair.p[m]).sum() - 0.5)
    return SubroutineMoments(mean, max(second - mean**2, 0.0), target)


def _pearson_draw(pair: BoundedRatioPair, plan: QueryPlan):
    qe, pe = _IndexedEstimates(pair.q, plan.M_q), _IndexedEstimates(pair.p, plan.M_p)
    q_cdf = np.cumsum(pair.q)
    q_cdf[-1] = 1.0

    def draw(m: int, rng: np.random.Generator) -> np.ndarray:
        idx = np.minimum(np.searchsorted(q_cdf, rng.random(m), side="right"), pair.n - 1)
        return 0.5 * (_capped_ratio(qe.draw(idx, rng), pe.draw(idx, rng), pair.g) - 1.0)

    return draw


def _sizing_variance(exact: float, bound: float, size_by: str) -> float:
    if size_by == "exact":
        # Chebyshev needs only an upper bound; tiny floor keeps the group size positive
        return max(exact, 1e-12)
    if size_by == "bound":
        return bound
    raise ValueError(f"size_by must be 'exact' or 'bound', got {size_by!r}")


def _ledger_for(plan: QueryPlan) -> QueryLedger:
    ledger = QueryLedger()
    ledger.credit(p=plan.queries_to_p, q=plan.queries_to_q, executions=plan.executions, draws=plan.executions)
    return ledger


def estimate_pearson(pair: BoundedRatioPair, eps: float, seed=None, scale: float = PEARSON_SCALE,
                     size_by: str = "exact") -> tuple[float, QueryLedger]:
    """Estimate the forward Pearson divergence ``chi2(p || q)`` to additive ``eps``.

    The classical median of means targets accuracy ``eps/2`` with failure
    probability at most 1/5. With ``size_by="exact"`` its group size uses the
    exactly computed subroutine variance, otherwise the a priori bound. The
    returned ledger charges what quantum mean estimation would spend under the
    a priori bound either way.
    """
    est, ledger = estimate_pearson_trials(pair, eps, 1, seed, scale, size_by)
    return float(est[0]), ledger


def estimate_pearson_trials(pair: BoundedRatioPair, eps: float, trials: int, seed=None,
                            scale: float = PEARSON_SCALE, size_by: str = "exact") -> tuple[np.ndarray, QueryLedger]:
    """``trials`` independent runs of :func:`estimate_pearson`; the ledger is per run."""
    plan = pearson_plan(pair.n, pair.g, eps, scale)
    var = pearson_subroutine_moments(pair, eps, scale).variance if size_by == "exact" else 0.0
    var = _sizing_variance(var, plan.sigma**2, size_by)
    draw = _pearson_draw(pair, plan)
    rng = np.random.default_rng(seed)
    return np.array([median_of_means(draw, var, eps / 2, rng) for _ in range(trials)]), _ledger_for(plan)


# Total variation and KL estimators. The amplitude-estimation size carries the
# constant 4*pi that makes a first-order bound on the subroutine bias at most eps/2.
TV_SCALE = 4 * math.pi
KL_SCALE = 4 * math.pi


def tv_plan(n: int, eps: float, scale: float = TV_SCALE) -> QueryPlan:
    M = pow2_ceil(scale * math.sqrt(n) / eps)
    # y lies in [0, 1], so its variance is at most 1/4
    return QueryPlan(M, M, quantum_executions(0.5, eps / 2), 0.5, eps)


def tv_subroutine_moments(p, q, eps: float, scale: float = TV_SCALE) -> SubroutineMoments:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    plan = tv_plan(p.size, eps, scale)
    pe, qe = _IndexedEstimates(p, plan.M_p), _IndexedEstimates(q, plan.M_q)
    w = 0.5 * (p + q)
    mean = second = 0.0
    for i in np.flatnonzero(w > 0):
        a, b = pe.values[i][:, None], qe.values[i][None, :]
        y = np.abs(a - b) / (a + b)
        joint = pe.probs[i][:, None] * qe.probs[i][None, :]
        mean += w[i] * float((joint * y).sum())
        second += w[i] * float((joint * y**2).sum())
    return SubroutineMoments(mean, max(second - mean**2, 0.0), 0.5 * float(np.abs(p - q).sum()))


def tv_y(p_i: float, q_i: float) -> float:
    return abs(p_i - q_i) / (p_i + q_i)


def _tv_draw(p, q, plan: QueryPlan):
    pe, qe = _IndexedEstimates(p, plan.M_p), _IndexedEstimates(q, plan.M_q)
    mix = np.cumsum(0.5 * (p + q))
    mix[-1] = 1.0

    def draw(m, rng):
        idx = np.minimum(np.searchsorted(mix, rng.random(m), side="right"), p.size - 1)
        a, b = pe.draw(idx, rng), qe.draw(idx, rng)
        return np.abs(a - b) / (a + b)

    return draw


def estimate_tv_quantum_sim(p, q, eps: float, seed=None, scale: float = TV_SCALE,
                            size_by: str = "exact") -> tuple[float, QueryLedger]:
    """Estimate ``TV(p, q)``: ``i ~ (p+q)/2``, ``y = |p~ - q~| / (p~ + q~)``."""
    est, ledger = estimate_tv_trials(p, q, eps, 1, seed, scale, size_by)
    return float(est[0]), ledger


def estimate_tv_trials(p, q, eps: float, trials: int, seed=None, scale: float = TV_SCALE,
                       size_by: str = "exact") -> tuple[np.ndarray, QueryLedger]:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if eps <= 0:
        raise ValueError("eps must be positive")
    plan = tv_plan(p.size, eps, scale)
    var = tv_subroutine_moments(p, q, eps, scale).variance if size_by == "exact" else 0.0
    var = _sizing_variance(var, plan.sigma**2, size_by)
    draw = _tv_draw(p, q, plan)
    rng = np.random.default_rng(seed)
    return np.array([median_of_means(draw, var, eps / 2, rng) for _ in range(trials)]), _ledger_for(plan)


def kl_plan(n: int, g: float, eps: float, scale: float = KL_SCALE) -> QueryPlan:
    """Sizes for ``KL(p || q)`` with ``p_i / q_i <= g``."""
    M_p = pow2_ceil(scale * math.sqrt(n) / eps)
    M_q = pow2_ceil(scale * math.sqrt(n) * g / eps)
    # |y| is at most the log of the widest ratio the EstAmp' floor allows
    floor = math.sin(math.pi / (2 * min(M_p, M_q))) ** 2
    sigma = abs(math.log(floor))
    return QueryPlan(M_p, M_q, quantum_executions(sigma, eps / 2), sigma, eps)


def _check_kl_pair(p, q, g):
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    BoundedRatioPair(q, p, max_ratio(p, q) if g is None else g)  # validates p_i / q_i <= g
    return p, q, max_ratio(p, q) if g is None else g


def kl_subroutine_moments(p, q, eps: float, g: float | None = None, scale: float = KL_SCALE) -> SubroutineMoments:
    p, q, g = _check_kl_pair(p, q, g)
    plan = kl_plan(p.size, g, eps, scale)
    pe, qe = _IndexedEstimates(p, plan.M_p), _IndexedEstimates(q, plan.M_q)
    lp, lq = (pe.probs * np.log(pe.values)).sum(1), (qe.probs * np.log(qe.values)).sum(1)
    lp2, lq2 = (pe.probs * np.log(pe.values) ** 2).sum(1), (qe.probs * np.log(qe.values) ** 2).sum(1)
    mean = float(p @ (lp - lq))
    second = float(p @ (lp2 - 2 * lp * lq + lq2))
    m = p > 0
    return SubroutineMoments(mean, max(second - mean**2, 0.0), float((p[m] * np.log(p[m] / q[m])).sum()))


def estimate_kl_quantum_sim(p, q, eps: float, g: float | None = None, seed=None, scale: float = KL_SCALE,
                            size_by: str = "exact") -> tuple[float, QueryLedger]:
    """Estimate ``KL(p || q)``: ``i ~ p``, ``y = log p~_i - log q~_i``; ``g`` bounds ``p_i / q_i``."""
    est, ledger = estimate_kl_trials(p, q, eps, 1, g, seed, scale, size_by)
    return float(est[0]), ledger


def estimate_kl_trials(p, q, eps: float, trials: int, g: float | None = None, seed=None,
                       scale: float = KL_SCALE, size_by: str = "exact") -> tuple[np.ndarray, QueryLedger]:
    if eps <= 0:
        raise ValueError("eps must be positive")
    p, q, g = _check_kl_pair(p, q, g)
    plan = kl_plan(p.size, g, eps, scale)
    pe, qe = _IndexedEstimates(p, plan.M_p), _IndexedEstimates(q, plan.M_q)
    p_cdf = np.cumsum(p)
    p_cdf[-1] = 1.0

    def draw(m, rng):
        idx = np.minimum(np.searchsorted(p_cdf, rng.random(m), side="right"), p.size - 1)
        return np.log(pe.draw(idx, rng)) - np.log(qe.draw(idx, rng))

    var = kl_subroutine_moments(p, q, eps, g, scale).variance if size_by == "exact" else 0.0
    var = _sizing_variance(var, plan.sigma**2, size_by)
    rng = np.random.default_rng(seed)
    return np.array([median_of_means(draw, var, eps / 2, rng) for _ in range(trials)]), _ledger_for(plan)
