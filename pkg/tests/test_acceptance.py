"""Acceptance criteria, one test per criterion (7 is split into its parts).

Each test records a PASS/FAIL line, listed at the end of the pytest run, then
asserts. Run with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from qcbm_fdiv.classifier import ExactClassifier
from qcbm_fdiv.cli import get_preset, load_config, make_target, run_experiment, ExperimentConfig, FTConfig
from qcbm_fdiv.dist import DiscreteDistribution, marginal, windows
from qcbm_fdiv.fdiv import (GENERATOR_NAMES, REGISTRY, exact_divergence_conjugate, exact_divergence_definition)
from qcbm_fdiv.ftq import (ESTAMP, ESTAMP_PRIME, EstAmpConfig, estamp_distribution, estamp_error_bound,
                           estamp_sample, estimate_pearson_trials, pearson_plan, pearson_subroutine_moments,
                           random_bounded_pair, variance_bound)
from qcbm_fdiv.sim import AnsatzSpec, born_probs
from qcbm_fdiv.train import bootstrap_summary, exact_ratio_fn, full_gradient, run_training


def record(label, ok, detail):
    ACCEPTANCE_LINES.append((label, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")


def fd_gradient(cost, theta, h=1e-6):
    out = np.empty(theta.size)
    for i in range(theta.size):
        e = np.zeros(theta.size)
        e[i] = h
        out[i] = (cost(theta + e) - cost(theta - e)) / (2 * h)
    return out


def test_1_gradient_oracle():
    start = time.perf_counter()
    worst, checked, skipped = 0.0, 0, 0
    rng = np.random.default_rng(1)
    for name in GENERATOR_NAMES:
        for n in (1, 2, 3):
            for depth in (0, 1, 2):
                a = AnsatzSpec(n, depth)
                for _ in range(3):
                    theta = rng.uniform(-np.pi, np.pi, a.n_params)
                    p = DiscreteDistribution(n, rng.dirichlet(np.full(2**n, 2.0)))
                    q = born_probs(a, theta)
                    if name == "tv" and np.any(np.abs(q / p.probs - 1) <= 1e-3):
                        skipped += 1
                        continue
                    grad = full_gradient(name, a, theta, exact_ratio_fn(p, q), shots=None)
                    fd = fd_gradient(lambda t: exact_divergence_conjugate(name, p, born_probs(a, t)), theta)
                    worst = max(worst, float(np.max(np.abs(grad - fd))))
                    checked += 1
    runtime = time.perf_counter() - start
    ok = worst <= 1e-6 and runtime < 60
    record("1 gradient oracle", ok, f"{checked} cases ({skipped} TV kink skips), max |shift - fd| = {worst:.2e}, "
                                   f"{runtime:.1f} s")
    assert ok


def test_2_dual_path():
    rng = np.random.default_rng(2)
    worst = 0.0
    for name in GENERATOR_NAMES:
        for _ in range(200):
            p, q = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
            worst = max(worst, abs(exact_divergence_conjugate(name, p, q) - exact_divergence_definition(name, p, q)))
    pearson_gap = 0.0
    for _ in range(200):
        p, q = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
        r = q / p
        pearson_gap = max(pearson_gap, abs(np.sum(p * (r - 1) ** 2 / 2) - np.sum(p * (r**2 - 1) / 2)))
    ok = worst < 1e-10 and pearson_gap < 1e-12
    record("2 dual-path equality", ok, f"max gap {worst:.2e} over 200 pairs x 11 generators; "
                                       f"Pearson generator gap {pearson_gap:.2e}")
    assert ok


def test_3_jensen_bound():
    rng = np.random.default_rng(3)
    violations, worst = 0, -np.inf
    for trial in range(500):
        n = 3 + trial % 3
        P = DiscreteDistribution(n, rng.dirichlet(np.ones(2**n)))
        Q = DiscreteDistribution(n, rng.dirichlet(np.ones(2**n)))
        for name in GENERATOR_NAMES:
            local = np.mean([exact_divergence_conjugate(name, marginal(P, w), marginal(Q, w))
                             for w in windows(n, 1)])
            gap = local - exact_divergence_conjugate(name, P, Q)
            worst = max(worst, gap)
            violations += gap > 1e-10
    record("3 Jensen bound", violations == 0, f"{violations} violations in 500 joints x 11 generators "
                                              f"(max local - global = {worst:.2e})")
    assert violations == 0


def test_4_exact_classifier_identity():
    rng = np.random.default_rng(4)
    worst = 0.0
    for name in GENERATOR_NAMES:
        gen = REGISTRY[name]
        for _ in range(100):
            n = int(rng.integers(1, 5))
            p = DiscreteDistribution(n, rng.dirichlet(np.ones(2**n)))
            q = DiscreteDistribution(n, rng.dirichlet(np.ones(2**n)))
            r = ExactClassifier(p, q).ratio_table()
            worst = max(worst, abs(float(np.sum(p.probs * gen.conjugate(r))) - exact_divergence_conjugate(name, p, q)))
    record("4 exact-classifier identity", worst <= 1e-12, f"max gap {worst:.2e} over 100 pairs x 11 generators")
    assert worst <= 1e-12


def final_metric_summary(cfg, metric):
    target = make_target(cfg.target, cfg.n_qubits)
    a = AnsatzSpec(cfg.n_qubits, cfg.model_depth)
    finals = [run_training(replace(cfg.train, seed=s), target, a).metric(metric)[-1] for s in cfg.seeds]
    return bootstrap_summary(np.array(finals)[:, None]), finals


@pytest.mark.slow
def test_5_f_switch_oo():
    start = time.perf_counter()
    switch, _ = final_metric_summary(get_preset("oo_f_switch"), "tv")
    tv_only, _ = final_metric_summary(get_preset("oo_tv"), "tv")
    runtime = time.perf_counter() - start
    ratio = tv_only.median[0] / switch.median[0]
    ok = ratio >= 10 and runtime < 15 * 60
    record("5 f-switch vs TV (OO)", ok, f"median final TV {switch.median[0]:.3g} (f-switch) vs "
                                       f"{tv_only.median[0]:.3g} (TV only), ratio {ratio:.3g}x, {runtime:.0f} s")
    assert ok


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="on seeds 0-8 the k=2 and k=3 plateau bands overlap and k=3 ties global "
                                       "over the first 50 epochs; the rates were tuned on held-out seeds 100-108")
def test_6_f_local_ordering():
    start = time.perf_counter()
    names = ["gaussian_n4_k1", "gaussian_n4_k2", "gaussian_n4_k3", "gaussian_n4_global"]
    curves = {}
    for name in names:
        cfg = get_preset(name)
        target = make_target(cfg.target, cfg.n_qubits)
        a = AnsatzSpec(cfg.n_qubits, cfg.model_depth)
        curves[name] = np.array([run_training(replace(cfg.train, seed=s), target, a).kl_rev for s in cfg.seeds])
    runtime = time.perf_counter() - start
    # plateau: mean reverse KL over the last 50 epochs of each run
    bands = {k: bootstrap_summary(c[:, -50:].mean(axis=1)[:, None]) for k, c in curves.items()}
    overlaps = [f"{hi.split('_')[-1]}/{lo.split('_')[-1]}" for hi, lo in zip(names, names[1:])
                if bands[hi].p5[0] <= bands[lo].p95[0]]
    separated = not overlaps
    # early descent: mean of the bootstrapped median curve over epochs 0-50
    early = {k: float(bootstrap_summary(c[:, :51]).median.mean()) for k, c in curves.items()}
    faster = [k for k in names[:-1] if early[k] < early[names[-1]]]
    ok = separated and bool(faster) and runtime < 30 * 60
    plateau_txt = ", ".join(f"{k.split('_')[-1]} {b.median[0]:.4f} [{b.p5[0]:.4f}, {b.p95[0]:.4f}]"
                            for k, b in bands.items())
    early_txt = ", ".join(f"{k.split('_')[-1]} {v:.4f}" for k, v in early.items())
    record("6 f-local ordering", ok, f"plateaus {plateau_txt}; overlapping bands: {', '.join(overlaps) or 'none'}; "
                                     f"early-50 means {early_txt}; {runtime:.0f} s")
    assert ok


EPS7 = 0.05
N7 = [4] * 7 + [8] * 7 + [16] * 6


@pytest.fixture(scope="module")
def pairs7():
    rng = np.random.default_rng(7)
    return [random_bounded_pair(n, rng) for n in N7]


@pytest.fixture(scope="module")
def moments7(pairs7):
    return [pearson_subroutine_moments(pair, EPS7) for pair in pairs7]


def test_7a_pearson_bias(moments7):
    worst = max(m.bias for m in moments7)
    record("7a Pearson subroutine bias", worst <= EPS7 / 2, f"max |E - E~| = {worst:.4f} <= {EPS7 / 2}")
    assert worst <= EPS7 / 2


def test_7b_pearson_variance(pairs7, moments7):
    ratios = [m.variance / variance_bound(p.n, p.g, EPS7) for p, m in zip(pairs7, moments7)]
    record("7b Pearson subroutine variance", max(ratios) <= 1, f"max variance / bound = {max(ratios):.3f}")
    assert max(ratios) <= 1


def test_7c_pearson_success(pairs7):
    start = time.perf_counter()
    rates = []
    for i, pair in enumerate(pairs7):
        truth = exact_divergence_definition("pearson_fwd", pair.p, pair.q)
        est, _ = estimate_pearson_trials(pair, EPS7, 100, seed=np.random.SeedSequence([7, i]))
        rates.append(np.mean(np.abs(est - truth) <= EPS7))
    runtime = time.perf_counter() - start
    ok = min(rates) >= 2 / 3 and runtime < 600
    record("7c Pearson success rate", ok, f"min success over 20 pairs {min(rates):.2f} (>= 2/3), {runtime:.1f} s")
    assert ok


def _normalised_queries(n, g, eps):
    """Ledger totals with the mean-estimation log factor divided out."""
    plan = pearson_plan(n, g, eps)
    x = plan.sigma / (eps / 2)
    log_x = max(1.0, math.log(x))
    logs = log_x**1.5 * max(1.0, math.log(log_x))
    return plan.queries_to_q / logs, plan.queries_to_p / logs


def _exponent(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# fitted log-log slope must sit within this distance of the claimed exponent;
# power-of-two rounding of M moves single points by at most a factor 2
SLOPE_TOL = 0.25


def _sweep(var, values):
    base = {"n": 16, "g": 2.0, "eps": EPS7}
    pts = [_normalised_queries(**{**base, var: v}) for v in values]
    return _exponent(values, [q for q, _ in pts]), _exponent(values, [p for _, p in pts])


def test_7d_pearson_ledger_n_eps(pairs7):
    n_q, n_p = _sweep("n", [4, 16, 64, 256, 1024, 4096])
    e_q, e_p = _sweep("eps", [0.2, 0.1, 0.05, 0.025, 0.0125])
    ok = (abs(n_q - 0.5) <= SLOPE_TOL and abs(n_p - 0.5) <= SLOPE_TOL
          and abs(e_q + 2) <= SLOPE_TOL and abs(e_p + 2) <= SLOPE_TOL)
    # the ledger must equal executions times the per-execution sizes on every one of the 20 pairs
    for pair in pairs7:
        _, ledger = estimate_pearson_trials(pair, EPS7, 1, seed=0)
        plan = pearson_plan(pair.n, pair.g, EPS7)
        ok &= ledger.queries_to_q == plan.executions * plan.M_q and ledger.queries_to_p == plan.executions * plan.M_p
    record("7d Pearson ledger n, eps scaling", ok,
           f"fitted exponents n: {n_q:.2f} (q) {n_p:.2f} (p), claimed 0.5; eps: {e_q:.2f} (q) {e_p:.2f} (p), "
           f"claimed -2")
    assert ok


@pytest.mark.xfail(strict=True, reason="the proof's variance bound grows like g^2, so the executions carry an extra "
                                       "factor g and the ledger scales as g^2 (q) and g^3 (p)")
def test_7d_pearson_ledger_g():
    g_q, g_p = _sweep("g", [1.5, 3.0, 6.0, 12.0, 24.0, 48.0])
    ok = abs(g_q - 1) <= SLOPE_TOL and abs(g_p - 2) <= SLOPE_TOL
    record("7d Pearson ledger g scaling", ok,
           f"fitted exponents g: {g_q:.2f} (q) {g_p:.2f} (p), claimed 1 (q) 2 (p); expected failure")
    assert ok


def test_8_estamp():
    M = 64
    zero = np.all(estamp_sample(0.0, EstAmpConfig(M, ESTAMP), seed=0, size=1000) == 0.0)
    zero_prime = np.all(estamp_sample(0.0, EstAmpConfig(M, ESTAMP_PRIME), seed=0, size=1000)
                        == math.sin(math.pi / (2 * M)) ** 2)
    grid = all(estamp_distribution(math.sin(math.pi * l / M) ** 2, M)[1][l] == 1.0 for l in range(1, M // 2))
    rng = np.random.default_rng(8)
    amplitudes = np.linspace(0.0, 1.0, 51)
    hits = draws = 0
    exact_mass = []
    for a in amplitudes:
        out = estamp_sample(a, EstAmpConfig(M, ESTAMP), seed=rng, size=2000)
        hits += int(np.sum(np.abs(out - a) <= estamp_error_bound(a, M)))
        draws += out.size
        v, pr = estamp_distribution(a, M)
        exact_mass.append(pr[np.abs(v - a) <= estamp_error_bound(a, M)].sum())
    rate = hits / draws
    ok = zero and zero_prime and grid and rate >= 8 / np.pi**2
    record("8 EstAmp checks", ok, f"a=0 deterministic: {zero and zero_prime}; exact grid deterministic: {grid}; "
                                  f"{rate:.3f} of {draws} draws within the error bound (>= 0.81); "
                                  f"smallest exact in-bound mass per amplitude {min(exact_mass):.3f}")
    assert ok


def test_9_determinism(tmp_path):
    switch = get_preset("oo_f_switch")
    local = get_preset("gaussian_n4_k2")
    configs = {
        "f_switch": replace(switch, train=replace(switch.train, epochs=20), seeds=(0, 1, 2)),
        "f_local": replace(local, train=replace(local.train, epochs=10), seeds=(0, 1)),
        "ft": ExperimentConfig(kind="ft_estimate", ft=FTConfig("pearson", (4, 8), pairs=2, eps=0.1, trials=5),
                               seeds=(0,)),
    }
    compared = 0
    mismatched = []
    for name, cfg in configs.items():
        first = tmp_path / name / "first"
        manifest = run_experiment(cfg, first)
        again = tmp_path / name / "again"
        run_experiment(load_config(first / "manifest.json"), again)
        for f in manifest["files"]:
            if f.endswith(".csv"):
                compared += 1
                if (first / f).read_bytes() != (again / f).read_bytes():
                    mismatched.append(f"{name}/{f}")
    ok = compared > 0 and not mismatched
    record("9 determinism", ok, f"{compared} CSVs re-run from manifests, {len(mismatched)} differ")
    assert ok
