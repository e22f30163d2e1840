from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcbm_fdiv.sim import (SHIFT, AnsatzSpec, StateVector, born_distribution, born_probs, build_ansatz,
                           probability_gradient, sample_circuit, shifted_parameters, shifted_probs, simulate)
from qcbm_fdiv.dist import marginal_probs, Window

I2 = np.eye(2)
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def rz(t):
    return np.diag([np.exp(-1j * t), np.exp(1j * t)])


def rx(t):
    return np.array([[np.cos(t), -1j * np.sin(t)], [-1j * np.sin(t), np.cos(t)]])


def on(n, q, g):
    return reduce(np.kron, [g if k == q else I2 for k in range(n)])


def cz(n, a, b):
    d = np.ones(2**n, dtype=complex)
    for x in range(2**n):
        if (x >> (n - 1 - a)) & 1 and (x >> (n - 1 - b)) & 1:
            d[x] = -1
    return np.diag(d)


def dense_state(ansatz, theta):
    """Independent oracle: multiply full 2^n x 2^n matrices gate by gate."""
    n = ansatz.n_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for gate in ansatz.gates():
        kind = gate[0]
        if kind == "h":
            u = on(n, gate[1], H)
        elif kind == "rz":
            u = on(n, gate[1], rz(theta[gate[2]]))
        elif kind == "rx":
            u = on(n, gate[1], rx(theta[gate[2]]))
        else:
            u = cz(n, gate[1], gate[2])
        psi = u @ psi
    return psi


@pytest.mark.parametrize("n,depth,expected", [(3, 1, 12), (3, 4, 30), (1, 0, 2), (3, 3, 24), (3, 2, 18)])
def test_parameter_count(n, depth, expected):
    assert build_ansatz(n, depth).n_params == expected


def test_rejects_zero_qubits():
    with pytest.raises(ValueError):
        build_ansatz(0, 1)


def test_gate_list_layout():
    gates = AnsatzSpec(2, 1).gates()
    assert gates[:2] == [("h", 0), ("h", 1)]
    assert gates[2:6] == [("rz", 0, 0), ("rx", 0, 1), ("rz", 1, 2), ("rx", 1, 3)]
    assert gates[6] == ("cz", 0, 1)
    assert [g[2] for g in gates[7:]] == [4, 5, 6, 7]


@pytest.mark.parametrize("n,depth", [(1, 0), (2, 1), (3, 2), (4, 1)])
def test_zero_angles_uniform(n, depth):
    a = AnsatzSpec(n, depth)
    np.testing.assert_allclose(born_probs(a, np.zeros(a.n_params)), 2.0**-n, atol=1e-14)


def test_single_qubit_x_rotation_keeps_half():
    a = AnsatzSpec(1, 0)
    np.testing.assert_allclose(born_probs(a, [0.0, np.pi / 2]), [0.5, 0.5], atol=1e-14)


@pytest.mark.parametrize("n,depth", [(2, 1), (3, 2), (4, 1)])
def test_matches_dense_oracle(n, depth):
    a = AnsatzSpec(n, depth)
    rng = np.random.default_rng(n * 10 + depth)
    for _ in range(5):
        theta = rng.uniform(-np.pi, np.pi, a.n_params)
        np.testing.assert_allclose(simulate(a, theta).amplitudes, dense_state(a, theta), atol=1e-12)


def test_length_mismatch():
    with pytest.raises(ValueError):
        simulate(AnsatzSpec(2, 1), np.zeros(3))


@given(st.integers(1, 4), st.integers(0, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_unit_norm(n, depth, seed):
    a = AnsatzSpec(n, depth)
    theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, a.n_params)
    assert abs(simulate(a, theta).norm() - 1) < 1e-12


class TestBornDistribution:
    def test_uniform(self):
        d = born_distribution(StateVector(np.full(4, 0.5, dtype=complex)))
        np.testing.assert_allclose(d.probs, 0.25)

    def test_basis_state(self):
        d = born_distribution(StateVector(np.array([0, 1, 0, 0], dtype=complex)))
        assert d.probs[1] == 1.0

    def test_random_sums_to_one(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        d = born_distribution(StateVector(v / np.linalg.norm(v)))
        assert abs(d.probs.sum() - 1) < 1e-12


class TestShift:
    def test_plus(self):
        np.testing.assert_array_equal(shifted_parameters([0.0, 0.0], 0, +1), [np.pi / 4, 0.0])

    def test_minus(self):
        np.testing.assert_array_equal(shifted_parameters([1.0, 1.0], 1, -1), [1.0, 1.0 - np.pi / 4])

    def test_involution(self):
        theta = np.array([0.3, -1.2, 2.0])
        np.testing.assert_allclose(shifted_parameters(shifted_parameters(theta, 2, 1), 2, -1), theta, atol=1e-15)

    def test_bad_index(self):
        with pytest.raises(IndexError):
            shifted_parameters([0.0], 1, 1)

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            shifted_parameters([0.0], 0, 2)

    def test_batch_rows(self):
        a = AnsatzSpec(2, 1)
        theta = np.random.default_rng(0).normal(size=a.n_params)
        plus, minus = shifted_probs(a, theta)
        for i in (0, 5):
            np.testing.assert_allclose(plus[i], born_probs(a, shifted_parameters(theta, i, 1)), atol=1e-14)
            np.testing.assert_allclose(minus[i], born_probs(a, shifted_parameters(theta, i, -1)), atol=1e-14)


@pytest.mark.parametrize("n,depth", [(1, 0), (2, 1), (3, 2), (4, 3)])
def test_shift_rule_matches_finite_differences(n, depth):
    a = AnsatzSpec(n, depth)
    rng = np.random.default_rng(100 + n)
    theta = rng.uniform(-np.pi, np.pi, a.n_params)
    h = 1e-5
    for i in range(a.n_params):
        e = np.zeros(a.n_params)
        e[i] = h
        fd = (born_probs(a, theta + e) - born_probs(a, theta - e)) / (2 * h)
        np.testing.assert_allclose(probability_gradient(a, theta, i), fd, atol=1e-6)


def test_gradient_sums_to_zero():
    a = AnsatzSpec(3, 2)
    theta = np.random.default_rng(4).normal(size=a.n_params)
    for i in range(a.n_params):
        assert abs(probability_gradient(a, theta, i).sum()) < 1e-12


def test_plus_state_is_rx_invariant():
    # H|0> is an Rx eigenstate, so the single-qubit circuit never leaves 50/50
    a = AnsatzSpec(1, 0)
    for t in np.linspace(-np.pi, np.pi, 7):
        np.testing.assert_allclose(probability_gradient(a, np.array([0.0, t]), 1), 0.0, atol=1e-12)


def test_rz_then_rx_moves_probability():
    a = AnsatzSpec(1, 0)
    theta = np.array([np.pi / 4, np.pi / 4])
    p = born_probs(a, theta)
    assert abs(p[0] - 0.5) > 0.1
    np.testing.assert_allclose(p, np.abs(dense_state(a, theta)) ** 2, atol=1e-14)


def test_shift_constant():
    assert SHIFT == pytest.approx(np.pi / 4)


def test_sample_circuit_seeded():
    a = AnsatzSpec(3, 1)
    theta = np.random.default_rng(6).normal(size=a.n_params)
    np.testing.assert_array_equal(sample_circuit(a, theta, 100, 3), sample_circuit(a, theta, 100, 3))
