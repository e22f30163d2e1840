"""Dense statevector simulation of the layered QCBM ansatz.

Gate conventions::

    Rz(t) = exp(-i t Z) = diag(e^{-it}, e^{it})
    Rx(t) = exp(-i t X) = cos(t) I - i sin(t) X

Both generators have eigenvalues +-1, so shifting a single angle by +-pi/4
gives the exact derivative of every outcome probability:
``d q(x) / d t_i = q_{t_i + pi/4}(x) - q_{t_i - pi/4}(x)``.

Circuit layout for ``n`` qubits and depth ``D``: a Hadamard on every qubit,
then ``D`` blocks of (Rz, Rx on each qubit; CZ on pairs (0,1), (1,2), ...),
then one closing Rz, Rx layer. Parameter ``l * 2n + 2q`` is the Rz angle of
qubit ``q`` in rotation layer ``l``; ``l * 2n + 2q + 1`` is its Rx angle.
Qubit 0 is the most significant bit of an outcome index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import DiscreteDistribution, sample

SHIFT = np.pi / 4


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    depth: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")

    @property
    def n_params(self) -> int:
        return self.n_qubits * (2 * self.depth + 2)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def gates(self) -> list[tuple]:
        """Flat gate list: ``("h", q)``, ``("rz"|"rx", q, param_index)``, ``("cz", q, q+1)``."""
        n = self.n_qubits
        out: list[tuple] = [("h", q) for q in range(n)]
        for layer in range(self.depth + 1):
            for q in range(n):
                base = layer * 2 * n + 2 * q
                out.append(("rz", q, base))
                out.append(("rx", q, base + 1))
            if layer < self.depth:
                out.extend(("cz", q, q + 1) for q in range(n - 1))
        return out

    def check_params(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {theta.shape[-1]}")
        return theta


def build_ansatz(n_qubits: int, depth: int) -> AnsatzSpec:
    return AnsatzSpec(n_qubits, depth)


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(np.log2(self.amplitudes.size))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _cz_ladder_phase(n: int) -> np.ndarray:
    bits = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    parity = (bits[:, :-1] & bits[:, 1:]).sum(axis=1) if n > 1 else np.zeros(1, dtype=int)
    return np.where(parity % 2 == 1, -1.0, 1.0)


def _rotation_block(tz: np.ndarray, tx: np.ndarray) -> np.ndarray:
    """Batched matrices of Rx(tx) @ Rz(tz), shape ``(B, 2, 2)``."""
    ez = np.exp(-1j * tz)
    c, s = np.cos(tx), -1j * np.sin(tx)
    u = np.empty(tz.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c * ez
    u[..., 0, 1] = s * ez.conj()
    u[..., 1, 0] = s * ez
    u[..., 1, 1] = c * ez.conj()
    return u


def simulate_batch(ansatz: AnsatzSpec, thetas) -> np.ndarray:
    """Final amplitudes for a batch of parameter vectors, shape ``(B, 2**n)``."""
    thetas = ansatz.check_params(np.atleast_2d(thetas))
    n, batch = ansatz.n_qubits, thetas.shape[0]
    state = np.full((batch, 2**n), 2 ** (-n / 2), dtype=complex)  # H layer on |0...0>
    phase = _cz_ladder_phase(n)
    for layer in range(ansatz.depth + 1):
        base = layer * 2 * n
        u = _rotation_block(thetas[:, base:base + 2 * n:2], thetas[:, base + 1:base + 2 * n:2])
        for q in range(n):
            st = state.reshape(batch, 2**q, 2, -1)
            uq = u[:, q, :, :, None, None]
            s0, s1 = st[:, :, 0], st[:, :, 1]
            new = np.empty_like(st)
            new[:, :, 0] = uq[:, 0, 0] * s0 + uq[:, 0, 1] * s1
            new[:, :, 1] = uq[:, 1, 0] * s0 + uq[:, 1, 1] * s1
            state = new.reshape(batch, -1)
        if layer < ansatz.depth:
            state = state * phase
    return state


def born_probs_batch(ansatz: AnsatzSpec, thetas) -> np.ndarray:
    amps = simulate_batch(ansatz, thetas)
    probs = amps.real**2 + amps.imag**2
    return probs / probs.sum(axis=1, keepdims=True)


def simulate(ansatz: AnsatzSpec, theta) -> StateVector:
    theta = ansatz.check_params(theta)
    if theta.ndim != 1:
        raise ValueError("simulate takes a single parameter vector")
    return StateVector(simulate_batch(ansatz, theta)[0])


def born_distribution(state: StateVector) -> DiscreteDistribution:
    amps = np.asarray(state.amplitudes)
    probs = amps.real**2 + amps.imag**2
    return DiscreteDistribution(state.n_qubits, probs / probs.sum())


def born_probs(ansatz: AnsatzSpec, theta) -> np.ndarray:
    return born_probs_batch(ansatz, theta)[0]


def sample_circuit(ansatz: AnsatzSpec, theta, m: int, rng) -> np.ndarray:
    return sample(born_distribution(simulate(ansatz, theta)), m, rng)


def shifted_parameters(theta, i: int, sign: int) -> np.ndarray:
    theta = np.array(theta, dtype=float)
    if not 0 <= i < theta.size:
        raise IndexError(f"parameter index {i} out of range for {theta.size} parameters")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    theta[i] += sign * SHIFT
    return theta


def shifted_batch(theta) -> np.ndarray:
    """All ``2P`` shifted vectors: rows ``2i`` (+shift) and ``2i + 1`` (-shift)."""
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    out = np.repeat(theta[None, :], 2 * p, axis=0)
    idx = np.arange(p)
    out[2 * idx, idx] += SHIFT
    out[2 * idx + 1, idx] -= SHIFT
    return out


def shifted_probs(ansatz: AnsatzSpec, theta) -> tuple[np.ndarray, np.ndarray]:
    """Born tables at every ``theta_i^+`` and ``theta_i^-``, each shape ``(P, 2**n)``."""
    probs = born_probs_batch(ansatz, shifted_batch(ansatz.check_params(theta)))
    return probs[0::2], probs[1::2]


def probability_gradient(ansatz: AnsatzSpec, theta, i: int) -> np.ndarray:
    """Exact ``d q_theta(x) / d theta_i`` for every outcome ``x``."""
    theta = ansatz.check_params(theta)
    plus = shifted_parameters(theta, i, +1)
    minus = shifted_parameters(theta, i, -1)
    probs = born_probs_batch(ansatz, np.stack([plus, minus]))
    return probs[0] - probs[1]


def random_parameters(ansatz: AnsatzSpec, rng) -> np.ndarray:
    """I.i.d. uniform angles on ``[-pi, pi]``."""
    return np.random.default_rng(rng).uniform(-np.pi, np.pi, ansatz.n_params)
