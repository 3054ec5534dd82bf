"""Statevector simulation of the strongly-entangling-layers ansatz.

Qubit 0 is the most significant bit of a basis index, matching the Pauli
string convention in :mod:`tnvqe.pauli`. A layer applies
``Rot(a, b, c) = RZ(c) RY(b) RZ(a)`` to every qubit and then the CNOT ring
``CNOT(i, (i + r) mod n)`` for ``i = 0 .. n-1``. A single-qubit circuit has
no entanglers.

The batched functions take states of shape ``(batch, 2**n)`` so that all
parameter-shifted circuits of one gradient are simulated together.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .pauli import PauliDecomposition, reconstruct, string_action, validate_string

SHIFT = np.pi / 2


@dataclass(frozen=True)
class CircuitConfig:
    n_qubits: int
    entangler_ranges: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.entangler_ranges is not None:
            object.__setattr__(self, "entangler_ranges", tuple(int(r) for r in self.entangler_ranges))
            if self.n_qubits > 1 and any(not 1 <= r < self.n_qubits for r in self.entangler_ranges):
                raise ValueError(f"entangler ranges must lie in [1, {self.n_qubits - 1}]")

    def range_for(self, layer: int) -> int:
        if self.entangler_ranges is None:
            return 1
        return self.entangler_ranges[layer % len(self.entangler_ranges)]


def check_weights(w, cfg: CircuitConfig) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 3 or w.shape[1:] != (cfg.n_qubits, 3) or w.shape[0] < 1:
        raise ValueError(f"weights must have shape (L>=1, {cfg.n_qubits}, 3), got {w.shape}")
    return w


def rz(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = np.exp(-0.5j * t)
    out[..., 1, 1] = np.exp(0.5j * t)
    return out


def ry(t):
    t = np.asarray(t, dtype=float)
    c, s = np.cos(t / 2), np.sin(t / 2)
    out = np.empty(t.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0], out[..., 0, 1] = c, -s
    out[..., 1, 0], out[..., 1, 1] = s, c
    return out


def rot(a, b, c):
    """``RZ(c) @ RY(b) @ RZ(a)``; broadcasts over leading axes."""
    return rz(c) @ ry(b) @ rz(a)


def init_zero_state(n: int) -> np.ndarray:
    s = np.zeros(2**n, dtype=np.complex128)
    s[0] = 1.0
    return s


def _n_of(s: np.ndarray) -> int:
    n = s.shape[-1].bit_length() - 1
    if 2**n != s.shape[-1]:
        raise ValueError(f"state length {s.shape[-1]} is not a power of two")
    return n


def _apply_1q_batch(states: np.ndarray, qubit: int, mats: np.ndarray) -> np.ndarray:
    b = states.shape[0]
    n = _n_of(states)
    psi = states.reshape(b, 2**qubit, 2, 2 ** (n - qubit - 1))
    if mats.ndim == 2:
        out = np.einsum("ij,bajc->baic", mats, psi)
    else:
        out = np.einsum("bij,bajc->baic", mats, psi)
    return out.reshape(b, 2**n)


@lru_cache(maxsize=None)
def _cnot_source(n: int, control: int, target: int) -> np.ndarray:
    x = np.arange(2**n)
    cbit = (x >> (n - 1 - control)) & 1
    src = x ^ (cbit << (n - 1 - target))
    src.setflags(write=False)
    return src


@lru_cache(maxsize=None)
def _ring_source(n: int, r: int) -> np.ndarray:
    """Gather index for the whole CNOT ring of one layer."""
    src = np.arange(2**n)
    for i in range(n):
        # applying a gate after the current ones: new[x] = cur[g[x]] = orig[src[g[x]]]
        src = src[_cnot_source(n, i, (i + r) % n)]
    src.setflags(write=False)
    return src


def apply_rot(s, qubit: int, a: float, b: float, c: float) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    n = _n_of(s)
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    return _apply_1q_batch(s[None, :], qubit, rot(a, b, c))[0]


def apply_cnot(s, control: int, target: int) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    n = _n_of(s)
    if control == target:
        raise ValueError("control and target must differ")
    if not (0 <= control < n and 0 <= target < n):
        raise ValueError(f"qubit index out of range for {n} qubits")
    return s[_cnot_source(n, control, target)]


def run_ansatz_batch(weights, cfg: CircuitConfig) -> np.ndarray:
    """States for a batch of weight tensors of shape ``(B, L, n, 3)``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 4:
        raise ValueError("batched weights must have shape (B, L, n, 3)")
    check_weights(w[0], cfg)
    b, n_layers, n, _ = w.shape
    mats = rot(w[..., 0], w[..., 1], w[..., 2])  # (B, L, n, 2, 2)
    states = np.zeros((b, 2**n), dtype=np.complex128)
    states[:, 0] = 1.0
    for layer in range(n_layers):
        for q in range(n):
            states = _apply_1q_batch(states, q, mats[:, layer, q])
        if n > 1:
            states = states[:, _ring_source(n, cfg.range_for(layer))]
    return states


def run_ansatz(w, cfg: CircuitConfig) -> np.ndarray:
    w = check_weights(w, cfg)
    return run_ansatz_batch(w[None], cfg)[0]


def expectation(s, p: str) -> float:
    """``<s|P|s>`` for one Pauli string."""
    s = np.asarray(s, dtype=np.complex128)
    validate_string(p, _n_of(s))
    source, phase = string_action(p)
    return float(np.real(np.vdot(s, phase * s[source])))


def pauli_expectations(states: np.ndarray, words: Sequence[str]) -> np.ndarray:
    """``<P>`` for every state (rows) and string (columns)."""
    states = np.atleast_2d(states)
    sources = np.stack([string_action(w)[0] for w in words])
    phases = np.stack([string_action(w)[1] for w in words])
    applied = phases[None] * states[:, sources]  # (B, K, dim)
    return np.real(np.einsum("bx,bkx->bk", states.conj(), applied))


def energy_batch(states: np.ndarray, obs: PauliDecomposition) -> np.ndarray:
    """``sum_P c_P <P>`` for each state in the batch."""
    states = np.atleast_2d(states)
    if not obs.coeffs:
        return np.zeros(states.shape[0])
    words = list(obs.coeffs)
    coeffs = np.array([obs.coeffs[w] for w in words], dtype=np.complex128)
    return np.real(pauli_expectations(states, words) @ coeffs)


def shifted_weights(w: np.ndarray, shift: float = SHIFT) -> np.ndarray:
    """``(2K, L, n, 3)`` stack: ``+shift`` then ``-shift`` for each angle k."""
    k = w.size
    flat = np.broadcast_to(w.reshape(-1), (2 * k, k)).copy()
    idx = np.arange(k)
    flat[2 * idx, idx] += shift
    flat[2 * idx + 1, idx] -= shift
    return flat.reshape((2 * k,) + w.shape)


def param_shift_grad(w, cfg: CircuitConfig, observable) -> np.ndarray:
    """Exact gradient via ``(E(phi_k + pi/2) - E(phi_k - pi/2)) / 2``.

    ``observable`` is a :class:`PauliDecomposition` or its dense matrix
    ``sum_P c_P P``; all ``2 * w.size`` shifted circuits run as one batch.
    """
    w = check_weights(w, cfg)
    if isinstance(observable, PauliDecomposition):
        observable = reconstruct(observable)
    states = run_ansatz_batch(shifted_weights(w), cfg)
    energies = np.real(np.einsum("bi,ij,bj->b", states.conj(), observable, states))
    return ((energies[0::2] - energies[1::2]) / 2).reshape(w.shape)
