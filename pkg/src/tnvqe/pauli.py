"""Pauli strings, trace-based decomposition and reconstruction.

Qubit ordering: the leftmost character of a string acts on qubit 0, which is
the most significant bit of a basis-state index. ``"ZI"`` is therefore
``Z (x) I = diag(1, 1, -1, -1)``. The circuit simulator uses the same
convention.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .tensor import as_tensor
from .utn import similarity_transform

ZERO_TOL = 1e-12
PAULI_LABELS = "IXYZ"

PAULI_MATRICES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def validate_string(word: str, n: int | None = None) -> str:
    if not word or any(ch not in PAULI_LABELS for ch in word):
        raise ValueError(f"invalid Pauli string {word!r}")
    if n is not None and len(word) != n:
        raise ValueError(f"Pauli string {word!r} has length {len(word)}, expected {n}")
    return word


@lru_cache(maxsize=None)
def _words(n: int) -> tuple[str, ...]:
    return tuple("".join(p) for p in itertools.product(PAULI_LABELS, repeat=n))


@lru_cache(maxsize=None)
def _word_index(n: int) -> dict[str, int]:
    return {w: k for k, w in enumerate(_words(n))}


def enumerate_strings(n: int) -> list[str]:
    """All ``4**n`` strings in lexicographic order over ``I < X < Y < Z``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return list(_words(n))


def string_matrix(word: str) -> np.ndarray:
    validate_string(word)
    out = np.ones((1, 1), dtype=np.complex128)
    for ch in word:
        out = np.kron(out, PAULI_MATRICES[ch])
    return out


@lru_cache(maxsize=None)
def _string_stack(n: int) -> np.ndarray:
    stack = np.stack([string_matrix(w) for w in enumerate_strings(n)])
    stack.setflags(write=False)
    return stack


@lru_cache(maxsize=None)
def _flat_stack(n: int) -> np.ndarray:
    return _string_stack(n).reshape(4**n, 4**n)


@lru_cache(maxsize=None)
def string_action(word: str) -> tuple[np.ndarray, np.ndarray]:
    """``(source, phase)`` such that ``(P psi)[x] = phase[x] * psi[source[x]]``.

    Every Pauli string is a signed permutation matrix, so applying it to a
    state is a gather plus an elementwise phase.
    """
    n = len(validate_string(word))
    dim = 2**n
    x = np.arange(dim)
    source = x.copy()
    phase = np.ones(dim, dtype=np.complex128)
    for q, ch in enumerate(word):
        bit = (x >> (n - 1 - q)) & 1  # bit of the *output* index on qubit q
        if ch in "XY":
            source ^= 1 << (n - 1 - q)
        if ch == "Z":
            phase *= 1 - 2 * bit
        elif ch == "Y":
            # Y|0> = i|1>, Y|1> = -i|0>: output bit 1 picks up +i.
            phase *= np.where(bit == 1, 1j, -1j)
    source.setflags(write=False)
    phase.setflags(write=False)
    return source, phase


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


@dataclass
class PauliDecomposition:
    """Pauli coefficients ``c_P`` of an operator on ``n`` qubits."""

    n: int
    coeffs: dict[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        for word in self.coeffs:
            validate_string(word, self.n)

    def __len__(self) -> int:
        return len(self.coeffs)


def coefficient_vector(h, tol: float = ZERO_TOL) -> np.ndarray:
    """``Tr[P h] / 2**n`` for all strings in :func:`enumerate_strings` order.

    Entries with magnitude below ``tol`` are set to exactly zero.
    """
    h = as_tensor(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    n = num_qubits(h.shape[0])
    # Tr[P h] = sum_ij P_ij h_ji
    values = _flat_stack(n) @ h.T.reshape(-1) / 2**n
    values[np.abs(values) < tol] = 0.0
    return values


def decompose(h, tol: float = ZERO_TOL) -> PauliDecomposition:
    """Project ``h`` onto every Pauli string: ``c_P = Tr[P h] / 2**n``.

    All ``4**n`` strings are evaluated; those with ``|c_P| < tol`` are
    dropped.
    """
    values = coefficient_vector(h, tol)
    n = num_qubits(values.size) // 2
    words = _words(n)
    return PauliDecomposition(n, {words[k]: complex(values[k]) for k in np.flatnonzero(values)})


def to_vector(d: PauliDecomposition) -> np.ndarray:
    index = _word_index(d.n)
    out = np.zeros(4**d.n, dtype=np.complex128)
    for word, c in d.coeffs.items():
        out[index[word]] = c
    return out


def matrix_from_vector(values: np.ndarray) -> np.ndarray:
    """``sum_P c_P P`` for a full coefficient vector."""
    n = num_qubits(values.size) // 2
    return (values @ _flat_stack(n)).reshape(2**n, 2**n)


def reconstruct(d: PauliDecomposition) -> np.ndarray:
    """``sum_P c_P P``."""
    return matrix_from_vector(to_vector(d))


def transformed_coefficients(h, u, tol: float = ZERO_TOL) -> PauliDecomposition:
    """Pauli coefficients of ``u^dagger h u``."""
    return decompose(similarity_transform(h, u), tol=tol)


def is_real(d: PauliDecomposition, tol: float = 1e-10) -> bool:
    return all(abs(c.imag) <= tol for c in d.coeffs.values())


def frobenius_weight(d: PauliDecomposition) -> float:
    """``2**n * sum |c_P|**2``, which equals ``||H||_F**2``."""
    return 2**d.n * float(sum(abs(c) ** 2 for c in d.coeffs.values()))

