"""Transverse-field Ising chain as a Pauli sum and as a bond-dimension-3 MPO.

Open chain, ``H = -J * (sum_i Z_i Z_{i+1} - g * sum_i X_i)``. The transverse
term enters with coefficient ``+J*g``. The ground energy does not depend on
the sign of ``g`` but the eigenvectors do.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import PAULI_MATRICES, ZERO_TOL, string_matrix, validate_string
from .tensor import ContractionError, contract, hermitian_eigenvalues, permute

MAX_SITES = 12

_I = PAULI_MATRICES["I"]
_X = PAULI_MATRICES["X"]
_Z = PAULI_MATRICES["Z"]


@dataclass(frozen=True)
class TfimParams:
    n_sites: int
    J: float = 1.0
    g: float = 1.0

    def __post_init__(self):
        if not 2 <= self.n_sites <= MAX_SITES:
            raise ValueError(f"n_sites must be in [2, {MAX_SITES}], got {self.n_sites}")
        if self.J == 0:
            raise ValueError("J must be nonzero")


@dataclass
class PauliSum:
    """Real-coefficient Hamiltonian; keys are length-``n`` Pauli words."""

    n: int
    terms: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for word in self.terms:
            validate_string(word, self.n)
        self.terms = {w: float(c) for w, c in self.terms.items() if abs(c) >= ZERO_TOL}


@dataclass
class MpoHamiltonian:
    """``tensors[0]`` has shape (3, 2, 2) with legs (right bond, out, in);
    bulk tensors (3, 3, 2, 2) are (left bond, right bond, out, in); the last
    tensor (3, 2, 2) is (left bond, out, in). ``J`` multiplies the contracted
    chain."""

    tensors: list[np.ndarray]
    J: float
    bond_dim: int = 3

    @property
    def n_sites(self) -> int:
        return len(self.tensors)


def _word(n: int, ops: dict[int, str]) -> str:
    return "".join(ops.get(i, "I") for i in range(n))


def build_tfim_pauli_sum(p: TfimParams) -> PauliSum:
    n = p.n_sites
    terms: dict[str, float] = {}
    for i in range(n - 1):
        terms[_word(n, {i: "Z", i + 1: "Z"})] = -p.J
    for i in range(n):
        terms[_word(n, {i: "X"})] = p.J * p.g
    return PauliSum(n, terms)


def build_tfim_mpo(p: TfimParams) -> MpoHamiltonian:
    """Rows of the operator-valued matrices follow ``(I, -Z, gX)``.

    The closing column is ``(gX, Z, I)^T`` so the product telescopes to the
    Hamiltonian; the column ``(I, -Z, gX)^T`` does not.
    """
    g = p.g
    first = np.stack([_I, -_Z, g * _X])
    bulk = np.zeros((3, 3, 2, 2), dtype=np.complex128)
    bulk[0, 0], bulk[0, 1], bulk[0, 2] = _I, -_Z, g * _X
    bulk[1, 2] = _Z
    bulk[2, 2] = _I
    last = np.stack([g * _X, _Z, _I])
    tensors = [first] + [bulk.copy() for _ in range(p.n_sites - 2)] + [last]
    return MpoHamiltonian(tensors, J=p.J)


def dense_from_pauli_sum(ps: PauliSum) -> np.ndarray:
    dim = 2**ps.n
    out = np.zeros((dim, dim), dtype=np.complex128)
    for word, c in ps.terms.items():
        out += c * string_matrix(word)
    return out


def dense_from_mpo(m: MpoHamiltonian) -> np.ndarray:
    """Contract the virtual bonds left to right and scale by ``J``."""
    ts = m.tensors
    if len(ts) < 2:
        raise ValueError("an MPO chain needs at least two tensors")
    # acc legs: (out_0, in_0, ..., out_k, in_k, bond)
    acc = np.moveaxis(ts[0], 0, -1)
    for k, w in enumerate(ts[1:], start=1):
        if acc.shape[-1] != w.shape[0]:
            raise ContractionError(
                f"bond mismatch between sites {k - 1} and {k}: {acc.shape[-1]} != {w.shape[0]}"
            )
        acc = contract(acc, w, [(acc.ndim - 1, 0)])
        if k < len(ts) - 1:
            acc = np.moveaxis(acc, acc.ndim - 3, -1)
    n = len(ts)
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    return m.J * permute(acc, order).reshape(2**n, 2**n)


def exact_ground_energy(h) -> float:
    return float(hermitian_eigenvalues(h)[0])
