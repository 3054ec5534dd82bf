"""Parameterized unitary tensor network U(theta) built from two-site bricks.

Each brick is ``M = R (x) R`` for a single-qubit unitary ``R`` with one or
three angles; both factors share the same angles. Bricks are placed in a
brick wall: layers 1, 3, 5, ... cover pairs (0,1), (2,3), ...; layers 2, 4,
... cover (1,2), (3,4), .... Layer 1 acts first, so
``U = L_last ... L_2 L_1``. For four sites and three layers this is the
five-brick network with six internal bonds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .tensor import as_tensor, contract, permute

UNITARY_TOL = 1e-12
NETWORK_UNITARY_TOL = 1e-10


class NotUnitaryError(ValueError):
    pass


class RotationMode(str, enum.Enum):
    ONE_PARAM = "OneParam"
    THREE_PARAM = "ThreeParam"

    @property
    def params_per_tensor(self) -> int:
        return 1 if self is RotationMode.ONE_PARAM else 3


@dataclass(frozen=True)
class UtnLayout:
    n_sites: int
    n_layers: int
    bricks: tuple[tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_sites < 2 or self.n_sites % 2:
            raise ValueError(f"n_sites must be an even integer >= 2, got {self.n_sites}")
        if self.n_layers < 0:
            raise ValueError("n_layers must be >= 0")
        bricks = []
        for layer in range(1, self.n_layers + 1):
            start = 0 if layer % 2 == 1 else 1
            bricks.extend((layer, s) for s in range(start, self.n_sites - 1, 2))
        object.__setattr__(self, "bricks", tuple(bricks))

    @property
    def brick_count(self) -> int:
        return len(self.bricks)

    def n_params(self, mode: RotationMode) -> int:
        return self.brick_count * mode.params_per_tensor

    @property
    def internal_bonds(self) -> int:
        """Legs shared between two bricks (each a contraction)."""
        touched = set()
        bonds = 0
        for _, s in self.bricks:
            bonds += (s in touched) + (s + 1 in touched)
            touched.update((s, s + 1))
        return bonds


def rot_matrix_1(t: float) -> np.ndarray:
    """Phase-shift matrix ``diag(exp(-i t), exp(i t))``."""
    return np.array([[np.exp(-1j * t), 0], [0, np.exp(1j * t)]], dtype=np.complex128)


def rot_matrix_3(t1: float, t2: float, t3: float) -> np.ndarray:
    """Z-Y-Z rotation ``RZ(t1) RY(t2) RZ(t3)``."""
    c, s = np.cos(t2 / 2), np.sin(t2 / 2)
    return np.array(
        [
            [np.exp(-0.5j * (t1 + t3)) * c, -np.exp(-0.5j * (t1 - t3)) * s],
            [np.exp(0.5j * (t1 - t3)) * s, np.exp(0.5j * (t1 + t3)) * c],
        ],
        dtype=np.complex128,
    )


def _check_unitary(u: np.ndarray, tol: float) -> None:
    dev = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if dev > tol:
        raise NotUnitaryError(f"matrix is not unitary (max |U^dag U - I| = {dev:.3e})")


def local_unitary(r) -> np.ndarray:
    """Brick tensor ``R (x) R`` with legs ``(in_1, in_2, out_1, out_2)``.

    ``T[i1, i2, o1, o2] = R[o1, i1] * R[o2, i2]``; use :func:`brick_operator`
    for the 4x4 matrix acting on the pair.
    """
    r = as_tensor(r)
    if r.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {r.shape}")
    _check_unitary(r, UNITARY_TOL)
    return np.einsum("ac,bd->cdab", r, r)


def brick_operator(t: np.ndarray) -> np.ndarray:
    """4x4 operator (rows = outputs) of a ``(in_1, in_2, out_1, out_2)`` brick."""
    return t.reshape(4, 4).T


def _split_theta(layout: UtnLayout, mode: RotationMode, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    expected = layout.n_params(mode)
    if theta.size != expected:
        raise ValueError(
            f"theta has {theta.size} values, layout needs {expected} "
            f"({layout.brick_count} bricks x {mode.params_per_tensor})"
        )
    return theta.reshape(layout.brick_count, mode.params_per_tensor)


def brick_rotation(mode: RotationMode, angles) -> np.ndarray:
    if mode is RotationMode.ONE_PARAM:
        return rot_matrix_1(angles[0])
    return rot_matrix_3(*angles)


def _rotations(mode: RotationMode, angles: np.ndarray) -> np.ndarray:
    """:func:`brick_rotation` vectorized over the leading axes of ``angles``."""
    out = np.zeros(angles.shape[:-1] + (2, 2), dtype=np.complex128)
    if mode is RotationMode.ONE_PARAM:
        t = angles[..., 0]
        out[..., 0, 0] = np.exp(-1j * t)
        out[..., 1, 1] = np.exp(1j * t)
        return out
    t1, t2, t3 = angles[..., 0], angles[..., 1], angles[..., 2]
    c, s = np.cos(t2 / 2), np.sin(t2 / 2)
    out[..., 0, 0] = np.exp(-0.5j * (t1 + t3)) * c
    out[..., 0, 1] = -np.exp(-0.5j * (t1 - t3)) * s
    out[..., 1, 0] = np.exp(0.5j * (t1 - t3)) * s
    out[..., 1, 1] = np.exp(0.5j * (t1 + t3)) * c
    return out


def build_utn_batch(layout: UtnLayout, mode: RotationMode, thetas) -> np.ndarray:
    """U(theta) for every row of ``thetas``, shape ``(B, 2**n, 2**n)``.

    Each brick is applied to the running product on its site pair, which is
    the same as left-multiplying by ``I (x) (R (x) R) (x) I``.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != layout.n_params(mode):
        raise ValueError(
            f"thetas must have shape (B, {layout.n_params(mode)}) "
            f"({layout.brick_count} bricks x {mode.params_per_tensor}), got {thetas.shape}"
        )
    b = thetas.shape[0]
    rs = _rotations(mode, thetas.reshape(b, layout.brick_count, mode.params_per_tensor))
    dim = 2**layout.n_sites
    u = np.broadcast_to(np.eye(dim, dtype=np.complex128), (b, dim, dim)).copy()
    for k, (_, s) in enumerate(layout.bricks):
        r = rs[:, k]
        pair = (r[:, :, None, :, None] * r[:, None, :, None, :]).reshape(b, 1, 4, 4)  # R (x) R
        u = (pair @ u.reshape(b, 2**s, 4, -1)).reshape(b, dim, dim)
    return u


def build_utn(layout: UtnLayout, mode: RotationMode, theta) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of U(theta)."""
    theta = _split_theta(layout, mode, theta).reshape(1, -1)
    return build_utn_batch(layout, mode, theta)[0]


def contract_utn(layout: UtnLayout, mode: RotationMode, theta) -> np.ndarray:
    """U(theta) by contracting the brick tensors as a network.

    Returns the rank-``2n`` tensor with legs ``(out_0..out_{n-1},
    in_0..in_{n-1})``. Sites that no brick touches carry an identity.
    """
    angles = _split_theta(layout, mode, theta)
    n = layout.n_sites
    acc = None
    legs: list[tuple[str, int]] = []
    for (_, s), a in zip(layout.bricks, angles):
        t = local_unitary(brick_rotation(mode, a))
        t_legs = [("in", s), ("in", s + 1), ("out", s), ("out", s + 1)]
        if acc is None:
            acc, legs = t, t_legs
            continue
        pairs = [(legs.index(("out", site)), k) for k, site in enumerate((s, s + 1))
                 if ("out", site) in legs]
        acc = contract(acc, t, pairs)
        kept_a = [leg for i, leg in enumerate(legs) if i not in {p for p, _ in pairs}]
        kept_t = [leg for k, leg in enumerate(t_legs) if k not in {q for _, q in pairs}]
        legs = kept_a + kept_t
    for site in range(n):
        if ("out", site) not in legs:
            eye = np.eye(2, dtype=np.complex128)  # legs (out, in)
            acc = eye if acc is None else contract(acc, eye, [])
            legs = legs + [("out", site), ("in", site)]
    order = [legs.index(("out", i)) for i in range(n)] + [legs.index(("in", i)) for i in range(n)]
    return permute(acc, order)


def similarity_transform(h, u) -> np.ndarray:
    """``u^dagger h u``."""
    h, u = as_tensor(h), as_tensor(u)
    if h.shape != u.shape or h.ndim != 2:
        raise ValueError(f"dimension mismatch: h {h.shape}, u {u.shape}")
    _check_unitary(u, NETWORK_UNITARY_TOL)
    return u.conj().T @ h @ u


@dataclass(frozen=True)
class UnitarityReport:
    max_deviation: float
    normalized_trace: float
    tol: float = NETWORK_UNITARY_TOL

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tol and abs(self.normalized_trace - 1.0) < self.tol


def unitarity_report(u) -> UnitarityReport:
    """Checks the operator identity ``U^dag U = I`` and ``Re Tr(U^dag U) / dim``."""
    u = as_tensor(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    prod = u.conj().T @ u
    dev = float(np.max(np.abs(prod - np.eye(u.shape[0]))))
    return UnitarityReport(dev, float(np.real(np.trace(prod))) / u.shape[0])
