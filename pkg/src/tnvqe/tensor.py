"""Dense complex tensor algebra and a Hermitian eigensolver.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128``. Entries
are laid out in row-major (C) order: the last axis varies fastest. Every other
module relies on this when it reshapes a rank-2k tensor into a matrix, so that
an operator with legs ``(out_0, ..., out_{k-1}, in_0, ..., in_{k-1})`` reshapes
to a ``2**k x 2**k`` matrix whose row index is the big-endian integer
``out_0 out_1 ... out_{k-1}``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
JACOBI_TOL = 1e-12
# Above this dimension the cyclic Jacobi solver is too slow in pure numpy.
JACOBI_MAX_DIM = 64


class ContractionError(ValueError):
    """Raised when paired axes cannot be contracted."""


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def as_tensor(data) -> np.ndarray:
    """Return ``data`` as a finite ``complex128`` array."""
    t = np.asarray(data, dtype=np.complex128)
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor entries must be finite")
    return t


def tensor_product(a, b) -> np.ndarray:
    """Outer product; the result shape is ``a.shape + b.shape``."""
    a, b = as_tensor(a), as_tensor(b)
    return np.multiply.outer(a, b)


def _normalize_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise ContractionError(f"axis {axis} out of range for rank {ndim}")
    return axis % ndim


def contract(a, b, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Sum over each ``(axis_of_a, axis_of_b)`` pair.

    The free axes of ``a`` come first, then the free axes of ``b``, each in
    their original order. An empty ``pairs`` list gives the tensor product.
    The work is done as one matrix multiply after moving the contracted axes
    of ``a`` to the end and those of ``b`` to the front.
    """
    a, b = as_tensor(a), as_tensor(b)
    axes_a = [_normalize_axis(i, a.ndim) for i, _ in pairs]
    axes_b = [_normalize_axis(j, b.ndim) for _, j in pairs]
    if len(set(axes_a)) != len(axes_a) or len(set(axes_b)) != len(axes_b):
        raise ContractionError(f"axis repeated in pairs {list(pairs)}")
    for (i, j), ia, jb in zip(pairs, axes_a, axes_b):
        if a.shape[ia] != b.shape[jb]:
            raise ContractionError(
                f"extent mismatch on pair ({i}, {j}): {a.shape[ia]} != {b.shape[jb]}"
            )

    free_a = [i for i in range(a.ndim) if i not in axes_a]
    free_b = [j for j in range(b.ndim) if j not in axes_b]
    shape_a = [a.shape[i] for i in free_a]
    shape_b = [b.shape[j] for j in free_b]
    k = int(np.prod([a.shape[i] for i in axes_a], dtype=np.int64))

    left = a.transpose(free_a + axes_a).reshape(-1, k)
    right = b.transpose(axes_b + free_b).reshape(k, -1)
    return (left @ right).reshape(shape_a + shape_b)


def trace_axes(a, axis1: int, axis2: int) -> np.ndarray:
    """Contract two axes of the same tensor (a partial trace)."""
    a = as_tensor(a)
    i, j = _normalize_axis(axis1, a.ndim), _normalize_axis(axis2, a.ndim)
    if i == j:
        raise ContractionError("trace needs two distinct axes")
    if a.shape[i] != a.shape[j]:
        raise ContractionError(
            f"extent mismatch on trace axes ({axis1}, {axis2}): {a.shape[i]} != {a.shape[j]}"
        )
    return np.trace(a, axis1=i, axis2=j)


def permute(a, order: Sequence[int]) -> np.ndarray:
    a = as_tensor(a)
    if sorted(order) != list(range(a.ndim)):
        raise ValueError(f"{list(order)} is not a permutation of {a.ndim} axes")
    return a.transpose(order).copy()


def conj_transpose(m) -> np.ndarray:
    m = as_tensor(m)
    if m.ndim != 2:
        raise ValueError("conj_transpose expects a rank-2 tensor")
    return m.conj().T.copy()


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a square Hermitian matrix and return it as complex128."""
    m = as_tensor(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {m.shape}")
    dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return m


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint (p, q) index pairs per round; every pair appears once per sweep.

    Classic circle-method tournament on ``n`` (padded to even) players.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            p, q = players[k], players[m - 1 - k]
            if p < n and q < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigenvalues(m, tol: float = JACOBI_TOL, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by the cyclic complex Jacobi method.

    Each round applies a layer of disjoint 2x2 rotations simultaneously
    (round-robin ordering), which is exactly equivalent to applying them one
    after another. Sweeps stop once the off-diagonal Frobenius norm drops
    below ``tol * max(1, ||m||_F)``.
    """
    a = check_hermitian(m).copy()
    n = a.shape[0]
    if n == 0:
        return np.zeros(0)
    scale = max(1.0, float(np.linalg.norm(a)))
    rounds = _round_robin(n)

    for _ in range(max_sweeps):
        # direct norm: |A|^2 - |diag|^2 cancels catastrophically for near-diagonal A
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < tol * scale:
            return np.sort(np.real(np.diag(a)))
        for p, q in rounds:
            if p.size == 0:
                continue
            apq = a[p, q]
            r = np.abs(apq)
            active = r > 1e-300
            if not np.any(active):
                continue
            phase = np.where(active, apq / np.where(active, r, 1.0), 1.0)
            app, aqq = np.real(a[p, p]), np.real(a[q, q])
            tau = np.where(active, (aqq - app) / (2.0 * np.where(active, r, 1.0)), 0.0)
            # hypot avoids overflow of tau**2 when |a_pq| is tiny
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
            g00, g01 = c, s
            g10, g11 = -s * np.conj(phase), c * np.conj(phase)

            col_p, col_q = a[:, p].copy(), a[:, q].copy()
            a[:, p] = col_p * g00 + col_q * g10
            a[:, q] = col_p * g01 + col_q * g11
            row_p, row_q = a[p, :].copy(), a[q, :].copy()
            a[p, :] = np.conj(g00)[:, None] * row_p + np.conj(g10)[:, None] * row_q
            a[q, :] = np.conj(g01)[:, None] * row_p + np.conj(g11)[:, None] * row_q
            a[p, q] = 0.0
            a[q, p] = 0.0
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def hermitian_eigenvalues(m, method: str = "auto") -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    dimension 64, LAPACK ``eigvalsh`` above).
    """
    m = check_hermitian(m)
    if method == "auto":
        method = "jacobi" if m.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        return jacobi_eigenvalues(m)
    if method == "lapack":
        return np.linalg.eigvalsh(m)
    raise ValueError(f"unknown eigensolver method {method!r}")
