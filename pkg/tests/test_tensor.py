import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_hermitian
from tnvqe.tensor import (
    ContractionError,
    NotHermitianError,
    conj_transpose,
    contract,
    hermitian_eigenvalues,
    jacobi_eigenvalues,
    permute,
    tensor_product,
    trace_axes,
)
from tnvqe.utn import RotationMode, UtnLayout, build_utn

I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]])
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0])

small = st.floats(-3, 3, allow_nan=False)


def test_tensor_product_identity():
    assert np.array_equal(tensor_product(I2, I2).transpose(0, 2, 1, 3).reshape(4, 4), np.eye(4))


def test_tensor_product_zz():
    zz = tensor_product(SZ, SZ).transpose(0, 2, 1, 3).reshape(4, 4)
    assert np.array_equal(zz, np.diag([1, -1, -1, 1]))


def test_tensor_product_scalar():
    t = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(tensor_product(np.array(2.5), t), 2.5 * t)
    assert tensor_product(SZ, np.ones((3, 1, 2))).shape == (2, 2, 3, 1, 2)


def test_contract_matrix_multiply():
    b = np.array([[1, 2], [3, 4]])
    c = np.array([[5, 6], [7, 8]])
    assert np.array_equal(contract(b, c, [(1, 0)]), [[19, 22], [43, 50]])


def test_contract_identity():
    m = np.array([[1, 2j], [3, 4]])
    assert np.array_equal(contract(I2, m, [(1, 0)]), m)


def test_contract_five_bricks_gives_rank8():
    # the brick tensors share six legs; contract_utn performs exactly that sum
    from tnvqe.utn import contract_utn

    layout = UtnLayout(4, 3)
    assert layout.brick_count == 5 and layout.internal_bonds == 6
    t = contract_utn(layout, RotationMode.ONE_PARAM, np.linspace(0, 1, 5))
    assert t.shape == (2,) * 8


def test_contract_extent_mismatch_names_pair():
    with pytest.raises(ContractionError, match=r"pair \(1, 0\)"):
        contract(np.ones((2, 3)), np.ones((2, 2)), [(1, 0)])


def test_contract_repeated_axis():
    with pytest.raises(ContractionError):
        contract(np.ones((2, 2)), np.ones((2, 2)), [(0, 0), (0, 1)])


def test_contract_matches_einsum(rng):
    a = rng.normal(size=(2, 3, 4)) + 1j * rng.normal(size=(2, 3, 4))
    b = rng.normal(size=(4, 5, 2))
    got = contract(a, b, [(2, 0), (0, 2)])
    assert np.allclose(got, np.einsum("ijk,kli->jl", a, b), atol=1e-13)


def test_trace_examples():
    assert trace_axes(I2, 0, 1) == 2
    assert trace_axes(SX, 0, 1) == 0
    assert trace_axes(np.kron(SZ, SZ), 0, 1) == 0


def test_trace_mismatch():
    with pytest.raises(ContractionError):
        trace_axes(np.ones((2, 3)), 0, 1)
    with pytest.raises(ContractionError):
        trace_axes(np.ones((2, 2)), 1, 1)


def test_permute_examples():
    m = np.arange(6).reshape(2, 3)
    assert np.array_equal(permute(m, [0, 1]), m)
    assert np.array_equal(permute(permute(m, [1, 0]), [1, 0]), m)
    assert np.array_equal(permute(m, [1, 0]), [[0, 3], [1, 4], [2, 5]])
    with pytest.raises(ValueError):
        permute(m, [0, 0])


def test_conj_transpose_examples(rng):
    assert np.array_equal(conj_transpose(SY), SY)
    assert np.array_equal(conj_transpose(1j * I2), -1j * I2)
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    assert np.array_equal(conj_transpose(conj_transpose(m)), m)


def test_eigenvalue_examples():
    assert np.allclose(hermitian_eigenvalues(SZ), [-1, 1], atol=1e-14)
    assert np.allclose(hermitian_eigenvalues(SX), [-1, 1], atol=1e-14)
    assert np.allclose(hermitian_eigenvalues(np.array([[2, 1], [1, 2]])), [1, 3], atol=1e-14)


def test_eigenvalues_reject_non_hermitian():
    with pytest.raises(NotHermitianError):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NotHermitianError):
        hermitian_eigenvalues(np.ones((2, 3)))


@pytest.mark.parametrize("dim", [1, 3, 8, 16, 33, 64])
def test_jacobi_matches_lapack(rng, dim):
    h = random_hermitian(rng, dim)
    ref = np.linalg.eigvalsh(h)
    got = jacobi_eigenvalues(h)
    assert np.max(np.abs(got - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))


def test_auto_mode_large_dim(rng):
    h = random_hermitian(rng, 128)
    ref = np.linalg.eigvalsh(h)
    assert np.max(np.abs(hermitian_eigenvalues(h) - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_jacobi_degenerate_spectrum():
    h = np.kron(SZ, I2) + np.kron(I2, SZ)
    assert np.allclose(jacobi_eigenvalues(h), [-2, 0, 0, 2], atol=1e-14)


@given(arrays(np.float64, (2, 3), elements=small), arrays(np.float64, (3, 2), elements=small), small)
def test_contract_bilinear(a, b, alpha):
    assert np.allclose(contract(alpha * a, b, [(1, 0)]), alpha * contract(a, b, [(1, 0)]), atol=1e-12)


@given(arrays(np.float64, (2, 3, 2), elements=small))
def test_identity_contraction_is_identity(a):
    out = contract(a, np.eye(3), [(1, 0)])  # free legs (0, 2, new)
    assert np.allclose(out.transpose(0, 2, 1), a)


@given(arrays(np.float64, (2, 3, 2, 3), elements=small), st.permutations(range(4)))
def test_trace_permutation_invariant(a, order):
    order = list(order)
    direct = trace_axes(a, 0, 2)
    p = permute(a, order)
    via = trace_axes(p, order.index(0), order.index(2))
    # the remaining axes keep their relative order in both results
    rest = [ax for ax in order if ax not in (0, 2)]
    if rest != sorted(rest):
        via = via.T
    assert np.allclose(direct, via)


@given(st.integers(0, 2**32 - 1))
def test_eigenvalues_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, 16)
    layout = UtnLayout(4, 3)
    v = build_utn(layout, RotationMode.THREE_PARAM, rng.uniform(0, 2 * np.pi, layout.n_params(RotationMode.THREE_PARAM)))
    assert np.max(np.abs(hermitian_eigenvalues(v.conj().T @ h @ v) - hermitian_eigenvalues(h))) < 1e-9


@given(small, small, small, small)
def test_two_by_two_closed_form(a, d, re, im):
    m = np.array([[a, re + 1j * im], [re - 1j * im, d]])
    mean, rad = (a + d) / 2, np.hypot((a - d) / 2, np.hypot(re, im))
    assert np.allclose(hermitian_eigenvalues(m), [mean - rad, mean + rad], atol=1e-12, rtol=0)
