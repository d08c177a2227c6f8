import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from magnus_midpoint import linalg
from magnus_midpoint.errors import UsageError


def rand_matrix(dim, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))


@pytest.mark.parametrize("scale", [1e-6, 0.1, 1.0, 10.0, 100.0])
@pytest.mark.parametrize("dim", [1, 3, 8])
def test_expm_matches_scipy(dim, scale):
    m = rand_matrix(dim, dim, scale / dim)
    ref = scipy.linalg.expm(m)
    assert np.linalg.norm(linalg.expm(m) - ref) <= 1e-12 * max(1.0, np.linalg.norm(ref))


def test_expm_minus_identity_keeps_relative_accuracy():
    m = rand_matrix(4, 1, 1e-9)
    d = linalg.expm_minus_identity(m)
    # series oracle: e^m - I = m + m^2/2 + m^3/6
    ref = m + m @ m / 2 + m @ m @ m / 6
    assert np.linalg.norm(d - ref) <= 1e-15 * np.linalg.norm(ref)


def test_expm_minus_identity_decaying():
    m = -30.0 * np.eye(3) + rand_matrix(3, 2, 0.5)
    ref = scipy.linalg.expm(m) - np.eye(3)
    assert np.linalg.norm(linalg.expm_minus_identity(m) - ref) <= 1e-13


def test_expm_zero_and_inputs_untouched():
    z = np.zeros((3, 3), complex)
    assert np.abs(linalg.expm(z) - np.eye(3)).max() <= 1e-15
    m = rand_matrix(3, 4)
    keep = m.copy()
    linalg.expm(m)
    linalg.expm_action(m, np.ones(3))
    assert np.array_equal(m, keep)


@given(st.integers(1, 6), st.integers(0, 2**31 - 1), st.floats(0.01, 50.0))
@settings(max_examples=40, deadline=None)
def test_expm_of_skew_hermitian_is_unitary(dim, seed, scale):
    g = rand_matrix(dim, seed)
    a = scale * (g - g.conj().T) / np.linalg.norm(g - g.conj().T + 1e-300)
    u = linalg.expm(a)
    assert np.linalg.norm(u.conj().T @ u - np.eye(dim)) <= 1e-12 * max(1.0, scale)


@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_expm_inverse(dim, seed):
    m = rand_matrix(dim, seed, 0.7)
    assert np.linalg.norm(linalg.expm(m) @ linalg.expm(-m) - np.eye(dim)) <= 1e-11


@pytest.mark.parametrize("scale", [0.01, 1.0, 40.0])
def test_expm_action_matches_dense(scale):
    m = rand_matrix(32, 5, scale / 32)
    g = m - m.conj().T
    x = rand_matrix(32, 6)[0]
    ref = scipy.linalg.expm(g) @ x
    assert np.linalg.norm(linalg.expm_action(g, x) - ref) <= 1e-12 * np.linalg.norm(ref) * max(1, scale)


def test_expm_action_zero_vector():
    assert not np.any(linalg.expm_action(rand_matrix(4, 1), np.zeros(4)))


@pytest.mark.parametrize("seed", range(5))
def test_operator_norm_matches_svd(seed):
    m = rand_matrix(6, seed)
    assert linalg.operator_norm(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-9)


def test_operator_norm_degenerate_cases():
    assert linalg.operator_norm(np.zeros((3, 3))) == 0.0
    assert linalg.operator_norm(np.eye(5)) == pytest.approx(1.0, abs=1e-14)
    # repeated top singular value
    assert linalg.operator_norm(np.diag([2.0, -2.0, 1.0])) == pytest.approx(2.0, rel=1e-10)


def test_commutator():
    a, b = rand_matrix(3, 1), rand_matrix(3, 2)
    assert np.allclose(linalg.commutator(a, b), a @ b - b @ a)
    assert np.allclose(linalg.commutator(a, a), 0)


@pytest.mark.parametrize(
    "bad",
    [np.zeros((2, 3)), np.zeros(3), np.array([[np.nan]]), np.zeros((0, 0))],
)
def test_validation(bad):
    with pytest.raises(UsageError):
        linalg.expm(bad)


def test_dimension_mismatch():
    with pytest.raises(UsageError):
        linalg.mat_mul(np.eye(2), np.eye(3))
    with pytest.raises(UsageError):
        linalg.mat_vec(np.eye(2), np.ones(3))
    with pytest.raises(UsageError):
        linalg.expm_action(np.eye(2), np.ones(3))


def test_is_skew_hermitian():
    g = rand_matrix(4, 3)
    assert linalg.is_skew_hermitian(g - g.conj().T)
    assert not linalg.is_skew_hermitian(g)
