"""Dense complex linear algebra on square ``complex128`` arrays.

Matrices and vectors are plain numpy arrays; the functions here validate
them, never mutate their inputs, and return fresh arrays.
"""
import math

import numpy as np

from . import _kernels
from .errors import NumericalFailure, UsageError

NORM_TOL = 1e-10
NORM_MAXIT = 5000
NORM_RESTARTS = 3
_NORM_SEED = 0x5EED

# substep bound for the Taylor action: each substep applies exp(M/s) with
# ||M/s||_1 <= this, keeping the largest series term O(e)
_ACTION_SUBSTEP_NORM = 2.0
_ACTION_TOL = 1e-16
_ACTION_MAX_TERMS = 60


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite square complex128 array or raise UsageError."""
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise UsageError(f"{name} must be a non-empty square 2-d array, got shape {a.shape}")
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if not np.isfinite(a).all():
        raise UsageError(f"{name} has non-finite entries")
    return a


def as_vector(x, name="vector"):
    v = np.asarray(x)
    if v.ndim != 1 or v.shape[0] < 1:
        raise UsageError(f"{name} must be a non-empty 1-d array, got shape {v.shape}")
    v = np.ascontiguousarray(v, dtype=np.complex128)
    if not np.isfinite(v).all():
        raise UsageError(f"{name} has non-finite entries")
    return v


def _same_dim(a, b, what):
    if a.shape != b.shape:
        raise UsageError(f"{what}: dimension mismatch {a.shape} vs {b.shape}")


def mat_mul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _same_dim(a, b, "mat_mul")
    return a @ b


def mat_vec(a, x):
    a = as_matrix(a, "a")
    x = as_vector(x, "x")
    if a.shape[0] != x.shape[0]:
        raise UsageError(f"mat_vec: dimension mismatch {a.shape} vs {x.shape}")
    return a @ x


def commutator(u, v):
    """``[u, v] = uv - vu``."""
    u = as_matrix(u, "u")
    v = as_matrix(v, "v")
    _same_dim(u, v, "commutator")
    return u @ v - v @ u


def expm_minus_identity(m):
    """``exp(m) - I``, computed without forming ``exp(m)`` first.

    Scaling and squaring around a degree-13 Padé approximant; see
    :mod:`magnus_midpoint._kernels` for why the identity is kept apart.
    """
    a = as_matrix(m, "m")
    d = _kernels.expm1_stack(a[None])[0]
    if not np.isfinite(d).all():
        raise NumericalFailure("matrix exponential overflowed during squaring", stage="expm")
    return d


def expm(m):
    """Matrix exponential ``e^m`` (scaling and squaring, Padé degree 13)."""
    a = as_matrix(m, "m")
    r = _kernels.expm_stack(a[None])[0]
    if not np.isfinite(r).all():
        raise NumericalFailure("matrix exponential overflowed during squaring", stage="expm")
    return r


def expm_action(m, x):
    """``e^m x`` via scaled truncated Taylor series applied to the vector.

    No matrix function is formed; the cost is a sequence of matrix-vector
    products, which is what keeps dims in the thousands tractable.
    """
    a = as_matrix(m, "m")
    v = as_vector(x, "x")
    if a.shape[0] != v.shape[0]:
        raise UsageError(f"expm_action: dimension mismatch {a.shape} vs {v.shape}")
    norm1 = float(np.abs(a).sum(axis=0).max())
    if not np.any(v):
        return v.copy()
    substeps = max(1, int(math.ceil(norm1 / _ACTION_SUBSTEP_NORM)))
    y = _kernels.taylor_action(a, v, substeps, _ACTION_TOL, _ACTION_MAX_TERMS)
    if not np.isfinite(y).all():
        raise NumericalFailure("Taylor action produced non-finite values", stage="expm_action")
    return y


def operator_norm(m, seed=_NORM_SEED):
    """Spectral norm (largest singular value) by power iteration on ``m^H m``.

    Iterates until the Rayleigh quotient changes by less than ``1e-10``
    relative, at most 5000 times per start, with up to three fresh random
    starts if a start stalls.
    """
    a = as_matrix(m, "m")
    if not np.any(a):
        return 0.0
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    best = 0.0
    for _ in range(1 + NORM_RESTARTS):
        v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        value, converged = _kernels.power_norm(a, v0.astype(np.complex128), NORM_TOL, NORM_MAXIT)
        best = max(best, value)
        if converged:
            return max(best, value)
    raise NumericalFailure(
        f"power iteration did not converge after {NORM_RESTARTS} restarts (best {best:.6g})",
        stage="operator_norm",
    )


def vector_norm(x):
    return float(np.linalg.norm(as_vector(x, "x")))


def is_skew_hermitian(m, tol=1e-12):
    a = as_matrix(m)
    return float(np.abs(a + a.conj().T).max()) <= tol
