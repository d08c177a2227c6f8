"""Hot numeric kernels.

Every kernel exists twice: a ``*_nb`` version written as explicit loops for
``numba.njit`` and a ``*_np`` version that vectorizes over the leading
(step) axis with plain numpy.  The unsuffixed public names are bound to one
of the two at import time, see :mod:`magnus_midpoint._accel`.

Step factors are carried as ``D = exp(X) - I`` rather than ``exp(X)``.  For
the small step generators of fine grids ``exp(X)`` is ``I`` plus a tiny
correction, and rounding ``I + D`` to working precision every step leaves a
bias that grows linearly with the number of steps.  Products are formed
pairwise in the same representation: ``(I + L)(I + E) = I + (L + E + L E)``.
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

# Pade(13) numerator coefficients and the 1-norm bound under which the
# unscaled approximant meets double precision backward error.
PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
THETA13 = 5.371920351148152


# ---------------------------------------------------------------------------
# exp(X) - I for a stack of generators
# ---------------------------------------------------------------------------


# Once ||exp(X/2^j) - I||_1 exceeds this the squaring phase continues on
# exp(X/2^j) itself, which keeps relative accuracy when exp(X) is small.
_SWITCH = 0.5


@njit(cache=True)
def _pade_one_nb(a, out, minus_identity):
    n = a.shape[0]
    norm = 0.0
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += abs(a[i, j])
        if col > norm:
            norm = col
    s = 0
    if norm > THETA13:
        s = int(math.ceil(math.log2(norm / THETA13)))
    x = np.empty((n, n), dtype=np.complex128)
    x[:, :] = a
    x *= 0.5**s
    b = PADE13
    ident = np.eye(n, dtype=np.complex128)
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident
    u = x @ u
    v = x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident
    if not minus_identity:
        r = np.ascontiguousarray(np.linalg.solve(v - u, v + u))
        for _ in range(s):
            r = r @ r
        out[:, :] = r
        return
    d = np.ascontiguousarray(np.linalg.solve(v - u, 2.0 * u))
    plain = False
    for _ in range(s):
        if not plain and np.abs(d).sum(axis=0).max() > _SWITCH:
            d = d + ident
            plain = True
        if plain:
            d = d @ d
        else:
            d = 2.0 * d + d @ d
    if plain:
        d = d - ident
    out[:, :] = d


@njit(cache=True)
def _scalar_expm1(z):
    # e^(x+iy) - 1 = expm1(x) cos y - 2 sin^2(y/2) + i e^x sin y, no cancellation
    x, y = z.real, z.imag
    half = math.sin(0.5 * y)
    return complex(math.expm1(x) * math.cos(y) - 2.0 * half * half, math.exp(x) * math.sin(y))


@njit(cache=True)
def expm1_stack_nb(gens):
    out = np.empty_like(gens)
    if gens.shape[1] == 1:
        for k in range(gens.shape[0]):
            out[k, 0, 0] = _scalar_expm1(gens[k, 0, 0])
        return out
    for k in range(gens.shape[0]):
        _pade_one_nb(gens[k], out[k], True)
    return out


@njit(cache=True)
def expm_stack_nb(gens):
    out = np.empty_like(gens)
    if gens.shape[1] == 1:
        for k in range(gens.shape[0]):
            out[k, 0, 0] = np.exp(gens[k, 0, 0])
        return out
    for k in range(gens.shape[0]):
        _pade_one_nb(gens[k], out[k], False)
    return out


def _scalar_stack_np(gens, minus_identity):
    z = gens[:, 0, 0]
    if not minus_identity:
        return np.exp(z)[:, None, None]
    half = np.sin(0.5 * z.imag)
    d = np.expm1(z.real) * np.cos(z.imag) - 2.0 * half * half + 1j * (np.exp(z.real) * np.sin(z.imag))
    return d[:, None, None]


def _pade_stack_np(gens, minus_identity):
    gens = np.ascontiguousarray(gens, dtype=np.complex128)
    m, n, _ = gens.shape
    if n == 1:
        return _scalar_stack_np(gens, minus_identity)
    norms = np.abs(gens).sum(axis=1).max(axis=1)
    s = np.zeros(m, dtype=np.int64)
    big = norms > THETA13
    s[big] = np.ceil(np.log2(norms[big] / THETA13)).astype(np.int64)
    x = gens * np.ldexp(1.0, -s)[:, None, None]
    b = PADE13
    eye = np.eye(n, dtype=np.complex128)
    ident = np.broadcast_to(eye, x.shape)
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident
    u = x @ u
    v = x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident
    if not minus_identity:
        r = np.linalg.solve(v - u, v + u)
        for level in range(int(s.max(initial=0))):
            idx = s > level
            r[idx] = r[idx] @ r[idx]
        return r
    d = np.linalg.solve(v - u, 2.0 * u)
    plain = np.zeros(m, dtype=bool)
    for level in range(int(s.max(initial=0))):
        active = s > level
        flip = active & ~plain & (np.abs(d).sum(axis=1).max(axis=1) > _SWITCH)
        d[flip] += eye
        plain |= flip
        sq = active & plain
        d[sq] = d[sq] @ d[sq]
        dd_idx = active & ~plain
        dd = d[dd_idx]
        d[dd_idx] = 2.0 * dd + dd @ dd
    d[plain] -= eye
    return d


def expm1_stack_np(gens):
    return _pade_stack_np(gens, True)


def expm_stack_np(gens):
    return _pade_stack_np(gens, False)


# ---------------------------------------------------------------------------
# Pairwise time-ordered product of I + D_k (later factors on the left)
# ---------------------------------------------------------------------------


@njit(cache=True)
def ordered_product_nb(facs):
    work = facs.copy()
    m = work.shape[0]
    while m > 1:
        half = m // 2
        for i in range(half):
            later = work[2 * i + 1]
            earlier = work[2 * i]
            work[i] = later + earlier + later @ earlier
        if m % 2 == 1:
            work[half] = work[m - 1]
            m = half + 1
        else:
            m = half
    return work[0].copy()


def ordered_product_np(facs):
    work = np.asarray(facs, dtype=np.complex128)
    while work.shape[0] > 1:
        m = work.shape[0]
        even = m - (m % 2)
        later = work[1:even:2]
        earlier = work[0:even:2]
        merged = later + earlier + later @ earlier
        if m % 2 == 1:
            merged = np.concatenate([merged, work[m - 1 :]], axis=0)
        work = merged
    return work[0].copy()


# ---------------------------------------------------------------------------
# Trigonometric time profiles: sum_k amp_k cos(freq_k t + phase_k)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _sinc0(x):
    # sin(x)/x
    if abs(x) < 0.5:
        x2 = x * x
        term = 1.0
        acc = 1.0
        for k in range(1, 9):
            term *= -x2 / ((2 * k) * (2 * k + 1))
            acc += term
        return acc
    return math.sin(x) / x


@njit(cache=True)
def _sinc1(x):
    # (x cos x - sin x) / x**2
    if abs(x) < 0.5:
        x2 = x * x
        term = -x
        acc = 0.0
        fact = 1.0
        for k in range(1, 10):
            fact *= (2 * k) * (2 * k + 1)
            acc += 2 * k * term / fact
            term *= -x2
        return acc
    return (x * math.cos(x) - math.sin(x)) / (x * x)


@njit(cache=True)
def trig_eval_nb(ts, amps, freqs, phases):
    out = np.zeros(ts.shape[0])
    for i in range(ts.shape[0]):
        acc = 0.0
        for k in range(amps.shape[0]):
            acc += amps[k] * math.cos(freqs[k] * ts[i] + phases[k])
        out[i] = acc
    return out


def trig_eval_np(ts, amps, freqs, phases):
    ts = np.asarray(ts, dtype=np.float64)
    out = np.empty(ts.shape[0])
    chunk = max(1, (1 << 22) // max(1, amps.shape[0]))
    for i in range(0, ts.shape[0], chunk):
        tt = ts[i : i + chunk, None]
        out[i : i + chunk] = (amps * np.cos(freqs * tt + phases)).sum(axis=1)
    return out


def _active_terms(amps, freqs, h):
    # Terms whose integral over any step is below 1e-18 of the step's
    # largest possible integral cannot move the result in double precision.
    total = np.abs(amps).sum()
    bound = np.where(freqs > 0, 2.0 * np.abs(amps) / np.maximum(freqs, 1e-300), np.abs(amps) * h)
    return bound >= 1e-18 * h * max(total, 1e-300)


@njit(cache=True)
def _trig_moments_grid_nb(s, h, n, amps, freqs, phases, m0, m1):
    nterms = amps.shape[0]
    s0 = np.empty(nterms)
    s1 = np.empty(nterms)
    for k in range(nterms):
        x = 0.5 * freqs[k] * h
        s0[k] = _sinc0(x)
        s1[k] = _sinc1(x)
    for j in range(n):
        c = s + (2 * j + 1) * (0.5 * h)
        acc0 = 0.0
        acc1 = 0.0
        for k in range(nterms):
            theta = freqs[k] * c + phases[k]
            acc0 += amps[k] * math.cos(theta) * s0[k]
            acc1 += amps[k] * math.sin(theta) * s1[k]
        m0[j] = h * acc0
        m1[j] = 0.5 * h * h * acc1


def trig_moments_grid_nb(s, h, n, amps, freqs, phases):
    keep = _active_terms(amps, freqs, h)
    m0 = np.empty(n)
    m1 = np.empty(n)
    _trig_moments_grid_nb(
        float(s),
        float(h),
        int(n),
        np.ascontiguousarray(amps[keep]),
        np.ascontiguousarray(freqs[keep]),
        np.ascontiguousarray(phases[keep]),
        m0,
        m1,
    )
    return m0, m1


def _sinc0_np(x):
    small = np.abs(x) < 0.5
    xs = np.where(small, x, 0.0)
    x2 = xs * xs
    term = np.ones_like(xs)
    ser = np.ones_like(xs)
    for k in range(1, 9):
        term = term * (-x2) / ((2 * k) * (2 * k + 1))
        ser = ser + term
    xl = np.where(small, 1.0, x)
    return np.where(small, ser, np.sin(xl) / xl)


def _sinc1_np(x):
    small = np.abs(x) < 0.5
    xs = np.where(small, x, 0.0)
    x2 = xs * xs
    ser = np.zeros_like(xs)
    term = -xs
    fact = 1.0
    for k in range(1, 10):
        fact *= (2 * k) * (2 * k + 1)
        ser = ser + 2 * k * term / fact
        term = term * (-x2)
    xl = np.where(small, 1.0, x)
    return np.where(small, ser, (xl * np.cos(xl) - np.sin(xl)) / (xl * xl))


def trig_moments_grid_np(s, h, n, amps, freqs, phases):
    keep = _active_terms(amps, freqs, h)
    amps, freqs, phases = amps[keep], freqs[keep], phases[keep]
    x = 0.5 * freqs * h
    a0 = amps * _sinc0_np(x)
    a1 = amps * _sinc1_np(x)
    m0 = np.empty(n)
    m1 = np.empty(n)
    chunk = max(1, (1 << 22) // max(1, amps.shape[0]))
    for i in range(0, n, chunk):
        j = np.arange(i, min(n, i + chunk))
        c = s + (2 * j + 1) * (0.5 * h)
        theta = freqs * c[:, None] + phases
        m0[i : i + chunk] = h * (a0 * np.cos(theta)).sum(axis=1)
        m1[i : i + chunk] = 0.5 * h * h * (a1 * np.sin(theta)).sum(axis=1)
    return m0, m1


# ---------------------------------------------------------------------------
# Spectral norm by power iteration on M^H M
# ---------------------------------------------------------------------------


@njit(cache=True)
def power_norm_nb(m, v, tol, maxit):
    mh = np.ascontiguousarray(m.conj().T)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0, False
    v = v / nv
    rq_old = -1.0
    rq = 0.0
    for _ in range(maxit):
        w = m @ v
        rq = np.vdot(w, w).real
        z = mh @ w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0, True
        v = z / nz
        if abs(rq - rq_old) <= tol * rq:
            return math.sqrt(rq), True
        rq_old = rq
    return math.sqrt(rq), False


def power_norm_np(m, v, tol, maxit):
    mh = m.conj().T
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0, False
    v = v / nv
    rq_old = -1.0
    rq = 0.0
    for _ in range(maxit):
        w = m @ v
        rq = float(np.vdot(w, w).real)
        z = mh @ w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0, True
        v = z / nz
        if abs(rq - rq_old) <= tol * rq:
            return math.sqrt(rq), True
        rq_old = rq
    return math.sqrt(rq), False


# ---------------------------------------------------------------------------
# exp(M) x by scaled truncated Taylor series, no squaring
# ---------------------------------------------------------------------------


def _taylor_action(m, x, substeps, tol, max_terms):
    y = x.copy()
    scale = 1.0 / substeps
    for _ in range(substeps):
        acc = y.copy()
        term = y.copy()
        for k in range(1, max_terms + 1):
            term = (m @ term) * (scale / k)
            acc = acc + term
            if np.linalg.norm(term) <= tol * np.linalg.norm(acc):
                break
        y = acc
    return y


taylor_action_nb = njit(cache=True)(_taylor_action)
taylor_action_np = _taylor_action


if HAVE_NUMBA:
    expm1_stack = expm1_stack_nb
    expm_stack = expm_stack_nb
    ordered_product = ordered_product_nb
    trig_eval = trig_eval_nb
    trig_moments_grid = trig_moments_grid_nb
    power_norm = power_norm_nb
    taylor_action = taylor_action_nb
else:
    expm1_stack = expm1_stack_np
    expm_stack = expm_stack_np
    ordered_product = ordered_product_np
    trig_eval = trig_eval_np
    trig_moments_grid = trig_moments_grid_np
    power_norm = power_norm_np
    taylor_action = taylor_action_np
