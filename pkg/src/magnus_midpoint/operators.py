"""Operator families ``t -> A(t) = A0 + V(t)`` and their regularity data."""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import UsageError
from .profiles import AbsSineProfile, LinearProfile, TrigProfile, weierstrass

MAX_MODES = 256
MAX_GRID = 512


def seeded_generator(seed):
    """PCG64 stream for ``seed``; children come from ``SeedSequence.spawn``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def _spawn(seed, count):
    return [np.random.Generator(np.random.PCG64(ss)) for ss in np.random.SeedSequence(int(seed)).spawn(count)]


def random_skew_hermitian(dim, rng):
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2 * dim)
    return g - g.conj().T


def random_hermitian_unit(dim, rng):
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2 * dim)
    b = g + g.conj().T
    return b / linalg.operator_norm(b)


@dataclass(frozen=True)
class Regularity:
    """Declared Hölder data ``||A(t) - A(s)|| <= holder_const |t - s|^alpha``.

    ``holder_window`` is the time interval on which the constant is claimed.
    It is unrelated to the growth constant of the semigroup bound.
    """

    alpha: float
    holder_const: float
    holder_window: tuple = (-math.inf, math.inf)


@dataclass(frozen=True)
class Split:
    a0: np.ndarray
    v: Callable


@dataclass(frozen=True)
class Modulation:
    """``A(t) = base + profile(t) * direction`` with an exactly integrable profile."""

    base: np.ndarray
    direction: np.ndarray
    profile: object


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    dim: int
    label: str
    eval_fn: Callable
    split: Optional[Split] = None
    regularity: Optional[Regularity] = None
    modulation: Optional[Modulation] = None
    exact: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def eval(self, t):
        a = self.eval_fn(float(t))
        return a

    def eval_many(self, ts):
        ts = np.asarray(ts, dtype=np.float64)
        if self.modulation is not None:
            mod = self.modulation
            w = np.atleast_1d(mod.profile(ts))
            return mod.base[None] + w[:, None, None] * mod.direction[None]
        out = np.empty((ts.shape[0], self.dim, self.dim), dtype=np.complex128)
        for i, t in enumerate(ts):
            out[i] = self.eval_fn(float(t))
        return out

    def generator_bound(self, lo, hi, samples=257):
        """Upper bound (or sampled maximum) of ``||A(t)||`` on ``[lo, hi]``."""
        if self.modulation is not None:
            mod = self.modulation
            return linalg.operator_norm(mod.base) + mod.profile.sup_abs(lo, hi) * linalg.operator_norm(mod.direction)
        return max(linalg.operator_norm(self.eval(t)) for t in np.linspace(lo, hi, samples))


def _modulated(base, direction, profile, label, regularity=None, exact=None, params=None):
    base = linalg.as_matrix(base, "base")
    direction = linalg.as_matrix(direction, "direction")
    if base.shape != direction.shape:
        raise UsageError("base and direction must have the same shape")
    base.setflags(write=False)
    direction.setflags(write=False)

    def eval_fn(t):
        return base + profile(t) * direction

    def v(t):
        return profile(t) * direction

    if regularity is None and getattr(profile, "holder_const", None) is not None:
        regularity = Regularity(profile.alpha, profile.holder_const * linalg.operator_norm(direction))
    return OperatorFamily(
        dim=base.shape[0],
        label=label,
        eval_fn=eval_fn,
        split=Split(base, v),
        regularity=regularity,
        modulation=Modulation(base, direction, profile),
        exact=exact,
        params=dict(params or {}),
    )


def family_modulated(base, direction, profile, label="modulated", regularity=None):
    """``A(t) = base + profile(t) * direction`` for any profile from :mod:`.profiles`."""
    return _modulated(base, direction, profile, label, regularity)


def family_constant(m, label="constant"):
    a = linalg.as_matrix(m, "m")
    zero = np.zeros_like(a)

    def exact(s, t):
        return linalg.expm((t - s) * a)

    fam = _modulated(a, zero, TrigProfile([0.0], [0.0]), label, Regularity(1.0, 0.0), exact=exact)
    return fam


def family_constant_seeded(dim, seed, label="constant"):
    """Constant seeded skew-Hermitian generator (autonomous case)."""
    (rng,) = _spawn(seed, 1)
    fam = family_constant(random_skew_hermitian(dim, rng), label=label)
    fam.params.update(dim=dim, seed=seed)
    return fam


def family_affine_phase():
    """Scalar ``A(t) = i (1 + t)``; ``U(t, s) = exp(i (t - s) + i (t^2 - s^2) / 2)``."""

    def exact(s, t):
        return np.array([[np.exp(1j * (t - s) + 0.5j * (t * t - s * s))]])

    return _modulated(
        np.array([[1j]]), np.array([[1j]]), LinearProfile(), "affine_phase", Regularity(1.0, 1.0), exact=exact
    )


def family_weierstrass(dim, alpha, seed):
    """``A0 + w_alpha(t) B`` with seeded skew-Hermitian ``A0`` and unit Hermitian ``B``.

    ``w_alpha`` is the truncated lacunary cosine series, alpha-Hölder at
    every scale, so the time regularity of the family is exactly alpha.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise UsageError(f"dim must be a positive integer, got {dim!r}")
    if not (0.0 < alpha <= 1.0):
        raise UsageError(f"alpha must lie in (0, 1], got {alpha}")
    rng_a, rng_b = _spawn(seed, 2)
    a0 = random_skew_hermitian(dim, rng_a)
    b = random_hermitian_unit(dim, rng_b)
    profile = weierstrass(alpha)
    return _modulated(a0, b, profile, "weierstrass", params=dict(dim=dim, alpha=alpha, seed=seed))


def family_abs_sine(dim, seed, freq=5.0):
    """Lipschitz (alpha = 1) family ``A0 + |sin(freq t)| B`` with kinks."""
    rng_a, rng_b = _spawn(seed, 2)
    a0 = random_skew_hermitian(dim, rng_a)
    b = random_hermitian_unit(dim, rng_b)
    return _modulated(a0, b, AbsSineProfile(freq), "abs_sine", params=dict(dim=dim, seed=seed, freq=freq))


def family_smooth(dim, seed, freq=3.0, phase=0.4):
    """Smooth non-commuting family ``A0 + cos(freq t + phase) B``."""
    rng_a, rng_b = _spawn(seed, 2)
    a0 = random_skew_hermitian(dim, rng_a)
    b = random_hermitian_unit(dim, rng_b)
    profile = TrigProfile([1.0], [freq], [phase], name="cos")
    return _modulated(a0, b, profile, "smooth", params=dict(dim=dim, seed=seed, freq=freq, phase=phase))


def family_ramp(b, label="ramp"):
    """``A(t) = t B``."""
    b = linalg.as_matrix(b, "b")
    return _modulated(np.zeros_like(b), b, LinearProfile(), label)


def family_from_callable(dim, eval_fn, label="custom", regularity=None):
    def checked(t):
        a = linalg.as_matrix(eval_fn(t), "A(t)")
        if a.shape[0] != dim:
            raise UsageError(f"A({t}) has dim {a.shape[0]}, expected {dim}")
        return a

    return OperatorFamily(dim=dim, label=label, eval_fn=checked, regularity=regularity)


def perturbed(f, b, label=None):
    """Family ``t -> f.eval(t) + b(t)``."""

    def eval_fn(t):
        return f.eval(t) + linalg.as_matrix(b(t), "b(t)")

    return OperatorFamily(dim=f.dim, label=label or f"{f.label}+B", eval_fn=eval_fn)


# ---------------------------------------------------------------------------
# Spatially discretized families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparableField:
    """``f(x, t) = offset(x) + profile(t) * shape(x)``."""

    profile: object
    shape: Callable
    offset: Optional[Callable] = None

    def __call__(self, x, t):
        base = 0.0 if self.offset is None else self.offset(x)
        return base + self.profile(t) * self.shape(x)


def fourier_modes(n_modes):
    return np.fft.fftfreq(n_modes, d=1.0 / n_modes)


def _dft(n_modes):
    x = 2.0 * np.pi * np.arange(n_modes) / n_modes
    k = fourier_modes(n_modes)
    return np.exp(-1j * np.outer(k, x)) / math.sqrt(n_modes), x


def family_schrodinger_1d(n_modes, potential, alpha_decl=None, holder_const=None):
    """Periodic Schrödinger generator ``(i/2) Lap - i b(., t)`` in Fourier coordinates.

    Modes are in numpy FFT order, ``k = 0, 1, ..., n/2 - 1, -n/2, ..., -1``.
    The potential acts as ``F diag(b(x_j, t)) F^H`` with the unitary DFT
    ``F`` on the grid ``x_j = 2 pi j / n``, so ``A(t)`` is skew-Hermitian
    whenever ``b`` is real.
    """
    if not isinstance(n_modes, (int, np.integer)) or n_modes < 4 or n_modes % 2:
        raise UsageError(f"n_modes must be an even integer >= 4, got {n_modes!r}")
    if n_modes > MAX_MODES:
        raise UsageError(f"n_modes is capped at {MAX_MODES}, got {n_modes}")
    f, x = _dft(n_modes)
    fh = f.conj().T
    k = fourier_modes(n_modes)
    free = np.diag(-0.5j * k * k).astype(np.complex128)

    def mult(values):
        return (f * np.asarray(values, dtype=np.float64)) @ fh

    params = dict(n_modes=n_modes)
    if isinstance(potential, SeparableField):
        base = free.copy()
        if potential.offset is not None:
            base = base - 1j * mult(potential.offset(x))
        direction = -1j * mult(potential.shape(x))
        reg = None
        if alpha_decl is not None:
            const = holder_const
            if const is None:
                const = potential.profile.holder_const * float(np.abs(potential.shape(x)).max())
            reg = Regularity(alpha_decl, const)
        return _modulated(base, direction, potential.profile, "schrodinger_1d", reg, params=params)

    def eval_fn(t):
        values = np.asarray(potential(x, t), dtype=np.float64) * np.ones_like(x)
        return free - 1j * mult(values)

    def v(t):
        return eval_fn(t) - free

    reg = None
    if alpha_decl is not None and holder_const is not None:
        reg = Regularity(alpha_decl, holder_const)
    return OperatorFamily(
        dim=n_modes,
        label="schrodinger_1d",
        eval_fn=eval_fn,
        split=Split(free, v),
        regularity=reg,
        params=params,
    )


def _difference_matrix(n):
    # (D+ u)_j = u_{j+1} - u_j, periodic
    d = -np.eye(n)
    d[np.arange(n), (np.arange(n) + 1) % n] = 1.0
    return d


def family_divergence_form_1d(n_grid, coeff, alpha_decl=None, c_min=0.5, holder_const=None):
    """``i d/dx a(x, t) d/dx`` by periodic second-order finite differences.

    ``A(t) = (i / dx^2) D- diag(a(x_{j+1/2}, t)) D+``.  Since ``D- = -D+^T``
    the bracket is real symmetric and ``A(t)`` skew-Hermitian.  The
    coefficient is checked against ``c_min`` whenever it is evaluated.
    """
    if not isinstance(n_grid, (int, np.integer)) or n_grid < 8:
        raise UsageError(f"n_grid must be an integer >= 8, got {n_grid!r}")
    if n_grid > MAX_GRID:
        raise UsageError(f"n_grid is capped at {MAX_GRID}, got {n_grid}")
    if not c_min > 0:
        raise UsageError("c_min must be positive")
    dx = 2.0 * np.pi / n_grid
    xh = (np.arange(n_grid) + 0.5) * dx
    dplus = _difference_matrix(n_grid)
    dminus = -dplus.T

    def assemble(a_half):
        return (1j / dx**2) * (dminus * a_half) @ dplus

    def coefficient(t):
        a_half = np.asarray(coeff(xh, t), dtype=np.float64) * np.ones_like(xh)
        low = float(a_half.min())
        if not low >= c_min:
            raise UsageError(f"coefficient drops to {low:.6g} < c_min={c_min:g} at t={t:.17g}")
        return a_half

    for t in np.linspace(0.0, 2.0 * np.pi, 65):
        coefficient(t)

    params = dict(n_grid=n_grid, c_min=c_min)
    if isinstance(coeff, SeparableField):
        offset = coeff.offset(xh) if coeff.offset is not None else np.zeros_like(xh)
        base = assemble(offset)
        direction = assemble(coeff.shape(xh))
        reg = None
        if alpha_decl is not None:
            const = holder_const
            if const is None:
                const = coeff.profile.holder_const * linalg.operator_norm(direction)
            reg = Regularity(alpha_decl, const)
        fam = _modulated(base, direction, coeff.profile, "divergence_form_1d", reg, params=params)
        inner = fam.eval_fn

        def eval_fn(t):
            coefficient(t)
            return inner(t)

        return OperatorFamily(
            dim=fam.dim,
            label=fam.label,
            eval_fn=eval_fn,
            split=fam.split,
            regularity=fam.regularity,
            modulation=fam.modulation,
            params=params,
        )

    a_ref = assemble(np.ones_like(xh))

    def eval_fn(t):
        return assemble(coefficient(t))

    reg = None
    if alpha_decl is not None and holder_const is not None:
        reg = Regularity(alpha_decl, holder_const)
    return OperatorFamily(
        dim=n_grid,
        label="divergence_form_1d",
        eval_fn=eval_fn,
        split=Split(a_ref, lambda t: eval_fn(t) - a_ref),
        regularity=reg,
        params=params,
    )


# ---------------------------------------------------------------------------
# Hölder constant estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderEstimate:
    alpha_fit: float
    const_fit: float
    sample_count: int
    interval: tuple
    deltas: tuple = ()
    moduli: tuple = ()


HOLDER_LEVELS = 16
_FLOOR = 1e-10


def holder_estimate(f, t_lo, t_hi, n_pairs):
    """Fit ``r(delta) ~ const * delta^alpha`` from dyadic differences.

    ``r(delta)`` is the largest ``||A(t + delta) - A(t)||`` over evenly
    spread base points.  The ``n_pairs`` budget is split evenly across
    ``HOLDER_LEVELS`` dyadic values ``delta = (t_hi - t_lo) 2^-j``.  Levels
    with ``r <= 1e-10`` sit at the rounding floor and are left out of the fit.
    """
    if not t_lo < t_hi:
        raise UsageError("need t_lo < t_hi")
    if n_pairs < 16:
        raise UsageError("n_pairs must be at least 16")
    width = t_hi - t_lo
    per_level = max(1, n_pairs // HOLDER_LEVELS)
    deltas, moduli = [], []
    count = 0
    for j in range(1, HOLDER_LEVELS + 1):
        delta = width * 2.0**-j
        base = t_lo + (width - delta) * (np.arange(per_level) + 0.5) / per_level
        a = f.eval_many(base)
        b = f.eval_many(base + delta)
        r = max(linalg.operator_norm(b[i] - a[i]) for i in range(per_level))
        count += per_level
        deltas.append(delta)
        moduli.append(r)
    deltas = np.array(deltas)
    moduli = np.array(moduli)
    if moduli.max() < 1e-13:
        return HolderEstimate(1.0, 0.0, count, (t_lo, t_hi), tuple(deltas), tuple(moduli))
    use = moduli > _FLOOR
    if use.sum() < 2:
        raise UsageError("fewer than two dyadic levels above the rounding floor")
    slope, _ = np.polyfit(np.log(deltas[use]), np.log(moduli[use]), 1)
    alpha_fit = float(min(slope, 1.05))
    if alpha_fit <= 0:
        alpha_fit = 1e-6
    const_fit = float(np.max(moduli[use] / deltas[use] ** alpha_fit))
    return HolderEstimate(alpha_fit, const_fit, count, (t_lo, t_hi), tuple(deltas), tuple(moduli))
