"""Magnus steppers and propagators.

Products are time ordered with later steps on the left:
``W = L_{n-1} ... L_1 L_0``, i.e. the earliest step acts on the state first.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels, linalg
from .errors import NumericalFailure, UsageError

KINDS = ("midpoint", "magnus4", "exact")
STIFFNESS_LIMIT = 500.0
MAX_ORACLE_N = 2**20
DEFAULT_TARGET = 1e-11

_SQRT3_6 = math.sqrt(3.0) / 6.0
_SQRT3_12 = math.sqrt(3.0) / 12.0
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class StepScheme:
    kind: str
    s: float
    t: float
    n: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown scheme kind {self.kind!r}; expected one of {KINDS}")
        if not self.t > self.s:
            raise UsageError(f"need t > s, got s={self.s}, t={self.t}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise UsageError(f"n must be a positive integer, got {self.n!r}")

    @property
    def h(self):
        return (self.t - self.s) / self.n


@dataclass(frozen=True, eq=False)
class PropagatorResult:
    w: np.ndarray
    scheme: StepScheme
    family_label: str
    oracle_n: Optional[int] = None


def midpoint_nodes(s, h, start, stop):
    k = np.arange(start, stop)
    return s + (2 * k + 1) * (0.5 * h)


def midpoint_generators(f, s, h, start, stop):
    """``h A(s + (2k+1) h/2)`` for ``k`` in ``[start, stop)``."""
    return h * f.eval_many(midpoint_nodes(s, h, start, stop))


def magnus4_generators(f, s, h, start, stop):
    """Two-point Gauss fourth-order Magnus generators.

    ``Omega = h/2 (A1 + A2) + sqrt(3) h^2 / 12 [A2, A1]`` with
    ``A1, A2`` at ``t_k + (1/2 -+ sqrt(3)/6) h``.
    """
    k = np.arange(start, stop)
    a1 = f.eval_many(s + (k + (0.5 - _SQRT3_6)) * h)
    a2 = f.eval_many(s + (k + (0.5 + _SQRT3_6)) * h)
    return 0.5 * h * (a1 + a2) + (_SQRT3_12 * h * h) * (a2 @ a1 - a1 @ a2)


def moment_generators(f, s, h, start, stop):
    """Fourth-order Magnus generators from exact moments of a modulated family.

    For ``A = A0 + w(t) B`` the first two Magnus terms over a step are
    ``h A0 + m0 B`` and ``-m1 [A0, B]`` with ``m0 = int w`` and
    ``m1 = int (tau - c) w``; no quadrature is involved, so the scheme
    keeps its accuracy even where ``w`` oscillates faster than the step.
    """
    mod = f.modulation
    m0, m1 = mod.profile.moments_grid(s + start * h, h, stop - start)
    comm = mod.base @ mod.direction - mod.direction @ mod.base
    return h * mod.base[None] + m0[:, None, None] * mod.direction[None] - m1[:, None, None] * comm[None]


_GENERATORS = {
    "midpoint": midpoint_generators,
    "magnus4": magnus4_generators,
    "moments": moment_generators,
}


def _check_generators(gens, offset):
    n1 = np.abs(gens).sum(axis=1).max(axis=1)
    ninf = np.abs(gens).sum(axis=2).max(axis=1)
    bound = np.sqrt(n1 * ninf)
    bad = np.nonzero(~np.isfinite(bound))[0]
    if bad.size:
        k = offset + int(bad[0])
        raise NumericalFailure(f"non-finite generator at step {k}", stage="generator", step=k)
    stiff = np.nonzero(bound > STIFFNESS_LIMIT)[0]
    if stiff.size:
        k = offset + int(stiff[0])
        raise NumericalFailure(
            f"step {k}: ||h A|| bound {bound[stiff[0]]:.4g} exceeds {STIFFNESS_LIMIT:g}", stage="stiffness", step=k
        )


def _chunk(dim):
    return max(1, _CHUNK_ENTRIES // (dim * dim))


def _ordered_product(f, s, h, n, method):
    gen = _GENERATORS[method]
    chunk = _chunk(f.dim)
    partial = []
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        g = np.ascontiguousarray(gen(f, s, h, start, stop), dtype=np.complex128)
        _check_generators(g, start)
        d = _kernels.expm1_stack(g)
        bad = np.nonzero(~np.isfinite(d).reshape(d.shape[0], -1).all(axis=1))[0]
        if bad.size:
            k = start + int(bad[0])
            raise NumericalFailure(f"matrix exponential overflow at step {k}", stage="expm", step=k)
        partial.append(_kernels.ordered_product(d))
    total = partial[0] if len(partial) == 1 else _kernels.ordered_product(np.ascontiguousarray(partial))
    w = total + np.eye(f.dim)
    if not np.isfinite(w).all():
        raise NumericalFailure("product overflow", stage="product")
    return w


def midpoint_step(f, t_n, h):
    """``exp(h A(t_n + h/2))``."""
    if not h > 0:
        raise UsageError("h must be positive")
    return linalg.expm(h * f.eval(t_n + h / 2))


def magnus4_step(f, t_n, h):
    if not h > 0:
        raise UsageError("h must be positive")
    return linalg.expm(magnus4_generators(f, t_n, h, 0, 1)[0])


def propagate(f, s, t, n, kind="midpoint"):
    scheme = StepScheme(kind, float(s), float(t), n)
    if kind == "exact":
        if f.exact is None:
            raise UsageError(f"family {f.label!r} has no closed-form propagator")
        w = np.asarray(f.exact(scheme.s, scheme.t), dtype=np.complex128)
    else:
        w = _ordered_product(f, scheme.s, scheme.h, n, kind)
    return PropagatorResult(w=w, scheme=scheme, family_label=f.label)


def _oracle_method(f):
    return "moments" if f.modulation is not None else "magnus4"


def _check_target(target_error):
    if not 1e-12 <= target_error <= 1e-4:
        raise UsageError(f"target_error must lie in [1e-12, 1e-4], got {target_error}")


def reference_propagator(f, s, t, target_error=DEFAULT_TARGET, n_start=1, n_max=MAX_ORACLE_N):
    """Stand-in for the exact evolution operator ``U(t, s)``.

    Fourth-order Magnus, in exact-moment form when the family is modulated
    and two-point Gauss form otherwise, with ``n`` doubled until
    ``||W_2n - W_n|| <= target_error / 10``.  Returns ``W_2n``; the accepted
    step count is in ``oracle_n``.
    """
    _check_target(target_error)
    scheme = StepScheme("magnus4", float(s), float(t), 1)
    method = _oracle_method(f)
    n = max(1, int(n_start))
    width = scheme.t - scheme.s
    prev = None
    while n <= n_max:
        try:
            w = _ordered_product(f, scheme.s, width / n, n, method)
        except NumericalFailure as exc:
            if exc.stage != "stiffness":
                raise
            prev = None
            n *= 2
            continue
        if prev is not None and linalg.operator_norm(w - prev) <= target_error / 10.0:
            return PropagatorResult(
                w=w, scheme=StepScheme("magnus4", scheme.s, scheme.t, n), family_label=f.label, oracle_n=n
            )
        prev = w
        n *= 2
    raise NumericalFailure(
        f"reference propagator did not reach {target_error:g} within n={n_max}", stage="reference_propagator"
    )


def _apply_steps(f, s, h, n, x, method):
    gen = _GENERATORS[method]
    y = linalg.as_vector(x, "x")
    if y.shape[0] != f.dim:
        raise UsageError(f"x has dim {y.shape[0]}, family has dim {f.dim}")
    chunk = _chunk(f.dim)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        g = gen(f, s, h, start, stop)
        _check_generators(g, start)
        for i in range(stop - start):
            try:
                y = linalg.expm_action(g[i], y)
            except NumericalFailure as exc:
                raise NumericalFailure(str(exc), stage=exc.stage, step=start + i) from exc
    return y


def propagate_action(f, s, t, n, x, kind="midpoint"):
    """``W x`` applied step by step with :func:`linalg.expm_action`."""
    scheme = StepScheme(kind, float(s), float(t), n)
    if kind == "exact":
        return propagate(f, s, t, n, "exact").w @ linalg.as_vector(x, "x")
    return _apply_steps(f, scheme.s, scheme.h, n, x, kind)


def reference_action(f, s, t, x, target_error=DEFAULT_TARGET, n_start=1, n_max=MAX_ORACLE_N):
    """Vector analogue of :func:`reference_propagator` for large dims.

    Converges on ``||W_2n x - W_n x||`` instead of the operator norm, so it
    only has to resolve the modes that ``x`` actually excites.
    Returns ``(vector, accepted_n)``.
    """
    _check_target(target_error)
    StepScheme("magnus4", float(s), float(t), 1)
    method = _oracle_method(f)
    n = max(1, int(n_start))
    prev = None
    while n <= n_max:
        try:
            y = _apply_steps(f, float(s), (t - s) / n, n, x, method)
        except NumericalFailure as exc:
            if exc.stage != "stiffness":
                raise
            prev = None
            n *= 2
            continue
        if prev is not None and np.linalg.norm(y - prev) <= target_error / 10.0:
            return y, n
        prev = y
        n *= 2
    raise NumericalFailure(
        f"reference action did not reach {target_error:g} within n={n_max}", stage="reference_propagator"
    )
