"""Error curves, order fits, explicit bound checks and stability probes."""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels, integrators, linalg, operators
from .errors import NumericalFailure, UsageError

FLOOR = 1e-9
NORM_KINDS = ("operator", "vector")
_GL4_NODES, _GL4_WEIGHTS = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True, eq=False)
class ErrorCurve:
    """Sampled errors with a power-law fit over the unmasked samples.

    ``kind == "global"``: ``error ~ fitted_const * n^-fitted_order``.
    ``kind == "local"``: ``error ~ fitted_const * h^fitted_order``.
    ``fitted_order`` is ``None`` when fewer than three samples survive the
    floor mask.
    """

    ns: tuple
    hs: tuple
    errors: tuple
    masked: tuple
    norm_kind: str
    family_label: str
    scheme_kind: str
    kind: str = "global"
    fitted_order: Optional[float] = None
    fitted_const: Optional[float] = None
    oracle_n: Optional[int] = None

    @classmethod
    def from_samples(cls, ns, hs, errors, norm_kind="operator", family_label="synthetic", scheme_kind="midpoint",
                     kind="global", floor=FLOOR, oracle_n=None):
        errors = tuple(float(e) for e in errors)
        if not (len(ns) == len(hs) == len(errors)):
            raise UsageError("ns, hs and errors must have equal length")
        if any(not (e >= 0.0) for e in errors):
            raise UsageError("errors must be non-negative")
        masked = tuple(e < floor for e in errors)
        curve = cls(tuple(int(n) for n in ns), tuple(float(h) for h in hs), errors, masked,
                    norm_kind, family_label, scheme_kind, kind, oracle_n=oracle_n)
        if sum(not m for m in masked) < 3:
            return curve
        order, const = _fit(curve)
        return _replace(curve, fitted_order=order, fitted_const=const)

    @property
    def samples(self):
        return list(zip(self.ns, self.hs, self.errors))


def _replace(curve, **changes):
    values = {name: getattr(curve, name) for name in curve.__dataclass_fields__}
    values.update(changes)
    return ErrorCurve(**values)


def _fit(curve):
    keep = [i for i, m in enumerate(curve.masked) if not m]
    if len(keep) < 3:
        raise UsageError(f"order fit needs at least 3 unmasked samples, got {len(keep)}")
    err = np.log(np.array([curve.errors[i] for i in keep]))
    if curve.kind == "local":
        slope, icpt = np.polyfit(np.log([curve.hs[i] for i in keep]), err, 1)
        return float(slope), float(math.exp(icpt))
    slope, icpt = np.polyfit(np.log([curve.ns[i] for i in keep]), err, 1)
    return float(-slope), float(math.exp(icpt))


def estimate_order(curve):
    """Least-squares slope over unmasked samples (global: in ``n``, negated; local: in ``h``)."""
    return _fit(curve)[0]


def _check_ns(ns):
    ns = [int(n) for n in ns]
    if not ns:
        raise UsageError("ns must be non-empty")
    if ns[0] < 1 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise UsageError(f"ns must be strictly increasing and >= 1, got {ns}")
    return ns


def global_error_curve(f, s, t, ns, norm_kind="operator", x=None, scheme="midpoint",
                       target_error=integrators.DEFAULT_TARGET):
    """``||U(t, s) - W_n||`` (or ``||U x - W_n x||``) for each ``n`` in ``ns``."""
    ns = _check_ns(ns)
    if norm_kind not in NORM_KINDS:
        raise UsageError(f"norm_kind must be one of {NORM_KINDS}, got {norm_kind!r}")
    if (x is None) != (norm_kind == "operator"):
        raise UsageError("x is required exactly when norm_kind == 'vector'")
    if scheme not in ("midpoint", "magnus4"):
        raise UsageError(f"scheme must be 'midpoint' or 'magnus4', got {scheme!r}")
    s, t = float(s), float(t)
    errors = []
    if norm_kind == "operator":
        ref = integrators.reference_propagator(f, s, t, target_error)
        oracle_n = ref.oracle_n
        for n in ns:
            w = integrators.propagate(f, s, t, n, scheme).w
            errors.append(linalg.operator_norm(ref.w - w))
    else:
        x = linalg.as_vector(x, "x")
        ref, oracle_n = integrators.reference_action(f, s, t, x, target_error)
        for n in ns:
            y = integrators.propagate_action(f, s, t, n, x, scheme)
            errors.append(linalg.vector_norm(ref - y))
    hs = [(t - s) / n for n in ns]
    return ErrorCurve.from_samples(ns, hs, errors, norm_kind, f.label, scheme, "global", oracle_n=oracle_n)


def local_error_curve(f, s, hs, target_error=integrators.DEFAULT_TARGET):
    """One-step errors ``||U(s + h, s) - exp(h A(s + h/2))||``; slope fitted in ``h``."""
    hs = [float(h) for h in hs]
    if not hs or hs[-1] <= 0 or any(b >= a for a, b in zip(hs, hs[1:])):
        raise UsageError(f"hs must be positive and strictly decreasing, got {hs}")
    s = float(s)
    errors = []
    oracle_n = 0
    for h in hs:
        ref = integrators.reference_propagator(f, s, s + h, target_error)
        oracle_n = max(oracle_n, ref.oracle_n)
        errors.append(linalg.operator_norm(ref.w - integrators.midpoint_step(f, s, h)))
    return ErrorCurve.from_samples([1] * len(hs), hs, errors, "operator", f.label, "midpoint", "local",
                                   oracle_n=oracle_n)


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Outcome of checking ``error(n) <= K^3 L M (t-s)^(a+1) e^(w(t-s)) n^-a``."""

    passed: bool
    worst_ratio: Optional[float]
    bounds: tuple
    ratios: tuple
    k_const: float
    m_const: float
    omega: float
    holder_const: float
    alpha: float
    curve: ErrorCurve


def theorem_bound_check(f, s, t, ns, curve=None, target_error=integrators.DEFAULT_TARGET):
    """Check the explicit uniform error bound with ``K = M = 1``, ``w = sup ||A(t)||``.

    Masked samples sit at the oracle floor and count as satisfied.  Pass a
    precomputed operator-norm ``curve`` to avoid recomputing it.
    """
    if f.split is None or f.regularity is None:
        raise UsageError(f"family {f.label!r} needs a split and declared regularity for the bound check")
    s, t = float(s), float(t)
    if curve is None:
        curve = global_error_curve(f, s, t, ns, "operator", target_error=target_error)
    elif curve.norm_kind != "operator" or curve.kind != "global":
        raise UsageError("bound check needs a global operator-norm curve")
    alpha = f.regularity.alpha
    lconst = f.regularity.holder_const
    k_const = m_const = 1.0
    omega = f.generator_bound(s, t)
    width = t - s
    pre = k_const**3 * lconst * m_const * width ** (alpha + 1.0) * math.exp(omega * width)
    bounds, ratios = [], []
    for n, err, masked in zip(curve.ns, curve.errors, curve.masked):
        bound = pre * n**-alpha
        bounds.append(bound)
        if masked:
            ratios.append(None)
        else:
            ratios.append(err / bound if bound > 0 else math.inf)
    live = [r for r in ratios if r is not None]
    worst = max(live) if live else None
    return BoundReport(
        passed=all(r <= 1.0 for r in live),
        worst_ratio=worst,
        bounds=tuple(bounds),
        ratios=tuple(ratios),
        k_const=k_const,
        m_const=m_const,
        omega=omega,
        holder_const=lconst,
        alpha=alpha,
        curve=curve,
    )


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """``max_growth = max_k ||L_k ... L_0|| e^(-(k+1) w h)``."""

    max_growth: float
    omega_used: float
    n: int
    partial_norms: tuple = field(default=())
    discounted: tuple = field(default=())


def stability_probe(f, s, t, n, omega, scheme="midpoint"):
    """Norms of all partial step products, discounted by the growth allowance."""
    sch = integrators.StepScheme(scheme, float(s), float(t), n)
    if scheme == "exact":
        raise UsageError("stability probe needs a stepping scheme")
    omega = float(omega)
    if not math.isfinite(omega):
        raise UsageError("omega must be finite")
    h = sch.h
    gens = np.ascontiguousarray(integrators._GENERATORS[scheme](f, sch.s, h, 0, n), dtype=np.complex128)
    integrators._check_generators(gens, 0)
    steps = _kernels.expm_stack(gens)
    prod = np.eye(f.dim, dtype=np.complex128)
    norms, disc = [], []
    for k in range(n):
        prod = steps[k] @ prod
        if not np.isfinite(prod).all():
            raise NumericalFailure(f"partial product overflow at step {k}", stage="stability", step=k)
        nk = linalg.operator_norm(prod)
        norms.append(nk)
        disc.append(nk * math.exp(-(k + 1) * omega * h))
    return StabilityReport(max(disc), omega, n, tuple(norms), tuple(disc))


def voc_residual(f_base, b, s, t, quad_nodes, target_error=integrators.DEFAULT_TARGET):
    """Residual of ``U_B(t,s) = U(t,s) + int_s^t U_B(t,r) B(r) U(r,s) dr`` in operator norm.

    The integral uses ``quad_nodes`` panels of 4-point Gauss-Legendre; all
    evolution operators come from :func:`integrators.reference_propagator`.
    """
    if not isinstance(quad_nodes, (int, np.integer)) or quad_nodes < 2:
        raise UsageError(f"quad_nodes must be an integer >= 2, got {quad_nodes!r}")
    s, t = float(s), float(t)
    if not t > s:
        raise UsageError("need t > s")
    b0 = linalg.as_matrix(b(s), "b(s)")
    if b0.shape[0] != f_base.dim:
        raise UsageError(f"b has dim {b0.shape[0]}, family has dim {f_base.dim}")
    fb = operators.perturbed(f_base, b)

    def ref(fam, lo, hi):
        return integrators.reference_propagator(fam, lo, hi, target_error).w

    u_full = ref(f_base, s, t)
    ub_full = ref(fb, s, t)
    edges = np.linspace(s, t, quad_nodes + 1)
    integral = np.zeros((f_base.dim, f_base.dim), dtype=np.complex128)
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        for node, weight in zip(_GL4_NODES, _GL4_WEIGHTS):
            r = lo + half * (1.0 + node)
            term = ref(fb, r, t) @ linalg.as_matrix(b(r), "b(r)") @ ref(f_base, s, r)
            integral += (half * weight) * term
    return linalg.operator_norm(ub_full - u_full - integral)
