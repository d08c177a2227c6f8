"""Scalar time profiles ``w(t)`` for modulated families ``A(t) = A0 + w(t) B``.

Besides point evaluation each profile integrates itself exactly over a
uniform grid of steps: for step ``[a, b]`` with centre ``c`` it returns

    m0 = int_a^b w(tau) dtau,      m1 = int_a^b (tau - c) w(tau) dtau.

These two moments are all the reference integrator needs, and computing
them in closed form is what lets it resolve profiles that are rough on
every time scale.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import UsageError


def _grid(s, h, n):
    j = np.arange(n)
    return s + (2 * j + 1) * (0.5 * h)


class TrigProfile:
    """``w(t) = sum_k amp_k cos(freq_k t + phase_k)``."""

    def __init__(self, amps, freqs, phases=None, alpha=None, holder_const=None, name="trig"):
        self.amps = np.ascontiguousarray(amps, dtype=np.float64)
        self.freqs = np.ascontiguousarray(freqs, dtype=np.float64)
        if phases is None:
            phases = np.zeros_like(self.amps)
        self.phases = np.ascontiguousarray(phases, dtype=np.float64)
        if not (self.amps.shape == self.freqs.shape == self.phases.shape) or self.amps.ndim != 1:
            raise UsageError("amps, freqs and phases must be 1-d arrays of equal length")
        if np.any(self.freqs < 0):
            raise UsageError("frequencies must be non-negative")
        self.name = name
        if alpha is None:
            # a finite cosine sum is Lipschitz
            alpha = 1.0
            holder_const = float(np.sum(np.abs(self.amps) * self.freqs))
        self.alpha = float(alpha)
        self.holder_const = float(holder_const)

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = _kernels.trig_eval(np.ascontiguousarray(ts), self.amps, self.freqs, self.phases)
        return float(out[0]) if scalar else out

    def moments_grid(self, s, h, n):
        return _kernels.trig_moments_grid(s, h, n, self.amps, self.freqs, self.phases)

    def sup_abs(self, lo=None, hi=None):
        return float(np.abs(self.amps).sum())

    def scaled(self, factor, name=None):
        return TrigProfile(
            self.amps * factor,
            self.freqs,
            self.phases,
            alpha=self.alpha,
            holder_const=abs(factor) * self.holder_const,
            name=name or f"{factor:g}*{self.name}",
        )


def weierstrass_terms(alpha):
    """Number of cosine terms kept: tail sum below ``1e-8``."""
    return int(math.ceil(28.0 / alpha))


def weierstrass_holder_const(alpha, terms=None):
    """Hölder constant of the lacunary series, valid at every scale.

    Splitting at the term whose frequency matches ``1/|dt|`` and bounding
    ``|cos a - cos b| <= min(2, |a - b|)`` gives

        2^(1-a) / (2^(1-a) - 1) + 2 / (1 - 2^-a)

    for ``a < 1``.  At ``a = 1`` the first sum does not converge, and the
    truncation length enters instead: ``terms + 4``.
    """
    if alpha >= 1.0:
        k = weierstrass_terms(1.0) if terms is None else terms
        return float(k + 4)
    g = 2.0 ** (1.0 - alpha)
    return g / (g - 1.0) + 2.0 / (1.0 - 2.0**-alpha)


def weierstrass(alpha, terms=None):
    """Truncated lacunary series ``sum_k 2^(-alpha k) cos(2^k t)``."""
    if not (0.0 < alpha <= 1.0):
        raise UsageError(f"alpha must lie in (0, 1], got {alpha}")
    k = weierstrass_terms(alpha) if terms is None else int(terms)
    idx = np.arange(k, dtype=np.float64)
    return TrigProfile(
        2.0 ** (-alpha * idx),
        2.0**idx,
        alpha=alpha,
        holder_const=weierstrass_holder_const(alpha, k),
        name=f"weierstrass(alpha={alpha:g})",
    )


@dataclass(frozen=True)
class LinearProfile:
    """``w(t) = t``."""

    name: str = "linear"
    alpha: float = 1.0
    holder_const: float = 1.0

    def __call__(self, t):
        return float(t) if np.ndim(t) == 0 else np.asarray(t, dtype=np.float64).copy()

    def moments_grid(self, s, h, n):
        c = _grid(s, h, n)
        return h * c, np.full(n, h**3 / 12.0)

    def sup_abs(self, lo, hi):
        return max(abs(lo), abs(hi))


@dataclass(frozen=True)
class AbsSineProfile:
    """``w(t) = |sin(freq t + phase)|``; Lipschitz with constant ``freq``.

    The kinks at ``freq t + phase = j pi`` make it exactly Lipschitz and no
    smoother.
    """

    freq: float
    phase: float = 0.0
    name: str = field(default="abs_sine")

    @property
    def alpha(self):
        return 1.0

    @property
    def holder_const(self):
        return float(self.freq)

    def __call__(self, t):
        out = np.abs(np.sin(self.freq * np.asarray(t, dtype=np.float64) + self.phase))
        return float(out) if np.ndim(t) == 0 else out

    def sup_abs(self, lo=None, hi=None):
        return 1.0

    def _piece(self, a, b, c, sign):
        # moments of sign*sin(freq tau + phase) on [a, b], m1 about c
        h = b - a
        mid = 0.5 * (a + b)
        x = 0.5 * self.freq * h
        theta = self.freq * mid + self.phase - 0.5 * np.pi
        m0 = sign * h * np.cos(theta) * _kernels._sinc0_np(x)
        m1 = sign * 0.5 * h * h * np.sin(theta) * _kernels._sinc1_np(x)
        return m0, m1 + (mid - c) * m0

    def moments_grid(self, s, h, n):
        j = np.arange(n)
        a = s + j * h
        b = s + (j + 1) * h
        c = _grid(s, h, n)
        ka = np.floor((self.freq * a + self.phase) / np.pi)
        kb = np.floor((self.freq * b + self.phase) / np.pi)
        sign = np.where(np.mod(ka, 2.0) == 0.0, 1.0, -1.0)
        m0, m1 = self._piece(a, b, c, sign)
        for i in np.nonzero(ka != kb)[0]:
            k_lo, k_hi = int(ka[i]), int(kb[i])
            edges = [a[i]] + [(k * np.pi - self.phase) / self.freq for k in range(k_lo + 1, k_hi + 1)] + [b[i]]
            t0 = t1 = 0.0
            for p, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
                if hi <= lo:
                    continue
                sg = 1.0 if (k_lo + p) % 2 == 0 else -1.0
                q0, q1 = self._piece(np.array([lo]), np.array([hi]), c[i], sg)
                t0 += float(q0[0])
                t1 += float(q1[0])
            m0[i], m1[i] = t0, t1
        return m0, m1
