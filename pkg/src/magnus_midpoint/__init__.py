"""Exponential midpoint (one-term Magnus) integrator for ``u' = A(t) u``.

Submodules: ``linalg`` (dense kernels), ``operators`` (test families),
``integrators`` (steppers and reference propagators), ``analysis``
(error curves, bound and stability checks) and ``cli``.
"""
__version__ = "0.1.0"

from ._accel import backend
from .errors import NumericalFailure, UsageError

__all__ = ["__version__", "backend", "NumericalFailure", "UsageError"]
