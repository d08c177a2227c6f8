"""Time the jitted kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Also times one end-to-end run (a Weierstrass reference propagator) in two
subprocesses, one with MAGNUS_MIDPOINT_NO_NUMBA=1.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from magnus_midpoint import _accel, _kernels
from magnus_midpoint.profiles import weierstrass

END_TO_END = """
import time
from magnus_midpoint import integrators, operators, _accel
f = operators.family_weierstrass(4, 0.5, 7)
integrators.reference_propagator(f, 0.0, 1.0)
t0 = time.perf_counter()
r = integrators.reference_propagator(f, 0.0, 1.0)
print(_accel.backend(), r.oracle_n, time.perf_counter() - t0)
"""


def _cases(rng):
    g = rng.standard_normal((4096, 4, 4)) + 1j * rng.standard_normal((4096, 4, 4))
    # skew-Hermitian steps keep the long product bounded
    g = np.ascontiguousarray(0.3 * (g - g.conj().transpose(0, 2, 1)))
    d = _kernels.expm1_stack_np(g)
    prof = weierstrass(0.5)
    m = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
    v = (rng.standard_normal(64) + 1j * rng.standard_normal(64)).astype(np.complex128)
    ts = np.linspace(0.0, 1.0, 4096)
    return {
        "expm1_stack 4096x4x4": (_kernels.expm1_stack_nb, _kernels.expm1_stack_np, (g,)),
        "expm_stack 4096x4x4": (_kernels.expm_stack_nb, _kernels.expm_stack_np, (g,)),
        "ordered_product 4096x4x4": (_kernels.ordered_product_nb, _kernels.ordered_product_np, (d,)),
        "trig_eval 4096 pts x 56 terms": (
            _kernels.trig_eval_nb, _kernels.trig_eval_np, (ts, prof.amps, prof.freqs, prof.phases)),
        "trig_moments_grid n=8192": (
            _kernels.trig_moments_grid_nb, _kernels.trig_moments_grid_np,
            (0.0, 1.0 / 8192, 8192, prof.amps, prof.freqs, prof.phases)),
        "power_norm 64x64": (_kernels.power_norm_nb, _kernels.power_norm_np, (m, v, 1e-10, 5000)),
        "taylor_action 64x64": (_kernels.taylor_action_nb, _kernels.taylor_action_np, (m, v, 8, 1e-16, 60)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        sys.exit("numba is unavailable or disabled; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<32}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for name, (nb, npf, a) in _cases(rng).items():
        nb(*a)  # compile
        t_nb = min(timeit.repeat(lambda: nb(*a), number=1, repeat=args.repeat))
        t_np = min(timeit.repeat(lambda: npf(*a), number=1, repeat=args.repeat))
        print(f"{name:<32}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>10.1f}")

    print("\nend to end: reference propagator, weierstrass alpha=0.5, dim 4")
    for flag in ("0", "1"):
        env = dict(os.environ, MAGNUS_MIDPOINT_NO_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        backend, n, secs = out.stdout.split()
        print(f"  {backend:<8} oracle_n={n:<8} {float(secs):.3f} s")


if __name__ == "__main__":
    main()
