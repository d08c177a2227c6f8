"""The jitted kernels and their numpy fallbacks must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from magnus_midpoint import _accel, _kernels
from magnus_midpoint.profiles import weierstrass

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba disabled or missing")


def stack(count, dim, scale, seed=0):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    return np.ascontiguousarray(scale * g)


@needs_numba
@pytest.mark.parametrize("scale", [1e-8, 0.3, 3.0, 20.0])
def test_expm_stacks_agree(scale):
    g = stack(50, 4, scale)
    for nb, npf in ((_kernels.expm1_stack_nb, _kernels.expm1_stack_np), (_kernels.expm_stack_nb, _kernels.expm_stack_np)):
        a, b = nb(g), npf(g)
        assert np.abs(a - b).max() <= 1e-13 * max(1.0, np.abs(b).max())


@needs_numba
@pytest.mark.parametrize("count", [1, 2, 3, 17, 64])
def test_ordered_product_agree_and_order(count):
    g = stack(count, 3, 0.2, seed=count)
    g = g - g.conj().transpose(0, 2, 1)
    d = _kernels.expm1_stack_np(g)
    full = np.eye(3)
    for k in range(count):
        full = (np.eye(3) + d[k]) @ full  # later factors on the left
    for fn in (_kernels.ordered_product_nb, _kernels.ordered_product_np):
        assert np.abs(fn(d.copy()) + np.eye(3) - full).max() <= 1e-13


@needs_numba
def test_trig_kernels_agree():
    p = weierstrass(0.5)
    ts = np.linspace(-3.0, 3.0, 101)
    assert np.allclose(_kernels.trig_eval_nb(ts, p.amps, p.freqs, p.phases),
                       _kernels.trig_eval_np(ts, p.amps, p.freqs, p.phases), rtol=0, atol=1e-12)
    for h in (0.5, 1e-3, 1e-7):
        a = _kernels.trig_moments_grid_nb(0.1, h, 33, p.amps, p.freqs, p.phases)
        b = _kernels.trig_moments_grid_np(0.1, h, 33, p.amps, p.freqs, p.phases)
        assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-15 * h)
        assert np.allclose(a[1], b[1], rtol=1e-12, atol=1e-15 * h * h)


@needs_numba
def test_power_and_taylor_agree():
    m = stack(1, 16, 1.0)[0]
    v = np.ascontiguousarray(stack(1, 16, 1.0, seed=1)[0, 0])
    a, ca = _kernels.power_norm_nb(m, v, 1e-12, 5000)
    b, cb = _kernels.power_norm_np(m, v, 1e-12, 5000)
    assert ca and cb and abs(a - b) <= 1e-9 * b
    a = _kernels.taylor_action_nb(m, v, 8, 1e-16, 60)
    b = _kernels.taylor_action_np(m, v, 8, 1e-16, 60)
    assert np.abs(a - b).max() <= 1e-12 * np.abs(b).max()


def test_env_flag_selects_numpy():
    env = dict(os.environ, MAGNUS_MIDPOINT_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from magnus_midpoint import _kernels as k, backend; print(backend(), k.expm_stack is k.expm_stack_np)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split() == ["numpy", "True"]


@pytest.mark.parametrize("fn", ["expm1_stack", "expm_stack"])
@pytest.mark.parametrize("suffix", ["_nb", "_np"])
def test_scalar_path_matches_series_and_exp(fn, suffix):
    z = np.array([1e-12 + 3e-13j, -2e-9j, 0.3 - 1.1j, -40.0 + 2.0j, 5.0 + 0.0j])
    got = getattr(_kernels, fn + suffix)(np.ascontiguousarray(z[:, None, None]))[:, 0, 0]
    if fn == "expm_stack":
        assert np.allclose(got, np.exp(z), rtol=1e-14, atol=0)
        return
    # expm1 via high-order series for tiny z, direct formula otherwise
    small = np.abs(z) < 1e-6
    ref = np.where(small, z + z * z / 2 + z**3 / 6, np.exp(z) - 1)
    assert np.allclose(got, ref, rtol=1e-13, atol=0)
