import numpy as np
import pytest

from magnus_midpoint import linalg, operators as O, profiles as P
from magnus_midpoint.errors import UsageError


def test_seeded_families_are_deterministic():
    a = O.family_weierstrass(4, 0.5, 7)
    b = O.family_weierstrass(4, 0.5, 7)
    c = O.family_weierstrass(4, 0.5, 8)
    assert np.array_equal(a.eval(0.3), b.eval(0.3))
    assert not np.array_equal(a.eval(0.3), c.eval(0.3))


@pytest.mark.parametrize("build", [
    lambda: O.family_weierstrass(5, 0.5, 1),
    lambda: O.family_abs_sine(3, 2),
    lambda: O.family_smooth(4, 3),
    lambda: O.family_constant_seeded(6, 4),
])
def test_builtin_families_are_skew_hermitian_plus_scaled_hermitian(build):
    f = build()
    mod = f.modulation
    assert linalg.is_skew_hermitian(mod.base)
    d = mod.direction
    assert np.allclose(d, d.conj().T)
    if np.any(d):
        assert linalg.operator_norm(d) == pytest.approx(1.0, rel=1e-9)


def test_eval_many_matches_eval():
    f = O.family_weierstrass(3, 0.25, 2)
    ts = np.array([0.0, 0.3, 1.7])
    many = f.eval_many(ts)
    for i, t in enumerate(ts):
        assert np.allclose(many[i], f.eval(t), atol=1e-14)


def test_generator_bound_is_an_upper_bound():
    f = O.family_weierstrass(4, 0.5, 7)
    bound = f.generator_bound(0.0, 1.0)
    sampled = max(np.linalg.norm(f.eval(t), 2) for t in np.linspace(0, 1, 513))
    assert sampled <= bound + 1e-12


def test_declared_holder_constant_dominates_observed():
    f = O.family_weierstrass(4, 0.5, 7)
    rng = np.random.default_rng(0)
    for _ in range(200):
        t, dt = rng.uniform(0, 1), 10 ** rng.uniform(-8, 0)
        lhs = np.linalg.norm(f.eval(t + dt) - f.eval(t), 2)
        assert lhs <= f.regularity.holder_const * dt**0.5 + 1e-12


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
def test_holder_estimate_recovers_alpha(alpha):
    f = O.family_weierstrass(3, alpha, 1)
    est = O.holder_estimate(f, 0.0, 1.0, 4096)
    assert est.alpha_fit == pytest.approx(alpha, abs=0.15)


def test_holder_estimate_constant_family():
    est = O.holder_estimate(O.family_constant_seeded(3, 1), 0.0, 1.0, 64)
    assert est.alpha_fit == 1.0 and est.const_fit == 0.0


def test_schrodinger_is_skew_hermitian_and_matches_fft():
    pot = O.SeparableField(P.weierstrass(0.5), np.cos)
    f = O.family_schrodinger_1d(16, pot, 0.5)
    a = f.eval(0.37)
    assert linalg.is_skew_hermitian(a, 1e-12)
    # apply to a vector through explicit FFTs
    rng = np.random.default_rng(3)
    u = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    k = np.fft.fftfreq(16, 1 / 16)
    x = 2 * np.pi * np.arange(16) / 16
    b = pot(x, 0.37)
    ref = -0.5j * k**2 * u - 1j * np.fft.fft(b * np.fft.ifft(u))
    assert np.allclose(a @ u, ref, atol=1e-11)


def test_schrodinger_general_potential():
    f = O.family_schrodinger_1d(8, lambda x, t: np.sin(x + t))
    assert f.modulation is None
    assert linalg.is_skew_hermitian(f.eval(0.2), 1e-12)


def test_divergence_form_matches_stencil():
    coef = O.SeparableField(P.TrigProfile([1.0], [2.0]), lambda x: 0.2 * np.cos(x), lambda x: np.ones_like(x))
    n = 16
    f = O.family_divergence_form_1d(n, coef)
    a = f.eval(0.5)
    assert linalg.is_skew_hermitian(a, 1e-9)
    dx = 2 * np.pi / n
    xh = (np.arange(n) + 0.5) * dx
    ah = coef(xh, 0.5)
    u = np.random.default_rng(0).standard_normal(n)
    flux = ah * (np.roll(u, -1) - u)
    ref = 1j * (flux - np.roll(flux, 1)) / dx**2
    assert np.allclose(a @ u, ref)


def test_divergence_form_rejects_small_coefficient():
    coef = O.SeparableField(P.TrigProfile([1.0], [1.0]), lambda x: 0.8 * np.cos(x), lambda x: np.ones_like(x))
    with pytest.raises(UsageError, match="c_min"):
        O.family_divergence_form_1d(16, coef)


@pytest.mark.parametrize("call", [
    lambda: O.family_schrodinger_1d(7, lambda x, t: 0 * x),
    lambda: O.family_schrodinger_1d(512, lambda x, t: 0 * x),
    lambda: O.family_divergence_form_1d(4, lambda x, t: 1 + 0 * x),
    lambda: O.family_weierstrass(0, 0.5, 1),
    lambda: O.family_weierstrass(2, 1.5, 1),
])
def test_parameter_validation(call):
    with pytest.raises(UsageError):
        call()


def test_family_from_callable_checks_dims():
    f = O.family_from_callable(2, lambda t: np.eye(3))
    with pytest.raises(UsageError):
        f.eval(0.0)
