import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jn_zeros

from tamedsurf.comparison import (BracketError, SolutionEscaped, TailDivergent, check_bmr, default_delta,
                                  dirichlet_eigen_ball, kasue_bound, lambda_c, quadratic_decay_lemma_check,
                                  s_kappa, solve_jacobi, v_slope_lemma_check)


def euler_oracle(a, c0, t):
    """Closed-form solution of h'' = a/(c0+t)^2 h, h(0)=0, h'(0)=1 for a > -1/4."""
    d = np.sqrt(1 + 4 * a)
    p, q = (1 + d) / 2, (1 - d) / 2
    # A c0^p + B c0^q = 0, A p c0^(p-1) + B q c0^(q-1) = 1
    M = np.array([[c0**p, c0**q], [p * c0 ** (p - 1), q * c0 ** (q - 1)]])
    A, B = np.linalg.solve(M, [0.0, 1.0])
    return A * (c0 + t) ** p + B * (c0 + t) ** q


def test_constant_coefficients():
    assert np.allclose(solve_jacobi(lambda t: 0.0, 5.0).h, np.linspace(0, 5, 501), atol=1e-12)
    prof = solve_jacobi(lambda t: 1.0, 3.0)
    assert np.allclose(prof.h, np.sinh(prof.t), rtol=1e-9)
    assert prof.richardson_error < 1e-8


def test_positivity_horizon_for_sine():
    prof = solve_jacobi(lambda t: -1.0, 10.0, step=1e-3)
    assert prof.positivity_horizon == pytest.approx(np.pi, abs=2e-3)
    assert np.all(prof.h[1:] > 0)


def test_escape_raises():
    with pytest.raises(SolutionEscaped):
        solve_jacobi(lambda t: 1e4, 10.0)


@given(st.floats(-0.24, 2.0), st.floats(0.2, 3.0))
def test_euler_type_coefficients(a, c0):
    prof = solve_jacobi(lambda t: a / (c0 + t) ** 2, 20.0, step=1e-2)
    ref = euler_oracle(a, c0, prof.t)
    err = np.max(np.abs(prof.h - ref) / np.maximum(1, np.abs(ref)))
    assert err < 1e-6
    # the step-halving estimate tracks the true error
    assert err <= 2 * prof.richardson_error + 1e-12
    # five-point h'' carries its own O(step^4) truncation error
    assert prof.residual().max() < 1e-4


def test_hermite_interpolation_between_nodes():
    prof = solve_jacobi(lambda t: 1.0, 2.0, step=1e-2)
    t = np.array([0.123, 1.5555])
    h, dh = prof.interpolate(t)
    assert np.allclose(h, np.sinh(t), rtol=1e-8) and np.allclose(dh, np.cosh(t), rtol=1e-6)


def test_bmr_threshold():
    # G = -a min(1, t^-2): t * int_t^inf G_- = a for every t >= 1, power-law tail exact
    def G(a):
        return lambda t: -a * np.minimum(1.0, 1.0 / np.maximum(t, 1e-300) ** 2)

    ok, sup, info = check_bmr(G(0.2), 50.0, tail_exponent=-2)
    assert ok and sup == pytest.approx(0.2, rel=1e-4)
    assert info["tail_integral"] == pytest.approx(0.2 / 50)
    ok, sup, _ = check_bmr(G(0.3), 50.0, tail_exponent=-2)
    assert not ok and sup == pytest.approx(0.3, rel=1e-4)
    with pytest.raises(TailDivergent):
        check_bmr(lambda t: -1 / (1 + t), 10.0, tail_exponent=-1)
    ok, sup, info = check_bmr(lambda t: 1.0, 10.0)
    assert ok and sup == 0 and info["tail"] == "assumed_zero"


def test_quadratic_decay_lemma():
    prem, m = quadratic_decay_lemma_check(solve_jacobi(lambda t: 2 / (1 + t) ** 2, 30.0))
    assert prem and m <= 2 + 1e-6
    prem, _ = quadratic_decay_lemma_check(solve_jacobi(lambda t: 1.0, 5.0))
    assert not prem


def test_s_kappa():
    t = np.linspace(0, 2, 5)
    assert np.allclose(s_kappa(0, t), t)
    assert np.allclose(s_kappa(4.0, t), np.sin(2 * t) / 2)
    assert np.allclose(s_kappa(-1.0, t), np.sinh(t))
    assert isinstance(s_kappa(1.0, 0.5), float)


def test_kasue_bound_flat_constant_k():
    k0, r = 0.3, 1.0
    R = np.array([1.5, 2.0, 3.0])
    expect = np.clip(k0 * (R**2 - r**2) / (2 * R), 0, 1)
    assert np.allclose(kasue_bound(0.0, lambda s: k0 + 0 * s, r, R), expect, rtol=1e-12)
    out, clamped = kasue_bound(0.0, lambda s: 1 + 0 * s, r, 10.0, return_flag=True)
    assert out == 1.0 and clamped
    with pytest.raises(ValueError):
        kasue_bound(0.0, lambda s: s, 2.0, 1.0)


def test_lambda_c_and_delta():
    d = default_delta(0.5, 2.0)
    val, ok = lambda_c(0.3, d, 4.0)
    assert val == pytest.approx(0.55) and ok
    _, ok = lambda_c(0.9, d, 2.0)
    assert not ok
    with pytest.raises(ValueError):
        lambda_c(1.0, d, 1.0)


@pytest.mark.parametrize("l", [2, 3, 4, 6])
def test_ball_eigenvalue_bessel_zero(l):
    nu = l / 2 - 1
    ref = jn_zeros(nu, 1)[0] ** 2 if nu == int(nu) else None
    if l == 3:
        ref = np.pi**2
    ef = dirichlet_eigen_ball(l, 1.0)
    assert ef.lambda1 == pytest.approx(ref, rel=1e-9)
    assert ef.residual().max() < 1e-5 * ef.lambda1


@settings(max_examples=10)
@given(st.integers(2, 8), st.floats(0.5, 5.0))
def test_ball_eigenvalue_scaling(l, r):
    assert dirichlet_eigen_ball(l, r, n=1000).lambda1 * r**2 == pytest.approx(
        dirichlet_eigen_ball(l, 1.0, n=1000).lambda1, rel=1e-7)


@settings(max_examples=10)
@given(st.integers(2, 8), st.sampled_from([1.0, 2.0, 5.0]))
def test_v_slope_lemma(l, r):
    ok, m = v_slope_lemma_check(dirichlet_eigen_ball(l, r, n=1000))
    assert ok


def test_ball_argument_validation():
    with pytest.raises(ValueError):
        dirichlet_eigen_ball(1, 1.0)
    with pytest.raises(ValueError):
        dirichlet_eigen_ball(2, -1.0)
    assert issubclass(BracketError, RuntimeError)
