import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import CubicSpline

from barronwave.errors import DivergenceError, UndefinedRatioError
from barronwave.montecarlo import MonteCarloConfig
from barronwave.riesz import (
    RieszParams,
    SpectralHandle,
    apply_K_monte_carlo,
    apply_K_radial,
    bump_function,
    kappa,
    kappa_via_quadrature,
    kernel_bound_ratio,
    lemma23_ratio,
    riesz_gamma,
    riesz_identity_residual,
    sharpness_probe,
)
from barronwave.spectral import (
    RadialSpectralFunction,
    build_radial_grid,
    hydrogen_ground_state_ft,
)

FOUR_OVER_PI = 4.0 / math.pi


# -- constants -------------------------------------------------------------------


def test_riesz_gamma_values():
    assert 1.0 / riesz_gamma(RieszParams(3, 1.0)) == pytest.approx(1.0 / (2 * math.pi**2), rel=1e-15)
    assert 1.0 / riesz_gamma(RieszParams(3, 2.0)) == pytest.approx(1.0 / (4 * math.pi), rel=1e-15)
    assert 1.0 / riesz_gamma(RieszParams(2, 1.0)) == pytest.approx(1.0 / (2 * math.pi), rel=1e-15)


@pytest.mark.parametrize("n,alpha", [(3, 0.0), (3, 3.0), (2, -1.0), (0, 0.5)])
def test_riesz_params_validation(n, alpha):
    with pytest.raises(ValueError):
        RieszParams(n, alpha)


def test_riesz_params_beta():
    assert RieszParams(3, 1.25).beta == 1.75


def test_kappa_values():
    assert kappa(2.0) == pytest.approx(2.0, rel=1e-15)
    assert kappa(3.0) == pytest.approx(FOUR_OVER_PI, rel=1e-15)
    assert abs(kappa(1.01) / (FOUR_OVER_PI / 0.01) - 1) < 0.05


def test_kappa_diverges_at_one():
    for theta in (1.0, 0.5, -2.0):
        with pytest.raises(DivergenceError):
            kappa(theta)
        with pytest.raises(DivergenceError):
            kappa_via_quadrature(theta)


def test_kappa_decreasing():
    vals = [kappa(t) for t in np.linspace(1.01, 20, 200)]
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("theta,expected", [(2.0, 2.0), (3.0, FOUR_OVER_PI), (1.5, None)])
def test_kappa_via_quadrature_examples(theta, expected):
    ref = kappa(theta) if expected is None else expected
    assert kappa_via_quadrature(theta) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.05, 10.0))
def test_kappa_quadrature_agrees_with_gamma_form(theta):
    assert kappa_via_quadrature(theta) == pytest.approx(kappa(theta), rel=1e-10)


def test_kappa_asymptote_monotone():
    dev = [abs((10.0**-k) * kappa(1 + 10.0**-k) / FOUR_OVER_PI - 1) for k in range(2, 7)]
    assert np.all(np.diff(dev) < 0)
    assert dev[-1] < 1e-5


# -- Riesz identity ---------------------------------------------------------------


@pytest.mark.parametrize("n,alpha,t", [(3, 1.0, 0.5), (3, 2.0, 1.0)])
def test_riesz_identity_examples(n, alpha, t):
    assert riesz_identity_residual(t, RieszParams(n, alpha))[2] < 1e-10


@pytest.mark.parametrize("n,alpha", [(3, 1.0), (3, 2.0), (2, 1.0), (3, 0.5), (4, 2.5)])
@pytest.mark.parametrize("t", [0.25, 0.5, 1.0, 2.0])
def test_riesz_identity_grid(n, alpha, t):
    lhs, rhs, res = riesz_identity_residual(t, RieszParams(n, alpha))
    assert res < 1e-8
    # independent Gamma-function value of the left side
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    exact = area * math.gamma((n - alpha) / 2) / (2 * t ** ((n - alpha) / 2))
    assert lhs == pytest.approx(exact, rel=1e-11)


def test_riesz_identity_linear_in_amplitude():
    p = RieszParams(3, 1.0)
    l1, r1, _ = riesz_identity_residual(0.7, p)
    l2, r2, _ = riesz_identity_residual(0.7, p, amplitude=2.0)
    assert l2 == 2 * l1 and r2 == 2 * r1


def test_riesz_identity_rejects_bad_scale():
    with pytest.raises(ValueError):
        riesz_identity_residual(0.0, RieszParams(3, 1.0))


# -- radial operator ----------------------------------------------------------------


def test_eigenrelation_of_hydrogen_transform(graded, psi):
    k = apply_K_radial(psi)
    rho = graded.nodes
    rel = np.abs(k.values - 0.5 * (1 + rho**2) * psi.values) / psi.values
    assert np.max(rel) < 1e-4
    assert np.max(rel[rho < 1]) < 1e-6
    near = np.abs(rho - 1.0) < 0.5
    spline = CubicSpline(rho[near], k.values[near])
    assert float(spline(1.0)) == pytest.approx(hydrogen_ground_state_ft(1.0), abs=1e-4)
    assert float(spline(1.0)) == pytest.approx(0.39894, abs=1e-4)


def test_point_mass_limit():
    eps = 1e-3
    g = build_radial_grid(60.0, 256, "graded", breakpoints=(eps,))
    k = apply_K_radial(bump_function(g, eps))
    i = int(np.argmin(np.abs(g.nodes - 1.0)))
    rho = g.nodes[i]
    assert k.values[i] * rho**2 == pytest.approx(1.0 / (2 * math.pi**2), rel=1e-5)


def test_linearity(graded, psi, gaussian):
    a, b = 1.7, -0.3
    lhs = apply_K_radial(a * psi + b * gaussian).values
    rhs = a * apply_K_radial(psi).values + b * apply_K_radial(gaussian).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * np.max(np.abs(rhs))


def test_zero_in_zero_out(graded):
    assert apply_K_radial(RadialSpectralFunction.zeros(graded)).is_zero()


def test_output_tail_exponent(psi):
    assert apply_K_radial(psi).tail_exponent == 2.0


def test_divergent_input_rejected(graded):
    f = RadialSpectralFunction.from_callable(graded, lambda r: (1 + r * r) ** -1.25, 2.5)
    with pytest.raises(DivergenceError):
        apply_K_radial(f)


nonneg = st.lists(
    st.tuples(st.floats(0.0, 30.0), st.floats(0.1, 5.0), st.floats(0.0, 2.0)), min_size=1, max_size=4
)


@settings(max_examples=40, deadline=None)
@given(nonneg)
def test_positivity(graded, parts):
    def profile(r):
        return sum(a * np.exp(-0.5 * ((r - c) / w) ** 2) for c, w, a in parts) + 1e-3 * (1 + r * r) ** -2

    f = RadialSpectralFunction.from_callable(graded, profile, 4.0)
    assert np.all(apply_K_radial(f).values >= 0)


# -- Monte Carlo oracle ---------------------------------------------------------------


def test_monte_carlo_matches_quadrature_at_one(graded, psi):
    k = apply_K_radial(psi)
    i = int(np.argmin(np.abs(graded.nodes - 1.0)))
    rho = graded.nodes[i]
    est, err = apply_K_monte_carlo(SpectralHandle.radial(hydrogen_ground_state_ft), [rho, 0, 0],
                                   MonteCarloConfig(1_000_000, 11))
    assert abs(est - k.values[i]) < 3 * err


def test_monte_carlo_zero_function():
    zero = SpectralHandle(lambda eta: np.zeros(len(eta)))
    assert apply_K_monte_carlo(zero, [1.0, 0, 0], MonteCarloConfig(10_000)) == (0.0, 0.0)
    assert apply_K_monte_carlo(None, [1.0, 0, 0], MonteCarloConfig(10_000)) == (0.0, 0.0)


def test_monte_carlo_rate():
    handle = SpectralHandle.radial(hydrogen_ground_state_ft)
    ratios = []
    for seed in range(6):
        _, e1 = apply_K_monte_carlo(handle, [0.7, 0, 0], MonteCarloConfig(20_000, seed))
        _, e2 = apply_K_monte_carlo(handle, [0.7, 0, 0], MonteCarloConfig(40_000, seed + 100))
        ratios.append(e2 / e1)
    assert abs(np.mean(ratios) / (1 / math.sqrt(2)) - 1) < 0.2


# -- bound ratios ----------------------------------------------------------------------


def test_ratio_alias():
    assert lemma23_ratio is kernel_bound_ratio


def test_ratio_examples(graded, psi):
    assert kernel_bound_ratio(psi, 2.0) <= 2.0
    wide = RadialSpectralFunction.from_callable(graded, lambda r: np.exp(-0.5 * (r / 5) ** 2), math.inf)
    assert kernel_bound_ratio(wide, 3.0) <= FOUR_OVER_PI
    g = build_radial_grid(60.0, 256, "graded", breakpoints=(1e-2,))
    assert kernel_bound_ratio(bump_function(g, 1e-2), 2.0) >= 0.45 * kappa(2.0)


@pytest.mark.parametrize("theta", [1.2, 1.5, 2.0, 3.0])
def test_ratio_below_kappa(graded, psi, gaussian, theta):
    alg = RadialSpectralFunction.from_callable(graded, lambda r: (1 + (r / 3) ** 2) ** -3, 6.0)
    for f in (psi, gaussian, alg):
        assert kernel_bound_ratio(f, theta) <= kappa(theta)


def test_ratio_errors(graded, psi):
    with pytest.raises(UndefinedRatioError):
        kernel_bound_ratio(RadialSpectralFunction.zeros(graded), 2.0)
    with pytest.raises(DivergenceError):
        kernel_bound_ratio(psi, 1.0)


def test_sharpness_examples():
    k2 = kappa(2.0)
    v = sharpness_probe(0.1, 2.0)
    assert 0.3 * k2 < v <= 0.5 * k2
    for theta in (2.0, 3.0):
        assert abs(sharpness_probe(1e-3, theta) / (0.5 * kappa(theta)) - 1) < 0.02


def test_sharpness_approaches_half_kappa_monotonically():
    vals = [sharpness_probe(eps, 2.0) for eps in (0.3, 0.1, 0.03, 0.01)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] <= 1.0 + 1e-9


@pytest.mark.parametrize("eps,theta", [(0.0, 2.0), (1.0, 2.0), (0.1, 1.0)])
def test_sharpness_rejects_bad_arguments(eps, theta):
    with pytest.raises((ValueError, DivergenceError)):
        sharpness_probe(eps, theta)
