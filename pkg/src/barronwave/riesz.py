"""Riesz constants and the momentum-space Coulomb convolution.

The operator is

    (K f)(w) = 1/(2 pi^2) * int |w - e|^-2 f(e) de        (e in R^3).

For radial ``f`` the angular integral of the kernel over the sphere
``|e| = r`` is ``(2 pi / (rho r)) * log|(rho + r)/(rho - r)|``, which gives

    (K f)(rho) = 1/(pi rho) * int_0^inf r f(r) log|(rho + r)/(rho - r)| dr.

The logarithmic diagonal singularity is integrated by product weights:
on every panel near the target the interpolating polynomial of ``f`` is
integrated against the kernel on a mesh graded dyadically toward
``r = rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError, UndefinedRatioError
from .montecarlo import HeavyTailProposal, Mixture, MonteCarloConfig, SingularProposal, estimate
from .spectral import RadialGrid, RadialSpectralFunction, build_radial_grid, weighted_l1_norm

FOUR_OVER_PI = 4.0 / math.pi

# sub-rule used for near-singular product integration
_SUB_POINTS = 16
_GRADING_LEVELS = 46
_SUB_X, _SUB_W = np.polynomial.legendre.leggauss(_SUB_POINTS)


@dataclass(frozen=True)
class RieszParams:
    n: int
    alpha: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not 0.0 < self.alpha < self.n:
            raise ValueError(f"alpha must lie in (0, n), got {self.alpha}")

    @property
    def beta(self) -> float:
        return self.n - self.alpha


def riesz_gamma(p: RieszParams) -> float:
    """``gamma(alpha)`` with ``1/gamma = pi^(-n/2) 2^(-alpha) G(beta/2)/G(alpha/2)``."""
    inv = math.pi ** (-0.5 * p.n) * 2.0 ** (-p.alpha) * math.gamma(0.5 * p.beta) / math.gamma(
        0.5 * p.alpha
    )
    return 1.0 / inv


def kappa(theta: float) -> float:
    """``2 G((theta-1)/2) / (sqrt(pi) G(theta/2))``, the L1 -> B_{-theta} bound of K."""
    theta = float(theta)
    if not theta > 1.0:
        raise DivergenceError(f"kappa(theta) is infinite for theta <= 1, got {theta}")
    return 2.0 * math.exp(
        special.gammaln(0.5 * (theta - 1.0)) - special.gammaln(0.5 * theta)
    ) / math.sqrt(math.pi)


def kappa_via_quadrature(theta: float, split: float = 10.0, tail_terms: int = 40) -> float:
    """``(4/pi) int_0^inf (1 + r^2)^(-theta/2) dr`` without Gamma functions.

    ``[0, split]`` is integrated adaptively; beyond ``split`` the binomial
    series of ``r^-theta (1 + r^-2)^(-theta/2)`` is integrated termwise.
    """
    theta = float(theta)
    if not theta > 1.0:
        raise DivergenceError(f"integral diverges for theta <= 1, got {theta}")
    head, _ = integrate.quad(
        lambda r: (1.0 + r * r) ** (-0.5 * theta), 0.0, split, epsabs=0.0, epsrel=1e-13, limit=200
    )
    k = np.arange(tail_terms)
    a = -0.5 * theta
    # generalised binomial coefficients C(a, k) by recurrence (binom() is nan at negative integers)
    coeff = np.cumprod(np.concatenate(([1.0], (a - k[1:] + 1.0) / k[1:])))
    expo = theta + 2.0 * k - 1.0
    tail = math.fsum(coeff * split ** (-expo) / expo)
    return FOUR_OVER_PI * (head + tail)


def _sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)


def riesz_identity_residual(t: float, p: RieszParams, amplitude: float = 1.0):
    """Both sides of the Riesz identity for ``phi(x) = A exp(-t |x|^2)``.

    ``lhs = int |x|^-alpha phi dx`` and
    ``rhs = (2 pi)^(n/2) / gamma(alpha) * int |w|^-beta phi_hat dw`` with
    ``phi_hat(w) = A (2t)^(-n/2) exp(-|w|^2/(4t))``, each reduced to a
    radial integral and evaluated by adaptive quadrature.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    n, alpha, beta = p.n, p.alpha, p.beta
    area = _sphere_area(n)
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)

    def radial(power, decay):
        # int_0^inf r^power exp(-decay r^2) dr, split at the Gaussian scale
        scale = 1.0 / math.sqrt(decay)
        f = lambda r: r**power * math.exp(-decay * r * r)
        a, _ = integrate.quad(f, 0.0, scale, **opts)
        b, _ = integrate.quad(f, scale, math.inf, **opts)
        return a + b

    lhs = amplitude * area * radial(n - 1 - alpha, t)
    rhs = (
        (2.0 * math.pi) ** (0.5 * n)
        / riesz_gamma(p)
        * amplitude
        * (2.0 * t) ** (-0.5 * n)
        * area
        * radial(n - 1 - beta, 1.0 / (4.0 * t))
    )
    return lhs, rhs, abs(lhs - rhs) / abs(lhs)


# -- radial Nystrom discretisation of K ---------------------------------------


def _log_kernel(rho, r):
    """``log|(rho + r)/(rho - r)|`` written as ``2 atanh(min/max)``."""
    lo = np.minimum(rho, r)
    hi = np.maximum(rho, r)
    with np.errstate(divide="ignore"):
        return 2.0 * np.arctanh(lo / hi)


def _graded_rule(a: float, b: float, foci) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on ``[a, b]`` refined dyadically toward ``foci``."""
    width = b - a
    cuts = [a, b]
    for c in foci:
        c = min(max(c, a), b)
        cuts.append(c)
        steps = width * 0.5 ** np.arange(1, _GRADING_LEVELS)
        # finer cuts would collide with c in floating point
        steps = steps[steps > 1e-12 * max(abs(c), width)]
        cuts.extend(c - steps)
        cuts.extend(c + steps)
    cuts = np.unique(np.clip(np.asarray(cuts), a, b))
    cuts = cuts[np.concatenate(([True], np.diff(cuts) > 0))]
    lo, hi = cuts[:-1, None], cuts[1:, None]
    half = 0.5 * (hi - lo)
    return ((lo + hi) * 0.5 + half * _SUB_X).ravel(), (half * _SUB_W).ravel()


def _lagrange_basis(m: int):
    x, _ = np.polynomial.legendre.leggauss(m)
    inv = np.linalg.inv(np.polynomial.legendre.legvander(x, m - 1))
    return lambda t: np.polynomial.legendre.legvander(t, m - 1) @ inv


def _k_matrix(grid: RadialGrid) -> np.ndarray:
    """Matrix of ``int r f(r) log|..| dr`` on ``[0, r_max]`` (no ``1/(pi rho)``)."""
    cache = grid._operator_cache
    if "K" in cache:
        return cache["K"]
    rho = grid.nodes
    m = grid.points_per_panel
    basis = _lagrange_basis(m)
    mat = (grid.weights * rho)[None, :] * _log_kernel(rho[:, None], rho[None, :])
    for k, sl in enumerate(grid.panel_slices()):
        a, b = grid.panels[k], grid.panels[k + 1]
        width = b - a
        near = np.flatnonzero((rho > a - width) & (rho < b + width))
        for i in near:
            t, w = _graded_rule(a, b, (rho[i],))
            vals = w * t * _log_kernel(rho[i], t)
            mat[i, sl] = vals @ basis((2.0 * t - (a + b)) / width)
    cache["K"] = mat
    return mat


def _k_tail(grid: RadialGrid, p: float) -> np.ndarray:
    """Tail of ``int r g(r) log|..| dr`` beyond ``r_max`` per node.

    ``g(r) = ((1 + r^2) / (1 + r_last^2))^(-p/2)`` is the continuation of
    a function whose last sample is one.
    """
    key = ("K-tail", p)
    cache = grid._operator_cache
    if key in cache:
        return cache[key]
    R = grid.r_max
    ref = math.log1p(grid.nodes[-1] ** 2)
    u, w = _graded_rule(0.0, 1.0, (0.0, 1.0))
    r = R / u
    shape = r * np.exp(-0.5 * p * (np.log1p(r * r) - ref)) * R / (u * u)
    out = np.array([np.sum(w * shape * _log_kernel(rho, r)) for rho in grid.nodes])
    cache[key] = out
    return out


def k_operator_matrix(grid: RadialGrid, tail_exponent: float) -> np.ndarray:
    """Dense matrix of K on ``grid`` for inputs with the given tail exponent.

    The continuation beyond ``r_max`` is fixed by the last sample, so it
    enters as a rank-one correction on the last column.
    """
    p = float(tail_exponent)
    mat = _k_matrix(grid).copy()
    if not math.isinf(p):
        mat[:, -1] += _k_tail(grid, p)
    return mat / (math.pi * grid.nodes)[:, None]


def apply_K_radial(f: RadialSpectralFunction) -> RadialSpectralFunction:
    """K applied to a radial function; the result decays like ``rho^-2``."""
    p = f.tail_exponent
    if f.has_tail and not p > 3.0:
        raise DivergenceError(f"K needs an integrable input, tail exponent {p} <= 3")
    if f.is_zero():
        return RadialSpectralFunction(f.grid, np.zeros_like(f.values), 2.0)
    mat = k_operator_matrix(f.grid, p if f.has_tail else math.inf)
    return RadialSpectralFunction(f.grid, mat @ f.values, 2.0)


# -- Monte Carlo oracle ---------------------------------------------------------


class SpectralHandle:
    """Callable on points of R^3 (shape ``(M, 3)``) with a mass envelope.

    ``center`` and ``scale`` say where the function's mass sits; they only
    shape the importance sampler.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], center=(0.0, 0.0, 0.0), scale=1.0):
        self.func = func
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)

    def __call__(self, eta):
        return self.func(eta)

    @classmethod
    def radial(cls, profile: Callable[[np.ndarray], np.ndarray], scale=1.0):
        return cls(lambda eta: profile(np.linalg.norm(eta, axis=-1)), scale=scale)


def kernel_integral_mc(
    func: Callable[[np.ndarray], np.ndarray],
    omega,
    center,
    scale: float,
    mc: MonteCarloConfig,
    term: int = 0,
):
    """``1/(2 pi^2) int |omega - e|^-2 func(e) de`` by mixture importance sampling."""
    omega = np.asarray(omega, dtype=float)
    proposal = Mixture(SingularProposal(omega, scale), HeavyTailProposal(center, scale))
    pref = 1.0 / (2.0 * math.pi**2)

    def draw(rng, n):
        eta = proposal.sample(rng, n)
        d2 = np.sum((eta - omega) ** 2, axis=1)
        return pref * func(eta) / (d2 * proposal.density(eta))

    return estimate(draw, mc, term)


def apply_K_monte_carlo(f, omega, mc: MonteCarloConfig, term: int = 0):
    """Independent estimate of ``(K f)(omega)`` for a function handle on R^3.

    Returns ``(estimate, std_error)``.  ``f`` may be a :class:`SpectralHandle`
    or any callable (then the envelope is centred at 0 with unit scale).
    Distinct ``term`` values draw from independent random streams.
    """
    if f is None:
        return 0.0, 0.0
    center = getattr(f, "center", np.zeros(3))
    scale = getattr(f, "scale", 1.0)
    est, err = kernel_integral_mc(f, omega, center, scale, mc, term)
    if np.iscomplexobj(est) and est.imag == 0:
        est = est.real
    return est, err


# -- bound ratios ------------------------------------------------------------------


def kernel_bound_ratio(f: RadialSpectralFunction, theta: float) -> float:
    """``||K f||_{1,-theta} / ||f||_{1,0}``; never exceeds ``kappa(theta)``."""
    if not theta > 1.0:
        raise DivergenceError("theta must exceed 1")
    if f.is_zero():
        raise UndefinedRatioError("ratio undefined for the zero function")
    return weighted_l1_norm(apply_K_radial(f), -theta) / weighted_l1_norm(f, 0.0)


lemma23_ratio = kernel_bound_ratio


def bump_profile(epsilon: float):
    """L1-normalised ``(1 - (rho/eps)^2)^3`` supported in ``rho < eps``."""
    norm = 4.0 * math.pi * epsilon**3 * 16.0 / 315.0

    def profile(rho):
        x = np.asarray(rho, dtype=float) / epsilon
        return np.where(x < 1.0, (1.0 - x * x) ** 3, 0.0) / norm

    return profile


def bump_function(grid: RadialGrid, epsilon: float) -> RadialSpectralFunction:
    return RadialSpectralFunction.from_callable(grid, bump_profile(epsilon), math.inf)


def sharpness_probe(epsilon: float, theta: float, grid: RadialGrid | None = None) -> float:
    """``kernel_bound_ratio`` of a unit-mass bump of width ``epsilon``.

    Tends to ``kappa(theta)/2`` as ``epsilon -> 0``.  The default grid puts a
    panel boundary at ``epsilon`` so the bump is a polynomial on each panel.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not theta > 1.0:
        raise DivergenceError("theta must exceed 1")
    if grid is None:
        grid = build_radial_grid(60.0, 256, "graded", breakpoints=(epsilon,))
    return kernel_bound_ratio(bump_function(grid, epsilon), theta)
