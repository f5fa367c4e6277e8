"""Momentum-representation eigenproblem for a single nucleus at the origin.

For ``lambda < 0`` the eigenfunction transform ``u`` solves ``u = T u`` with

    T(lambda) u = G(lambda) * Z * K u,     G(lambda) = 2 / (rho^2 - 2 lambda).

``T`` has a positive kernel, so its dominant eigenpair is found by power
iteration and the eigenvalue by bisection on ``mu(lambda) = 1``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    DivergenceError,
    NoEigenvalueError,
    NotContractiveError,
    UndefinedRatioError,
)
from .riesz import k_operator_matrix, kappa
from .spectral import (
    RadialGrid,
    RadialSpectralFunction,
    build_radial_grid,
    weighted_l1_norm,
    weighted_l2_norm,
)

log = logging.getLogger(__name__)

# K maps integrable functions to ~rho^-2, so T u decays like rho^-4
T_TAIL_EXPONENT = 4.0


def _check_lambda(lam: float):
    if not lam < 0:
        raise ValueError(f"lambda must be negative, got {lam}")


def resolvent_symbol(lam: float, rho):
    return 2.0 / (np.asarray(rho) ** 2 - 2.0 * lam)


def apply_G(lam: float, f: RadialSpectralFunction) -> RadialSpectralFunction:
    """Multiply by ``2 / (rho^2 - 2 lambda)``; the tail gains two powers."""
    _check_lambda(lam)
    return f.with_values(resolvent_symbol(lam, f.grid.nodes) * f.values, f.tail_exponent + 2.0)


def t_matrix(grid: RadialGrid, lam: float, charge: float, tail_exponent: float = T_TAIL_EXPONENT):
    _check_lambda(lam)
    if not charge > 0:
        raise ValueError("nuclear charge must be positive")
    g = resolvent_symbol(lam, grid.nodes)
    return (charge * g)[:, None] * k_operator_matrix(grid, tail_exponent)


def apply_T(lam: float, charge: float, f: RadialSpectralFunction) -> RadialSpectralFunction:
    """``T(lambda) f = G(lambda) Z K f``; positivity preserving."""
    _check_lambda(lam)
    p = f.tail_exponent
    if f.has_tail and not p > 3.0:
        raise DivergenceError(f"T needs an integrable input, tail exponent {p} <= 3")
    if f.is_zero():
        return f.with_values(np.zeros_like(f.values), T_TAIL_EXPONENT)
    mat = t_matrix(f.grid, lam, charge, p if f.has_tail else math.inf)
    return f.with_values(mat @ f.values, T_TAIL_EXPONENT)


def highpass(omega_cut: float, f: RadialSpectralFunction) -> RadialSpectralFunction:
    """Keep the part of ``f`` with ``rho >= omega_cut``."""
    if omega_cut < 0:
        raise ValueError("cutoff must be non-negative")
    if omega_cut > f.grid.r_max:
        return RadialSpectralFunction.zeros(f.grid)
    mask = f.grid.nodes >= omega_cut
    return f.with_values(np.where(mask, f.values, 0))


def lowpass(omega_cut: float, f: RadialSpectralFunction) -> RadialSpectralFunction:
    """Keep the part of ``f`` with ``rho < omega_cut`` (compactly supported)."""
    if omega_cut < 0:
        raise ValueError("cutoff must be non-negative")
    mask = f.grid.nodes < omega_cut
    if omega_cut > f.grid.r_max:
        return f
    return f.with_values(np.where(mask, f.values, 0), math.inf)


def h1_norm(f: RadialSpectralFunction) -> float:
    return weighted_l2_norm(f, 1.0)


# -- contraction of the cut-off operator ---------------------------------------


def contraction_grid(cutoffs=(), r_max: float = 160.0, node_count: int = 640) -> RadialGrid:
    """Uniform panels, refined toward the origin, with boundaries at the cutoffs."""
    return build_radial_grid(
        r_max, node_count, "composite-gauss", breakpoints=(0.125, 0.25, 0.5, 1.0, *cutoffs)
    )


def random_test_functions(grid: RadialGrid, trials: int, seed: int = 0):
    """Seeded mix of Gaussian shells and algebraic profiles.

    Shell centres are log-uniform over ``[1, 60]`` so that, for any cutoff
    in that range, some trial concentrates just above it.
    """
    rng = np.random.default_rng(seed)
    rho = grid.nodes
    out = []
    for k in range(trials):
        if k % 3 == 2:
            a = math.exp(rng.uniform(math.log(0.5), math.log(20.0)))
            power = rng.choice([2.0, 3.0])
            out.append(RadialSpectralFunction(grid, (1.0 + (rho / a) ** 2) ** (-power), 2 * power))
        else:
            c = math.exp(rng.uniform(0.0, math.log(60.0)))
            w = max(0.5, c * rng.uniform(0.1, 0.3))
            out.append(RadialSpectralFunction(grid, np.exp(-0.5 * ((rho - c) / w) ** 2)))
    return out


NORM_KINDS = {
    "H1": lambda f: weighted_l2_norm(f, 1.0),
    "L1_B0": lambda f: weighted_l1_norm(f, 0.0),
}


def contraction_factor(
    lam: float,
    charge: float,
    omega_cut: float,
    norm_kind: str = "H1",
    trials: int = 30,
    *,
    grid: RadialGrid | None = None,
    seed: int = 0,
) -> float:
    """Largest observed ``||P T f|| / ||f||`` over seeded random trials."""
    if trials < 10:
        raise ValueError("at least 10 trials are required")
    try:
        norm = NORM_KINDS[norm_kind]
    except KeyError:
        raise ValueError(f"unknown norm kind {norm_kind!r}") from None
    if grid is None:
        grid = contraction_grid((omega_cut,))
    best = 0.0
    for f in random_test_functions(grid, trials, seed):
        pt = highpass(omega_cut, apply_T(lam, charge, f))
        best = max(best, norm(pt) / norm(f))
    return max(best, dominant_ratio(lam, charge, omega_cut, grid, norm))


def dominant_ratio(lam, charge, omega_cut, grid, norm=h1_norm, steps: int = 40) -> float:
    """One-step ratio of ``P T`` along its dominant direction.

    ``P T`` has a positive kernel, so power iteration from a positive start
    approaches the Perron vector and the ratio approaches the spectral
    radius.  Random shells can miss that direction entirely, which would
    let a non-contractive cutoff pass.
    """
    f = highpass(omega_cut, RadialSpectralFunction(grid, (1.0 + grid.nodes**2) ** -2, 4.0))
    ratio = 0.0
    for _ in range(steps):
        if f.is_zero():
            return 0.0
        g = highpass(omega_cut, apply_T(lam, charge, f))
        ratio = norm(g) / norm(f)
        if ratio == 0.0:
            return 0.0
        f = g * (1.0 / norm(g))
    return ratio


@dataclass
class NeumannInfo:
    terms: int
    increments: list = field(default_factory=list)
    contraction: float = math.nan
    residual: float = math.nan


def neumann_highfreq_solve(
    lam: float,
    charge: float,
    omega_cut: float,
    u_low: RadialSpectralFunction,
    tol: float = 1e-10,
    *,
    max_terms: int = 1000,
    trials: int = 30,
    full_output: bool = False,
):
    """High-frequency part ``v = sum_{k>=1} (P T)^k u_low`` of a solution.

    The series is summed until the ``||.||_{2,1}`` norm of the latest term
    drops below ``tol``.  Raises :class:`NotContractiveError` when the
    sampled contraction factor of ``P T`` is not below one.
    """
    grid = u_low.grid
    q = contraction_factor(lam, charge, omega_cut, "H1", trials, grid=grid)
    if not q < 1.0:
        raise NotContractiveError(
            f"P T(lambda) is not contractive at cutoff {omega_cut} (factor {q:.3g})"
        )
    info = NeumannInfo(terms=0, contraction=q)
    v = RadialSpectralFunction.zeros(grid)
    term = u_low
    while True:
        if term.is_zero():
            break
        term = highpass(omega_cut, apply_T(lam, charge, term))
        v = v + term
        info.terms += 1
        inc = h1_norm(term)
        info.increments.append(inc)
        if inc < tol:
            break
        if info.terms >= max_terms:
            raise ConvergenceError(f"Neumann series not converged after {max_terms} terms")
    info.residual = h1_norm(v - highpass(omega_cut, apply_T(lam, charge, v + u_low)))
    return (v, info) if full_output else v


# -- eigenvalue solver ------------------------------------------------------------


@dataclass
class SolverConfig:
    nuclear_charge: float = 1.0
    lambda_bracket: tuple = (-1.0, -0.1)
    cutoff: float = 0.0
    fixed_point_tol: float = 1e-8
    max_iterations: int = 500
    grid: RadialGrid = None

    def __post_init__(self):
        lo, hi = self.lambda_bracket
        if not lo < hi < 0:
            raise ValueError(f"bracket must satisfy lo < hi < 0, got {self.lambda_bracket}")
        if not self.fixed_point_tol > 0:
            raise ValueError("fixed_point_tol must be positive")
        if not self.nuclear_charge > 0:
            raise ValueError("nuclear charge must be positive")
        if self.cutoff < 0:
            raise ValueError("cutoff must be non-negative")
        if self.grid is None:
            self.grid = build_radial_grid(60.0, 256, "graded")


@dataclass
class EigenResult:
    lambda_: float
    u: RadialSpectralFunction
    iterations: int
    residual: float
    mu: float = 1.0


def _h1_values(grid: RadialGrid, values: np.ndarray) -> float:
    return weighted_l2_norm(RadialSpectralFunction(grid, values, T_TAIL_EXPONENT), 1.0)


def power_iteration(matrix, grid, start, tol=1e-12, max_iterations=500):
    """Dominant eigenpair of a positive operator, normalised in ``||.||_{2,1}``.

    Returns ``(mu, v, iterations)``; ``start`` only needs to be positive.
    """
    v = np.asarray(start, dtype=float)
    v = v / _h1_values(grid, v)
    mu = math.nan
    for it in range(1, max_iterations + 1):
        w = matrix @ v
        mu = _h1_values(grid, w)
        if not mu > 0:
            raise ConvergenceError("power iteration collapsed to zero")
        w = w / mu
        if _h1_values(grid, w - v) < tol:
            return mu, w, it
        v = w
    raise ConvergenceError(f"power iteration stagnated after {max_iterations} steps")


def eigen_solve(config: SolverConfig, start=None) -> EigenResult:
    """Ground state of the hydrogen-like problem by bisection on ``mu(lambda) = 1``."""
    grid = config.grid
    Z = config.nuclear_charge
    inner_tol = 1e-3 * config.fixed_point_tol
    if start is None:
        start = (1.0 + grid.nodes**2) ** -3
    total = 0

    def mu_at(lam, v0):
        nonlocal total
        mu, v, it = power_iteration(t_matrix(grid, lam, Z), grid, v0, inner_tol, config.max_iterations)
        total += it
        return mu, v

    lo, hi = config.lambda_bracket
    mu_lo, _ = mu_at(lo, start)
    mu_hi, v = mu_at(hi, start)
    if not (mu_lo < 1.0 < mu_hi):
        raise NoEigenvalueError(
            f"mu(lambda) - 1 does not change sign on {config.lambda_bracket}: "
            f"mu(lo)={mu_lo:.6g}, mu(hi)={mu_hi:.6g}"
        )
    lam, mu = hi, mu_hi
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        mu, v = mu_at(lam, v)
        if abs(mu - 1.0) <= 0.25 * config.fixed_point_tol or hi - lo < 1e-15:
            break
        if mu > 1.0:
            hi = lam
        else:
            lo = lam
    u = RadialSpectralFunction(grid, v, T_TAIL_EXPONENT)
    tu = apply_T(lam, Z, u)
    residual = h1_norm(u - tu) / h1_norm(u)
    log.debug("eigen_solve: lambda=%.12g mu=%.15g residual=%.3g", lam, mu, residual)
    if residual > config.fixed_point_tol:
        raise ConvergenceError(f"fixed-point residual {residual:.3g} above tolerance")
    return EigenResult(lambda_=lam, u=u, iterations=total, residual=residual, mu=mu)


# -- empirical bound checks --------------------------------------------------------


def t_lambda_bound_ratio(lam: float, charge: float, f: RadialSpectralFunction, s: float) -> float:
    """``||T f||_{1,s} / (kappa(2 - s) ||f||_{1,0})``."""
    if not s < 1.0:
        raise DivergenceError("s must be below 1")
    if f.is_zero():
        raise UndefinedRatioError("ratio undefined for the zero function")
    return weighted_l1_norm(apply_T(lam, charge, f), s) / (kappa(2.0 - s) * weighted_l1_norm(f, 0.0))


def hardy_ratio(u, grid: RadialGrid, du=None) -> float:
    """``int |x|^-2 |u|^2 / (4 int |grad u|^2)`` for a radial position-space ``u``.

    ``u`` and ``du`` are callables of ``r``; without ``du`` the derivative
    is taken by a fourth-order central difference.
    """
    r = grid.nodes
    if du is None:
        h = 1e-4 * np.maximum(r, 1e-2)
        du_vals = (-u(r + 2 * h) + 8 * u(r + h) - 8 * u(r - h) + u(r - 2 * h)) / (12 * h)
    else:
        du_vals = du(r)
    num = grid.integrate(np.abs(u(r)) ** 2)
    den = 4.0 * grid.integrate(np.abs(du_vals) ** 2 * r * r)
    return num / den


@dataclass
class GrowthRow:
    s: float
    norm: float
    compensated: float
    finite: bool


def barron_growth_profile(u: RadialSpectralFunction, s_list) -> list[GrowthRow]:
    """``||u||_{1,s}`` and ``(1 - s) ||u||_{1,s}`` per exponent; divergence is recorded."""
    rows = []
    for s in s_list:
        s = float(s)
        try:
            if not s < 1.0:
                raise DivergenceError("s must be below 1")
            norm = weighted_l1_norm(u, s)
            rows.append(GrowthRow(s, norm, (1.0 - s) * norm, True))
        except DivergenceError:
            rows.append(GrowthRow(s, math.inf, math.inf, False))
    return rows
