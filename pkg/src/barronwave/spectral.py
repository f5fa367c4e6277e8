"""Radial frequency grids, sampled radial functions and weighted norms.

Every rotation-invariant function on R^3 is stored through its radial
profile ``f(rho)``; the ``4*pi*rho**2`` measure is applied inside the
integration routines.  Beyond the truncation radius a function is
continued by the power-law model ``c * (1 + rho**2) ** (-p / 2)`` whose
integrals against the Barron weights are incomplete Beta functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError

POINTS_PER_PANEL = 8
GRADED_RATIO = 1.15
GRADED_WIDTH_CAP = 2.5

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Composite Gauss-Legendre rule on ``[0, r_max]``.

    ``panels`` holds the panel boundaries; each panel carries
    ``points_per_panel`` Gauss-Legendre nodes.
    """

    nodes: np.ndarray
    weights: np.ndarray
    r_max: float
    scheme: str
    panels: np.ndarray
    points_per_panel: int = POINTS_PER_PANEL

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> float:
        """Plain quadrature of samples over ``[0, r_max]`` (no measure factor)."""
        return float(np.sum(self.weights * values))

    def panel_slices(self) -> list[slice]:
        m = self.points_per_panel
        return [slice(k * m, (k + 1) * m) for k in range(self.panels.size - 1)]

    @cached_property
    def _operator_cache(self) -> dict:
        # filled lazily by the kernel modules; grids are immutable so the
        # cached matrices stay valid for the grid's lifetime
        return {}


def _gauss_panels(breaks: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def _graded_breaks(r_max: float, n_panels: int, q: float) -> np.ndarray:
    cap = GRADED_WIDTH_CAP * r_max / n_panels
    breaks = [r_max]
    while len(breaks) < n_panels:
        b = breaks[-1]
        breaks.append(b - min(b * (1.0 - 1.0 / q), cap))
    breaks.append(0.0)
    return np.array(breaks[::-1])


def build_radial_grid(
    r_max: float,
    node_count: int,
    scheme: str = "graded",
    *,
    breakpoints: Iterable[float] = (),
    ratio: float = GRADED_RATIO,
) -> RadialGrid:
    """Build a composite Gauss-Legendre grid on ``[0, r_max]``.

    ``composite-gauss`` uses equal panels.  ``graded`` uses panels whose
    boundaries form a geometric sequence towards zero; ``ratio`` is the
    node-to-node growth factor, so adjacent panels differ by
    ``ratio ** points_per_panel``.  Graded panel widths are capped at
    ``GRADED_WIDTH_CAP * r_max / panel_count``, so the outer region is
    uniform and the geometric clustering starts where it pays off.

    Each entry of ``breakpoints`` inside ``(0, r_max)`` becomes an extra
    panel boundary (the split panel gets a full set of nodes on both
    sides), so ``node_count`` is the count before such insertions.
    """
    m = POINTS_PER_PANEL
    if not r_max > 0 or not math.isfinite(r_max):
        raise ValueError(f"r_max must be positive, got {r_max!r}")
    if node_count < m or node_count % m:
        raise ValueError(
            f"node_count must be a multiple of {m} and at least {m}, got {node_count}"
        )
    if ratio <= 1.0:
        raise ValueError("grading ratio must exceed 1")
    n_panels = node_count // m
    if scheme == "composite-gauss":
        breaks = np.linspace(0.0, r_max, n_panels + 1)
    elif scheme == "graded":
        breaks = _graded_breaks(r_max, n_panels, ratio**m)
    else:
        raise ValueError(f"unknown grid scheme {scheme!r}")
    breaks[-1] = r_max

    extra = []
    for b in breakpoints:
        b = float(b)
        if 0.0 < b < r_max and np.min(np.abs(breaks - b)) > 1e-12 * r_max:
            extra.append(b)
    if extra:
        breaks = np.unique(np.concatenate((breaks, extra)))

    nodes, weights = _gauss_panels(breaks, m)
    return RadialGrid(
        nodes=nodes,
        weights=weights,
        r_max=float(r_max),
        scheme=scheme,
        panels=breaks,
        points_per_panel=m,
    )


def _fit_tail_exponent(grid: RadialGrid, values: np.ndarray) -> float:
    a, b = np.abs(values[-2]), np.abs(values[-1])
    if b == 0.0:
        return math.inf
    if a == 0.0:
        return 0.0
    r1, r2 = grid.nodes[-2], grid.nodes[-1]
    return float(2.0 * math.log(a / b) / (math.log1p(r2 * r2) - math.log1p(r1 * r1)))


@dataclass(frozen=True, eq=False)
class RadialSpectralFunction:
    """Samples ``f(rho_k)`` of a radial function plus its tail exponent.

    ``tail_exponent`` is the ``p`` of the continuation
    ``c * (1 + rho**2) ** (-p/2)`` beyond ``r_max``; ``math.inf`` marks a
    function that vanishes there.  ``None`` fits ``p`` from the last two
    nodes.
    """

    grid: RadialGrid
    values: np.ndarray
    tail_exponent: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values)
        if not np.iscomplexobj(values):
            values = values.astype(float)
        if values.shape != self.grid.nodes.shape:
            raise ValueError("values must have one entry per grid node")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite at every node")
        object.__setattr__(self, "values", values)
        if self.tail_exponent is None:
            object.__setattr__(self, "tail_exponent", _fit_tail_exponent(self.grid, values))
        else:
            object.__setattr__(self, "tail_exponent", float(self.tail_exponent))

    @classmethod
    def from_callable(
        cls,
        grid: RadialGrid,
        func: Callable[[np.ndarray], np.ndarray],
        tail_exponent: float | None = None,
    ) -> "RadialSpectralFunction":
        return cls(grid, np.asarray(func(grid.nodes)), tail_exponent)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialSpectralFunction":
        return cls(grid, np.zeros_like(grid.nodes), math.inf)

    @property
    def has_tail(self) -> bool:
        return not math.isinf(self.tail_exponent) and self.values[-1] != 0

    @property
    def tail_amplitude(self):
        """Coefficient ``c`` of the continuation, matched at the last node."""
        p = self.tail_exponent
        if math.isinf(p) or self.values[-1] == 0:
            return 0.0
        r = self.grid.nodes[-1]
        with np.errstate(over="ignore"):
            return self.values[-1] * (1.0 + r * r) ** (0.5 * p)

    def with_values(self, values, tail_exponent=None) -> "RadialSpectralFunction":
        p = self.tail_exponent if tail_exponent is None else tail_exponent
        return RadialSpectralFunction(self.grid, values, p)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def _check(self, other: "RadialSpectralFunction"):
        if other.grid is not self.grid:
            raise ValueError("functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return RadialSpectralFunction(
            self.grid, self.values + other.values, min(self.tail_exponent, other.tail_exponent)
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if isinstance(scalar, RadialSpectralFunction):
            return NotImplemented
        if scalar == 0:
            return RadialSpectralFunction(self.grid, self.values * 0, math.inf)
        return RadialSpectralFunction(self.grid, self.values * scalar, self.tail_exponent)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self


def power_tail_integral(r_min: float, decay: float) -> float:
    """``int_{r_min}^inf rho^2 (1 + rho^2)^(-decay) d rho`` in closed form.

    With ``t = rho^2 / (1 + rho^2)`` the integrand becomes
    ``t^(1/2) (1 - t)^(decay - 5/2) / 2``, an incomplete Beta integral.
    Finite iff ``decay > 3/2``.
    """
    b = decay - 1.5
    if b <= 0:
        raise DivergenceError(f"power tail with decay {decay} is not integrable")
    x = 1.0 / (1.0 + r_min * r_min)
    return 0.5 * special.beta(1.5, b) * special.betainc(b, 1.5, x)


def _check_exponent(s: float) -> float:
    s = float(s)
    if not math.isfinite(s):
        raise ValueError(f"exponent must be finite, got {s!r}")
    return s


def _tail_integral(f: RadialSpectralFunction, s: float, power: int) -> float:
    """``int_{r_max}^inf rho^2 (1+rho^2)^s |continuation|^power d rho``.

    Written relative to the last node so that steep fitted tails (huge
    ``p``) neither overflow nor underflow.
    """
    p = f.tail_exponent
    last = abs(f.values[-1])
    if math.isinf(p) or last == 0:
        return 0.0
    decay = 0.5 * power * p
    r_last = f.grid.nodes[-1]
    R = f.grid.r_max
    log_pref = power * math.log(last) + decay * math.log1p(r_last * r_last)
    if decay - s < 60.0:
        return math.exp(log_pref) * power_tail_integral(R, decay - s)
    ref = math.log1p(r_last * r_last)
    integrand = lambda r: r * r * (1.0 + r * r) ** s * math.exp(-decay * (math.log1p(r * r) - ref))
    val, _ = integrate.quad(integrand, R, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return last**power * val


def weighted_l1_norm(f: RadialSpectralFunction, s: float) -> float:
    """``4 pi int rho^2 (1 + rho^2)^(s/2) |f| d rho`` including the analytic tail."""
    s = _check_exponent(s)
    g = f.grid
    p = f.tail_exponent
    if f.has_tail and not p - s > 3.0:
        raise DivergenceError(
            f"weighted L1 norm diverges: tail exponent {p} - s {s} <= 3"
        )
    rho = g.nodes
    body = np.sum(g.weights * rho**2 * (1.0 + rho**2) ** (0.5 * s) * np.abs(f.values))
    return float(4.0 * math.pi * (body + _tail_integral(f, 0.5 * s, 1)))


def weighted_l2_norm(f: RadialSpectralFunction, s: float) -> float:
    """``(4 pi int rho^2 (1 + rho^2)^s |f|^2 d rho)^(1/2)`` including the tail."""
    s = _check_exponent(s)
    g = f.grid
    p = f.tail_exponent
    if f.has_tail and not 2.0 * p - 2.0 * s > 3.0:
        raise DivergenceError(
            f"weighted L2 norm diverges: 2*(tail exponent {p}) - 2s <= 3"
        )
    # factor out the peak so that squaring neither underflows nor overflows
    peak = float(np.max(np.abs(f.values)))
    if peak == 0.0:
        return 0.0
    f = f.with_values(f.values / peak)
    rho = g.nodes
    body = np.sum(g.weights * rho**2 * (1.0 + rho**2) ** s * np.abs(f.values) ** 2)
    return float(peak * math.sqrt(4.0 * math.pi * (body + _tail_integral(f, s, 2))))


def hydrogen_ground_state_ft(rho):
    """Fourier transform ``sqrt(2/pi) * 2 / (1 + rho^2)^2`` of ``exp(-|x|)``."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0):
        raise ValueError("rho must be non-negative")
    out = SQRT_2_OVER_PI * 2.0 / (1.0 + rho_arr * rho_arr) ** 2
    return float(out) if out.ndim == 0 else out


def hydrogen_function(grid: RadialGrid, charge: float = 1.0) -> RadialSpectralFunction:
    """Hydrogen-like ground state transform ``psi_hat(rho / Z)`` sampled on ``grid``."""
    return RadialSpectralFunction.from_callable(
        grid, lambda r: hydrogen_ground_state_ft(r / charge), tail_exponent=4.0
    )


def hydrogen_barron_norm_exact(s: float) -> float:
    """Closed-form ``||psi_hat||_{1,s}`` of the hydrogen ground state.

    ``4 pi sqrt(2/pi) 2 int rho^2 (1+rho^2)^((s-4)/2)`` reduces to
    ``4 pi sqrt(2/pi) B(3/2, (1-s)/2)``, finite for ``s < 1``.
    """
    s = float(s)
    if not s < 1.0:
        raise DivergenceError("hydrogen Barron norm is infinite for s >= 1")
    return 4.0 * math.pi * SQRT_2_OVER_PI * special.beta(1.5, 0.5 * (1.0 - s))


def l1_shape_error(u: RadialSpectralFunction, reference: RadialSpectralFunction) -> float:
    """Relative ``||.||_{1,0}`` distance after scaling both to unit norm."""
    nu = weighted_l1_norm(u, 0.0)
    nr = weighted_l1_norm(reference, 0.0)
    sign = 1.0 if np.sum(np.real(u.values)) >= 0 else -1.0
    diff = (sign / nu) * u - (1.0 / nr) * reference
    return weighted_l1_norm(diff, 0.0)
