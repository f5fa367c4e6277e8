"""N-electron Coulomb operator in momentum space.

The Fourier transform of ``V u`` is assembled from electron-wise
convolutions: nuclear attraction terms ``-Z tau_i(a) K_i tau_i(-a)`` and
pair terms ``Q_ij^-1 K_j Q_ij / sqrt(2)``.  Each ``K_i`` integral runs over
one block ``eta_i in R^3`` and is estimated by importance sampling.  An
independent position-space estimator of ``F(V u)`` serves as oracle.

Electron indices are zero-based.  Frequencies are arrays of shape ``(N, 3)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .montecarlo import (
    GaussianProposal,
    HeavyTailProposal,
    InverseDistanceProposal,
    Mixture,
    MonteCarloConfig,
    estimate,
    uniform_directions,
)
from .riesz import apply_K_radial, kernel_integral_mc
from .spectral import RadialGrid, RadialSpectralFunction, build_radial_grid

SQRT2 = math.sqrt(2.0)

# stream keys for the position-space estimator start here, so that the two
# sides of the commutation check never share random streams
POSITION_TERM_OFFSET = 1 << 20


@dataclass(frozen=True)
class Nucleus:
    position: tuple
    charge: float


@dataclass(frozen=True)
class MolecularSystem:
    electron_count: int
    nuclei: tuple = ()

    def __post_init__(self):
        if self.electron_count < 1:
            raise ValueError("at least one electron is required")
        nuclei = tuple(
            n if isinstance(n, Nucleus) else Nucleus(tuple(map(float, n[0])), float(n[1]))
            for n in self.nuclei
        )
        object.__setattr__(self, "nuclei", nuclei)
        for n in nuclei:
            if not n.charge > 0:
                raise ValueError("nuclear charges must be positive")
            if len(n.position) != 3:
                raise ValueError("nuclear positions must be 3-vectors")
        pos = [np.asarray(n.position, dtype=float) for n in nuclei]
        for a in range(len(pos)):
            for b in range(a):
                if np.allclose(pos[a], pos[b], rtol=0.0, atol=0.0):
                    raise ValueError("nuclear positions must be pairwise distinct")

    def potential(self, x: np.ndarray) -> np.ndarray:
        """Coulomb potential at positions ``x`` of shape ``(M, N, 3)``."""
        out = np.zeros(x.shape[0])
        for nuc in self.nuclei:
            a = np.asarray(nuc.position)
            out -= nuc.charge * np.sum(1.0 / np.linalg.norm(x - a, axis=-1), axis=1)
        n = self.electron_count
        for i in range(n):
            for j in range(i + 1, n):
                out += 1.0 / np.linalg.norm(x[:, i] - x[:, j], axis=-1)
        return out


def as_frequency(omega, electron_count: int) -> np.ndarray:
    omega = np.asarray(omega, dtype=float).reshape(-1, 3)
    if omega.shape[0] != electron_count:
        raise ValueError(f"expected {electron_count} frequency blocks, got {omega.shape[0]}")
    return omega


def _check_index(i: int, n: int):
    if not 0 <= i < n:
        raise ValueError(f"electron index {i} out of range for N={n}")


def phase_modulate(value, omega, i: int, a):
    """``exp(-1j * omega_i . a) * value``."""
    omega = np.asarray(omega, dtype=float).reshape(-1, 3)
    _check_index(i, omega.shape[0])
    return np.exp(-1j * np.dot(omega[i], np.asarray(a, dtype=float))) * value


def pair_rotation_apply(omega, i: int, j: int, inverse: bool = False) -> np.ndarray:
    """Apply ``Q_ij`` (or its transpose) blockwise.

    ``Q_ij`` sends ``w_i -> (w_i - w_j)/sqrt2`` and ``w_j -> (w_i + w_j)/sqrt2``.
    Works on a single ``(N, 3)`` frequency or a batch ``(M, N, 3)``.
    """
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-2]
    _check_index(i, n)
    _check_index(j, n)
    if i == j:
        raise ValueError("pair rotation needs two distinct electrons")
    out = omega.copy()
    wi, wj = omega[..., i, :], omega[..., j, :]
    if inverse:
        out[..., i, :] = (wi + wj) / SQRT2
        out[..., j, :] = (wj - wi) / SQRT2
    else:
        out[..., i, :] = (wi - wj) / SQRT2
        out[..., j, :] = (wi + wj) / SQRT2
    return out


class SpectralState:
    """Function on ``(R^3)^N`` given on batches ``(M, N, 3)`` plus a blockwise envelope.

    ``centers[k]`` and ``scales[k]`` locate the mass of block ``k``; they
    only steer the importance samplers.
    """

    def __init__(self, func, centers, scales):
        self.func = func
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        self.scales = np.asarray(scales, dtype=float).reshape(-1)

    @property
    def electron_count(self) -> int:
        return self.centers.shape[0]

    def __call__(self, omega):
        return self.func(omega)

    @classmethod
    def radial(cls, profile, scale: float = 1.0):
        """One-electron radial function ``profile(|omega|)``."""
        return cls(lambda w: profile(np.linalg.norm(w[:, 0], axis=-1)), np.zeros((1, 3)), [scale])


@dataclass(frozen=True)
class SeparableGaussianState:
    """``u(x) = A * prod_k exp(-|x_k - c_k|^2 / (2 s_k^2)) exp(i k_k . x_k)``.

    Its transform (unitary convention) is
    ``A * prod_k s_k^3 exp(-s_k^2 |w_k - k_k|^2 / 2) exp(-i (w_k - k_k) . c_k)``.
    """

    centers: np.ndarray
    widths: np.ndarray
    wavevectors: np.ndarray = None
    amplitude: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        w = np.asarray(self.widths, dtype=float).reshape(-1)
        if w.shape[0] != c.shape[0]:
            raise ValueError("one width per electron is required")
        if np.any(w <= 0):
            raise ValueError("widths must be positive")
        k = np.zeros_like(c) if self.wavevectors is None else np.asarray(self.wavevectors, dtype=float).reshape(c.shape)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "wavevectors", k)

    @property
    def electron_count(self) -> int:
        return self.centers.shape[0]

    def __call__(self, x):
        """Position-space values on a batch ``(M, N, 3)``."""
        d2 = np.sum((x - self.centers) ** 2, axis=-1)
        phase = np.sum(x * self.wavevectors, axis=(-1, -2))
        return self.amplitude * np.exp(-0.5 * np.sum(d2 / self.widths**2, axis=-1) + 1j * phase)

    def fourier(self, omega):
        """Closed-form transform on a batch ``(M, N, 3)``."""
        shift = omega - self.wavevectors
        s = self.widths
        mag = np.prod(s**3) * np.exp(-0.5 * np.sum(s**2 * np.sum(shift**2, axis=-1), axis=-1))
        phase = -np.sum(shift * self.centers, axis=(-1, -2))
        return self.amplitude * mag * np.exp(1j * phase)

    def spectral(self) -> SpectralState:
        return SpectralState(self.fourier, self.wavevectors, 1.0 / self.widths)


def _as_state(u_hat) -> SpectralState:
    if isinstance(u_hat, SeparableGaussianState):
        return u_hat.spectral()
    return u_hat


def _replace_block(omega: np.ndarray, k: int, eta: np.ndarray) -> np.ndarray:
    batch = np.broadcast_to(omega, (eta.shape[0],) + omega.shape).copy()
    batch[:, k] = eta
    return batch


def _is_zero_state(u) -> bool:
    return getattr(u, "amplitude", 1.0) == 0


def apply_assembled_K(system: MolecularSystem, u_hat, omega, mc: MonteCarloConfig):
    """Monte Carlo value of the assembled operator applied to ``u_hat`` at ``omega``.

    Every electron-wise ``K_i`` integral gets ``mc.sample_count`` samples on
    its own streams.  Returns ``(estimate, std_error)``.
    """
    n = system.electron_count
    omega = as_frequency(omega, n)
    if u_hat is None or _is_zero_state(u_hat):
        return 0j, 0.0
    state = _as_state(u_hat)
    total, var = 0j, 0.0
    term = 0
    for i in range(n):
        for nuc in system.nuclei:
            a = np.asarray(nuc.position, dtype=float)

            def func(eta, i=i, a=a):
                return np.exp(1j * (eta @ a)) * state(_replace_block(omega, i, eta))

            est, err = kernel_integral_mc(func, omega[i], state.centers[i], state.scales[i], mc, term)
            total += -nuc.charge * np.exp(-1j * (omega[i] @ a)) * est
            var += (nuc.charge * err) ** 2
            term += 1
    for i in range(n):
        for j in range(i + 1, n):
            tilde = pair_rotation_apply(omega, i, j, inverse=True)
            # eta-locations where the two rotated blocks hit their envelopes
            ci = tilde[i] - SQRT2 * state.centers[i]
            cj = SQRT2 * state.centers[j] - tilde[i]
            center = 0.5 * (ci + cj)
            scale = max(SQRT2 * state.scales[i], SQRT2 * state.scales[j], 0.5 * np.linalg.norm(ci - cj))

            def func(eta, i=i, j=j, tilde=tilde):
                return state(pair_rotation_apply(_replace_block(tilde, j, eta), i, j))

            est, err = kernel_integral_mc(func, tilde[j], center, scale, mc, term)
            total += est / SQRT2
            var += (err / SQRT2) ** 2
            term += 1
    return total, math.sqrt(var)


def fourier_of_potential_product_mc(
    system: MolecularSystem, u: SeparableGaussianState, omega, mc: MonteCarloConfig
):
    """Position-space estimate of ``(2 pi)^(-3N/2) int V u exp(-i omega . x) dx``.

    Each Coulomb term is sampled separately: spectator electrons follow
    their Gaussian profiles, the singular coordinate mixes the Gaussian with
    a ``1/r``-cancelling radial proposal around the singular centre.
    """
    n = system.electron_count
    if u.electron_count != n:
        raise ValueError("state and system disagree on the electron count")
    omega = as_frequency(omega, n)
    if _is_zero_state(u):
        return 0j, 0.0
    pref = (2.0 * math.pi) ** (-1.5 * n)
    gauss = [GaussianProposal(u.centers[k], u.widths[k]) for k in range(n)]

    def integrand(x):
        return pref * u(x) * np.exp(-1j * np.sum(x * omega, axis=(-1, -2)))

    def spectators(rng, m, skip):
        x = np.empty((m, n, 3))
        dens = np.ones(m)
        for k in range(n):
            if k != skip:
                x[:, k] = gauss[k].sample(rng, m)
                dens *= gauss[k].density(x[:, k])
        return x, dens

    total, var = 0j, 0.0
    term = POSITION_TERM_OFFSET
    for i in range(n):
        for nuc in system.nuclei:
            a = np.asarray(nuc.position, dtype=float)
            prop = Mixture(gauss[i], InverseDistanceProposal(a, u.widths[i]))

            def draw(rng, m, i=i, a=a, prop=prop):
                x, dens = spectators(rng, m, i)
                x[:, i] = prop.sample(rng, m)
                dens *= prop.density(x[:, i])
                v = 1.0 / np.linalg.norm(x[:, i] - a, axis=-1)
                return v * integrand(x) / dens

            est, err = estimate(draw, mc, term)
            total += -nuc.charge * est
            var += (nuc.charge * err) ** 2
            term += 1
    for i in range(n):
        for j in range(i + 1, n):

            def draw(rng, m, i=i, j=j):
                x, dens = spectators(rng, m, j)
                ell = u.widths[j]
                pick = rng.random(m) < 0.5
                near = x[:, i] + rng.gamma(2.0, ell, m)[:, None] * uniform_directions(rng, m)
                x[:, j] = np.where(pick[:, None], gauss[j].sample(rng, m), near)
                r = np.linalg.norm(x[:, j] - x[:, i], axis=-1)
                q = 0.5 * gauss[j].density(x[:, j]) + 0.5 * np.exp(-r / ell) / (
                    4.0 * math.pi * ell**2 * r
                )
                return integrand(x) / (r * dens * q)

            est, err = estimate(draw, mc, term)
            total += est
            var += err**2
            term += 1
    return total, math.sqrt(var)


def coulomb_gaussian_transform(center, width: float, wavevector, omega, singular_point=(0.0, 0.0, 0.0)):
    """Closed form of ``(2 pi)^(-3/2) int g(x) exp(-i omega . x) / |x - a| dx``.

    ``g(x) = exp(-|x - c|^2 / (2 w^2)) exp(i k . x)``.  Averaging over spheres
    about ``a`` leaves a Gaussian times ``sinh`` in the radius, which
    integrates to a complex error function.
    """
    c, k, w_, a = (np.asarray(v, dtype=float).reshape(3) for v in (center, wavevector, omega, singular_point))
    d = (c - a) / width
    q = width * (w_ - k)
    z = np.sqrt(np.sum((d - 1j * q) ** 2) + 0j)
    if abs(z) < 1e-8:
        radial = 1.0
    else:
        radial = math.sqrt(math.pi / 2.0) * np.exp(0.5 * z * z) * erf(z / SQRT2) / z
    value = 4.0 * math.pi * np.exp(-0.5 * (d @ d)) * radial
    return (2.0 * math.pi) ** -1.5 * width**2 * np.exp(1j * ((k - w_) @ a)) * value


def potential_product_exact(system: MolecularSystem, u: SeparableGaussianState, omega) -> complex:
    """Closed-form ``F(V u)(omega)`` for a separable Gaussian.

    Pair terms need equal widths on the two electrons, so that the
    centre-of-mass rotation keeps the Gaussian separable.
    """
    n = system.electron_count
    omega = as_frequency(omega, n)
    if u.amplitude == 0:
        return 0j

    def block(k):
        shift = omega[k] - u.wavevectors[k]
        return u.widths[k] ** 3 * np.exp(-0.5 * u.widths[k] ** 2 * (shift @ shift) - 1j * (shift @ u.centers[k]))

    def rest(skip):
        return np.prod([block(k) for k in range(n) if k not in skip])

    total = 0j
    for i in range(n):
        for nuc in system.nuclei:
            ci = coulomb_gaussian_transform(u.centers[i], u.widths[i], u.wavevectors[i], omega[i], nuc.position)
            total += -nuc.charge * ci * rest({i})
    for i in range(n):
        for j in range(i + 1, n):
            if u.widths[i] != u.widths[j]:
                raise ValueError("pair terms need equal widths")
            w = u.widths[i]
            big = (omega[i] + omega[j]) / SQRT2
            rel = (omega[i] - omega[j]) / SQRT2
            c_big = (u.centers[i] + u.centers[j]) / SQRT2
            c_rel = (u.centers[i] - u.centers[j]) / SQRT2
            k_big = (u.wavevectors[i] + u.wavevectors[j]) / SQRT2
            k_rel = (u.wavevectors[i] - u.wavevectors[j]) / SQRT2
            com = w**3 * np.exp(-0.5 * w**2 * np.sum((big - k_big) ** 2)) * np.exp(-1j * ((big - k_big) @ c_big))
            inner = coulomb_gaussian_transform(c_rel, w, k_rel, rel)
            total += com * inner / SQRT2 * rest({i, j})
    return u.amplitude * total


@dataclass
class CommutationResult:
    lhs: complex
    rhs: complex
    sigma_distance: float
    lhs_error: float = 0.0
    rhs_error: float = 0.0

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.sigma_distance))


def commutation_residual(system, u: SeparableGaussianState, omega, mc: MonteCarloConfig):
    """Compare ``F(V u)`` (position space) with the assembled operator on ``u_hat``."""
    lhs, el = fourier_of_potential_product_mc(system, u, omega, mc)
    rhs, er = apply_assembled_K(system, u, omega, mc)
    combined = math.hypot(el, er)
    dist = abs(lhs - rhs) / combined if combined > 0 else (0.0 if lhs == rhs else math.inf)
    return CommutationResult(lhs, rhs, dist, el, er)


def aggregate_bound_constant(system: MolecularSystem) -> float:
    """Sum of absolute term weights: ``N * sum Z + N (N - 1) / (2 sqrt 2)``."""
    n = system.electron_count
    return n * sum(nuc.charge for nuc in system.nuclei) + n * (n - 1) / (2.0 * SQRT2)


def electronwise_bound_ratio_mc(
    u: SeparableGaussianState,
    i: int,
    s: float,
    mc: MonteCarloConfig,
    grid: RadialGrid | None = None,
):
    """Monte Carlo ``||K_i u_hat||_{1,s} / ||u_hat||_{1,0}`` for a separable Gaussian.

    Block ``i`` must be centred and unmodulated so that ``K_i`` reduces to
    the radial operator.  Returns ``(ratio, relative_error)``.
    """
    n = u.electron_count
    _check_index(i, n)
    if np.any(u.centers[i]) or np.any(u.wavevectors[i]):
        raise ValueError("block i must be a centred, unmodulated Gaussian")
    sig = u.widths[i]
    if grid is None:
        grid = build_radial_grid(60.0 / sig, 256, "graded")
    block = RadialSpectralFunction.from_callable(
        grid, lambda r: sig**3 * np.exp(-0.5 * (sig * r) ** 2), math.inf
    )
    kb = apply_K_radial(block)
    r_last, c_tail = grid.nodes[-1], kb.values[-1] * (1.0 + grid.nodes[-1] ** 2)

    def k_block(rho):
        inside = np.interp(rho, grid.nodes, kb.values)
        return np.where(rho <= r_last, inside, c_tail / (1.0 + rho * rho))

    heavy = HeavyTailProposal(np.zeros(3), 1.0 / sig)
    others = [GaussianProposal(u.wavevectors[k], 1.0 / u.widths[k]) for k in range(n)]
    block_l1 = (2.0 * math.pi) ** 1.5  # L1 norm of every transformed Gaussian block

    def draw(rng, m):
        w2 = np.zeros(m)
        wi = heavy.sample(rng, m)
        w2 += np.sum(wi**2, axis=1)
        for k in range(n):
            if k != i:
                w2 += np.sum(others[k].sample(rng, m) ** 2, axis=1)
        weight = (1.0 + w2) ** (0.5 * s) * np.abs(k_block(np.linalg.norm(wi, axis=1)))
        return weight / heavy.density(wi) * block_l1 ** (n - 1)

    est, err = estimate(draw, mc)
    denom = block_l1**n
    return est.real / denom, err / abs(est)
