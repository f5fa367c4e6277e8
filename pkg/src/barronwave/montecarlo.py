"""Seeded, stream-split Monte Carlo plumbing and 3D importance samplers.

Stream ``j`` of term ``k`` draws from
``numpy.random.default_rng(SeedSequence(seed, spawn_key=(k, j)))``.
Per-stream moments are merged in stream order, so the result does not
depend on how many worker threads evaluate the streams.  The worker count
is read from ``BARRONWAVE_THREADS`` (default 1).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

CHUNK = 1 << 16
THREADS_ENV = "BARRONWAVE_THREADS"


@dataclass(frozen=True)
class MonteCarloConfig:
    sample_count: int = 1_000_000
    seed: int = 20250513
    stream_count: int = 8

    def __post_init__(self):
        if self.sample_count < 1000:
            raise ValueError(f"sample_count must be at least 1000, got {self.sample_count}")
        if self.stream_count < 1:
            raise ValueError("stream_count must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def stream_rng(seed: int, term: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(term, stream)))


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _merge(a, b):
    na, ma, m2a = a
    nb, mb, m2b = b
    if na == 0:
        return b
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    m2 = m2a + m2b + abs(delta) ** 2 * (na * nb / n)
    return n, mean, m2


def estimate(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    mc: MonteCarloConfig,
    term: int = 0,
) -> tuple[complex, float]:
    """Mean of ``draw`` samples and its standard error.

    ``draw(rng, n)`` returns ``n`` independent weighted samples.
    """
    base, extra = divmod(mc.sample_count, mc.stream_count)
    counts = [base + (1 if j < extra else 0) for j in range(mc.stream_count)]

    def run(j):
        rng = stream_rng(mc.seed, term, j)
        acc = (0, 0.0, 0.0)
        left = counts[j]
        while left > 0:
            n = min(CHUNK, left)
            x = draw(rng, n)
            mean = x.mean()
            acc = _merge(acc, (n, mean, float(np.sum(np.abs(x - mean) ** 2))))
            left -= n
        return acc

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(mc.stream_count)))
    else:
        parts = [run(j) for j in range(mc.stream_count)]
    total = (0, 0.0, 0.0)
    for part in parts:
        total = _merge(total, part)
    n, mean, m2 = total
    return mean, math.sqrt(m2 / (n - 1) / n)


def uniform_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class SingularProposal:
    """Density ``exp(-r/l) / (4 pi l r^2)`` in ``r = |x - center|``.

    The ``1/r^2`` factor cancels the Coulomb kernel singularity in momentum
    space.
    """

    def __init__(self, center, length):
        self.center = np.asarray(center, dtype=float)
        self.length = float(length)

    def sample(self, rng, n):
        r = rng.exponential(self.length, n)
        return self.center + r[:, None] * uniform_directions(rng, n)

    def density(self, x):
        r = np.linalg.norm(x - self.center, axis=-1)
        with np.errstate(divide="ignore"):
            return np.exp(-r / self.length) / (4.0 * math.pi * self.length * r * r)


class InverseDistanceProposal:
    """Density ``exp(-r/l) / (4 pi l^2 r)``; cancels ``1/r`` in position space."""

    def __init__(self, center, length):
        self.center = np.asarray(center, dtype=float)
        self.length = float(length)

    def sample(self, rng, n):
        r = rng.gamma(2.0, self.length, n)
        return self.center + r[:, None] * uniform_directions(rng, n)

    def density(self, x):
        r = np.linalg.norm(x - self.center, axis=-1)
        with np.errstate(divide="ignore"):
            return np.exp(-r / self.length) / (4.0 * math.pi * self.length**2 * r)


class HeavyTailProposal:
    """Density ``(1 + |x - c|^2 / a^2)^(-2) / (pi^2 a^3)``.

    The radius is drawn through ``t = rho^2/(1 + rho^2) ~ Beta(3/2, 1/2)``.
    """

    def __init__(self, center, scale):
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)

    def sample(self, rng, n):
        t = rng.beta(1.5, 0.5, n)
        r = self.scale * np.sqrt(t / (1.0 - t))
        return self.center + r[:, None] * uniform_directions(rng, n)

    def density(self, x):
        a = self.scale
        q = np.sum((x - self.center) ** 2, axis=-1) / (a * a)
        return 1.0 / ((1.0 + q) ** 2 * math.pi**2 * a**3)


class GaussianProposal:
    """Isotropic normal density in R^3."""

    def __init__(self, center, sigma):
        self.center = np.asarray(center, dtype=float)
        self.sigma = float(sigma)

    def sample(self, rng, n):
        return self.center + self.sigma * rng.standard_normal((n, 3))

    def density(self, x):
        s2 = self.sigma**2
        q = np.sum((x - self.center) ** 2, axis=-1)
        return np.exp(-0.5 * q / s2) / (2.0 * math.pi * s2) ** 1.5


class Mixture:
    """Equal-weight mixture of proposals."""

    def __init__(self, *components):
        self.components = components

    def sample(self, rng, n):
        k = len(self.components)
        pick = rng.integers(0, k, n)
        out = np.empty((n, 3))
        for i, comp in enumerate(self.components):
            idx = np.flatnonzero(pick == i)
            out[idx] = comp.sample(rng, idx.size)
        return out

    def density(self, x):
        return sum(c.density(x) for c in self.components) / len(self.components)
