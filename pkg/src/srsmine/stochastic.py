"""Seeded sampling primitives shared by every stochastic component.

All randomness flows through :class:`RngStream`, a (seed, stream_id) pair
mapped to an independent PCG64 generator. Identical pairs reproduce draws
bit-for-bit; distinct stream ids give statistically independent streams, so
chains, replicates, and bootstrap loops can run concurrently without
coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "RngStream",
    "SliceConfig",
    "sample_gamma",
    "sample_beta",
    "sample_categorical",
    "sample_dirichlet",
    "sample_multinomial",
    "slice_sample_step",
    "log_poisson_pmf",
]

# Beta draws are kept strictly inside (0, 1) so log(1 - v) stays finite in
# downstream stick-breaking updates.
_BETA_EPS = 1e-12


class RngStream:
    """Independent random stream identified by (seed, stream_id).

    Wraps a ``numpy.random.Generator`` seeded from
    ``SeedSequence(entropy=seed, spawn_key=(stream_id, ...))``. ``child(k)``
    derives a subordinate stream deterministically, which is how replicates
    hand independent streams to nested bootstrap/chain loops.
    """

    def __init__(self, seed: int, stream_id: int = 0, _spawn_key: tuple[int, ...] = ()):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._spawn_key = (int(stream_id),) + tuple(_spawn_key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self._spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def child(self, index: int) -> "RngStream":
        """Derived independent stream; deterministic in (seed, stream_id, index)."""
        return RngStream(self.seed, self.stream_id, self._spawn_key[1:] + (int(index),))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self._spawn_key})"


@dataclass(frozen=True)
class SliceConfig:
    """Tuning for the univariate stepping-out slice sampler.

    ``lower_bound`` is the domain floor (0 for scale parameters). The width
    and expansion cap are free tuning constants; the defaults work for the
    unimodal conditionals this package samples.
    """

    initial_width: float = 1.0
    max_stepping_out: int = 50
    lower_bound: float = 0.0

    def __post_init__(self):
        if self.initial_width <= 0:
            raise ValueError("initial_width must be positive")
        if self.max_stepping_out < 1:
            raise ValueError("max_stepping_out must be >= 1")


def _gen(rng) -> np.random.Generator:
    return rng.generator if isinstance(rng, RngStream) else rng


def sample_gamma(shape: float, rate: float, rng) -> float:
    """One Gamma(shape, rate) draw (mean shape/rate), floored away from 0."""
    if shape <= 0 or rate <= 0:
        raise ValueError(f"gamma parameters must be positive, got ({shape}, {rate})")
    return max(float(_gen(rng).gamma(shape, 1.0 / rate)), 1e-300)


def sample_beta(a: float, b: float, rng) -> float:
    """One Beta(a, b) draw clamped to [1e-12, 1 - 1e-12]."""
    if a <= 0 or b <= 0:
        raise ValueError(f"beta parameters must be positive, got ({a}, {b})")
    return float(np.clip(_gen(rng).beta(a, b), _BETA_EPS, 1.0 - _BETA_EPS))


def sample_categorical(weights, rng) -> int:
    """Index h with probability weights[h] / sum(weights)."""
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if total <= 0 or (w < 0).any():
        raise ValueError("weights must be nonnegative with positive sum")
    u = _gen(rng).uniform(0.0, total)
    return int(np.searchsorted(np.cumsum(w), u, side="right").clip(0, len(w) - 1))


def sample_dirichlet(concentration, rng) -> np.ndarray:
    """Dirichlet draw via normalized independent gamma draws."""
    c = np.asarray(concentration, dtype=np.float64)
    if (c <= 0).any():
        raise ValueError("dirichlet concentrations must be positive")
    g = _gen(rng).gamma(c)
    g = np.maximum(g, 1e-300)
    return g / g.sum()


def sample_multinomial(n: int, probs, rng) -> np.ndarray:
    """Multinomial(n, probs) counts summing exactly to n."""
    p = np.asarray(probs, dtype=np.float64)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probs must be nonnegative and sum to 1")
    return _gen(rng).multinomial(n, p / p.sum())


def slice_sample_step(log_density, current: float, config: SliceConfig, rng) -> float:
    """One stepping-out-and-shrinkage slice sampling update.

    Leaves ``exp(log_density)`` invariant on ``(config.lower_bound, inf)``.
    ``log_density`` must be finite at ``current``.
    """
    gen = _gen(rng)
    floor = config.lower_bound
    if not current > floor:
        raise ValueError(f"current value {current} not above lower bound {floor}")
    logf0 = log_density(current)
    if not math.isfinite(logf0):
        raise ValueError(f"log density not finite at current value {current}")
    log_y = logf0 - gen.exponential()

    w = config.initial_width
    left = current - w * gen.uniform()
    right = left + w
    j = int(gen.integers(0, config.max_stepping_out))
    k = config.max_stepping_out - 1 - j
    while j > 0 and left > floor and log_density(left) > log_y:
        left -= w
        j -= 1
    left = max(left, floor)
    while k > 0 and log_density(right) > log_y:
        right += w
        k -= 1

    while True:
        x = gen.uniform(left, right)
        if x > floor and log_density(x) > log_y:
            return x
        if x < current:
            left = x
        else:
            right = x


def log_poisson_pmf(n, mu):
    """log Poisson(mu) pmf at n; 0 when n = mu = 0, -inf when n > 0, mu = 0.

    Accepts scalars or broadcastable arrays.
    """
    n_arr = np.asarray(n)
    mu_arr = np.asarray(mu, dtype=np.float64)
    if (n_arr < 0).any() or (mu_arr < 0).any():
        raise ValueError("n and mu must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = n_arr * np.log(mu_arr) - mu_arr - gammaln(n_arr + 1.0)
    zero_mu = mu_arr == 0
    if np.ndim(out) == 0:
        if zero_mu:
            return 0.0 if n_arr == 0 else -np.inf
        return float(out)
    out = np.broadcast_to(out, np.broadcast_shapes(n_arr.shape, mu_arr.shape)).copy()
    if zero_mu.any():
        zn = np.broadcast_to(n_arr, out.shape)
        zm = np.broadcast_to(zero_mu, out.shape)
        out[zm & (zn == 0)] = 0.0
        out[zm & (zn > 0)] = -np.inf
    return out
