"""MCMC for the local-global mixture Dirichlet-process signal-strength model.

Each non-reference drug column gets its own stick-breaking DP prior on the
per-AE signal strengths; a single global DP shared across drugs captures
between-drug association. Binary indicators ``z[i, j]`` choose per cell
between the drug's local value and the shared global value, with common
mixing proportion ``pi``. The reference "Other drugs" column is shrunk
toward 1 by a Gamma(tau, tau) prior. The ZIP variant adds per-column
structural-zero indicators ``y[i, j]`` with probabilities ``omega[j]``.

The DPs are approximated by finite stick-breaking mixtures with K
components. One sweep updates, in order: the global DP block on the
aggregated globally-assigned counts, each local DP block, the indicators
``z``, the mixing proportion ``pi``, the reference-column strengths, and
the shrinkage parameter ``tau`` (ZIP sweeps first refresh ``y`` and
``omega`` and then run the Poisson sweep on the non-structural cells).
Concentrations and conjugate parameters use Gibbs draws; the base-measure
shapes and ``tau`` use stepping-out slice sampling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .stochastic import RngStream, SliceConfig, slice_sample_step
from .tables import ContingencyTable, ExpectedCounts, expected_counts

__all__ = [
    "DpBlock",
    "ModelConfig",
    "McmcState",
    "PosteriorDraws",
    "default_truncation",
    "dpsb_update",
    "atom_sufficient_statistics",
    "poisson_lg_iteration",
    "zip_iteration",
    "init_state",
    "run_chain",
]

_ATOM_FLOOR = 1e-300
_V_EPS = 1e-12
_TAU_FLOOR = 1e-8


def default_truncation(n_rows: int, n_cols: int) -> int:
    """Default number of mixture components: max(ceil(log(I*J)), 10)."""
    return max(math.ceil(math.log(n_rows * n_cols)), 10)


@dataclass
class DpBlock:
    """State of one finite stick-breaking DP mixture.

    ``eta`` must reconstruct from the sticks ``v`` (with ``v[-1] == 1``),
    atoms are positive, and allocations index into the K components.
    """

    eta: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    alloc: np.ndarray
    alpha: float
    base_shape: float

    @property
    def n_components(self) -> int:
        return len(self.theta)

    def validate(self):
        k = self.n_components
        if not (len(self.eta) == len(self.v) == k):
            raise ValueError("eta, v, theta lengths differ")
        if self.v[-1] != 1.0:
            raise ValueError("last stick must equal 1")
        if abs(self.eta.sum() - 1.0) > 1e-12:
            raise ValueError("weights do not sum to 1")
        if np.max(np.abs(self.eta - weights_from_sticks(self.v))) > 1e-12:
            raise ValueError("weights inconsistent with sticks")
        if (self.theta <= 0).any():
            raise ValueError("atoms must be positive")
        if len(self.alloc) and (self.alloc.min() < 0 or self.alloc.max() >= k):
            raise ValueError("allocation out of range")
        if self.alpha <= 0 or self.base_shape <= 0:
            raise ValueError("alpha and base_shape must be positive")


def weights_from_sticks(v: np.ndarray) -> np.ndarray:
    """eta[0] = v[0], eta[h] = v[h] * prod_{t<h} (1 - v[t])."""
    remain = np.concatenate(([1.0], np.cumprod(1.0 - v[:-1])))
    return v * remain


def _log_gamma_draw(gen, shape):
    """log of Gamma(shape, 1) draws, exact even for tiny shapes.

    Uses G_b = G_{b+1} * U^(1/b): the boosted draw never underflows and the
    log of the U-power term is -Exp(1)/b.
    """
    shape = np.asarray(shape, dtype=np.float64)
    boosted = gen.gamma(shape + 1.0)
    return np.log(boosted) - gen.exponential(size=shape.shape) / shape


def _stick_draws(gen, counts, greater, alpha):
    """Sticks v_h ~ Beta(1 + counts, alpha + greater) with exact log(1 - v).

    Returns (v, log_w) where log_w = log(1 - v) keeps full precision; the
    float v saturates at 1 long before log_w loses information, and the
    concentration update needs that information.
    """
    log_ga = _log_gamma_draw(gen, 1.0 + counts)
    log_gb = _log_gamma_draw(gen, alpha + greater)
    log_w = np.minimum(log_gb - np.logaddexp(log_ga, log_gb), -1e-300)
    return -np.expm1(log_w), log_w


def sticks_from_weights(eta: np.ndarray) -> np.ndarray:
    """Invert stick-breaking; clamps interior sticks into (0, 1)."""
    k = len(eta)
    v = np.empty(k)
    remain = 1.0
    for h in range(k):
        v[h] = eta[h] / remain if remain > 0 else 1.0
        remain -= eta[h]
    v[: k - 1] = np.clip(v[: k - 1], _V_EPS, 1.0 - _V_EPS)
    v[k - 1] = 1.0
    return v


@dataclass(frozen=True)
class ModelConfig:
    """Configuration for a model fit.

    ``likelihood`` is "poisson" or "zip". ``truncation`` (K) of None means
    the ``default_truncation`` of the table dimensions. ``pi_fixed`` pins
    the local proportion (1 recovers the local-only model, 0 the
    global-only model). ``beta_fixed`` pins every DP base shape, which the
    diagnostics use to isolate conjugate updates.
    """

    likelihood: str = "poisson"
    truncation: int | None = None
    psi_alpha: float = 3.0
    psi_beta: float = 0.5
    psi_tau: float = 0.5
    pi_fixed: float | None = None
    a_pi: float = 1.0
    b_pi: float = 1.0
    slice_config: SliceConfig = field(default_factory=SliceConfig)
    n_burn: int = 5000
    n_keep: int = 10000
    thin: int = 1
    beta_fixed: float | None = None

    def __post_init__(self):
        if self.likelihood not in ("poisson", "zip"):
            raise ValueError(f"unknown likelihood '{self.likelihood}'")
        if self.truncation is not None and self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        for name in ("psi_alpha", "psi_beta", "psi_tau", "a_pi", "b_pi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pi_fixed is not None and not 0.0 <= self.pi_fixed <= 1.0:
            raise ValueError("pi_fixed must lie in [0, 1]")
        if self.n_burn < 0 or self.n_keep < 1 or self.thin < 1:
            raise ValueError("invalid chain length settings")
        if self.beta_fixed is not None and self.beta_fixed <= 0:
            raise ValueError("beta_fixed must be positive")


@dataclass
class McmcState:
    """Complete parameter state of one chain.

    ``lam`` is the realized signal-strength matrix: the z-mixture of local
    and global values on non-reference columns and the shrinkage values on
    the reference column. ``y``/``omega`` are present only for the ZIP
    likelihood.
    """

    local_blocks: list[DpBlock]
    global_block: DpBlock
    lambda_local: np.ndarray
    lambda_global: np.ndarray
    z: np.ndarray
    pi: float
    lambda_ref: np.ndarray
    tau: float
    lam: np.ndarray
    y: np.ndarray | None = None
    omega: np.ndarray | None = None


@dataclass
class PosteriorDraws:
    """Retained post-burn-in draws plus hyperparameter traces."""

    lambda_draws: np.ndarray
    pi: np.ndarray
    tau: np.ndarray
    alpha_local: np.ndarray
    beta_local: np.ndarray
    alpha_global: np.ndarray
    beta_global: np.ndarray
    z_ones: np.ndarray
    omega: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.lambda_draws.shape[0]


def _log_half_cauchy(x: float, scale: float) -> float:
    if x <= 0:
        return -np.inf
    return math.log(2.0 / (math.pi * scale)) - math.log1p((x / scale) ** 2)


def _gamma_shape_rate_loglik(values_log_sum, values_sum, count, shape):
    """Sum of log Gamma(shape, rate=shape) densities via sufficient stats."""
    return (
        count * (shape * math.log(shape) - gammaln(shape))
        + (shape - 1.0) * values_log_sum
        - shape * values_sum
    )


def atom_sufficient_statistics(n, E, incl, alloc, n_components):
    """Per-component sums of included counts and expected counts."""
    w = incl.astype(np.float64)
    shape_sum = np.bincount(alloc, weights=n * w, minlength=n_components)
    rate_sum = np.bincount(alloc, weights=E * w, minlength=n_components)
    return shape_sum, rate_sum


def dpsb_update(
    block: DpBlock,
    n,
    E,
    incl,
    psi_alpha: float,
    psi_beta: float,
    slice_config: SliceConfig,
    rng: RngStream,
    beta_fixed: float | None = None,
) -> np.ndarray:
    """One sweep of the stick-breaking DP block; returns the new lambdas.

    ``incl`` flags which observations contribute Poisson likelihood; the
    rest receive pure-prior allocation draws. The block is updated in
    place. With no observations the sweep reduces to a prior refresh.
    """
    gen = rng.generator
    n = np.asarray(n, dtype=np.float64)
    E = np.asarray(E, dtype=np.float64)
    incl = np.asarray(incl, dtype=np.int8)
    n_obs = len(n)
    k = block.n_components

    if n_obs > 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            logpmf = (
                n[:, None] * np.log(block.theta[None, :] * E[:, None])
                - block.theta[None, :] * E[:, None]
                - gammaln(n + 1.0)[:, None]
            )
            log_eta = np.log(block.eta)
        logw = np.where(
            incl[:, None] > 0,
            log_eta[None, :] + logpmf,
            log_eta[None, :],
        )
        gumbel = gen.gumbel(size=(n_obs, k))
        block.alloc = np.argmax(logw + gumbel, axis=1)
    else:
        block.alloc = np.empty(0, dtype=np.int64)

    shape_sum, rate_sum = atom_sufficient_statistics(n, E, incl, block.alloc, k)
    beta = block.base_shape
    block.theta = np.maximum(
        gen.gamma(shape_sum + beta, 1.0 / (rate_sum + beta)), _ATOM_FLOOR
    )
    lam = block.theta[block.alloc] if n_obs else np.empty(0)

    if beta_fixed is not None:
        block.base_shape = beta_fixed
    else:
        log_theta_sum = float(np.log(block.theta).sum())
        theta_sum = float(block.theta.sum())

        def beta_target(b):
            return _gamma_shape_rate_loglik(
                log_theta_sum, theta_sum, k, b
            ) + _log_half_cauchy(b, psi_beta)

        block.base_shape = slice_sample_step(
            beta_target, block.base_shape, slice_config, rng
        )

    counts = np.bincount(block.alloc, minlength=k).astype(np.float64)
    greater = counts.sum() - np.cumsum(counts)
    v = np.ones(k)
    log_w = np.zeros(0)
    if k > 1:
        v[:-1], log_w = _stick_draws(gen, counts[:-1], greater[:-1], block.alpha)
    block.v = v
    block.eta = v * np.exp(np.concatenate(([0.0], np.cumsum(log_w))))

    rate = psi_alpha - float(log_w.sum())
    block.alpha = max(float(gen.gamma(k, 1.0 / rate)), _ATOM_FLOOR)
    return lam


def _bernoulli_log_probs(log_p_one, log_p_zero):
    """P(one) from two unnormalized log probabilities, elementwise."""
    with np.errstate(invalid="ignore"):
        denom = np.logaddexp(log_p_one, log_p_zero)
        out = np.exp(log_p_one - denom)
    # both branches impossible only if the state is corrupt
    return np.nan_to_num(out, nan=0.5)


def _log_poisson_matrix(n, mu):
    with np.errstate(divide="ignore", invalid="ignore"):
        return n * np.log(mu) - mu - gammaln(n + 1.0)


def poisson_lg_iteration(
    state: McmcState,
    table: ContingencyTable,
    expected: ExpectedCounts,
    config: ModelConfig,
    rng: RngStream,
    active: np.ndarray | None = None,
) -> McmcState:
    """One sweep of the Poisson local-global sampler; updates state in place.

    ``active`` masks cells that currently carry Poisson likelihood (the ZIP
    wrapper passes 1 - y); inactive cells are excluded from every DP
    update and from the z / pi updates.
    """
    gen = rng.generator
    cols = table.nonreference_columns()
    ref = table.reference_column
    n = table.counts.astype(np.float64)
    E = expected.values
    if active is None:
        active = np.ones(n.shape, dtype=np.int8)
    act = active[:, cols]
    n_loc = n[:, cols]
    E_loc = E[:, cols]

    # 1. global block on the counts currently assigned to the global value
    off = (1 - state.z) * act
    n_tilde = (n_loc * off).sum(axis=1)
    e_tilde = (E_loc * off).sum(axis=1)
    incl_global = (off.sum(axis=1) > 0).astype(np.int8)
    state.lambda_global = dpsb_update(
        state.global_block,
        n_tilde,
        e_tilde,
        incl_global,
        config.psi_alpha,
        config.psi_beta,
        config.slice_config,
        rng,
        config.beta_fixed,
    )

    # 2. local block per drug
    for jj, j in enumerate(cols):
        state.lambda_local[:, jj] = dpsb_update(
            state.local_blocks[jj],
            n[:, j],
            E[:, j],
            state.z[:, jj] * active[:, j],
            config.psi_alpha,
            config.psi_beta,
            config.slice_config,
            rng,
            config.beta_fixed,
        )

    # 3. local-vs-global indicators
    pi = state.pi
    with np.errstate(divide="ignore"):
        log_pi, log_1mpi = np.log(pi), np.log1p(-pi)
    lp_local = log_pi + _log_poisson_matrix(n_loc, state.lambda_local * E_loc)
    lp_global = log_1mpi + _log_poisson_matrix(
        n_loc, state.lambda_global[:, None] * E_loc
    )
    p_one = _bernoulli_log_probs(lp_local, lp_global)
    z_new = (gen.random(size=p_one.shape) < p_one).astype(np.int8)
    state.z = np.where(act > 0, z_new, state.z).astype(np.int8)

    # 4. realized strengths for non-reference columns
    lam_cols = state.z * state.lambda_local + (1 - state.z) * state.lambda_global[:, None]
    state.lam[:, cols] = lam_cols

    # 5. common local proportion
    if config.pi_fixed is None:
        ones = float((state.z * act).sum())
        zeros = float(((1 - state.z) * act).sum())
        state.pi = float(gen.beta(config.a_pi + ones, config.b_pi + zeros))
    else:
        state.pi = config.pi_fixed

    # 6. reference column shrinkage values
    act_ref = active[:, ref].astype(np.float64)
    shape = n[:, ref] * act_ref + state.tau
    rate = E[:, ref] * act_ref + state.tau
    state.lambda_ref = np.maximum(gen.gamma(shape, 1.0 / rate), _ATOM_FLOOR)
    state.lam[:, ref] = state.lambda_ref

    # 7. shrinkage hyperparameter tau
    log_sum = float(np.log(state.lambda_ref).sum())
    lin_sum = float(state.lambda_ref.sum())
    n_rows = len(state.lambda_ref)

    def tau_target(t):
        return _gamma_shape_rate_loglik(log_sum, lin_sum, n_rows, t) + _log_half_cauchy(
            t, config.psi_tau
        )

    tau_cfg = config.slice_config
    if tau_cfg.lower_bound < _TAU_FLOOR:
        tau_cfg = replace(tau_cfg, lower_bound=_TAU_FLOOR)
    state.tau = slice_sample_step(tau_target, state.tau, tau_cfg, rng)
    return state


def zip_iteration(
    state: McmcState,
    table: ContingencyTable,
    expected: ExpectedCounts,
    config: ModelConfig,
    rng: RngStream,
) -> McmcState:
    """One sweep of the ZIP variant: refresh y and omega, then the Poisson
    sweep restricted to non-structural cells."""
    gen = rng.generator
    n = table.counts
    # P(structural zero | n = 0) = sigmoid(logit(omega) + lambda * E)
    with np.errstate(divide="ignore"):
        logit_omega = np.log(state.omega) - np.log1p(-state.omega)
    score = logit_omega[None, :] + state.lam * expected.values
    with np.errstate(over="ignore"):
        p_zi = np.where(n == 0, 1.0 / (1.0 + np.exp(-score)), 0.0)
    state.y = (gen.random(size=p_zi.shape) < p_zi).astype(np.int8)

    ones = state.y.sum(axis=0).astype(np.float64)
    zeros = (1 - state.y).sum(axis=0).astype(np.float64)
    state.omega = np.clip(gen.beta(1.0 + ones, 1.0 + zeros), 1e-12, 1.0 - 1e-12)

    return poisson_lg_iteration(state, table, expected, config, rng, active=1 - state.y)


def _gamma_unit_mean_mle(values: np.ndarray) -> float:
    """Numeric MLE of the shape of a Gamma(shape, rate=shape) sample."""
    vals = np.maximum(np.asarray(values, dtype=np.float64), _ATOM_FLOOR)
    log_sum = float(np.log(vals).sum())
    lin_sum = float(vals.sum())
    count = len(vals)

    res = minimize_scalar(
        lambda b: -_gamma_shape_rate_loglik(log_sum, lin_sum, count, b),
        bounds=(1e-3, 1e3),
        method="bounded",
    )
    return float(res.x)


def _init_block(points, values, n_components, n_nonempty, gen) -> tuple[DpBlock, np.ndarray]:
    """Initialize one DP block by k-means on the included ratio points.

    ``points`` are indices into ``values`` of the included observations.
    Returns the block and each included point's cluster index (clusters
    ordered by descending weight).
    """
    ratios = values[points]
    n_pts = len(ratios)
    k = n_components
    distinct = np.unique(ratios)
    kp = max(1, min(n_nonempty, n_pts, len(distinct))) if n_pts else 0

    if kp == 0:
        beta0 = 1.0
        theta = np.maximum(gen.gamma(beta0, 1.0 / beta0, size=k), _ATOM_FLOOR)
        eta = np.full(k, 1.0 / k)
        labels_sorted = np.empty(0, dtype=np.int64)
    elif kp == 1 or len(distinct) == 1:
        centers = np.array([ratios.mean()])
        labels = np.zeros(n_pts, dtype=np.int64)
        theta, eta, labels_sorted, beta0 = _assemble_clusters(
            centers, labels, n_pts, k, gen
        )
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            centers, labels = kmeans2(
                ratios.reshape(-1, 1).astype(np.float64), kp, minit="++", seed=gen
            )
        centers = centers.ravel()
        used = np.unique(labels)
        remap = -np.ones(kp, dtype=np.int64)
        remap[used] = np.arange(len(used))
        labels = remap[labels]
        centers = centers[used]
        theta, eta, labels_sorted, beta0 = _assemble_clusters(
            centers, labels, n_pts, k, gen
        )

    v = sticks_from_weights(eta)
    eta = weights_from_sticks(v)
    alloc = np.zeros(len(values), dtype=np.int64)
    block = DpBlock(
        eta=eta,
        v=v,
        theta=theta,
        alloc=alloc,
        alpha=max(float(gen.gamma(1.0, 0.5)), 1e-8),
        base_shape=beta0,
    )
    return block, labels_sorted


def _assemble_clusters(centers, labels, n_pts, k, gen):
    """Order k-means clusters by weight, fit the base shape, fill empties."""
    kp = len(centers)
    freqs = np.bincount(labels, minlength=kp).astype(np.float64) / n_pts
    order = np.argsort(-freqs, kind="stable")
    centers = np.maximum(centers[order], _ATOM_FLOOR)
    freqs = freqs[order]
    rank = np.empty(kp, dtype=np.int64)
    rank[order] = np.arange(kp)
    labels_sorted = rank[labels]

    beta0 = _gamma_unit_mean_mle(centers)
    theta = np.empty(k)
    theta[:kp] = centers
    if k > kp:
        theta[kp:] = np.maximum(gen.gamma(beta0, 1.0 / beta0, size=k - kp), _ATOM_FLOOR)
    eta = np.empty(k)
    eta[:kp] = freqs
    eta[kp:] = freqs.min() / 10.0
    eta /= eta.sum()
    return theta, eta, labels_sorted, beta0


def init_state(
    table: ContingencyTable,
    expected: ExpectedCounts,
    config: ModelConfig,
    rng: RngStream,
) -> McmcState:
    """Starting state: k-means cluster centers as atoms, conjugate draws
    elsewhere."""
    gen = rng.generator
    n_rows, n_cols = table.shape
    cols = table.nonreference_columns()
    ref = table.reference_column
    k = config.truncation or default_truncation(n_rows, n_cols)
    n_nonempty = math.floor(min(k / 2.0, n_rows - 1)) + 1

    n = table.counts.astype(np.float64)
    E = expected.values

    if config.pi_fixed is not None:
        pi = config.pi_fixed
        if pi in (0.0, 1.0):
            z = np.full((n_rows, len(cols)), int(pi), dtype=np.int8)
        else:
            z = (gen.random((n_rows, len(cols))) < pi).astype(np.int8)
    else:
        pi = 0.5
        z = (gen.random((n_rows, len(cols))) < 0.5).astype(np.int8)

    lambda_local = np.empty((n_rows, len(cols)))
    local_blocks = []
    for jj, j in enumerate(cols):
        ratio = (n[:, j] + 0.5) / (E[:, j] + 0.5)
        pts = np.where(z[:, jj] == 1)[0]
        block, labels_sorted = _init_block(pts, ratio, k, n_nonempty, gen)
        block.alloc = _sample_allocations(block, gen, n_rows)
        block.alloc[pts] = labels_sorted
        lambda_local[:, jj] = block.theta[block.alloc]
        local_blocks.append(block)

    off = 1 - z
    n_tilde = (n[:, cols] * off).sum(axis=1)
    e_tilde = (E[:, cols] * off).sum(axis=1)
    ratio_g = (n_tilde + 0.5) / (e_tilde + 0.5)
    pts_g = np.where(off.sum(axis=1) > 0)[0]
    global_block, labels_g = _init_block(pts_g, ratio_g, k, n_nonempty, gen)
    global_block.alloc = _sample_allocations(global_block, gen, n_rows)
    global_block.alloc[pts_g] = labels_g
    lambda_global = global_block.theta[global_block.alloc]

    tau = 1.0
    lambda_ref = np.maximum(
        gen.gamma(n[:, ref] + tau, 1.0 / (E[:, ref] + tau)), _ATOM_FLOOR
    )

    lam = np.empty((n_rows, n_cols))
    lam[:, cols] = z * lambda_local + (1 - z) * lambda_global[:, None]
    lam[:, ref] = lambda_ref

    state = McmcState(
        local_blocks=local_blocks,
        global_block=global_block,
        lambda_local=lambda_local,
        lambda_global=lambda_global,
        z=z,
        pi=pi,
        lambda_ref=lambda_ref,
        tau=tau,
        lam=lam,
    )
    if config.likelihood == "zip":
        state.y = np.zeros((n_rows, n_cols), dtype=np.int8)
        state.omega = np.full(n_cols, 0.01)
    return state


def _sample_allocations(block: DpBlock, gen, count: int) -> np.ndarray:
    cum = np.cumsum(block.eta)
    u = gen.random(count) * cum[-1]
    return np.searchsorted(cum, u, side="right").clip(0, block.n_components - 1)


def run_chain(
    table: ContingencyTable, config: ModelConfig, rng: RngStream
) -> PosteriorDraws:
    """Run one chain: initialize, burn in, then retain thinned draws."""
    expected = expected_counts(table)
    state = init_state(table, expected, config, rng)
    step = zip_iteration if config.likelihood == "zip" else poisson_lg_iteration

    n_rows, n_cols = table.shape
    n_local = len(table.nonreference_columns())
    keep = config.n_keep
    lambda_draws = np.empty((keep, n_rows, n_cols))
    pi_tr = np.empty(keep)
    tau_tr = np.empty(keep)
    alpha_local = np.empty((keep, n_local))
    beta_local = np.empty((keep, n_local))
    alpha_global = np.empty(keep)
    beta_global = np.empty(keep)
    omega_tr = np.empty((keep, n_cols)) if config.likelihood == "zip" else None
    z_ones = np.zeros((n_rows, n_local), dtype=np.int64)

    for _ in range(config.n_burn):
        step(state, table, expected, config, rng)
    for d in range(keep):
        for _ in range(config.thin):
            step(state, table, expected, config, rng)
        if state.y is not None:
            # structural zeros carry zero realized strength; the state keeps
            # the positive mixture value the Gibbs conditionals need
            lambda_draws[d] = state.lam * (1 - state.y)
        else:
            lambda_draws[d] = state.lam
        pi_tr[d] = state.pi
        tau_tr[d] = state.tau
        alpha_local[d] = [b.alpha for b in state.local_blocks]
        beta_local[d] = [b.base_shape for b in state.local_blocks]
        alpha_global[d] = state.global_block.alpha
        beta_global[d] = state.global_block.base_shape
        if omega_tr is not None:
            omega_tr[d] = state.omega
        z_ones += state.z

    return PosteriorDraws(
        lambda_draws=lambda_draws,
        pi=pi_tr,
        tau=tau_tr,
        alpha_local=alpha_local,
        beta_local=beta_local,
        alpha_global=alpha_global,
        beta_global=beta_global,
        z_ones=z_ones,
        omega=omega_tr,
        diagnostics={
            "n_burn": config.n_burn,
            "n_keep": config.n_keep,
            "thin": config.thin,
            "truncation": config.truncation
            or default_truncation(n_rows, n_cols),
        },
    )
