"""FDR-controlled, FNR-optimized signal detection from posterior draws.

A cell is a candidate signal when the p-th posterior quantile of its signal
strength exceeds a threshold k. Both rates are estimated from the posterior
null probabilities q[i, j] = Pr(lambda[i, j] <= 1): the estimated FDR sums
q over rejected cells and the estimated FNR sums 1 - q over accepted cells.
The (p, k) pair is chosen by grid search among pairs meeting the FDR cap,
minimizing FNR, breaking ties by smallest p then largest k. Cells with
n <= 1 are ineligible for rejection by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dp_mcmc import PosteriorDraws
from .tables import ContingencyTable

__all__ = [
    "DEFAULT_K_GRID",
    "DEFAULT_P_GRID",
    "DetectionResult",
    "posterior_quantile_matrix",
    "null_probability_matrix",
    "estimate_rates",
    "grid_search_detect",
    "bh_adjust",
]

DEFAULT_K_GRID = (
    1.1, 1.11, 1.12, 1.13, 1.14, 1.16, 1.17, 1.18, 1.19, 1.2,
    1.25, 1.28, 1.31, 1.33, 1.36, 1.39, 1.42, 1.44, 1.47, 1.5,
    1.6, 1.76, 1.91, 2.07, 2.22, 2.38, 2.53, 2.69, 2.84, 3.0,
)
DEFAULT_P_GRID = tuple(round(0.01 + 0.005 * i, 3) for i in range(19))


@dataclass(frozen=True)
class DetectionResult:
    """Selected test, its binary signal matrix, and estimated error rates.

    ``feasible`` is False when no grid point met the FDR cap; the signal
    matrix is then all zero and ``p_hat``/``k_hat`` are NaN.
    """

    p_hat: float
    k_hat: float
    signals: np.ndarray
    q: np.ndarray
    fdr_hat: float
    fnr_hat: float
    feasible: bool


def posterior_quantile_matrix(draws: PosteriorDraws, p: float) -> np.ndarray:
    """Per-cell empirical p-quantile of the retained strength draws."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    if draws.n_draws == 0:
        raise ValueError("no retained draws")
    return np.quantile(draws.lambda_draws, p, axis=0)


def null_probability_matrix(draws: PosteriorDraws) -> np.ndarray:
    """q[i, j]: fraction of retained draws with lambda[i, j] <= 1."""
    return (draws.lambda_draws <= 1.0).mean(axis=0)


def estimate_rates(q, T, k, eligible) -> tuple[float, float]:
    """Estimated (FDR, FNR) of the rule "reject where eligible and T > k".

    Empty-denominator conventions: FDR is 0 with no rejections and FNR is
    0 with no acceptances.
    """
    reject = (T > k) & (eligible > 0)
    accept = ~reject
    n_reject = int(reject.sum())
    n_accept = int(accept.sum())
    fdr = float(q[reject].sum() / n_reject) if n_reject else 0.0
    fnr = float((1.0 - q[accept]).sum() / n_accept) if n_accept else 0.0
    return fdr, fnr


def grid_search_detect(
    draws: PosteriorDraws,
    table: ContingencyTable,
    alpha: float = 0.05,
    p_grid=DEFAULT_P_GRID,
    k_grid=DEFAULT_K_GRID,
    require_count_above_one: bool = True,
) -> DetectionResult:
    """Pick the FNR-minimizing (p, k) among grid points with FDR <= alpha.

    ``require_count_above_one`` restricts rejections to cells with n > 1
    (the default for the local-global models; the local-only baseline
    passes False and a single-point p grid).
    """
    p_grid = sorted(p_grid)
    k_grid = sorted(k_grid)
    if not p_grid or not k_grid:
        raise ValueError("grids must be nonempty")
    q = null_probability_matrix(draws)
    if require_count_above_one:
        eligible = (table.counts > 1).astype(np.int8)
    else:
        eligible = np.ones(table.shape, dtype=np.int8)

    best = None  # (fnr, p, -k) lexicographic minimum
    for p in p_grid:
        T = posterior_quantile_matrix(draws, p)
        for k in k_grid:
            fdr, fnr = estimate_rates(q, T, k, eligible)
            if fdr > alpha:
                continue
            key = (fnr, p, -k)
            if best is None or key < best[0]:
                best = (key, p, k, fdr, fnr)

    if best is None:
        return DetectionResult(
            p_hat=float("nan"),
            k_hat=float("nan"),
            signals=np.zeros(table.shape, dtype=np.int8),
            q=q,
            fdr_hat=0.0,
            fnr_hat=float((1.0 - q).mean()),
            feasible=False,
        )
    _, p_hat, k_hat, fdr_hat, fnr_hat = best
    T = posterior_quantile_matrix(draws, p_hat)
    signals = ((T > k_hat) & (eligible > 0)).astype(np.int8)
    return DetectionResult(
        p_hat=float(p_hat),
        k_hat=float(k_hat),
        signals=signals,
        q=q,
        fdr_hat=fdr_hat,
        fnr_hat=fnr_hat,
        feasible=True,
    )


def bh_adjust(probs) -> np.ndarray:
    """Step-up Benjamini-Hochberg adjustment, returned in input order.

    adjusted_(i) = min_{j >= i} (m / j) * prob_(j) over the ascending sort,
    clipped to 1.
    """
    p = np.asarray(probs, dtype=np.float64).ravel()
    if p.size == 0:
        return p.copy()
    if (p < 0).any() or (p > 1).any():
        raise ValueError("probabilities must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(ranked[::-1])[::-1]
    adjusted = np.minimum(adjusted, 1.0)
    out = np.empty(m)
    out[order] = adjusted
    return out
