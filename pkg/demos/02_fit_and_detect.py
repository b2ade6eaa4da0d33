"""Fit the local-global DP Poisson model to the statin table and run
FDR-controlled signal detection.

A short chain keeps the demo quick; production settings are 5000 burn-in
and 10000 retained draws. The detection step searches the (quantile level,
threshold) grid for the FNR-minimizing rule whose estimated FDR stays
below 5%, restricted to cells with more than one report.
"""

import numpy as np

from srsmine import (
    ModelConfig,
    RngStream,
    grid_search_detect,
    load_statin_table,
    run_chain,
)

table = load_statin_table()
config = ModelConfig(likelihood="poisson", n_burn=500, n_keep=1000)

print("running MCMC (500 burn-in + 1000 retained sweeps)...")
draws = run_chain(table, config, RngStream(seed=2024))

print(f"retained draws: {draws.n_draws}")
print(f"posterior mean of the local proportion: {draws.pi.mean():.3f}")
print(f"posterior mean of the reference shrinkage: {draws.tau.mean():.1f}\n")

result = grid_search_detect(draws, table, alpha=0.05)
print(f"selected rule: quantile level p={result.p_hat}, threshold k={result.k_hat}")
print(f"estimated FDR={result.fdr_hat:.4f}, FNR={result.fnr_hat:.4f}")
print(f"signals flagged: {int(result.signals.sum())}\n")

post_median = np.median(draws.lambda_draws, axis=0)
cols = table.nonreference_columns()
print("flagged drug-AE pairs (posterior median strength, descending):")
hits = [
    (post_median[i, j], table.ae_names[i], table.drug_names[j])
    for i in range(table.shape[0])
    for j in cols
    if result.signals[i, j]
]
for strength, ae, drug in sorted(hits, reverse=True)[:15]:
    print(f"  {ae:<45s} {drug:<14s} median strength {strength:6.1f}")
if len(hits) > 15:
    print(f"  ... and {len(hits) - 15} more")
