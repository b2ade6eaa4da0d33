"""Walk through the contingency-table layer on the bundled statin data.

The table catalogs report counts for 46 adverse events (plus a collapsed
"Other Pt" row) across six statins and a collapsed "Other drugs" reference
column. Expected null counts assume row/column independence; the ratio
n/E is the raw disproportionality signal every detector starts from.
"""

import numpy as np

from srsmine import expected_counts, load_statin_table

table = load_statin_table()
print(f"table: {table.shape[0]} AE rows x {table.shape[1]} drug columns")
print(f"grand total reports: {table.grand_total:,}")
print(f"reference column: {table.drug_names[table.reference_column]!r}\n")

E = expected_counts(table)
ratio = table.counts / E.values

print("largest observed-to-expected ratios (excluding the reference column):")
cols = table.nonreference_columns()
sub = ratio[:, cols]
flat = np.argsort(sub, axis=None)[::-1][:10]
for k in flat:
    i, jj = np.unravel_index(k, sub.shape)
    j = cols[jj]
    print(
        f"  {table.ae_names[i]:<45s} {table.drug_names[j]:<14s} "
        f"n={table.counts[i, j]:>6d}  E={E.values[i, j]:>10.1f}  n/E={ratio[i, j]:7.1f}"
    )

# sanity: expected counts reproduce the grand total
assert abs(E.values.sum() - table.grand_total) < 1e-10 * table.grand_total
print("\nexpected counts sum to the grand total, as they must.")
