"""Significance flags for the synthetic comparison-table fixture (scipy ttest_rel).

Reference run is use-seq; a cell gets an asterisk when p > 0.05.
"""
from scipy import stats

use_seq = {
    "meteor": [40.0, 42.5, 38.0, 45.0, 41.0, 39.5, 44.0, 43.0],
    "use": [60.0, 62.0, 58.5, 65.0, 61.0, 59.0, 63.5, 64.0],
}
runs = {
    # clearly worse on both metrics
    "cce": {
        "meteor": [35.0, 36.5, 33.0, 39.0, 35.5, 34.0, 38.0, 37.5],
        "use": [55.0, 57.5, 53.0, 60.5, 56.0, 54.0, 59.0, 58.5],
    },
    # noisy: not distinguishable on meteor, worse on use
    "bleu": {
        "meteor": [44.0, 38.0, 41.0, 42.0, 37.0, 43.5, 41.0, 46.0],
        "use": [58.0, 60.5, 57.0, 63.0, 59.5, 57.0, 62.0, 62.5],
    },
}
for name, r in runs.items():
    for metric in ("meteor", "use"):
        res = stats.ttest_rel(r[metric], use_seq[metric])
        print(f"{name} {metric} t={res.statistic:.15g} p={res.pvalue:.15g} star={res.pvalue > 0.05}")
