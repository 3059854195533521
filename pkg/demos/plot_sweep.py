"""
Sweeping the detector jitter
============================

A sweep reruns the experiment with one parameter changed and the same
seeds for every value, so the values are compared on common random numbers.
"""
from collections import defaultdict

import numpy as np

from homsync.harness import ExperimentConfig, run_sweep, sweep_csv

# %%
reports = run_sweep(ExperimentConfig(), "jitter", [0, 50, 100, 200, 400], 10)
by_value = defaultdict(list)
for r in reports:
    if r.ok:
        by_value[r.axis_value].append(r.residual_fs)
for value, res in by_value.items():
    rms = float(np.sqrt(np.mean(np.square(res, dtype=float))))
    print(f"jitter {value:>4} fs: rms residual {rms:7.1f} fs over {len(res)} runs")

# %%
# The same table as CSV, as written by ``homsync sweep``.
print(sweep_csv(reports)[:300])
