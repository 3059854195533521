"""
End-to-end synchronization with realistic detectors
===================================================

Balance the interferometer, emit pairs, lose some photons, add dark counts
and timing jitter, ship A's timestamps to B and correct B's clock.
"""
from dataclasses import replace

import numpy as np

from homsync.correlator import CorrelationConfig
from homsync.harness import ExperimentConfig, run_experiment
from homsync.timebase import ClockModel
from homsync.timetag import DetectorModel

# %%
base = ExperimentConfig(
    clock_a=ClockModel(0, 0.0, 100.0),
    clock_b=ClockModel(-1000, 0.0, 100.0),
    detector_a=DetectorModel(0.8, 1e3),
    detector_b=DetectorModel(0.8, 1e3),
    correlation=CorrelationConfig(10, 10**7),
)
rep = run_experiment(base)
print("balanced delay line:", rep.balance["delay_setting_fs"], "fs")
print("truth tau0:", rep.truth_tau0_fs, " estimate:", rep.estimated_tau0_fs)
print("residual:", rep.residual_fs, "fs")
print("B offset after correction:", rep.corrected_offset_b_fs, "fs")

# %%
# Residuals over 30 seeds.
res = np.array([run_experiment(replace(base, seed=s)).residual_fs for s in range(30)])
print("residuals:", res.tolist())
print("rms:", float(np.sqrt(np.mean(res.astype(float) ** 2))), "fs")
