"""
Balancing the interferometer on the HOM dip
===========================================

Two photons of a pair meet on a beam splitter. When their path lengths
match they bunch and the coincidence rate drops. The balancing search scans
the delay line, finds the bottom of that dip and refines it with a parabola.
"""
import numpy as np

from homsync import rng
from homsync.balancing import BalanceConfig, balance_search, hom_probe
from homsync.quantumoptics import HomModel, OpticalPath

# %%
# Path A is 2 ns longer than path B, so the delay line on B should end up
# near 2,000,000 fs.
hom = HomModel(visibility=0.9, dip_sigma_fs=100.0, p_max=0.5)
path_a = OpticalPath(base_delay_fs=5_000_000)
path_b = OpticalPath(base_delay_fs=3_000_000)
cfg = BalanceConfig(scan_min_fs=1_998_000, scan_max_fs=2_002_000,
                    coarse_step_fs=50, pairs_per_setting=10_000)

probe = hom_probe(hom, path_a, path_b, cfg.pairs_per_setting,
                  rng.stream(0, rng.Stage.BALANCING))
result = balance_search(probe, cfg)
print("delay setting:", result.delay_setting_fs, "fs")
print("contrast:", round(result.contrast, 3))

# %%
# The scan trace holds every probe, coarse and refined, in the order taken.
trace = np.array(result.scan_trace)
near = trace[np.abs(trace[:, 0] - result.delay_setting_fs) <= 300]
for delay, count in near[np.argsort(near[:, 0])]:
    print(f"{delay:>9d} fs  {count:>5d}  " + "#" * (int(count) // 100))

# %%
# Over many seeds the error stays well inside one coarse step.
errors = []
for seed in range(20):
    probe = hom_probe(hom, path_a, path_b, cfg.pairs_per_setting,
                      rng.stream(seed, rng.Stage.BALANCING))
    errors.append(balance_search(probe, cfg).delay_setting_fs - 2_000_000)
print("errors (fs):", errors)
