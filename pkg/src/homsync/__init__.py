"""Simulator and analysis toolkit for entangled-photon clock synchronization.

The pipeline: balance a HOM interferometer with a delay line, emit photon
pairs, tag their arrivals at two offset clocks, ship A's timestamps to B over
a checksummed wire format, and recover the clock offset from the peak of the
arrival-time cross-correlation.
"""
from .balancing import BalanceConfig, BalanceResult, balance_search, hom_probe
from .correlator import (CorrelationConfig, CorrelationHistogram, OffsetEstimate, correlate,
                         correlate_twopass, estimate_offset, oracle_correlate)
from .harness import ExperimentConfig, ExperimentReport, load_config, run_experiment, run_sweep
from .protocol import ArrivalDataMessage, SyncSession, decode, encode, synchronize
from .quantumoptics import (EmissionMode, HomModel, OpticalPath, PairEmission, SourceModel,
                            coincidence_probability, emit_pairs, path_imbalance, simulate_hom_run)
from .timebase import ClockModel, apply_correction, clock_read, clock_read_many
from .timetag import ArrivalSeries, ClockId, DetectorModel, propagate_and_detect

__version__ = "0.1.0"
