"""Seeded random streams.

All randomness comes from numpy's ``Philox`` bit generator (Philox4x64-10, counter based)
wrapped in :class:`numpy.random.Generator`. A run is defined by one master
seed; each simulation stage gets its own stream keyed by a fixed stage index::

    stream(seed, stage) = Generator(Philox(SeedSequence(seed, spawn_key=(stage,))))

Because sub-streams are keyed rather than drawn sequentially, changing how
many numbers one stage consumes never shifts the draws of another stage.

Test vector (checked in the test suite)::

    stream(0, Stage.EMISSION).integers(0, 2**32, 3) -> see tests/test_rng.py
"""
from enum import IntEnum

import numpy as np


class Stage(IntEnum):
    BALANCING = 0
    EMISSION = 1
    DETECTION = 2


def stream(seed, stage=None):
    """Return the generator for ``stage`` of the run seeded by ``seed``.

    With ``stage=None`` the master stream itself is returned.
    """
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    key = () if stage is None else (int(stage),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))


def substreams(rng, n):
    """Split ``rng`` into ``n`` independent children.

    The children depend only on the seed sequence behind ``rng``, not on how
    many values were already drawn from it.
    """
    return rng.spawn(n)
