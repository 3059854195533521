import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from homsync.errors import ConfigError
from homsync.quantumoptics import (EmissionMode, HomModel, OpticalPath, SourceModel,
                                   coincidence_probability, emit_pairs, path_imbalance,
                                   simulate_hom_run)


def poisson_oracle(seed, mean, session):
    """One-draw-at-a-time inverse-CDF sampler on the documented time stream."""
    time_rng, _ = np.random.Generator(np.random.Philox(seed)).spawn(2)
    t, out = 0, []
    while True:
        u = time_rng.random()
        t += max(1, int(np.rint(-mean * math.log1p(-u))))
        if t >= session:
            return out
        out.append(t)


def test_fixed_interval_grid(seeded):
    src = SourceModel(EmissionMode.FIXED_INTERVAL, 10**9, 0.0, 2_500_000_000)
    pairs = emit_pairs(src, seeded(0))
    assert pairs.t_emit_fs.tolist() == [0, 10**9, 2 * 10**9]
    assert pairs.delta_pair_fs.tolist() == [0, 0, 0]
    assert pairs.pair_id.tolist() == [0, 1, 2]


def test_fixed_interval_short_session(seeded):
    src = SourceModel("FixedInterval", 10**9, 0.0, 1)
    assert emit_pairs(src, seeded(0)).t_emit_fs.tolist() == [0]


def test_poisson_short_session_may_be_empty(seeded):
    src = SourceModel("Poisson", 10**12, 0.0, 1)
    assert len(emit_pairs(src, seeded(0))) == 0


def test_poisson_seed42_matches_oracle(seeded):
    src = SourceModel("Poisson", 10**9, 0.0, 10**10)
    got = emit_pairs(src, seeded(42)).t_emit_fs.tolist()
    assert got == poisson_oracle(42, 10**9, 10**10)
    assert got == [
        248132633, 857294382, 1060616059, 1651580976, 2137412281, 2608202404, 2983497732,
        3908845092, 5077718376, 8028497689, 9721227973, 9946058913, 9958614917]


@pytest.mark.parametrize("seed", range(5))
def test_poisson_long_session_matches_oracle(seeded, seed):
    src = SourceModel("Poisson", 10**6, 0.0, 3 * 10**9)
    assert emit_pairs(src, seeded(seed)).t_emit_fs.tolist() == poisson_oracle(seed, 10**6, 3 * 10**9)


@pytest.mark.parametrize("seed", range(10))
def test_poisson_monotone_and_bounded(seeded, seed):
    src = SourceModel("Poisson", 10**9, 0.0, 10**12)
    t = emit_pairs(src, seeded(seed)).t_emit_fs
    assert np.all(np.diff(t) > 0)
    assert t[0] > 0 and t[-1] < 10**12
    assert len(t) <= 10 * 10**12 // 10**9
    assert abs(len(t) - 1000) < 150


def test_pair_skew_statistics(seeded):
    src = SourceModel("Poisson", 10**6, 50.0, 10**11)
    d = emit_pairs(src, seeded(1)).delta_pair_fs
    assert d.dtype == np.int64
    assert d.std() == pytest.approx(50.0, rel=0.05)


def test_path_imbalance():
    # delay line set to l_A - (l_1 + l_2)
    assert path_imbalance(OpticalPath(5_000_000, 0), OpticalPath(3_000_000, 2_000_000)) == 0
    assert path_imbalance(OpticalPath(), OpticalPath()) == 0
    assert path_imbalance(OpticalPath(100, 0), OpticalPath(0, 30)) == -70


@given(st.integers(0, 10**9), st.integers(0, 10**9), st.integers(0, 10**9), st.integers(0, 10**9))
def test_path_imbalance_antisymmetric(a0, a1, b0, b1):
    pa, pb = OpticalPath(a0, a1), OpticalPath(b0, b1)
    assert path_imbalance(pa, pb) == -path_imbalance(pb, pa)


def test_coincidence_probability_values():
    assert coincidence_probability(HomModel(1.0, 100.0, 0.5), 0) == 0.0
    assert coincidence_probability(HomModel(1.0, 100.0, 0.5), 10**6) == pytest.approx(0.5, abs=1e-15)
    # 0.5 * (1 - 0.9 * exp(-1/2)), 30-digit mpmath
    assert coincidence_probability(HomModel(0.9, 100.0, 0.5), 100) == pytest.approx(
        0.227061203129314959378290209254, rel=1e-14)


@given(st.floats(0.01, 1.0), st.floats(1.0, 1e4), st.floats(0.01, 1.0),
       st.integers(-10**5, 10**5), st.integers(0, 10**5))
def test_coincidence_even_and_monotone(v, sigma, p_max, d, extra):
    hom = HomModel(v, sigma, p_max)
    p = coincidence_probability(hom, d)
    assert p == coincidence_probability(hom, -d)
    assert coincidence_probability(hom, abs(d) + extra) >= p
    assert p >= coincidence_probability(hom, 0) == pytest.approx(p_max * (1 - v))
    assert 0.0 <= p <= p_max


def test_hom_run_edge_cases(seeded):
    assert simulate_hom_run(HomModel(1.0, 100.0, 0.5), 0, 1000, seeded(0)) == 0
    assert simulate_hom_run(HomModel(1.0, 100.0, 1.0), 10**9, 500, seeded(0)) == 500
    with pytest.raises(ValueError):
        simulate_hom_run(HomModel(), 0, 0, seeded(0))


def test_hom_run_seed7_matches_bernoulli_oracle(seeded):
    g = seeded(7)
    p = 0.5 * (1 - 0.9 * math.exp(-0.5))
    expected = sum(g.random() < p for _ in range(10_000))
    got = simulate_hom_run(HomModel(0.9, 100.0, 0.5), 100, 10_000, seeded(7))
    assert got == expected == 2300


@pytest.mark.parametrize("kwargs", [
    dict(visibility=0.0), dict(visibility=1.1), dict(dip_sigma_fs=0.0), dict(p_max=0.0)])
def test_invalid_hom(kwargs):
    with pytest.raises(ConfigError):
        HomModel(**kwargs)


@pytest.mark.parametrize("factory", [
    lambda: OpticalPath(-1, 0), lambda: OpticalPath(0, 0, 1.5),
    lambda: SourceModel(mean_interval_fs=0), lambda: SourceModel(session_length_fs=0),
    lambda: SourceModel(pair_jitter_sigma_fs=-1.0)])
def test_invalid_models(factory):
    with pytest.raises(ConfigError):
        factory()
