import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfcrel.model import ChainSpec, HybridLayout, ReliabilityParams
from sfcrel.montecarlo import estimate, estimate_many, sample_state, trial_seeds, wilson_interval
from sfcrel.states import StateLayout, SystemState

U9 = ReliabilityParams.uniform(0.9)
TINY = ChainSpec(1, 1, 1, (1,))
MASK = (1 << 64) - 1


def _mix(z):
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def _reference_bits(seed, t, n, p):
    # plain-int restatement of the documented stream
    g = 0x9E3779B97F4A7C15
    ts = _mix((_mix(seed) + (t + 1) * g) & MASK)
    return [((_mix((ts + (c + 1) * g) & MASK) >> 11) * 2.0**-53) < p for c in range(n)]


def test_stream_matches_reference():
    spec = ChainSpec(2, 1, 1, (2,))
    layout = StateLayout(spec)
    for t in range(5):
        seed = int(trial_seeds(42, np.array([t], dtype=np.uint64))[0])
        st_ = sample_state(spec, U9, seed)
        assert list(layout.flatten(st_)) == _reference_bits(42, t, layout.size, 0.9)


def test_sample_extremes_and_determinism():
    assert sample_state(TINY, ReliabilityParams.uniform(1.0), 123) == SystemState.all_up(TINY)
    down = sample_state(TINY, ReliabilityParams.uniform(0.0), 123)
    assert not down.seg.any() and not down.srv.any() and not down.vnf.any()
    assert sample_state(TINY, U9, 5) == sample_state(TINY, U9, 5)


def test_pinned_regression():
    e = estimate("unprotected", ChainSpec(1, 0, 1, (1,)), U9, 10**6, 1)
    assert e.successes == 656306
    assert e.mean == 0.656306
    assert e.ci_low <= 0.6561 <= e.ci_high


def test_determinism_and_seed_sensitivity():
    a = estimate("backup", TINY, U9, 20000, 3)
    assert estimate("backup", TINY, U9, 20000, 3) == a
    assert estimate("backup", TINY, U9, 20000, 4) != a


@pytest.mark.parametrize("target", ["backup", "coding", "redirection"])
def test_workers_and_chunks_do_not_change_results(target):
    spec = ChainSpec(3, 2, 2, (2, 1))
    base = estimate(target, spec, U9, 50000, 9, workers=1)
    assert estimate(target, spec, U9, 50000, 9, workers=4, chunk=1000) == base
    assert estimate(target, spec, U9, 50000, 9, chunk=777) == base


def test_shared_samples_match_single_target():
    spec = ChainSpec(2, 1, 1, (2,))
    many = estimate_many(["backup", "coding", "backup_vnf_only", "decoding"], spec, U9, 30000, 11)
    for t, e in many.items():
        assert estimate(t, spec, U9, 30000, 11) == e


def test_hybrid_workers_invariant():
    spec = ChainSpec(4, 1, 2, (3, 2))
    layout = HybridLayout.parse("H:3,P:1,H:1")
    a = estimate("hybrid", spec, U9, 40000, 2, layout=layout)
    assert estimate("hybrid", spec, U9, 40000, 2, layout=layout, workers=3, chunk=5000) == a
    with pytest.raises(ValueError):
        estimate("hybrid", spec, U9, 10, 2)


def test_bad_arguments():
    with pytest.raises(ValueError):
        estimate("backup", TINY, U9, 0, 1)
    with pytest.raises(ValueError):
        estimate("nonsense", TINY, U9, 10, 1)


@settings(max_examples=300)
@given(st.integers(1, 10**7).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_wilson_properties(case):
    s, n = case
    lo, hi = wilson_interval(s, n)
    assert 0.0 <= lo <= s / n <= hi <= 1.0
    assert hi - lo <= 1.0


def test_wilson_edges():
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(1 - hi)
