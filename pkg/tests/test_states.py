import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfcrel.model import ChainSpec
from sfcrel.oracle import state_from_index
from sfcrel.states import (
    StateLayout,
    SystemState,
    backup_predicate,
    coding_predicate,
    decoding_predicate,
    redirection_predicate,
    stage_failure_counts,
    unprotected_predicate,
)

import brute

TINY = ChainSpec(1, 1, 1, (1,))


class TestGoldenIndices:
    # bits: 0,1 destination segments; 2,3 segments; 4,5 servers; 6,7 VNFs (active, backup)
    def test_all_up(self):
        st_ = state_from_index(TINY, 255)
        assert st_ == SystemState.all_up(TINY)
        assert backup_predicate(st_, TINY)
        assert not redirection_predicate(st_, TINY)

    def test_active_vnf_down_is_covered(self):
        st_ = state_from_index(TINY, 191)
        assert not st_.vnf[0, 0] and st_.vnf[1, 0]
        assert backup_predicate(st_, TINY)
        assert redirection_predicate(st_, TINY)
        assert not unprotected_predicate(st_, TINY)

    def test_active_segment_and_backup_server_down(self):
        st_ = state_from_index(TINY, 219)
        assert not st_.seg[0, 0] and not st_.srv[1, 0]
        assert not backup_predicate(st_, TINY)

    def test_index_range(self):
        with pytest.raises(ValueError):
            state_from_index(TINY, 256)


def test_coding_example():
    spec = ChainSpec(3, 1, 2, (3, 2))
    st_ = SystemState.all_up(spec)
    st_.vnf[0, 1] = False
    assert coding_predicate(st_, spec)
    assert decoding_predicate(st_, spec)
    st_.srv[3, 0] = False
    assert not coding_predicate(st_, spec)
    assert not decoding_predicate(st_, spec)


def test_destination_segment_only_matters_for_success():
    spec = ChainSpec(2, 1, 1, (2,))
    st_ = SystemState.all_up(spec)
    st_.seg[0, 1] = False
    assert not backup_predicate(st_, spec)
    assert not redirection_predicate(st_, spec)


def test_layout_roundtrip_and_order():
    spec = ChainSpec(2, 1, 2, (2, 1))
    layout = StateLayout(spec)
    assert layout.size == 3 * 3 + 3 * 2 + 3 * 3
    assert sorted(np.concatenate([layout.seg_pos.ravel(), layout.srv_pos.ravel(), layout.vnf_pos.ravel()])) == list(
        range(layout.size)
    )
    assert list(layout.seg_pos[:, 2]) == [0, 1, 2]
    bits = np.random.default_rng(0).random((5, layout.size)) < 0.5
    assert np.array_equal(layout.flatten(layout.unflatten(bits)), bits)


def test_batched_predicates_broadcast():
    spec = ChainSpec(2, 1, 1, (2,))
    layout = StateLayout(spec)
    bits = np.random.default_rng(1).random((4, 3, layout.size)) < 0.8
    batch = layout.unflatten(bits)
    out = backup_predicate(batch, spec)
    assert out.shape == (4, 3)
    for a in range(4):
        for b in range(3):
            assert out[a, b] == backup_predicate(layout.unflatten(bits[a, b]), spec)


def test_shape_check():
    with pytest.raises(ValueError, match="trailing shape"):
        backup_predicate(SystemState.all_up(TINY), ChainSpec(2, 1, 1, (1,)))


def _brute_state(spec, st_):
    out = {}
    for i in range(spec.n_subflows):
        for s in range(spec.N + 1):
            out[("seg", i, s)] = bool(st_.seg[i, s])
        for s in range(spec.N):
            out[("srv", i, s)] = bool(st_.srv[i, s])
            lo = spec.stage_offsets()[s]
            for t in range(spec.psi[s]):
                out[("vnf", i, s, t)] = bool(st_.vnf[i, lo + t])
    return out


@st.composite
def spec_and_bits(draw):
    k = draw(st.integers(1, 4))
    r = draw(st.integers(0, k))
    psi = tuple(draw(st.lists(st.integers(1, 3), min_size=1, max_size=3)))
    spec = ChainSpec(k, r, len(psi), psi)
    size = StateLayout(spec).size
    bits = draw(st.lists(st.booleans(), min_size=size, max_size=size))
    return spec, np.array(bits)


@settings(max_examples=300, deadline=None)
@given(spec_and_bits())
def test_predicates_match_reference(case):
    spec, bits = case
    st_ = StateLayout(spec).unflatten(bits)
    ref = _brute_state(spec, st_)
    args = (spec.k, spec.r, spec.N, spec.psi)
    assert bool(backup_predicate(st_, spec)) == brute.backup_ok(ref, *args)
    assert bool(coding_predicate(st_, spec)) == brute.coding_ok(ref, *args)
    assert bool(unprotected_predicate(st_, spec)) == brute.unprotected_ok(ref, *args)
    assert bool(redirection_predicate(st_, spec)) == brute.redirect(ref, *args)
    assert bool(decoding_predicate(st_, spec)) == brute.decode_needed(ref, *args)


@settings(max_examples=300, deadline=None)
@given(spec_and_bits())
def test_failure_counts_agree_with_backup_predicate(case):
    spec, bits = case
    st_ = StateLayout(spec).unflatten(bits)
    by_counts = bool(st_.seg[: spec.k, spec.N].all()) and all(
        stage_failure_counts(st_, spec, s).within_budget(spec.r) for s in range(spec.N)
    )
    assert by_counts == bool(backup_predicate(st_, spec))


@settings(max_examples=300, deadline=None)
@given(spec_and_bits(), st.data())
def test_dominance(case, data):
    # turning a component up never turns a success predicate false
    spec, bits = case
    layout = StateLayout(spec)
    flip = data.draw(st.integers(0, layout.size - 1))
    better = bits.copy()
    better[flip] = True
    lo, hi = layout.unflatten(bits), layout.unflatten(better)
    for pred in (backup_predicate, coding_predicate, unprotected_predicate):
        assert pred(hi, spec) >= pred(lo, spec)
    assert redirection_predicate(hi, spec) <= redirection_predicate(lo, spec)
