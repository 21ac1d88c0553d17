"""Acceptance criteria, one test each.

Every test records a ``criterion`` property; the terminal summary prints a
PASS/FAIL line per criterion (see conftest.py).
"""

import itertools
import random
import time
from dataclasses import replace

import numpy as np
import pytest

from sfcrel import analytic as A
from sfcrel.cli import main
from sfcrel.codec import (
    CodedPacket,
    FlowPacket,
    Generation,
    UnrecoverableGeneration,
    decode_generation,
    encode_generation,
)
from sfcrel.experiments import DEFAULT_RELIABILITY, REGIMES, preset_config, run_experiment
from sfcrel.model import ChainSpec, HybridLayout, ReliabilityParams, SubflowClass
from sfcrel.montecarlo import estimate, estimate_many
from sfcrel.oracle import exact_overhead, exact_subflow_success, exact_success


@pytest.fixture
def criterion(record_property):
    def tag(label):
        record_property("criterion", label)

    return tag


def _random_rel(rnd, lo=0.5):
    return ReliabilityParams(*(rnd.uniform(lo, 1.0) for _ in range(6)))


def _small_specs():
    for k in (1, 2, 3):
        for r in range(0, min(2, k) + 1):
            for N in (1, 2):
                for psi in itertools.product((1, 2), repeat=N):
                    yield ChainSpec(k, r, N, psi)


def _two_part_layouts(spec):
    for a in range(1, spec.Psi):
        yield HybridLayout.parse(f"H:{a},P:{spec.Psi - a}")
        yield HybridLayout.parse(f"P:{a},H:{spec.Psi - a}")


def test_1_analytic_matches_enumeration(criterion):
    criterion("1 analytic == exhaustive enumeration")
    rnd = random.Random(2024)
    start = time.monotonic()
    worst = 0.0
    checked = 0
    for spec in _small_specs():
        for _ in range(5):
            rel = _random_rel(rnd, lo=0.0)
            pairs = [
                (A.success_unprotected(spec, rel), exact_success("unprotected", spec, rel)),
                (A.success_backup_vnf_only(spec, rel.vnf_main), exact_success("backup_vnf_only", spec, rel)),
                (A.success_backup(spec, rel), exact_success("backup", spec, rel)),
                (A.success_coding(spec, rel), exact_success("coding", spec, rel)),
                (A.prob_redirection(spec, rel), exact_overhead("redirection", spec, rel)),
                (A.prob_decoding(spec, rel), exact_overhead("decoding", spec, rel)),
            ]
            for cls in SubflowClass:
                pairs.append((A.subflow_success(spec, rel, cls), exact_subflow_success(spec, rel, cls)))
            for layout in _two_part_layouts(spec):
                pairs.append((A.success_hybrid(layout, rel, spec), exact_success("hybrid", spec, rel, layout)))
            for a, o in pairs:
                worst = max(worst, abs(a - o))
                checked += 1
    elapsed = time.monotonic() - start
    print(f"criterion 1: {checked} comparisons, max |diff| = {worst:.3g}, {elapsed:.1f}s")
    assert worst <= 1e-12
    assert elapsed <= 300


def test_2_reduction_identities(criterion):
    criterion("2 reduction identities at r=0")
    rnd = random.Random(7)
    for _ in range(1000):
        N = rnd.randint(1, 4)
        spec = ChainSpec(rnd.randint(1, 10), 0, N, tuple(rnd.randint(1, 4) for _ in range(N)))
        rel = _random_rel(rnd, lo=0.0)
        r0 = A.success_unprotected(spec, rel)
        assert A.success_backup(spec, rel) == r0
        assert A.success_coding(spec, rel) == r0
        assert A.prob_decoding(spec, rel) == 0.0


TARGETS = ["unprotected", "backup", "coding", "backup_vnf_only", "redirection", "decoding"]


def test_3_monte_carlo_calibration(criterion):
    criterion("3 Monte-Carlo calibration")
    rnd = random.Random(99)
    covered = 0
    for case in range(100):
        k = rnd.randint(1, 3)
        N = rnd.randint(1, 2)
        spec = ChainSpec(k, rnd.randint(0, k), N, tuple(rnd.randint(1, 2) for _ in range(N)))
        rel = _random_rel(rnd, lo=0.7)
        target = TARGETS[case % len(TARGETS)]
        if target in ("redirection", "decoding"):
            exact = exact_overhead(target, spec, rel)
        else:
            exact = exact_success(target, spec, rel)
        est = estimate(target, spec, rel, 10**5, 1000 + case)
        covered += est.ci_low <= exact <= est.ci_high
    pinned = estimate("unprotected", ChainSpec(1, 0, 1, (1,)), ReliabilityParams.uniform(0.9), 10**6, 1)
    print(f"criterion 3: coverage {covered}/100, pinned successes {pinned.successes}")
    assert covered >= 90
    assert (pinned.successes, pinned.mean) == (656306, 0.656306)


def test_4_crossover(criterion):
    criterion("4 single backup/coding crossover")
    k = 8
    spec = ChainSpec(k, 0, 2, (2, 2))
    diff = {}
    for r in range(0, k + 1):
        s = replace(spec, r=r)
        diff[r] = A.success_backup(s, DEFAULT_RELIABILITY) - A.success_coding(s, DEFAULT_RELIABILITY)
    # r = 0 is an exact tie (both reduce to the unprotected chain) and is left out
    signs = [diff[r] > 0 for r in range(1, k + 1)]
    changes = sum(a != b for a, b in zip(signs, signs[1:]))
    backup_wins = [r for r in range(1, k + 1) if diff[r] > 0]
    coding_wins = [r for r in range(1, k + 1) if diff[r] <= 0]
    print(f"criterion 4: backup ahead for r={backup_wins}, coding ahead for r={coding_wins}")
    assert changes == 1 and signs[0] and not signs[-1]
    # thresholds consistent with the sweep form the interval (last backup win, first coding win]
    lo, hi = max(backup_wins) / k, min(coding_wins) / k
    assert lo < 0.8 and hi > 0.4


def test_5_decoding_below_redirection(criterion):
    criterion("5 P_dec < P_R")
    for k in range(2, 9):
        for r in range(1, k + 1):
            spec = ChainSpec(k, r, 2, (2, 2))
            assert A.prob_decoding(spec, DEFAULT_RELIABILITY) < A.prob_redirection(spec, DEFAULT_RELIABILITY)


def test_6_backup_flat_in_psi(criterion):
    criterion("6 backup flat in Psi, coding decreasing")
    cfg = preset_config("fig-vnfnum", metrics=["success"])
    rows = run_experiment(cfg)
    for label in ("k=4,r=3", "k=8,r=4"):
        rb = [x.value for x in rows if x.series == label and x.scheme == "backup"]
        rc = [x.value for x in rows if x.series == label and x.scheme == "coding"]
        assert len(rb) == len(rc) == 7
        variation = (max(rb) - min(rb)) / max(rb)
        print(f"criterion 6 ({label}): backup variation {variation:.4%}, coding {rc[0]:.4f} -> {rc[-1]:.4f}")
        assert variation <= 0.02
        assert all(b < a for a, b in zip(rc, rc[1:]))


def test_7_hybrid_at_least_backup(criterion):
    criterion("7 hybrid >= backup for r/k >= 0.25")
    k = 4
    spec = ChainSpec(k, 0, 2, (3, 2))
    layout = HybridLayout.parse("H:3,P:1,H:1")
    rel = DEFAULT_RELIABILITY
    shortfalls = []
    for r in range(1, k + 1):
        s = replace(spec, r=r)
        rb, rh = A.success_backup(s, rel), A.success_hybrid(layout, rel, s)
        print(f"criterion 7: r={r} backup={rb:.6f} hybrid={rh:.6f}")
        if rh < rb:
            shortfalls.append(r)
    assert not shortfalls, f"hybrid below backup at r={shortfalls}"


def _generation(rnd, k, gen_id):
    packets = [FlowPacket(0x0A000001, 0x0A000002, 4000, 80, gen_id * k + i, rnd.randbytes(rnd.randint(0, 200))) for i in range(k)]
    return Generation.from_packets(gen_id, packets)


def test_8_codec_mds(criterion):
    criterion("8 codec any-k-of-n recovery")
    rnd = random.Random(8)
    start = time.monotonic()
    for k in range(1, 6):
        for r in range(0, k + 1):
            for g in range(20):
                gen = _generation(rnd, k, g)
                coded = encode_generation(gen, r)
                for keep in itertools.combinations(coded, k):
                    out = decode_generation(list(keep), measure=FlowPacket.framed_length)
                    assert out.bodies == gen.bodies
                for keep in itertools.combinations(coded, k - 1):
                    with pytest.raises(UnrecoverableGeneration):
                        decode_generation(list(keep))
    elapsed = time.monotonic() - start
    print(f"criterion 8: {elapsed:.1f}s")
    assert elapsed <= 120


def test_9_wire_format(criterion):
    criterion("9 wire format and checksum")
    flow = FlowPacket(0x0A000001, 0x0A000002, 5000, 6000, 0)
    coded = encode_generation(Generation(7, (bytes([1, 2]), bytes([3, 4])), flow), 1)
    assert coded[2].to_bytes() == bytes.fromhex(
        "c0de" "01" "02" "01" "02" "00000007" "0002" "001e" "fbf4" "0a000001" "0a000002" "1388" "1770" "0206"
    )
    rnd = np.random.default_rng(9)
    packets = encode_generation(_generation(random.Random(9), 4, 3), 2)
    for trial in range(10**4):
        raw = bytearray(packets[trial % len(packets)].to_bytes())
        pos = int(rnd.integers(len(raw)))
        raw[pos] ^= int(rnd.integers(1, 256))
        assert not CodedPacket.from_bytes(bytes(raw)).verify()


def test_10_determinism(criterion, tmp_path):
    criterion("10 deterministic sweeps and worker-invariant estimates")
    outs = []
    for n in range(2):
        path = tmp_path / f"run{n}.csv"
        assert main(["sweep", "--preset", "fig-kr", "--methods", "analytic,mc", "--trials", "20000", "--seed", "5",
                     "--out", str(path)]) == 0  # fmt: skip
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    spec = ChainSpec(8, 4, 2, (2, 2))
    rel = DEFAULT_RELIABILITY.scaled_failures(*REGIMES["equal"])
    targets = ["backup", "coding", "redirection", "decoding"]
    one = estimate_many(targets, spec, rel, 200_000, 3, workers=1)
    four = estimate_many(targets, spec, rel, 200_000, 3, workers=4)
    assert one == four
