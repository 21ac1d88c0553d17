"""Seeded Monte-Carlo estimation with Wilson confidence intervals.

Random numbers are counter based. With ``mix64`` the SplitMix64 finalizer
and ``G = 0x9E3779B97F4A7C15`` (all arithmetic mod 2^64):

    key           = mix64(master_seed)
    trial_seed(t) = mix64(key + (t + 1) * G)
    u(t, c)       = (mix64(trial_seed(t) + (c + 1) * G) >> 11) * 2^-53

Component ``c`` (canonical order, see :mod:`sfcrel.states`) of trial ``t``
is up iff ``u(t, c) < p_c``. Hybrid chains draw part ``m`` from
``mix64(trial_seed(t) ^ ((m + 1) * H))`` with ``H = 0xD1B54A32D192ED03``.
Nothing depends on how trials are grouped, so estimates are identical for
any chunk size or worker count.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .model import (
    ChainSpec,
    HybridLayout,
    Overhead,
    PartKind,
    ReliabilityParams,
    Scheme,
    validate_chain_spec,
    validate_hybrid_layout,
    validate_reliability,
)
from .oracle import predicate_for
from .states import StateLayout, SystemState, backup_predicate, coding_predicate

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
PART_STEP = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_POW_53 = 2.0**-53
Z95 = NormalDist().inv_cdf(0.975)
DEFAULT_CHUNK = 1 << 14

Target = Scheme | Overhead


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def trial_seeds(master_seed: int, trials: np.ndarray) -> np.ndarray:
    key = mix64(np.array([master_seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    t = np.asarray(trials, dtype=np.uint64)
    return mix64(key + (t + np.uint64(1)) * GOLDEN)


def part_seeds(seeds: np.ndarray, part: int) -> np.ndarray:
    return mix64(seeds ^ np.uint64(((part + 1) * int(PART_STEP)) & 0xFFFFFFFFFFFFFFFF))


def component_uniforms(seeds: np.ndarray, size: int) -> np.ndarray:
    """Uniforms in [0, 1) of shape ``seeds.shape + (size,)``."""
    c = np.arange(1, size + 1, dtype=np.uint64) * GOLDEN
    h = mix64(np.asarray(seeds, dtype=np.uint64)[..., None] + c)
    return (h >> np.uint64(11)).astype(np.float64) * _TWO_POW_53


def _sample(layout: StateLayout, p: np.ndarray, seeds: np.ndarray) -> SystemState:
    return layout.unflatten(component_uniforms(seeds, layout.size) < p)


def sample_state(spec: ChainSpec, rel: ReliabilityParams, trial_seed: int) -> SystemState:
    """The state drawn for one trial seed (see module docstring)."""
    layout = StateLayout(validate_chain_spec(spec))
    seeds = np.array(trial_seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
    return _sample(layout, layout.probabilities(rel), seeds)


@dataclass(frozen=True)
class TrialEstimate:
    mean: float
    trials: int
    ci_low: float
    ci_high: float
    seed: int
    successes: int


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be >= 1")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials)) / denom
    low = min(max(0.0, center - half), phat)
    high = max(min(1.0, center + half), phat)
    return low, high


def _make_estimate(successes: int, trials: int, seed: int) -> TrialEstimate:
    low, high = wilson_interval(successes, trials)
    return TrialEstimate(successes / trials, trials, low, high, seed, successes)


def _chunks(trials: int, chunk: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]


def _run(count_chunk, trials: int, workers: int, chunk: int) -> np.ndarray:
    ranges = _chunks(trials, chunk)
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(count_chunk, ranges))
    else:
        parts = [count_chunk(rg) for rg in ranges]
    # Integer counts: the sum is exact and order-insensitive.
    return np.sum(parts, axis=0, dtype=np.int64)


def _check(trials: int, spec: ChainSpec, rel: ReliabilityParams) -> None:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    validate_chain_spec(spec)
    validate_reliability(rel)


def estimate_many(
    targets: Iterable[Target | str],
    spec: ChainSpec,
    rel: ReliabilityParams,
    trials: int,
    master_seed: int,
    *,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> dict[Target, TrialEstimate]:
    """Estimate several single-chain targets from one shared set of sampled states.

    ``backup_vnf_only`` is sampled separately with perfect segments and servers.
    """
    _check(trials, spec, rel)
    resolved = [_as_target(t) for t in targets]
    if Scheme.HYBRID in resolved:
        raise ValueError("hybrid needs a layout; use estimate()")
    out: dict[Target, TrialEstimate] = {}
    groups = {
        False: [t for t in resolved if t is not Scheme.BACKUP_VNF_ONLY],
        True: [t for t in resolved if t is Scheme.BACKUP_VNF_ONLY],
    }
    layout = StateLayout(spec)
    for vnf_only, group in groups.items():
        if not group:
            continue
        p = layout.probabilities(rel.vnf_only() if vnf_only else rel)
        preds = [predicate_for(t) for t in group]

        def count_chunk(rg: tuple[int, int], p=p, preds=preds) -> np.ndarray:
            seeds = trial_seeds(master_seed, np.arange(rg[0], rg[1], dtype=np.uint64))
            state = _sample(layout, p, seeds)
            return np.array([int(pred(state, spec).sum()) for pred in preds], dtype=np.int64)

        counts = _run(count_chunk, trials, workers, chunk)
        for target, successes in zip(group, counts):
            out[target] = _make_estimate(int(successes), trials, master_seed)
    return {t: out[t] for t in resolved}


def estimate(
    target: Target | str,
    spec: ChainSpec,
    rel: ReliabilityParams,
    trials: int,
    master_seed: int,
    *,
    layout: HybridLayout | None = None,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> TrialEstimate:
    target = _as_target(target)
    if target is not Scheme.HYBRID:
        return estimate_many([target], spec, rel, trials, master_seed, workers=workers, chunk=chunk)[target]
    _check(trials, spec, rel)
    if layout is None:
        raise ValueError("hybrid scheme needs a layout")
    layout = validate_hybrid_layout(layout, spec)
    parts = []
    for part in layout.parts:
        chain = part.chain(spec.k, spec.r)
        st_layout = StateLayout(chain)
        pred = coding_predicate if part.kind is PartKind.HEADER else backup_predicate
        parts.append((chain, st_layout, st_layout.probabilities(rel), pred))

    def count_chunk(rg: tuple[int, int]) -> np.ndarray:
        seeds = trial_seeds(master_seed, np.arange(rg[0], rg[1], dtype=np.uint64))
        ok = np.ones(len(seeds), dtype=bool)
        for m, (chain, st_layout, p, pred) in enumerate(parts):
            ok &= pred(_sample(st_layout, p, part_seeds(seeds, m)), chain)
        return np.array([int(ok.sum())], dtype=np.int64)

    counts = _run(count_chunk, trials, workers, chunk)
    return _make_estimate(int(counts[0]), trials, master_seed)


def _as_target(t: Target | str) -> Target:
    if isinstance(t, (Scheme, Overhead)):
        return t
    for enum in (Scheme, Overhead):
        try:
            return enum(t)
        except ValueError:
            pass
    raise ValueError(f"unknown scheme or overhead {t!r}")


def estimate_targets(targets: Sequence[str]) -> list[Target]:
    return [_as_target(t) for t in targets]
