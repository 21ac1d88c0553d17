"""Exact probabilities by exhaustive enumeration of component states.

Two evaluation routes:

``joint``
    Enumerate every up/down assignment of the components the predicate can
    see (at most ``bound`` of them) and sum the probabilities of the states
    where it holds.

``factored``
    Exploit independence between disjoint component blocks. Backup success
    and "no redirection" are conjunctions of per-block conditions (the
    destination segments, then one block per server stage), so their block
    probabilities multiply. Unprotected, coding and decoding predicates only
    depend on which sub-flow chains are intact; each chain's intactness is
    enumerated on its own, then all 2^(k+r) intactness patterns are
    enumerated and fed to the same predicate. Every block must fit in
    ``bound``.

``auto`` uses ``joint`` for up to ``AUTO_JOINT_LIMIT`` relevant components
and ``factored`` beyond that, where it is far cheaper. Components
with probability exactly 0 or 1 are fixed instead of enumerated.

Every route evaluates the predicates from :mod:`sfcrel.states`, the same
ones the Monte-Carlo simulator uses.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .model import (
    ChainSpec,
    HybridLayout,
    Overhead,
    PartKind,
    ReliabilityParams,
    Scheme,
    SubflowClass,
    validate_chain_spec,
    validate_hybrid_layout,
    validate_reliability,
)
from .states import (
    StateLayout,
    SystemState,
    backup_predicate,
    chain_intact,
    coding_predicate,
    decoding_predicate,
    redirection_predicate,
    unprotected_predicate,
)

DEFAULT_BOUND = 24
AUTO_JOINT_LIMIT = 16
CHUNK_BITS = 16

Predicate = Callable[[SystemState, ChainSpec], np.ndarray]


class StateSpaceTooLarge(RuntimeError):
    def __init__(self, needed: int, bound: int) -> None:
        super().__init__(
            f"{needed} components to enumerate exceed the bound of {bound}; use Monte-Carlo instead"
        )
        self.needed = needed
        self.bound = bound


def _bits(indices: np.ndarray, width: int) -> np.ndarray:
    return ((indices[:, None] >> np.arange(width, dtype=np.int64)) & 1).astype(bool)


def _chunk_ranges(total: int) -> list[tuple[int, int]]:
    size = 1 << CHUNK_BITS
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def enumerate_states(
    spec: ChainSpec, rel: ReliabilityParams, bound: int = DEFAULT_BOUND
) -> Iterator[tuple[np.ndarray, SystemState, np.ndarray]]:
    """Yield ``(indices, states, probabilities)`` chunks over the full state space."""
    layout = StateLayout(validate_chain_spec(spec))
    if layout.size > bound:
        raise StateSpaceTooLarge(layout.size, bound)
    p = layout.probabilities(rel)
    for lo, hi in _chunk_ranges(1 << layout.size):
        idx = np.arange(lo, hi, dtype=np.int64)
        bits = _bits(idx, layout.size)
        probs = np.where(bits, p, 1.0 - p).prod(axis=1)
        yield idx, layout.unflatten(bits), probs


def state_from_index(spec: ChainSpec, index: int) -> SystemState:
    layout = StateLayout(validate_chain_spec(spec))
    if not 0 <= index < (1 << layout.size):
        raise ValueError(f"state index {index} out of range for {layout.size} components")
    return layout.unflatten(_bits(np.array([index], dtype=np.int64), layout.size)[0])


def state_probability(spec: ChainSpec, rel: ReliabilityParams, state: SystemState) -> float:
    layout = StateLayout(spec)
    p = layout.probabilities(rel)
    bits = layout.flatten(state)
    return float(np.where(bits, p, 1.0 - p).prod(axis=-1))


def _block_probability(
    layout: StateLayout,
    p: np.ndarray,
    block: np.ndarray,
    holds: Callable[[SystemState], np.ndarray],
    bound: int,
    workers: int,
) -> float:
    """P(holds) when only ``block`` varies and every other component is up."""
    base = np.ones(layout.size, dtype=bool)
    block = np.asarray(block, dtype=np.int64)
    pb = p[block]
    base[block[pb <= 0.0]] = False
    free = block[(pb > 0.0) & (pb < 1.0)]
    m = len(free)
    if m > bound:
        raise StateSpaceTooLarge(m, bound)
    pf = p[free]

    def chunk_sum(rng: tuple[int, int]) -> float:
        idx = np.arange(rng[0], rng[1], dtype=np.int64)
        bits = _bits(idx, m)
        full = np.broadcast_to(base, (len(idx), layout.size)).copy()
        full[:, free] = bits
        ok = holds(layout.unflatten(full))
        if not ok.any():
            return 0.0
        probs = np.where(bits[ok], pf, 1.0 - pf).prod(axis=1)
        return math.fsum(probs)

    ranges = _chunk_ranges(1 << m)
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(chunk_sum, ranges))
    else:
        partials = [chunk_sum(rg) for rg in ranges]
    # Partial sums are combined in chunk order, so the result does not depend on workers.
    return math.fsum(partials)


def _relevant(target: Scheme | Overhead, layout: StateLayout) -> np.ndarray:
    spec = layout.spec
    if target is Overhead.REDIRECTION:
        return np.concatenate([layout.active_stage(s) for s in range(spec.N)])
    if target is Scheme.UNPROTECTED:
        return np.concatenate([layout.subflow(i) for i in range(spec.k)])
    if target in (Scheme.BACKUP, Scheme.BACKUP_VNF_ONLY):
        stages = [layout.stage(s) for s in range(spec.N)]
        return np.concatenate([layout.destination_main, *stages])
    return np.arange(layout.size)


_PREDICATES: dict[Scheme | Overhead, Predicate] = {
    Scheme.UNPROTECTED: unprotected_predicate,
    Scheme.BACKUP: backup_predicate,
    Scheme.BACKUP_VNF_ONLY: backup_predicate,
    Scheme.CODING: coding_predicate,
    Overhead.REDIRECTION: redirection_predicate,
    Overhead.DECODING: decoding_predicate,
}


def predicate_for(target: Scheme | Overhead) -> Predicate:
    try:
        return _PREDICATES[target]
    except KeyError:
        raise ValueError(f"no single-chain predicate for {target!r}") from None


def _joint(target, spec, rel, bound, workers) -> float:
    layout = StateLayout(spec)
    p = layout.probabilities(rel)
    pred = predicate_for(target)
    return _block_probability(
        layout, p, np.sort(_relevant(target, layout)), lambda st: pred(st, spec), bound, workers
    )


def _factored(target, spec, rel, bound, workers) -> float:
    layout = StateLayout(spec)
    p = layout.probabilities(rel)
    pred = predicate_for(target)

    def holds(st: SystemState) -> np.ndarray:
        return pred(st, spec)

    if target in (Scheme.BACKUP, Scheme.BACKUP_VNF_ONLY):
        blocks = [layout.destination_main] + [layout.stage(s) for s in range(spec.N)]
        out = 1.0
        for block in blocks:
            out *= _block_probability(layout, p, block, holds, bound, workers)
        return out

    if target is Overhead.REDIRECTION:
        no_redirect = 1.0
        for s in range(spec.N):
            block = layout.active_stage(s)
            no_redirect *= _block_probability(layout, p, block, lambda st: ~holds(st), bound, workers)
        return 1.0 - no_redirect

    # Predicates that only see per-sub-flow chain intactness.
    n = spec.n_subflows
    if n > bound:
        raise StateSpaceTooLarge(n, bound)
    intact_p = np.array(
        [
            _block_probability(
                layout, p, layout.subflow(i), lambda st, i=i: chain_intact(st)[..., i], bound, workers
            )
            for i in range(n)
        ]
    )
    patterns = _bits(np.arange(1 << n, dtype=np.int64), n)
    states = SystemState(
        np.ones((len(patterns), n, spec.N + 1), dtype=bool),
        np.ones((len(patterns), n, spec.N), dtype=bool),
        np.ones((len(patterns), n, spec.Psi), dtype=bool),
    )
    # A broken chain is represented by its destination segment being down.
    states.seg[:, :, spec.N] = patterns
    ok = pred(states, spec)
    weights = np.where(patterns, intact_p, 1.0 - intact_p).prod(axis=1)
    return math.fsum(weights[ok])


def _evaluate(target, spec, rel, bound, method, workers) -> float:
    validate_chain_spec(spec)
    validate_reliability(rel)
    if method not in ("auto", "joint", "factored"):
        raise ValueError(f"unknown method {method!r}")
    if method == "joint":
        return _joint(target, spec, rel, bound, workers)
    if method == "factored":
        return _factored(target, spec, rel, bound, workers)
    if len(_relevant(target, StateLayout(spec))) <= min(bound, AUTO_JOINT_LIMIT):
        return _joint(target, spec, rel, bound, workers)
    return _factored(target, spec, rel, bound, workers)


def exact_success(
    scheme: Scheme | str,
    spec: ChainSpec,
    rel: ReliabilityParams,
    layout: HybridLayout | None = None,
    *,
    bound: int = DEFAULT_BOUND,
    method: str = "auto",
    workers: int = 1,
) -> float:
    """Exact service-success probability of a protection scheme.

    ``backup_vnf_only`` evaluates backup protection with perfect segments
    and servers and ``rel.vnf_main`` for every VNF. ``hybrid`` multiplies
    the exact values of its parts.
    """
    scheme = Scheme(scheme)
    if scheme is Scheme.HYBRID:
        if layout is None:
            raise ValueError("hybrid scheme needs a layout")
        layout = validate_hybrid_layout(layout, spec)
        out = 1.0
        for part in layout.parts:
            part_scheme = Scheme.CODING if part.kind is PartKind.HEADER else Scheme.BACKUP
            out *= _evaluate(part_scheme, part.chain(spec.k, spec.r), rel, bound, method, workers)
        return out
    if scheme is Scheme.BACKUP_VNF_ONLY:
        rel = rel.vnf_only()
    return _evaluate(scheme, spec, rel, bound, method, workers)


def exact_overhead(
    kind: Overhead | str,
    spec: ChainSpec,
    rel: ReliabilityParams,
    *,
    bound: int = DEFAULT_BOUND,
    method: str = "auto",
    workers: int = 1,
) -> float:
    return _evaluate(Overhead(kind), spec, rel, bound, method, workers)


def exact_subflow_success(
    spec: ChainSpec, rel: ReliabilityParams, cls: SubflowClass | str, *, bound: int = DEFAULT_BOUND
) -> float:
    """Probability that one sub-flow of the given class has an intact chain."""
    validate_chain_spec(spec)
    cls = SubflowClass(cls)
    if cls is SubflowClass.REDUNDANT and spec.r == 0:
        spec = ChainSpec(spec.k, 1, spec.N, spec.psi)
    row = 0 if cls is SubflowClass.MAIN else spec.k
    layout = StateLayout(spec)
    p = layout.probabilities(rel)
    return _block_probability(
        layout, p, layout.subflow(row), lambda st: chain_intact(st)[..., row], bound, 1
    )
