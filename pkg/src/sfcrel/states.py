"""Component up/down states and the success predicates evaluated on them.

A :class:`SystemState` covers every component of the k+r parallel
sub-SFCs at once. Rows ``0..k-1`` of each array are the main (active)
sub-SFCs, rows ``k..k+r-1`` the redundant (backup) ones. Each sub-SFC has
N+1 path segments (segment ``s < N`` leads to server stage ``s``, segment
``N`` to the destination), N servers and Psi VNF instances, one per type.

Arrays may carry any number of leading batch dimensions; all predicates
broadcast over them.

Canonical component order, used for flat bit vectors and state indices:

1. destination segments of sub-SFCs ``0..k+r-1``;
2. for each stage s: active segments, backup segments, active servers,
   backup servers, active VNFs (row major, sub-SFC then type), backup VNFs.

State index ``i`` sets component ``c`` up iff bit ``c`` of ``i`` is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import ChainSpec, ReliabilityParams


@dataclass(frozen=True)
class SystemState:
    seg: np.ndarray  # (..., k+r, N+1)
    srv: np.ndarray  # (..., k+r, N)
    vnf: np.ndarray  # (..., k+r, Psi)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.seg.shape[:-2]

    def check(self, spec: ChainSpec) -> None:
        n = spec.n_subflows
        want = {"seg": (n, spec.N + 1), "srv": (n, spec.N), "vnf": (n, spec.Psi)}
        for name, shape in want.items():
            got = getattr(self, name).shape[-2:]
            if got != shape:
                raise ValueError(f"state.{name} has trailing shape {got}, expected {shape}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SystemState):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in ("seg", "srv", "vnf")
        )

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def all_up(cls, spec: ChainSpec) -> SystemState:
        n = spec.n_subflows
        return cls(
            np.ones((n, spec.N + 1), dtype=bool),
            np.ones((n, spec.N), dtype=bool),
            np.ones((n, spec.Psi), dtype=bool),
        )

    def copy(self) -> SystemState:
        return SystemState(self.seg.copy(), self.srv.copy(), self.vnf.copy())


class StateLayout:
    """Maps the canonical flat component order onto :class:`SystemState` arrays."""

    def __init__(self, spec: ChainSpec) -> None:
        self.spec = spec
        k, r, N = spec.k, spec.r, spec.N
        n = k + r
        offsets = spec.stage_offsets()
        seg = np.empty((n, N + 1), dtype=np.int64)
        srv = np.empty((n, N), dtype=np.int64)
        vnf = np.empty((n, spec.Psi), dtype=np.int64)
        pos = 0

        def take(count: int) -> np.ndarray:
            nonlocal pos
            out = np.arange(pos, pos + count)
            pos += count
            return out

        seg[:, N] = take(n)
        for s, psi_s in enumerate(spec.psi):
            seg[:k, s] = take(k)
            seg[k:, s] = take(r)
            srv[:k, s] = take(k)
            srv[k:, s] = take(r)
            lo, hi = offsets[s], offsets[s + 1]
            vnf[:k, lo:hi] = take(k * psi_s).reshape(k, psi_s)
            vnf[k:, lo:hi] = take(r * psi_s).reshape(r, psi_s)
        self.seg_pos = seg
        self.srv_pos = srv
        self.vnf_pos = vnf
        self.size = pos

    def unflatten(self, bits: np.ndarray) -> SystemState:
        """Turn ``(..., size)`` booleans into a (batched) state."""
        return SystemState(bits[..., self.seg_pos], bits[..., self.srv_pos], bits[..., self.vnf_pos])

    def flatten(self, state: SystemState) -> np.ndarray:
        out = np.empty(state.batch_shape + (self.size,), dtype=bool)
        out[..., self.seg_pos] = state.seg
        out[..., self.srv_pos] = state.srv
        out[..., self.vnf_pos] = state.vnf
        return out

    def probabilities(self, rel: ReliabilityParams) -> np.ndarray:
        """Up-probability of every component, canonical order."""
        k = self.spec.k
        p = np.empty(self.size, dtype=float)
        p[self.seg_pos[:k]] = rel.conn_main
        p[self.seg_pos[k:]] = rel.conn_red
        p[self.srv_pos[:k]] = rel.server_main
        p[self.srv_pos[k:]] = rel.server_red
        p[self.vnf_pos[:k]] = rel.vnf_main
        p[self.vnf_pos[k:]] = rel.vnf_red
        return p

    # Component groups, as sorted flat index arrays.

    @cached_property
    def destination_main(self) -> np.ndarray:
        return np.sort(self.seg_pos[: self.spec.k, self.spec.N])

    def stage(self, s: int) -> np.ndarray:
        offsets = self.spec.stage_offsets()
        idx = np.concatenate(
            [
                self.seg_pos[:, s],
                self.srv_pos[:, s],
                self.vnf_pos[:, offsets[s] : offsets[s + 1]].ravel(),
            ]
        )
        return np.sort(idx)

    def active_stage(self, s: int) -> np.ndarray:
        k = self.spec.k
        offsets = self.spec.stage_offsets()
        idx = np.concatenate(
            [
                self.seg_pos[:k, s],
                self.srv_pos[:k, s],
                self.vnf_pos[:k, offsets[s] : offsets[s + 1]].ravel(),
            ]
        )
        return np.sort(idx)

    def subflow(self, i: int) -> np.ndarray:
        return np.sort(np.concatenate([self.seg_pos[i], self.srv_pos[i], self.vnf_pos[i]]))


@dataclass(frozen=True)
class StageFailureCounts:
    """Failure counts of one stage in the order the backup budget consumes them."""

    xi: int
    gamma: int
    f: int
    l: int  # noqa: E741
    i_t: tuple[int, ...]
    j_t: tuple[int, ...]

    def within_budget(self, r: int) -> bool:
        base = self.xi + self.gamma + self.f + self.l
        return all(base + i + j <= r for i, j in zip(self.i_t, self.j_t))


def stage_failure_counts(state: SystemState, spec: ChainSpec, s: int) -> StageFailureCounts:
    """Derive the backup-budget counts of stage ``s`` from a single (unbatched) state."""
    state.check(spec)
    if state.batch_shape:
        raise ValueError("stage_failure_counts expects a single state")
    k = spec.k
    offsets = spec.stage_offsets()
    seg = state.seg[:, s]
    srv = state.srv[:, s]
    reach = seg & srv
    vnfs = state.vnf[:, offsets[s] : offsets[s + 1]]
    xi = int((~seg[:k]).sum())
    gamma = int((~seg[k:]).sum())
    f = int((seg[:k] & ~srv[:k]).sum())
    l = int((seg[k:] & ~srv[k:]).sum())  # noqa: E741
    i_t = tuple(int(x) for x in (reach[:k, None] & ~vnfs[:k]).sum(axis=0))
    j_t = tuple(int(x) for x in (reach[k:, None] & ~vnfs[k:]).sum(axis=0))
    return StageFailureCounts(xi, gamma, f, l, i_t, j_t)


def chain_intact(state: SystemState) -> np.ndarray:
    """Per sub-SFC: every segment, server and VNF of its private chain is up. Shape (..., k+r)."""
    return state.seg.all(axis=-1) & state.srv.all(axis=-1) & state.vnf.all(axis=-1)


def backup_predicate(state: SystemState, spec: ChainSpec) -> np.ndarray:
    """Backup protection succeeds.

    All k destination segments are up, and in every stage every VNF type
    has at least k instances that are up, on an up server, behind an up
    segment, counting active and backup sub-SFCs together.
    """
    state.check(spec)
    k, N = spec.k, spec.N
    ok = state.seg[..., :k, N].all(axis=-1)
    offsets = spec.stage_offsets()
    for s in range(N):
        reach = state.seg[..., :, s] & state.srv[..., :, s]
        usable = state.vnf[..., :, offsets[s] : offsets[s + 1]] & reach[..., :, None]
        ok = ok & (usable.sum(axis=-2) >= k).all(axis=-1)
    return ok


def coding_predicate(state: SystemState, spec: ChainSpec) -> np.ndarray:
    """At least k of the k+r coded sub-flows reach the decoder intact."""
    state.check(spec)
    return chain_intact(state).sum(axis=-1) >= spec.k


def unprotected_predicate(state: SystemState, spec: ChainSpec) -> np.ndarray:
    state.check(spec)
    return chain_intact(state)[..., : spec.k].all(axis=-1)


def redirection_predicate(state: SystemState, spec: ChainSpec) -> np.ndarray:
    """Some active stage segment, active server or active VNF is down.

    Destination segments and all backup components are ignored.
    """
    state.check(spec)
    k, N = spec.k, spec.N
    up = (
        state.seg[..., :k, :N].all(axis=(-2, -1))
        & state.srv[..., :k, :].all(axis=(-2, -1))
        & state.vnf[..., :k, :].all(axis=(-2, -1))
    )
    return ~up


def decoding_predicate(state: SystemState, spec: ChainSpec) -> np.ndarray:
    """Some main sub-flow is lost, and no more than r sub-flows are lost overall."""
    state.check(spec)
    intact = chain_intact(state)
    lost_main = (~intact[..., : spec.k]).any(axis=-1)
    return lost_main & ((~intact).sum(axis=-1) <= spec.r)
