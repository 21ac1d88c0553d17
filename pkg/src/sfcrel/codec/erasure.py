"""Systematic (k+r, k) MDS erasure coding of packet generations.

Generator matrix: the k x k identity stacked on an r x k redundancy
matrix ``C`` over GF(256) with

    C[m][c] = (x_0 ^ y_c) / (x_m ^ y_c),   x_m = k + m,  y_c = c

i.e. a Cauchy matrix whose columns are scaled so that row 0 is all ones.
Row 0 is therefore plain XOR parity, and every square submatrix of ``C``
is nonsingular, so any k of the k+r coded packets determine the
generation. Rows for a given k do not depend on r.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TypeVar

import numpy as np

from . import gf256
from .packets import CodecError, CodedPacket, FlowPacket, synthesize_gch

T = TypeVar("T")

MAX_CODE_LENGTH = 255


class UnrecoverableGeneration(CodecError):
    """Fewer than k valid packets of a generation arrived."""


def redundancy_matrix(k: int, r: int) -> np.ndarray:
    if k < 1 or r < 0 or k + r > MAX_CODE_LENGTH + 1:
        raise CodecError(f"no code for k={k}, r={r}")
    out = np.zeros((r, k), dtype=np.int64)
    for m in range(r):
        for c in range(k):
            out[m, c] = gf256.div(k ^ c, (k + m) ^ c)
    return out


def generator_matrix(k: int, r: int) -> np.ndarray:
    """(k+r) x k systematic generator."""
    return np.concatenate([np.eye(k, dtype=np.int64), redundancy_matrix(k, r)], axis=0)


@dataclass(frozen=True)
class Generation:
    """k data units coded together; ``flow`` supplies the flow identifiers for every GCH."""

    generation_id: int
    bodies: tuple[bytes, ...]
    flow: FlowPacket

    def __post_init__(self) -> None:
        object.__setattr__(self, "bodies", tuple(bytes(b) for b in self.bodies))
        if not self.bodies:
            raise CodecError("a generation needs at least one member")

    @property
    def k(self) -> int:
        return len(self.bodies)

    @property
    def padded_length(self) -> int:
        return max(len(b) for b in self.bodies)

    @classmethod
    def from_packets(cls, generation_id: int, packets: Sequence[FlowPacket]) -> Generation:
        if not packets:
            raise CodecError("a generation needs at least one member")
        flow = packets[0]
        for p in packets[1:]:
            if p.flow_id != flow.flow_id:
                raise CodecError("generation members belong to different flows")
        return cls(generation_id, tuple(p.to_bytes() for p in packets), flow)


def _pad(body: bytes, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=np.uint8)
    out[: len(body)] = np.frombuffer(body, dtype=np.uint8)
    return out


def encode_generation(gen: Generation, r: int) -> list[CodedPacket]:
    """Return k systematic packets (bodies unchanged) followed by r redundant ones."""
    k = gen.k
    if r < 0 or r > k:
        raise CodecError(f"r={r} must lie in 0..k={k}")
    if k + r > MAX_CODE_LENGTH:
        raise CodecError(f"code length {k + r} exceeds {MAX_CODE_LENGTH}")
    out = [
        CodedPacket(synthesize_gch(gen.flow, k, r, i, gen.generation_id, body), body)
        for i, body in enumerate(gen.bodies)
    ]
    if r == 0:
        return out
    length = gen.padded_length
    units = np.stack([_pad(b, length) for b in gen.bodies])
    coded = gf256.matmul(redundancy_matrix(k, r), units)
    for m in range(r):
        body = coded[m].tobytes()
        gch = synthesize_gch(gen.flow, k, r, k + m, gen.generation_id, body, original_length=length)
        out.append(CodedPacket(gch, body))
    return out


@dataclass(frozen=True)
class DecodeResult:
    generation_id: int
    bodies: tuple[bytes, ...]
    decoded: bool
    discarded: int = 0


def decode_generation(
    received: Sequence[CodedPacket], measure: Callable[[bytes], int] | None = None
) -> DecodeResult:
    """Recover the k original bodies from any k valid packets of one generation.

    Packets failing their checksum are dropped first. If every main packet
    survived, their bodies are returned untouched and ``decoded`` is False.
    Otherwise the k x k system of received generator rows is solved.
    Recovered bodies come back at the padded length unless ``measure`` maps
    a padded body to its true length (e.g. :meth:`FlowPacket.framed_length`).
    """
    valid = [p for p in received if p.verify()]
    discarded = len(received) - len(valid)
    if not valid:
        raise UnrecoverableGeneration("no valid packets received")
    first = valid[0].gch
    k, r, gen_id = first.k, first.r, first.generation_id
    flow = (first.src_addr, first.dst_addr, first.src_port, first.dst_port)
    by_index: dict[int, CodedPacket] = {}
    for p in valid:
        g = p.gch
        if (g.k, g.r, g.generation_id) != (k, r, gen_id):
            raise CodecError("packets from different generations or codes")
        if (g.src_addr, g.dst_addr, g.src_port, g.dst_port) != flow:
            raise CodecError("packets from different flows")
        by_index.setdefault(g.index, p)

    if all(i in by_index for i in range(k)):
        bodies = tuple(by_index[i].body[: by_index[i].gch.original_length] for i in range(k))
        return DecodeResult(gen_id, bodies, False, discarded)
    if len(by_index) < k:
        raise UnrecoverableGeneration(f"generation {gen_id}: {len(by_index)} of {k} needed packets")

    mains = [i for i in range(k) if i in by_index]
    chosen = mains + sorted(i for i in by_index if i >= k)[: k - len(mains)]
    lengths = {len(by_index[i].body) for i in chosen if i >= k}
    if len(lengths) != 1:
        raise CodecError("redundant packets disagree on the padded length")
    length = lengths.pop()
    if any(len(by_index[i].body) > length for i in mains):
        raise CodecError("main packet longer than the generation's padded length")

    rows = generator_matrix(k, r)[chosen]
    units = np.stack([_pad(by_index[i].body, length) for i in chosen])
    originals = gf256.matmul(gf256.invert(rows), units)
    bodies = []
    for c in range(k):
        if c in by_index:
            bodies.append(by_index[c].body[: by_index[c].gch.original_length])
            continue
        unit = originals[c].tobytes()
        size = length if measure is None else min(length, measure(unit))
        bodies.append(unit[:size])
    return DecodeResult(gen_id, tuple(bodies), True, discarded)


def split_flow(packets: Sequence[T], k: int) -> list[list[T]]:
    """Round robin: packet i goes to sub-flow i mod k."""
    if k < 1:
        raise CodecError(f"k must be >= 1, got {k}")
    return [list(packets[i::k]) for i in range(k)]


def merge_subflows(subflows: Sequence[Sequence[T]]) -> list[T]:
    """Inverse of :func:`split_flow`."""
    out: list[T] = []
    depth = max((len(s) for s in subflows), default=0)
    for g in range(depth):
        for sub in subflows:
            if g < len(sub):
                out.append(sub[g])
    return out
