"""Flow packets, the generalized coding header (GCH) and coded packets.

Coded packet wire layout, big endian, 28-byte header then body::

    offset size field
         0    2 magic            0xC0DE
         2    1 version          1
         3    1 k
         4    1 r
         5    1 index            < k: main, >= k: redundant
         6    4 generation_id
        10    2 original_length  body length before padding
        12    2 total_length     header + body
        14    2 checksum         ones-complement sum over header and body
        16    4 src_addr
        20    4 dst_addr
        24    2 src_port
        26    2 dst_port

Flow packets serialize as src_addr(4) dst_addr(4) src_port(2) dst_port(2)
seq_no(4) payload_length(2) payload, so a serialized packet knows its own
length even after zero padding.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

GCH_MAGIC = 0xC0DE
GCH_VERSION = 1
GCH_FORMAT = ">HBBBBIHHHIIHH"
GCH_SIZE = struct.calcsize(GCH_FORMAT)
FLOW_FORMAT = ">IIHHIH"
FLOW_HEADER_SIZE = struct.calcsize(FLOW_FORMAT)
MAX_PAYLOAD = 1500

assert GCH_SIZE == 28


class CodecError(ValueError):
    pass


def ones_complement_sum(data: bytes) -> int:
    """16-bit ones-complement sum of big-endian words; odd data is zero padded."""
    if len(data) % 2:
        data = data + b"\x00"
    total = int(np.frombuffer(data, dtype=">u2").sum(dtype=np.uint64))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def internet_checksum(data: bytes) -> int:
    return ~ones_complement_sum(data) & 0xFFFF


@dataclass(frozen=True)
class FlowPacket:
    src_addr: int
    dst_addr: int
    src_port: int
    dst_port: int
    seq_no: int
    payload: bytes = b""

    def __post_init__(self) -> None:
        if len(self.payload) > MAX_PAYLOAD:
            raise CodecError(f"payload of {len(self.payload)} bytes exceeds {MAX_PAYLOAD}")

    @property
    def flow_id(self) -> tuple[int, int, int, int]:
        return self.src_addr, self.dst_addr, self.src_port, self.dst_port

    def to_bytes(self) -> bytes:
        head = struct.pack(
            FLOW_FORMAT,
            self.src_addr,
            self.dst_addr,
            self.src_port,
            self.dst_port,
            self.seq_no,
            len(self.payload),
        )
        return head + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> FlowPacket:
        """Parse a serialized packet, ignoring any trailing padding."""
        if len(data) < FLOW_HEADER_SIZE:
            raise CodecError(f"{len(data)} bytes is shorter than a flow packet header")
        src, dst, sport, dport, seq, length = struct.unpack_from(FLOW_FORMAT, data)
        end = FLOW_HEADER_SIZE + length
        if end > len(data):
            raise CodecError("flow packet payload truncated")
        return cls(src, dst, sport, dport, seq, bytes(data[FLOW_HEADER_SIZE:end]))

    @staticmethod
    def framed_length(data: bytes) -> int:
        """Length of the serialized packet at the start of ``data``."""
        if len(data) < FLOW_HEADER_SIZE:
            raise CodecError("too short for a flow packet header")
        (length,) = struct.unpack_from(">H", data, FLOW_HEADER_SIZE - 2)
        return FLOW_HEADER_SIZE + length


@dataclass(frozen=True)
class GchHeader:
    k: int
    r: int
    index: int
    generation_id: int
    original_length: int
    total_length: int
    checksum: int
    src_addr: int
    dst_addr: int
    src_port: int
    dst_port: int
    magic: int = GCH_MAGIC
    version: int = GCH_VERSION

    @property
    def is_main(self) -> bool:
        return self.index < self.k

    def pack(self) -> bytes:
        try:
            return struct.pack(
                GCH_FORMAT,
                self.magic,
                self.version,
                self.k,
                self.r,
                self.index,
                self.generation_id,
                self.original_length,
                self.total_length,
                self.checksum,
                self.src_addr,
                self.dst_addr,
                self.src_port,
                self.dst_port,
            )
        except struct.error as exc:
            raise CodecError(f"header field out of range: {exc}") from exc

    @classmethod
    def unpack(cls, data: bytes) -> GchHeader:
        if len(data) < GCH_SIZE:
            raise CodecError(f"{len(data)} bytes is shorter than a GCH")
        (magic, version, k, r, index, gen, orig, total, csum, src, dst, sport, dport) = struct.unpack_from(
            GCH_FORMAT, data
        )
        return cls(k, r, index, gen, orig, total, csum, src, dst, sport, dport, magic, version)


@dataclass(frozen=True)
class CodedPacket:
    gch: GchHeader
    body: bytes

    def to_bytes(self) -> bytes:
        return self.gch.pack() + self.body

    @classmethod
    def from_bytes(cls, data: bytes) -> CodedPacket:
        """Parse without validating; see :meth:`verify`."""
        gch = GchHeader.unpack(data)
        return cls(gch, bytes(data[GCH_SIZE:]))

    def verify(self) -> bool:
        g = self.gch
        if g.magic != GCH_MAGIC or g.version != GCH_VERSION:
            return False
        if g.total_length != GCH_SIZE + len(self.body) or g.index >= g.k + g.r:
            return False
        return ones_complement_sum(self.to_bytes()) == 0xFFFF


def synthesize_gch(
    template: FlowPacket,
    k: int,
    r: int,
    index: int,
    generation_id: int,
    body: bytes,
    original_length: int | None = None,
) -> GchHeader:
    """Build the GCH for one coded packet.

    Flow identifiers are copied from ``template``; lengths come from the
    body; the checksum covers the final header and body bytes.
    """
    if not 0 <= index < k + r:
        raise CodecError(f"index {index} outside 0..{k + r - 1}")
    body_length = len(body)
    total = GCH_SIZE + body_length
    if total > 0xFFFF:
        raise CodecError(f"coded packet of {total} bytes overflows the 16-bit length field")
    if original_length is None:
        original_length = body_length
    gch = GchHeader(
        k=k,
        r=r,
        index=index,
        generation_id=generation_id,
        original_length=original_length,
        total_length=total,
        checksum=0,
        src_addr=template.src_addr,
        dst_addr=template.dst_addr,
        src_port=template.src_port,
        dst_port=template.dst_port,
    )
    return replace(gch, checksum=internet_checksum(gch.pack() + body))
