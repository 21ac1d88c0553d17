from .erasure import (
    DecodeResult,
    Generation,
    UnrecoverableGeneration,
    decode_generation,
    encode_generation,
    generator_matrix,
    merge_subflows,
    redundancy_matrix,
    split_flow,
)
from .packets import (
    GCH_SIZE,
    CodecError,
    CodedPacket,
    FlowPacket,
    GchHeader,
    internet_checksum,
    ones_complement_sum,
    synthesize_gch,
)

__all__ = [
    "GCH_SIZE",
    "CodecError",
    "CodedPacket",
    "DecodeResult",
    "FlowPacket",
    "GchHeader",
    "Generation",
    "UnrecoverableGeneration",
    "decode_generation",
    "encode_generation",
    "generator_matrix",
    "internet_checksum",
    "merge_subflows",
    "ones_complement_sum",
    "redundancy_matrix",
    "split_flow",
    "synthesize_gch",
]
