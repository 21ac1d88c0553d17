"""Reliability analysis of parallelized service function chains under backup,
erasure-coding and hybrid protection."""

from .model import (
    ChainPart,
    ChainSpec,
    HybridLayout,
    Overhead,
    PartKind,
    ReliabilityParams,
    Scheme,
    SubflowClass,
    SuccessReport,
    ValidationError,
    validate_chain_spec,
    validate_hybrid_layout,
)

__all__ = [
    "ChainPart",
    "ChainSpec",
    "HybridLayout",
    "Overhead",
    "PartKind",
    "ReliabilityParams",
    "Scheme",
    "SubflowClass",
    "SuccessReport",
    "ValidationError",
    "validate_chain_spec",
    "validate_hybrid_layout",
]
