"""Domain vocabulary: chain geometry, component reliabilities, hybrid layouts.

All values are frozen dataclasses. Construction does no checking; the
``validate_*`` functions do, and return the (possibly completed) value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum


class ValidationError(ValueError):
    """Raised when a model value violates one of its constraints."""

    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class Scheme(str, Enum):
    UNPROTECTED = "unprotected"
    BACKUP = "backup"
    BACKUP_VNF_ONLY = "backup_vnf_only"
    CODING = "coding"
    HYBRID = "hybrid"


class Overhead(str, Enum):
    REDIRECTION = "redirection"
    DECODING = "decoding"


class SubflowClass(str, Enum):
    MAIN = "main"
    REDUNDANT = "redundant"


class PartKind(str, Enum):
    HEADER = "H"
    PAYLOAD = "P"


@dataclass(frozen=True)
class ChainSpec:
    """Parallelization geometry of one service chain.

    ``k`` main sub-SFCs and ``r`` redundant ones, each spread over ``N``
    servers; server stage ``s`` hosts ``psi[s]`` VNF types.
    """

    k: int
    r: int
    N: int
    psi: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "psi", tuple(self.psi))

    @property
    def Psi(self) -> int:
        return sum(self.psi)

    @property
    def n_subflows(self) -> int:
        return self.k + self.r

    def stage_offsets(self) -> tuple[int, ...]:
        """Index of the first VNF type of every stage, plus the total."""
        offsets = [0]
        for count in self.psi:
            offsets.append(offsets[-1] + count)
        return tuple(offsets)

    @classmethod
    def even(cls, k: int, r: int, N: int, Psi: int) -> ChainSpec:
        """Spread ``Psi`` VNFs over ``N`` servers as evenly as possible, larger stages first."""
        return cls(k, r, N, even_split(Psi, N))


def even_split(total: int, parts: int) -> tuple[int, ...]:
    if parts < 1:
        raise ValidationError("N", f"must be >= 1, got {parts}")
    base, extra = divmod(total, parts)
    return tuple(base + 1 if s < extra else base for s in range(parts))


@dataclass(frozen=True)
class ReliabilityParams:
    """Up-probabilities of the six component classes.

    ``*_main`` apply to main (active) sub-SFCs, ``*_red`` to redundant
    (backup) ones.
    """

    conn_main: float
    conn_red: float
    server_main: float
    server_red: float
    vnf_main: float
    vnf_red: float

    @classmethod
    def uniform(cls, p: float) -> ReliabilityParams:
        return cls(p, p, p, p, p, p)

    @classmethod
    def symmetric(cls, conn: float, server: float, vnf: float) -> ReliabilityParams:
        return cls(conn, conn, server, server, vnf, vnf)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def for_class(self, cls: SubflowClass) -> tuple[float, float, float]:
        """(connectivity, server, vnf) reliabilities of one sub-flow class."""
        if cls is SubflowClass.MAIN:
            return self.conn_main, self.server_main, self.vnf_main
        return self.conn_red, self.server_red, self.vnf_red

    def vnf_only(self, vnf: float | None = None) -> ReliabilityParams:
        """Perfect segments and servers; every VNF up with probability ``vnf``."""
        v = self.vnf_main if vnf is None else vnf
        return ReliabilityParams(1.0, 1.0, 1.0, 1.0, v, v)

    def scaled_failures(self, main: float = 1.0, red: float = 1.0) -> ReliabilityParams:
        """Multiply every failure probability of a side by a factor."""

        def scale(p: float, factor: float) -> float:
            return min(1.0, max(0.0, 1.0 - (1.0 - p) * factor))

        return ReliabilityParams(
            scale(self.conn_main, main),
            scale(self.conn_red, red),
            scale(self.server_main, main),
            scale(self.server_red, red),
            scale(self.vnf_main, main),
            scale(self.vnf_red, red),
        )


RELIABILITY_FIELDS = tuple(f.name for f in fields(ReliabilityParams))


@dataclass(frozen=True)
class ChainPart:
    """One contiguous piece of a hybrid-protected chain.

    ``servers`` and ``psi`` may be left as None and are then filled in by
    :func:`validate_hybrid_layout`.
    """

    kind: PartKind
    vnfs: int
    servers: int | None = None
    psi: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PartKind(self.kind))
        if self.psi is not None:
            object.__setattr__(self, "psi", tuple(self.psi))

    def chain(self, k: int, r: int) -> ChainSpec:
        if self.psi is None:
            raise ValidationError("layout", "part geometry not resolved; validate the layout first")
        return ChainSpec(k, r, len(self.psi), self.psi)


@dataclass(frozen=True)
class HybridLayout:
    parts: tuple[ChainPart, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def M_h(self) -> int:
        return sum(1 for p in self.parts if p.kind is PartKind.HEADER)

    @property
    def M_p(self) -> int:
        return sum(1 for p in self.parts if p.kind is PartKind.PAYLOAD)

    @classmethod
    def parse(cls, text: str) -> HybridLayout:
        """Parse the compact form ``"H:3,P:1,H:1"``."""
        parts = []
        for token in text.split(","):
            token = token.strip()
            try:
                kind, count = token.split(":")
                parts.append(ChainPart(PartKind(kind.strip().upper()), int(count)))
            except ValueError as exc:
                raise ValidationError("layout", f"cannot parse part {token!r}") from exc
        return cls(tuple(parts))

    def __str__(self) -> str:
        return ",".join(f"{p.kind.value}:{p.vnfs}" for p in self.parts)


@dataclass(frozen=True)
class SuccessReport:
    scheme: str
    probability: float
    components: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValidationError("probability", f"{self.probability} outside [0, 1]")


def validate_chain_spec(spec: ChainSpec) -> ChainSpec:
    if spec.k < 1:
        raise ValidationError("k", f"must be >= 1, got {spec.k}")
    if spec.r < 0:
        raise ValidationError("r", f"must be >= 0, got {spec.r}")
    if spec.r > spec.k:
        raise ValidationError("r", f"r={spec.r} exceeds k={spec.k}")
    if spec.N < 1:
        raise ValidationError("N", f"must be >= 1, got {spec.N}")
    if not spec.psi:
        raise ValidationError("psi", "empty")
    if len(spec.psi) != spec.N:
        raise ValidationError("psi", f"length {len(spec.psi)} != N={spec.N}")
    for s, count in enumerate(spec.psi):
        if count < 1:
            raise ValidationError("psi", f"stage {s} hosts {count} VNFs, need >= 1")
    return spec


def validate_reliability(rel: ReliabilityParams) -> ReliabilityParams:
    for name, value in rel.as_dict().items():
        if not (0.0 <= value <= 1.0) or math.isnan(value):
            raise ValidationError(name, f"{value} outside [0, 1]")
    return rel


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def validate_hybrid_layout(layout: HybridLayout, spec: ChainSpec) -> HybridLayout:
    """Check VNF counts against ``spec.Psi`` and resolve each part's servers.

    A part without explicit geometry gets ``round(N * vnfs / Psi)`` servers,
    clamped to ``[1, vnfs]``, with its VNFs spread evenly over them.
    """
    validate_chain_spec(spec)
    if not layout.parts:
        raise ValidationError("layout", "no parts")
    total = 0
    resolved = []
    for idx, part in enumerate(layout.parts):
        if part.vnfs < 1:
            raise ValidationError("layout", f"part {idx} has {part.vnfs} VNFs, need >= 1")
        total += part.vnfs
        psi = part.psi
        if psi is None:
            servers = part.servers
            if servers is None:
                servers = _round_half_up(spec.N * part.vnfs / spec.Psi)
                servers = min(max(servers, 1), part.vnfs)
            psi = even_split(part.vnfs, servers)
        if sum(psi) != part.vnfs or any(c < 1 for c in psi):
            raise ValidationError("layout", f"part {idx} psi {psi} does not split {part.vnfs} VNFs")
        if part.servers is not None and part.servers != len(psi):
            raise ValidationError("layout", f"part {idx} servers={part.servers} but psi has {len(psi)} stages")
        resolved.append(replace(part, servers=len(psi), psi=psi))
    if total != spec.Psi:
        raise ValidationError("layout", f"part VNF counts sum to {total} != Psi={spec.Psi}")
    return HybridLayout(tuple(resolved))
