"""Experiment configuration, presets, parameter sweeps and the codec demo."""

from __future__ import annotations

import copy
import csv
import io
import math
from collections.abc import Iterator
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import jsonschema
import numpy as np

from . import analytic, montecarlo, oracle
from .codec import (
    FlowPacket,
    Generation,
    UnrecoverableGeneration,
    decode_generation,
    encode_generation,
    merge_subflows,
    split_flow,
)
from .model import (
    RELIABILITY_FIELDS,
    ChainPart,
    ChainSpec,
    HybridLayout,
    Overhead,
    ReliabilityParams,
    Scheme,
    ValidationError,
    even_split,
    validate_chain_spec,
    validate_hybrid_layout,
    validate_reliability,
)

DEFAULT_RELIABILITY = ReliabilityParams.symmetric(conn=0.999, server=0.99, vnf=0.95)

# Failure-probability multipliers (main side, redundant side).
REGIMES: dict[str, tuple[float, float]] = {
    "equal": (1.0, 1.0),
    "redundant-better": (1.0, 0.25),
    "main-better": (0.25, 1.0),
}

METRICS = ("success", "P_R", "P_dec")
METHODS = ("analytic", "oracle", "mc")
INT_PARAMS = ("k", "r", "Psi")
CLASS_PARAMS = {
    "conn": ("conn_main", "conn_red"),
    "server": ("server_main", "server_red"),
    "vnf": ("vnf_main", "vnf_red"),
}
SWEEP_PARAMS = INT_PARAMS + tuple(CLASS_PARAMS) + RELIABILITY_FIELDS
CSV_COLUMNS = (
    "sweep_param",
    "sweep_value",
    "scheme",
    "method",
    "metric",
    "value",
    "ci_low",
    "ci_high",
    "trials",
    "seed",
    "series",
)


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


_prob = {"type": "number", "minimum": 0, "maximum": 1}
_chain_schema = {
    "type": "object",
    "properties": {
        "k": {"type": "integer", "minimum": 1},
        "r": {"type": "integer", "minimum": 0},
        "N": {"type": "integer", "minimum": 1},
        "Psi": {"type": "integer", "minimum": 1},
        "psi": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
    },
    "additionalProperties": False,
}
_reliability_schema = {
    "type": "object",
    "properties": {name: _prob for name in RELIABILITY_FIELDS + tuple(CLASS_PARAMS)},
    "additionalProperties": False,
}
_layout_schema = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["kind", "vnfs"],
                "properties": {
                    "kind": {"enum": ["H", "P"]},
                    "vnfs": {"type": "integer", "minimum": 1},
                    "servers": {"type": "integer", "minimum": 1},
                    "psi": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                },
                "additionalProperties": False,
            },
        },
    ]
}
_sweep_schema = {
    "type": "object",
    "properties": {
        "param": {"enum": list(SWEEP_PARAMS)},
        "start": {"type": "number"},
        "stop": {"oneOf": [{"type": "number"}, {"const": "k"}]},
        "step": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}
_series_props = {
    "label": {"type": "string"},
    "chain": _chain_schema,
    "reliability": _reliability_schema,
    "regime": {"enum": list(REGIMES)},
    "layout": _layout_schema,
    "sweep": _sweep_schema,
}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sfcrel experiment",
    "type": "object",
    "required": ["chain", "sweep"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "schemes": {
            "type": "array",
            "items": {"enum": [s.value for s in Scheme]},
            "minItems": 1,
            "uniqueItems": True,
        },
        "metrics": {"type": "array", "items": {"enum": list(METRICS)}, "minItems": 1, "uniqueItems": True},
        "methods": {"type": "array", "items": {"enum": list(METHODS)}, "minItems": 1, "uniqueItems": True},
        "series": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["label"],
                "properties": _series_props,
                "additionalProperties": False,
            },
        },
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "workers": {"type": "integer", "minimum": 1},
        "bound": {"type": "integer", "minimum": 1, "maximum": 30},
        "out": {"type": "string"},
        **{k: v for k, v in _series_props.items() if k != "label"},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class SweepAxis:
    param: str
    start: float
    stop: float | str
    step: float

    def values(self, k: int) -> list[float | int]:
        stop = k if self.stop == "k" else self.stop
        count = math.floor((stop - self.start) / self.step + 1e-9) + 1
        if count < 1:
            raise ConfigError("sweep", f"empty range {self.start}..{stop}")
        raw = [float(f"{self.start + i * self.step:.12g}") for i in range(count)]
        if self.param in INT_PARAMS:
            return [int(round(v)) for v in raw]
        return raw


@dataclass(frozen=True)
class Series:
    label: str
    chain: dict[str, Any]
    reliability: ReliabilityParams
    regime: str
    layout: HybridLayout | None
    sweep: SweepAxis

    def base_k(self) -> int:
        return int(self.chain["k"])

    def points(self) -> Iterator[tuple[float | int, ChainSpec, ReliabilityParams, HybridLayout | None]]:
        for value in self.sweep.values(self.base_k()):
            yield (value, *self.instance(value))

    def instance(self, value: float | int) -> tuple[ChainSpec, ReliabilityParams, HybridLayout | None]:
        chain = dict(self.chain)
        rel = self.reliability
        param = self.sweep.param
        if param in INT_PARAMS:
            if value != int(value):
                raise ConfigError("sweep", f"{param} must take integer values, got {value}")
            chain[param] = int(value)
            if param == "Psi":
                if self.layout is not None:
                    raise ConfigError("sweep", "cannot sweep Psi with a fixed hybrid layout")
                chain.pop("psi", None)
        elif param in CLASS_PARAMS:
            rel = replace(rel, **{name: float(value) for name in CLASS_PARAMS[param]})
        else:
            rel = replace(rel, **{param: float(value)})
        spec = _chain_from(chain)
        try:
            validate_chain_spec(spec)
            validate_reliability(rel)
            layout = validate_hybrid_layout(self.layout, spec) if self.layout else None
        except ValidationError as exc:
            raise ConfigError(f"series {self.label!r} at {param}={value}: {exc.field}", str(exc)) from exc
        return spec, rel, layout


def _chain_from(chain: dict[str, Any]) -> ChainSpec:
    N = int(chain.get("N", 1))
    psi = chain.get("psi")
    if psi is None:
        if "Psi" not in chain:
            raise ConfigError("chain", "give psi or Psi")
        psi = even_split(int(chain["Psi"]), N)
    return ChainSpec(int(chain["k"]), int(chain.get("r", 0)), N, tuple(psi))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    description: str
    schemes: tuple[Scheme, ...]
    metrics: tuple[str, ...]
    methods: tuple[str, ...]
    series: tuple[Series, ...]
    trials: int = 1_000_000
    seed: int = 1
    workers: int = 1
    bound: int = oracle.DEFAULT_BOUND
    out: str | None = None
    raw: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)


def _layout_from(raw: Any) -> HybridLayout | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        return HybridLayout.parse(raw)
    return HybridLayout(
        tuple(
            ChainPart(p["kind"], p["vnfs"], p.get("servers"), tuple(p["psi"]) if "psi" in p else None)
            for p in raw
        )
    )


def _reliability_from(raw: dict[str, float] | None, regime: str) -> ReliabilityParams:
    values = DEFAULT_RELIABILITY.as_dict()
    for name, value in (raw or {}).items():
        for target in CLASS_PARAMS.get(name, (name,)):
            values[target] = float(value)
    rel = ReliabilityParams(**values)
    main, red = REGIMES[regime]
    return rel.scaled_failures(main, red)


def parse_config(raw: dict[str, Any]) -> ExperimentConfig:
    """Validate a JSON config against :data:`CONFIG_SCHEMA` and the model constraints."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "config"
        raise ConfigError(where, exc.message) from None
    series_raw = raw.get("series") or [{"label": raw.get("name", "default")}]
    series = []
    for entry in series_raw:
        chain = {**raw.get("chain", {}), **entry.get("chain", {})}
        if "k" not in chain:
            raise ConfigError("chain.k", "missing")
        if "psi" in entry.get("chain", {}) or "Psi" in entry.get("chain", {}):
            chain = {key: v for key, v in chain.items() if key not in ("psi", "Psi")} | {
                key: v for key, v in entry["chain"].items() if key in ("psi", "Psi")
            }
        rel_raw = {**raw.get("reliability", {}), **entry.get("reliability", {})}
        regime = entry.get("regime", raw.get("regime", "equal"))
        sweep_raw = {**raw.get("sweep", {}), **entry.get("sweep", {})}
        missing = {"param", "start", "stop", "step"} - sweep_raw.keys()
        if missing:
            raise ConfigError("sweep", f"missing {sorted(missing)}")
        layout = _layout_from(entry.get("layout", raw.get("layout")))
        series.append(
            Series(
                label=entry["label"],
                chain=chain,
                reliability=_reliability_from(rel_raw, regime),
                regime=regime,
                layout=layout,
                sweep=SweepAxis(**sweep_raw),
            )
        )
    schemes = tuple(Scheme(s) for s in raw.get("schemes", ["backup", "coding"]))
    if Scheme.HYBRID in schemes and any(s.layout is None for s in series):
        raise ConfigError("layout", "hybrid scheme needs a layout")
    cfg = ExperimentConfig(
        name=raw.get("name", "custom"),
        description=raw.get("description", ""),
        schemes=schemes,
        metrics=tuple(raw.get("metrics", METRICS)),
        methods=tuple(raw.get("methods", ["analytic"])),
        series=tuple(series),
        trials=raw.get("trials", 1_000_000),
        seed=raw.get("seed", 1),
        workers=raw.get("workers", 1),
        bound=raw.get("bound", oracle.DEFAULT_BOUND),
        out=raw.get("out"),
        raw=copy.deepcopy(raw),
    )
    for s in cfg.series:
        for _ in s.points():
            pass
    return cfg


# -- presets ---------------------------------------------------------------

_SUCCESS_AND_OVERHEAD = ["success", "P_R", "P_dec"]

PRESETS: dict[str, dict[str, Any]] = {
    "fig-kr": {
        "name": "fig-kr",
        "description": "success and overhead vs r for k in {4, 8}; N=2, Psi=4",
        "schemes": ["backup", "coding"],
        "metrics": _SUCCESS_AND_OVERHEAD,
        "chain": {"N": 2, "psi": [2, 2]},
        "sweep": {"param": "r", "start": 0, "stop": "k", "step": 1},
        "series": [{"label": "k=4", "chain": {"k": 4}}, {"label": "k=8", "chain": {"k": 8}}],
    },
    "fig-component": {
        "name": "fig-component",
        "description": "success vs one reliability class over [0.5, 1]; k=8, r=6, N=2, Psi=4",
        "schemes": ["backup", "coding"],
        "metrics": ["success"],
        "chain": {"k": 8, "r": 6, "N": 2, "psi": [2, 2]},
        "sweep": {"start": 0.5, "stop": 1.0, "step": 0.05},
        "series": [
            {"label": "vnf", "sweep": {"param": "vnf"}},
            {"label": "server", "sweep": {"param": "server"}},
            {"label": "conn", "sweep": {"param": "conn"}},
        ],
    },
    "fig-rr": {
        "name": "fig-rr",
        "description": "success and overhead vs r for k=8 under equal, redundant-better and main-better regimes",
        "schemes": ["backup", "coding"],
        "metrics": _SUCCESS_AND_OVERHEAD,
        "chain": {"k": 8, "N": 2, "psi": [2, 2]},
        "sweep": {"param": "r", "start": 0, "stop": 8, "step": 1},
        "series": [
            {"label": "equal", "regime": "equal"},
            {"label": "redundant-better", "regime": "redundant-better"},
            {"label": "main-better", "regime": "main-better"},
        ],
    },
    "fig-vnfnum": {
        "name": "fig-vnfnum",
        "description": "success and overhead vs Psi in 2..8 for (k, r) in {(4, 3), (8, 4)}; main-better regime",
        "schemes": ["backup", "coding"],
        "metrics": _SUCCESS_AND_OVERHEAD,
        "regime": "main-better",
        "chain": {"N": 2, "Psi": 4},
        "sweep": {"param": "Psi", "start": 2, "stop": 8, "step": 1},
        "series": [
            {"label": "k=4,r=3", "chain": {"k": 4, "r": 3}},
            {"label": "k=8,r=4", "chain": {"k": 8, "r": 4}},
        ],
    },
    "fig-hybrid": {
        "name": "fig-hybrid",
        "description": "hybrid [H:3,P:1,H:1] vs pure backup, r swept 0..k for k in {4, 8}; N=2, Psi=5",
        "schemes": ["backup", "hybrid"],
        "metrics": ["success", "P_R"],
        "chain": {"N": 2, "psi": [3, 2]},
        "layout": "H:3,P:1,H:1",
        "sweep": {"param": "r", "start": 0, "stop": "k", "step": 1},
        "series": [{"label": "k=4", "chain": {"k": 4}}, {"label": "k=8", "chain": {"k": 8}}],
    },
}


def list_presets() -> list[tuple[str, str]]:
    return [(name, cfg["description"]) for name, cfg in PRESETS.items()]


def preset_config(name: str, **overrides: Any) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    raw = copy.deepcopy(PRESETS[name])
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(raw)


# -- sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    sweep_param: str
    sweep_value: float | int
    scheme: str
    method: str
    metric: str
    value: float
    ci_low: float | None = None
    ci_high: float | None = None
    trials: int | None = None
    seed: int | None = None
    series: str = ""


def _metric_target(scheme: Scheme, metric: str) -> Scheme | Overhead | None:
    if metric == "success":
        return scheme
    if metric == "P_R" and scheme is Scheme.BACKUP:
        return Overhead.REDIRECTION
    if metric == "P_dec" and scheme is Scheme.CODING:
        return Overhead.DECODING
    return None


def _analytic_value(target, spec, rel, layout) -> float:
    if target is Scheme.UNPROTECTED:
        return analytic.success_unprotected(spec, rel)
    if target is Scheme.BACKUP:
        return analytic.success_backup(spec, rel)
    if target is Scheme.BACKUP_VNF_ONLY:
        return analytic.success_backup_vnf_only(spec, rel.vnf_main)
    if target is Scheme.CODING:
        return analytic.success_coding(spec, rel)
    if target is Scheme.HYBRID:
        return analytic.success_hybrid(layout, rel, spec)
    if target is Overhead.REDIRECTION:
        return analytic.prob_redirection(spec, rel)
    return analytic.prob_decoding(spec, rel)


def _oracle_value(target, spec, rel, layout, bound) -> float:
    if isinstance(target, Overhead):
        return oracle.exact_overhead(target, spec, rel, bound=bound)
    return oracle.exact_success(target, spec, rel, layout, bound=bound)


def evaluate_point(
    targets: list[Scheme | Overhead],
    method: str,
    spec: ChainSpec,
    rel: ReliabilityParams,
    layout: HybridLayout | None,
    *,
    trials: int = 1_000_000,
    seed: int = 1,
    workers: int = 1,
    bound: int = oracle.DEFAULT_BOUND,
) -> dict[Scheme | Overhead, float | montecarlo.TrialEstimate]:
    if method == "analytic":
        return {t: _analytic_value(t, spec, rel, layout) for t in targets}
    if method == "oracle":
        return {t: _oracle_value(t, spec, rel, layout, bound) for t in targets}
    if method != "mc":
        raise ConfigError("methods", f"unknown method {method!r}")
    shared = [t for t in targets if t is not Scheme.HYBRID]
    out: dict[Scheme | Overhead, Any] = {}
    if shared:
        out.update(montecarlo.estimate_many(shared, spec, rel, trials, seed, workers=workers))
    if Scheme.HYBRID in targets:
        out[Scheme.HYBRID] = montecarlo.estimate(
            Scheme.HYBRID, spec, rel, trials, seed, layout=layout, workers=workers
        )
    return {t: out[t] for t in targets}


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    rows: list[ResultRow] = []
    for series in cfg.series:
        param = series.sweep.param
        for value, spec, rel, layout in series.points():
            pairs = [
                (scheme, metric, target)
                for scheme in cfg.schemes
                for metric in METRICS
                if metric in cfg.metrics and (target := _metric_target(scheme, metric)) is not None
            ]
            targets = list(dict.fromkeys(t for _, _, t in pairs))
            results = {
                method: evaluate_point(
                    targets,
                    method,
                    spec,
                    rel,
                    layout,
                    trials=cfg.trials,
                    seed=cfg.seed,
                    workers=cfg.workers,
                    bound=cfg.bound,
                )
                for method in cfg.methods
            }
            for scheme in cfg.schemes:
                for method in cfg.methods:
                    for s, metric, target in pairs:
                        if s is not scheme:
                            continue
                        res = results[method][target]
                        if isinstance(res, montecarlo.TrialEstimate):
                            row = ResultRow(
                                param, value, scheme.value, method, metric, res.mean,
                                res.ci_low, res.ci_high, res.trials, res.seed, series.label,
                            )  # fmt: skip
                        else:
                            row = ResultRow(param, value, scheme.value, method, metric, res, series=series.label)
                        rows.append(row)
    return rows


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def config_header(cfg: ExperimentConfig) -> list[str]:
    lines = [f"# experiment: {cfg.name}"]
    if cfg.description:
        lines.append(f"# {cfg.description}")
    for s in cfg.series:
        rel = " ".join(f"{k}={_fmt(v)}" for k, v in s.reliability.as_dict().items())
        layout = f" layout={s.layout}" if s.layout else ""
        lines.append(f"# series {s.label}: regime={s.regime} {rel}{layout}")
    return lines


def rows_to_csv(rows: list[ResultRow], header: list[str] | None = None) -> str:
    buf = io.StringIO()
    for line in header or []:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        d = asdict(row)
        writer.writerow([d[c] if c in ("sweep_param", "scheme", "method", "metric", "series") else _fmt(d[c])
                         for c in CSV_COLUMNS])  # fmt: skip
    return buf.getvalue()


def experiment_csv(cfg: ExperimentConfig) -> str:
    return rows_to_csv(run_experiment(cfg), config_header(cfg))


# -- codec demo --------------------------------------------------------------


@dataclass(frozen=True)
class GenerationOutcome:
    generation_id: int
    decode_needed: bool
    decoded: bool
    recovered: bool
    byte_equal: bool


@dataclass(frozen=True)
class CodecDemoReport:
    k: int
    r: int
    packets: int
    lost_subflows: tuple[int, ...]
    generations: tuple[GenerationOutcome, ...]
    stream_equal: bool

    @property
    def all_recovered(self) -> bool:
        return all(g.recovered for g in self.generations)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["all_recovered"] = self.all_recovered
        out["lost_subflows"] = list(self.lost_subflows)
        return out

    def transcript(self) -> str:
        lines = [
            f"codec demo: k={self.k} r={self.r} packets={self.packets} "
            f"lost sub-flows={list(self.lost_subflows)}",
        ]
        for g in self.generations:
            status = "recovered" if g.recovered else "UNRECOVERABLE"
            lines.append(
                f"generation {g.generation_id}: {status}, decode needed={g.decode_needed}, "
                f"decoded={g.decoded}, byte-equal={g.byte_equal}"
            )
        lines.append(f"all generations recovered: {self.all_recovered}")
        lines.append(f"serialized stream identical: {self.stream_equal}")
        return "\n".join(lines)


def _parse_loss(loss_pattern: str | list[int], k: int, r: int, rng: np.random.Generator) -> tuple[int, ...]:
    if isinstance(loss_pattern, str):
        if loss_pattern.strip().lower() == "random":
            return tuple(sorted(int(i) for i in rng.choice(k + r, size=r, replace=False)))
        text = loss_pattern.strip()
        loss_pattern = [int(x) for x in text.split(",")] if text else []
    lost = tuple(sorted(set(int(i) for i in loss_pattern)))
    for i in lost:
        if not 0 <= i < k + r:
            raise ConfigError("loss_pattern", f"sub-flow {i} outside 0..{k + r - 1}")
    return lost


def codec_demo(
    k: int,
    r: int,
    packet_count: int,
    loss_pattern: str | list[int],
    seed: int = 1,
    max_payload: int = 256,
) -> CodecDemoReport:
    """Split synthetic traffic, encode, drop whole sub-flows, decode and compare.

    ``packet_count`` is rounded up to a multiple of k so every generation is full.
    """
    if k < 1 or r < 0 or r > k:
        raise ConfigError("r", f"need 1 <= k and 0 <= r <= k, got k={k}, r={r}")
    if packet_count < 1:
        raise ConfigError("packets", "need at least one packet")
    rng = np.random.default_rng(seed)
    lost = _parse_loss(loss_pattern, k, r, rng)
    count = -(-packet_count // k) * k
    packets = [
        FlowPacket(
            0x0A000001,
            0x0A000002,
            1234,
            80,
            seq,
            rng.integers(0, 256, size=int(rng.integers(0, max_payload + 1)), dtype=np.uint8).tobytes(),
        )
        for seq in range(count)
    ]
    subflows = split_flow(packets, k)
    received_subflows: list[list[FlowPacket]] = [[] for _ in range(k)]
    outcomes = []
    for g in range(count // k):
        members = [subflows[i][g] for i in range(k)]
        coded = encode_generation(Generation.from_packets(g, members), r)
        arrived = [p for p in coded if p.gch.index not in lost]
        decode_needed = any(i < k for i in lost)
        try:
            result = decode_generation(arrived, measure=FlowPacket.framed_length)
        except UnrecoverableGeneration:
            outcomes.append(GenerationOutcome(g, decode_needed, False, False, False))
            continue
        recovered = [FlowPacket.from_bytes(b) for b in result.bodies]
        for i, p in enumerate(recovered):
            received_subflows[i].append(p)
        outcomes.append(
            GenerationOutcome(g, decode_needed, result.decoded, True, recovered == members)
        )
    stream_equal = merge_subflows(received_subflows) == packets
    return CodecDemoReport(k, r, count, lost, tuple(outcomes), stream_equal)
