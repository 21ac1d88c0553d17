"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 oracle state space too large.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import montecarlo
from .experiments import (
    DEFAULT_RELIABILITY,
    REGIMES,
    ConfigError,
    codec_demo,
    config_header,
    evaluate_point,
    list_presets,
    parse_config,
    preset_config,
    rows_to_csv,
    run_experiment,
)
from .model import (
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
from .oracle import DEFAULT_BOUND, StateSpaceTooLarge

EXIT_CONFIG = 2
EXIT_BOUND = 3


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    parser.add_argument("--trials", type=float, default=1e6, help="Monte-Carlo trials (default 1e6)")
    parser.add_argument("--json", action="store_true", help="machine-readable output")


def _instance_args(parser: argparse.ArgumentParser) -> None:
    d = DEFAULT_RELIABILITY
    parser.add_argument("--k", type=int, default=4)
    parser.add_argument("--r", type=int, default=1)
    parser.add_argument("--N", type=int, default=2)
    parser.add_argument("--Psi", type=int, default=4, help="total VNFs, spread evenly unless --psi is given")
    parser.add_argument("--psi", help="per-server VNF counts, e.g. 3,2")
    parser.add_argument("--conn", type=float, default=d.conn_main)
    parser.add_argument("--conn-red", type=float)
    parser.add_argument("--server", type=float, default=d.server_main)
    parser.add_argument("--server-red", type=float)
    parser.add_argument("--vnf", type=float, default=d.vnf_main)
    parser.add_argument("--vnf-red", type=float)
    parser.add_argument("--regime", choices=list(REGIMES), default="equal")
    parser.add_argument("--layout", help="hybrid layout, e.g. H:3,P:1,H:1")
    parser.add_argument(
        "--scheme",
        action="append",
        choices=[s.value for s in Scheme],
        help="repeatable; default: every scheme that applies",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfcrel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("analytic", "closed-form success and overhead probabilities"),
        ("oracle", "exact values by exhaustive enumeration"),
        ("mc", "Monte-Carlo estimates with 95% Wilson intervals"),
    ):
        p = sub.add_parser(name, help=helptext)
        _instance_args(p)
        _common(p)
        if name == "oracle":
            p.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="max enumerated components per block")
        if name == "mc":
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("sweep", help="run a preset or JSON-configured parameter sweep to CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset")
    src.add_argument("--config", type=Path)
    p.add_argument("--methods", help="comma separated subset of analytic,oracle,mc")
    p.add_argument("--workers", type=int)
    _common(p)
    p.set_defaults(seed=None, trials=None)

    p = sub.add_parser("codec-demo", help="encode, lose and decode synthetic sub-flows")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--packets", type=int, default=12)
    p.add_argument("--lose", default="0", help="comma separated sub-flow indices, or 'random'")
    _common(p)

    p = sub.add_parser("presets", help="list sweep presets")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    return parser


def _instance(args: argparse.Namespace) -> tuple[ChainSpec, ReliabilityParams, HybridLayout | None]:
    psi = tuple(int(x) for x in args.psi.split(",")) if args.psi else even_split(args.Psi, args.N)
    spec = validate_chain_spec(ChainSpec(args.k, args.r, len(psi) if args.psi else args.N, psi))
    rel = ReliabilityParams(
        args.conn,
        args.conn if args.conn_red is None else args.conn_red,
        args.server,
        args.server if args.server_red is None else args.server_red,
        args.vnf,
        args.vnf if args.vnf_red is None else args.vnf_red,
    )
    main, red = REGIMES[args.regime]
    rel = validate_reliability(rel.scaled_failures(main, red))
    layout = validate_hybrid_layout(HybridLayout.parse(args.layout), spec) if args.layout else None
    return spec, rel, layout


def _targets(args: argparse.Namespace, layout: HybridLayout | None) -> list[Scheme | Overhead]:
    if args.scheme:
        schemes = [Scheme(s) for s in args.scheme]
    else:
        schemes = [s for s in Scheme if s is not Scheme.HYBRID or layout is not None]
    if Scheme.HYBRID in schemes and layout is None:
        raise ConfigError("layout", "hybrid scheme needs --layout")
    targets: list[Scheme | Overhead] = list(schemes)
    if Scheme.BACKUP in schemes:
        targets.append(Overhead.REDIRECTION)
    if Scheme.CODING in schemes:
        targets.append(Overhead.DECODING)
    return targets


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_point(args: argparse.Namespace) -> None:
    spec, rel, layout = _instance(args)
    targets = _targets(args, layout)
    results = evaluate_point(
        targets,
        args.command,
        spec,
        rel,
        layout,
        trials=int(args.trials),
        seed=args.seed,
        workers=getattr(args, "workers", 1),
        bound=getattr(args, "bound", DEFAULT_BOUND),
    )
    records: list[dict[str, Any]] = []
    for target, res in results.items():
        name = "P_R" if target is Overhead.REDIRECTION else "P_dec" if target is Overhead.DECODING else "success"
        scheme = {Overhead.REDIRECTION: "backup", Overhead.DECODING: "coding"}.get(target, target.value)
        rec: dict[str, Any] = {"scheme": scheme, "metric": name}
        if isinstance(res, montecarlo.TrialEstimate):
            rec.update(value=res.mean, ci_low=res.ci_low, ci_high=res.ci_high, trials=res.trials, seed=res.seed)
        else:
            rec["value"] = res
        records.append(rec)
    if args.json:
        doc = {
            "method": args.command,
            "chain": {"k": spec.k, "r": spec.r, "N": spec.N, "psi": list(spec.psi)},
            "reliability": rel.as_dict(),
            "layout": str(layout) if layout else None,
            "results": records,
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return
    lines = [
        f"# {args.command}: k={spec.k} r={spec.r} N={spec.N} psi={list(spec.psi)}"
        + (f" layout={layout}" if layout else ""),
        "# " + " ".join(f"{k}={v:.12g}" for k, v in rel.as_dict().items()),
    ]
    for rec in records:
        line = f"{rec['scheme']:<16} {rec['metric']:<8} {rec['value']:.12g}"
        if "ci_low" in rec:
            line += f"  [{rec['ci_low']:.12g}, {rec['ci_high']:.12g}]"
        lines.append(line)
    _emit("\n".join(lines) + "\n", args.out)


def _cmd_sweep(args: argparse.Namespace) -> None:
    overrides = {
        "seed": args.seed,
        "trials": None if args.trials is None else int(args.trials),
        "workers": args.workers,
        "methods": args.methods.split(",") if args.methods else None,
    }
    if args.preset:
        cfg = preset_config(args.preset, **overrides)
    else:
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from exc
        raw.update({k: v for k, v in overrides.items() if v is not None})
        cfg = parse_config(raw)
    rows = run_experiment(cfg)
    out = args.out or cfg.out
    if args.json:
        from dataclasses import asdict

        _emit(json.dumps({"experiment": cfg.name, "rows": [asdict(r) for r in rows]}, indent=2) + "\n", out)
    else:
        _emit(rows_to_csv(rows, config_header(cfg)), out)


def _cmd_codec_demo(args: argparse.Namespace) -> None:
    report = codec_demo(args.k, args.r, args.packets, args.lose, args.seed)
    if args.json:
        _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    else:
        _emit(report.transcript() + "\n", args.out)


def _cmd_presets(args: argparse.Namespace) -> None:
    presets = list_presets()
    if args.json:
        _emit(json.dumps([{"name": n, "description": d} for n, d in presets], indent=2) + "\n", args.out)
    else:
        _emit("".join(f"{n:<14} {d}\n" for n, d in presets), args.out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "analytic": _cmd_point,
        "oracle": _cmd_point,
        "mc": _cmd_point,
        "sweep": _cmd_sweep,
        "codec-demo": _cmd_codec_demo,
        "presets": _cmd_presets,
    }
    try:
        handlers[args.command](args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StateSpaceTooLarge as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        return EXIT_BOUND
    return 0


if __name__ == "__main__":
    sys.exit(main())
