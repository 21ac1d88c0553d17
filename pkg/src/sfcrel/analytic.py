"""Closed-form service-success and overhead probabilities.

Binomial coefficients are exact integers; nested sums run outermost to
innermost in a fixed order, so results are reproducible bit for bit.
"""

from __future__ import annotations

from math import comb

from .model import (
    ChainSpec,
    HybridLayout,
    PartKind,
    ReliabilityParams,
    SubflowClass,
    validate_chain_spec,
    validate_hybrid_layout,
)


def _binom_term(n: int, fails: int, up: float) -> float:
    """C(n, fails) * up^(n - fails) * (1 - up)^fails."""
    return comb(n, fails) * up ** (n - fails) * (1.0 - up) ** fails


def _clip(p: float) -> float:
    return min(1.0, max(0.0, p))


def success_unprotected(spec: ChainSpec, rel: ReliabilityParams) -> float:
    """All k main sub-flows must be fully up; redundancy is ignored."""
    validate_chain_spec(spec)
    return subflow_success(spec, rel, SubflowClass.MAIN) ** spec.k


def success_backup_vnf_only(spec: ChainSpec, vnf_rel: float) -> float:
    """Backup success when only VNFs fail: at most r of the k+r instances of each type down."""
    validate_chain_spec(spec)
    k, r = spec.k, spec.r
    per_type = 0.0
    for i in range(r + 1):
        per_type += _binom_term(r + k, i, vnf_rel)
    return _clip(per_type) ** spec.Psi


def _backup_stage(k: int, r: int, psi_s: int, rel: ReliabilityParams) -> float:
    """Probability that one server stage still offers k instances of each of its VNF types."""
    phi, phi_r = rel.conn_main, rel.conn_red
    srv, srv_r = rel.server_main, rel.server_red
    v, v_r = rel.vnf_main, rel.vnf_red
    total = 0.0
    for xi in range(r + 1):
        a = _binom_term(k, xi, phi)
        for gamma in range(r - xi + 1):
            b = _binom_term(r, gamma, phi_r)
            for f in range(r - xi - gamma + 1):
                c = _binom_term(k - xi, f, srv)
                for l in range(r - xi - gamma - f + 1):
                    d = _binom_term(r - gamma, l, srv_r)
                    budget = r - xi - gamma - f - l
                    active_left = k - xi - f
                    backup_left = r - gamma - l
                    bracket = 0.0
                    for i in range(budget + 1):
                        e = _binom_term(active_left, i, v)
                        inner = 0.0
                        for j in range(budget - i + 1):
                            inner += _binom_term(backup_left, j, v_r)
                        bracket += e * inner
                    total += a * b * c * d * bracket**psi_s
    return total


def success_backup(spec: ChainSpec, rel: ReliabilityParams) -> float:
    """Success under backup protection.

    Per stage, connectivity loss to active (xi) and backup (gamma) servers,
    failures of the remaining reachable active (f) and backup (l) servers,
    and per VNF type the failures of available active (i) and backup (j)
    instances all draw on one budget of r. The k destination segments are
    unprotected.
    """
    validate_chain_spec(spec)
    if spec.r == 0:
        # Every budget sum collapses to its zero-failure term; evaluate it in
        # the same form as the unprotected chain so the two agree bit for bit.
        return success_unprotected(spec, rel)
    out = rel.conn_main**spec.k
    for psi_s in spec.psi:
        out *= _backup_stage(spec.k, spec.r, psi_s, rel)
    return _clip(out)


def subflow_success(spec: ChainSpec, rel: ReliabilityParams, cls: SubflowClass) -> float:
    """Probability that one sub-flow's whole private chain (N+1 segments, N servers, Psi VNFs) is up."""
    validate_chain_spec(spec)
    conn, server, vnf = rel.for_class(SubflowClass(cls))
    return server**spec.N * vnf**spec.Psi * conn ** (spec.N + 1)


def success_coding(spec: ChainSpec, rel: ReliabilityParams) -> float:
    """Probability that at most r of the k+r coded sub-flows are lost."""
    validate_chain_spec(spec)
    k, r = spec.k, spec.r
    rh = subflow_success(spec, rel, SubflowClass.MAIN)
    rh_red = subflow_success(spec, rel, SubflowClass.REDUNDANT)
    total = 0.0
    for i in range(r + 1):
        main_loss = _binom_term(k, i, rh)
        inner = 0.0
        for j in range(r - i + 1):
            inner += _binom_term(r, j, rh_red)
        total += main_loss * inner
    return _clip(total)


def success_hybrid(layout: HybridLayout, rel: ReliabilityParams, spec: ChainSpec) -> float:
    """Coding on header parts, backup on payload parts, parts independent."""
    layout = validate_hybrid_layout(layout, spec)
    out = 1.0
    for part in layout.parts:
        chain = part.chain(spec.k, spec.r)
        if part.kind is PartKind.HEADER:
            out *= success_coding(chain, rel)
        else:
            out *= success_backup(chain, rel)
    return out


def prob_redirection(spec: ChainSpec, rel: ReliabilityParams) -> float:
    """Probability that at least one active segment, server or VNF is down."""
    validate_chain_spec(spec)
    all_up = 1.0
    for psi_s in spec.psi:
        all_up *= (rel.conn_main * rel.server_main * rel.vnf_main**psi_s) ** spec.k
    return _clip(1.0 - all_up)


def prob_decoding(spec: ChainSpec, rel: ReliabilityParams) -> float:
    """Probability that some main sub-flow is lost yet at most r sub-flows are lost in total."""
    validate_chain_spec(spec)
    k, r = spec.k, spec.r
    rh = subflow_success(spec, rel, SubflowClass.MAIN)
    rh_red = subflow_success(spec, rel, SubflowClass.REDUNDANT)
    total = 0.0
    for f in range(1, r + 1):
        main_loss = _binom_term(k, f, rh)
        for i in range(r - f + 1):
            total += main_loss * _binom_term(r, i, rh_red)
    return _clip(total)
