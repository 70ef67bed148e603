"""Graphviz DOT output for skeletal and full protocol graphs."""

from __future__ import annotations

from .spec import Epsilon, Exit, ProtocolSpec, SkeletalGraph, TTP


def _quote(s: str) -> str:
    return '"' + s.replace('"', '\\"') + '"'


def to_dot(g: SkeletalGraph | ProtocolSpec, show_ttp: bool = False) -> str:
    """One cluster per signer; internal edges dashed, signing vertices shaded."""
    if isinstance(g, SkeletalGraph):
        role_of, sigma, signers = g.role_of, g.sigma, g.signers
        labelled = g.as_protocol()
        name = g.name
    else:
        role_of, sigma, signers = g.role_of, g.sigma, g.signers
        labelled = g
        name = g.name
    order = labelled.dag.topological_order()
    lines = [f"digraph {_quote(name or 'protocol')} {{", "  rankdir=TB;", "  node [shape=circle, fontsize=10];"]
    for r in signers:
        lines.append(f"  subgraph {_quote('cluster_' + r)} {{")
        lines.append(f"    label={_quote(r)}; style=dotted;")
        for v in order:
            if role_of[v] == r:
                attrs = ', style=filled, fillcolor="gray80"' if v in sigma else ""
                lines.append(f"    {_quote(v)} [label={_quote(v)}{attrs}];")
        lines.append("  }")
    ttp = [v for v in order if role_of[v] == TTP]
    if show_ttp:
        for v in ttp:
            lines.append(f"  {_quote(v)} [shape=box];")
    for a, b in labelled.edges:
        label = labelled.label_of[(a, b)]
        if isinstance(label, Exit) and not show_ttp:
            continue
        attrs = []
        if isinstance(label, Epsilon):
            attrs.append("style=dashed")
        elif isinstance(label, Exit):
            attrs.append("style=dotted")
        else:
            attrs.append(f"label={_quote(str(label))}")
        lines.append(f"  {_quote(a)} -> {_quote(b)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
