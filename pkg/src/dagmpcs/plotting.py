"""Matplotlib figures: message-sequence charts and complexity sweeps."""

from __future__ import annotations

from collections.abc import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .complexity import ComplexityReport  # noqa: E402
from .spec import Epsilon, Exit, ProtocolSpec, SkeletalGraph, TTP  # noqa: E402


def _levels(g) -> dict[str, int]:
    level: dict[str, int] = {}
    for v in g.dag.topological_order():
        level[v] = 1 + max((level[u] for u in g.dag.predecessors(v)), default=-1)
    return level


def draw_protocol(g: SkeletalGraph | ProtocolSpec, path: str, show_ttp: bool = False) -> None:
    """Draw one lifeline per signer with time running downwards."""
    labelled = g.as_protocol() if isinstance(g, SkeletalGraph) else g
    roles = list(g.signers) + ([TTP] if show_ttp and isinstance(g, ProtocolSpec) else [])
    x_of = {r: i for i, r in enumerate(roles)}
    vertices = [v for v in labelled.vertices if labelled.role_of[v] in x_of]
    level = _levels(labelled)
    if TTP in x_of:
        level = {v: (max(level[u] for u in vertices if labelled.role_of[u] != TTP) + 1 if labelled.role_of[v] == TTP else lv)
                 for v, lv in level.items()}
    # spread parallel vertices of one role sideways
    slot: dict[tuple[str, int], int] = {}
    pos = {}
    for v in sorted(vertices, key=lambda v: (level[v], v)):
        key = (labelled.role_of[v], level[v])
        k = slot.get(key, 0)
        slot[key] = k + 1
        pos[v] = (x_of[labelled.role_of[v]] + 0.18 * k, -level[v])
    depth = max((level[v] for v in vertices), default=0)
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(roles), 1.2 + 0.55 * depth))
    for r, x in x_of.items():
        ax.plot([x, x], [0.5, -depth - 0.5], color="0.85", lw=1, zorder=0)
        ax.text(x, 0.8, r, ha="center", va="bottom", fontsize=11, weight="bold")
    for a, b in labelled.edges:
        if a not in pos or b not in pos:
            continue
        label = labelled.label_of[(a, b)]
        style = "--" if isinstance(label, Epsilon) else (":" if isinstance(label, Exit) else "-")
        ax.annotate(
            "", xy=pos[b], xytext=pos[a],
            arrowprops=dict(arrowstyle="->", linestyle=style, color="0.3" if style != "-" else "black",
                            shrinkA=7, shrinkB=7, lw=0.9),
        )
    sigma = getattr(g, "sigma", frozenset())
    for v, (x, y) in pos.items():
        face = "0.75" if v in sigma else "white"
        ax.scatter([x], [y], s=260, facecolor=face, edgecolor="black", zorder=3)
        ax.text(x, y, v, ha="center", va="center", fontsize=6.5, zorder=4)
    ax.set_xlim(-0.6, len(roles) - 0.4)
    ax.set_ylim(-depth - 0.8, 1.3)
    ax.axis("off")
    ax.set_title(getattr(g, "name", "") or "protocol", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(reports: Sequence[ComplexityReport], sizes: Sequence[int], path: str, family: str = "") -> None:
    """Message and parallel complexity against the lower bounds over a size sweep."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(sizes, [r.mc for r in reports], "o-", label="messages")
    ax1.plot(sizes, [r.mc_full for r in reports], "s:", label="messages incl. relayed")
    ax1.plot(sizes, [r.mc_lower_bound for r in reports], "k--", label="lower bound")
    ax1.set_xlabel("size parameter")
    ax1.set_ylabel("message complexity")
    ax1.legend(fontsize=8)
    ax2.plot(sizes, [r.pc for r in reports], "o-", label="parallel")
    ax2.plot(sizes, [r.pc_lower_bound for r in reports], "k--", label="lower bound")
    ax2.set_xlabel("size parameter")
    ax2.set_ylabel("parallel complexity")
    ax2.legend(fontsize=8)
    for ax in (ax1, ax2):
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.yaxis.set_major_locator(MaxNLocator(integer=True))
    if family:
        fig.suptitle(family)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
