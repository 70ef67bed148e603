"""Labelled transition system of a protocol, executions and honesty.

A state is the set of items that have happened: a vertex is a receive event,
an edge a send, an internal (eps) step or an exit to the TTP.
"""

from __future__ import annotations

import random
from collections.abc import Iterable
from dataclasses import dataclass, field

from .graph import Item, format_item, is_edge, item_key, parse_item, sorted_items
from .spec import EdgeLabel, Epsilon, Exit, Protocol, SpecError, TTP, is_message

State = frozenset

LABELS = ("eps", "send", "recv", "exit")


class ExecutionError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Transition:
    label: str
    item: Item

    def __str__(self) -> str:
        return f"{self.label} {format_item(self.item)}"

    @classmethod
    def parse(cls, line: str) -> "Transition":
        parts = line.split()
        if len(parts) != 2 or parts[0] not in LABELS:
            raise ExecutionError(f"bad transition line {line!r}")
        return cls(parts[0], parse_item(parts[1]))


def _edge_kind(label: EdgeLabel) -> str:
    if isinstance(label, Epsilon):
        return "eps"
    if isinstance(label, Exit):
        return "exit"
    return "send"


def transition_for(p: Protocol, x: Item) -> Transition:
    if is_edge(x):
        return Transition(_edge_kind(p.label_of[x]), x)
    return Transition("recv", x)


def is_enabled(p: Protocol, s: frozenset, t: Transition) -> bool:
    x = t.item
    if x in s or x not in p.dag:
        return False
    if t.label == "recv":
        return not is_edge(x) and all(e in s for e in p.dag.in_edges(x))
    if not is_edge(x):
        return False
    kind = _edge_kind(p.label_of[x])
    if kind != t.label:
        return False
    if kind == "eps":
        return x[0] in s
    return True


def enabled(p: Protocol, s: Iterable[Item]) -> list[Transition]:
    """All transitions enabled in state ``s``, in item order."""
    s = frozenset(s)
    out = []
    for x in sorted_items(p.items):
        t = transition_for(p, x)
        if is_enabled(p, s, t):
            out.append(t)
    return out


def step(p: Protocol, s: Iterable[Item], t: Transition) -> frozenset:
    s = frozenset(s)
    if not is_enabled(p, s, t):
        raise ExecutionError(f"transition {t} is not enabled")
    return s | {t.item}


@dataclass
class Execution:
    start: frozenset = frozenset()
    transitions: list[Transition] = field(default_factory=list)

    def states(self) -> list[frozenset]:
        out = [frozenset(self.start)]
        for t in self.transitions:
            out.append(out[-1] | {t.item})
        return out

    @property
    def final(self) -> frozenset:
        return frozenset(self.start) | {t.item for t in self.transitions}

    def prefix(self, k: int) -> "Execution":
        return Execution(self.start, self.transitions[:k])

    def __len__(self) -> int:
        return len(self.transitions)

    def count(self, label: str) -> int:
        return sum(t.label == label for t in self.transitions)

    def exits(self) -> list[Transition]:
        return [t for t in self.transitions if t.label == "exit"]

    def to_text(self) -> str:
        lines = [f"# start {' '.join(format_item(x) for x in sorted_items(self.start))}"] if self.start else []
        lines += [str(t) for t in self.transitions]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "Execution":
        start: set = set()
        steps = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("# start"):
                start |= {parse_item(tok) for tok in line.split()[2:]}
            elif not line.startswith("#"):
                steps.append(Transition.parse(line))
        return cls(frozenset(start), steps)


def is_execution(p: Protocol, rho: Execution) -> bool:
    s = frozenset(rho.start)
    if not all(x in p.dag for x in s):
        return False
    for t in rho.transitions:
        if not is_enabled(p, s, t):
            return False
        s = s | {t.item}
    return True


def restrict_execution(p: Protocol, rho: Execution, role: str) -> Execution:
    """Project an execution onto the items touching ``role``, dropping stutter steps."""
    keep = _touching(p, role)
    out = Execution(frozenset(x for x in rho.start if x in keep), [])
    for t in rho.transitions:
        if t.item in keep:
            out.transitions.append(t)
    return out


def _touching(p: Protocol, role: str) -> set[Item]:
    edges = {e for e in p.edges if p.role_of[e[0]] == role or p.role_of[e[1]] == role}
    return edges | {v for e in edges for v in e}


class ItemSpace:
    """Bit-indexed items of a protocol with precomputed predecessor masks.

    ``pred[i]`` is the set of items strictly preceding item ``i`` in the
    causal order; ``own_pred[i]`` keeps only the items owned by the same
    role (its vertices and the edges leaving them).
    """

    def __init__(self, p: Protocol):
        self.p = p
        self.items: list[Item] = sorted_items(p.items)
        self.index = {x: i for i, x in enumerate(self.items)}
        g = p.dag
        self.owner = [p.role(x) for x in self.items]
        vmask = {v: 1 << self.index[v] for v in g.vertices}
        down = {}
        for v in g.topological_order():
            m = 0
            for u in g.predecessors(v):
                m |= down[u] | vmask[u] | (1 << self.index[(u, v)])
            down[v] = m
        self.pred = []
        for x in self.items:
            if is_edge(x):
                self.pred.append(down[x[0]] | vmask[x[0]])
            else:
                self.pred.append(down[x])
        self.role_mask: dict[str, int] = {}
        for i, r in enumerate(self.owner):
            self.role_mask[r] = self.role_mask.get(r, 0) | (1 << i)
        self.own_pred = [self.pred[i] & self.role_mask[self.owner[i]] for i in range(len(self.items))]
        self.kind = [transition_for(p, x).label for x in self.items]
        self.in_mask = []
        for x in self.items:
            m = 0
            if not is_edge(x):
                for e in g.in_edges(x):
                    m |= 1 << self.index[e]
            self.in_mask.append(m)

    def mask(self, items: Iterable[Item]) -> int:
        m = 0
        for x in items:
            m |= 1 << self.index[x]
        return m

    def unmask(self, m: int) -> frozenset:
        out = []
        while m:
            low = m & -m
            out.append(self.items[low.bit_length() - 1])
            m ^= low
        return frozenset(out)

    def closed(self, m: int) -> bool:
        rest = m
        while rest:
            low = rest & -rest
            i = low.bit_length() - 1
            if self.pred[i] & ~m:
                return False
            rest ^= low
        return True

    def own_closed(self, m: int, role: str) -> bool:
        rest = m & self.role_mask.get(role, 0)
        while rest:
            low = rest & -rest
            i = low.bit_length() - 1
            if self.own_pred[i] & ~m:
                return False
            rest ^= low
        return True



def item_space(p: Protocol) -> ItemSpace:
    sp = getattr(p, "_item_space", None)
    if sp is None:
        sp = ItemSpace(p)
        p._item_space = sp
    return sp


def is_causally_closed_state(p: Protocol, s: Iterable[Item]) -> bool:
    sp = item_space(p)
    return sp.closed(sp.mask(s))


def honest_state(p: Protocol, s: Iterable[Item], role: str) -> bool:
    """Whether a single state is consistent with ``role`` following the protocol.

    Only the role's own items are judged: every own item present must have its
    own causal predecessors present.  An exit ``(v, T)`` must be unique, ``v``
    must not have been received, and every own item before ``v`` must be done.
    """
    sp = item_space(p)
    m = sp.mask(s)
    own = m & sp.role_mask.get(role, 0)
    exits = [i for i in range(len(sp.items)) if own >> i & 1 and sp.kind[i] == "exit"]
    if len(exits) > 1:
        return False
    if not exits:
        return sp.own_closed(m, role)
    i = exits[0]
    v = sp.items[i][0]
    vi = sp.index[v]
    if m >> vi & 1:
        return False
    rest = m & ~(1 << i)
    return sp.own_closed(rest, role) and not (sp.own_pred[vi] & ~rest)


def is_honest(p: Protocol, rho: Execution, role: str) -> bool:
    """Every state of ``rho`` is honest for ``role``."""
    return all(honest_state(p, s, role) for s in rho.states())


def is_closed(p: Protocol, rho: Execution) -> bool:
    """Complete, exit-free, causally ordered run that cannot be extended."""
    if rho.start or any(t.label == "exit" for t in rho.transitions) or not is_execution(p, rho):
        return False
    sp = item_space(p)
    for s in rho.states():
        if not sp.closed(sp.mask(s)):
            return False
    final = sp.mask(rho.final)
    return not _closed_extensions(sp, final)


def _closed_extensions(sp: ItemSpace, m: int) -> list[int]:
    out = []
    for i, x in enumerate(sp.items):
        if m >> i & 1 or sp.kind[i] == "exit":
            continue
        if sp.pred[i] & ~m:
            continue
        if sp.kind[i] == "recv" and sp.in_mask[i] & ~m:
            continue
        out.append(i)
    return out


def closed_execution(p: Protocol, rng: random.Random | None = None) -> Execution:
    """A maximal causally closed exit-free execution.

    Without ``rng`` the least enabled transition is always taken, giving a
    canonical run; with ``rng`` the choice is random.
    """
    sp = item_space(p)
    m = 0
    steps = []
    while True:
        cand = _closed_extensions(sp, m)
        if not cand:
            break
        i = rng.choice(cand) if rng is not None else cand[0]
        m |= 1 << i
        steps.append(Transition(sp.kind[i], sp.items[i]))
    missing = [
        x for i, x in enumerate(sp.items)
        if not m >> i & 1 and sp.kind[i] != "exit" and not (not is_edge(x) and p.role_of.get(x) == TTP)
    ]
    if missing:
        raise SpecError(
            "honest run deadlocks before completing: " + ", ".join(format_item(x) for x in missing[:5])
        )
    return Execution(frozenset(), steps)


def random_execution(p: Protocol, rng: random.Random, max_steps: int | None = None) -> Execution:
    """A uniformly driven random walk over all enabled transitions."""
    s: frozenset = frozenset()
    steps = []
    limit = len(p.items) if max_steps is None else max_steps
    for _ in range(limit):
        opts = enabled(p, s)
        if not opts:
            break
        t = rng.choice(opts)
        steps.append(t)
        s = s | {t.item}
    return Execution(frozenset(), steps)


def send_count(rho: Execution) -> int:
    return rho.count("send")
