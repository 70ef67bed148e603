"""Resolve requests and the trusted third party's decision procedure."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field, replace

from .graph import Edge, Vertex, format_item, parse_item
from .spec import EdgeLabel, Promise, ProtocolSpec, SpecError, TTP

ABORT = "abort"
SIGNED = "signed"


@dataclass(frozen=True)
class ResolveMsg:
    """A resolve request sent from vertex ``vertex`` of signer ``requester``.

    ``evidence`` lists the pre-knowledge edges of the vertex in edge order;
    the symbolic message contents are their labels.
    """

    requester: str
    vertex: Vertex
    own_promise: Promise
    evidence: tuple[Edge, ...] = ()
    labels: tuple[EdgeLabel, ...] = ()

    def __str__(self) -> str:
        parts = ["resolve", self.requester, self.vertex, *(format_item(e) for e in self.evidence)]
        return " ".join(parts)

    @classmethod
    def parse(cls, p: ProtocolSpec, text: str) -> "ResolveMsg":
        toks = text.split()
        if len(toks) < 3 or toks[0] != "resolve":
            raise ValueError(f"not a resolve message: {text!r}")
        evidence = tuple(sorted(parse_item(t) for t in toks[3:]))
        labels = tuple(p.label_of.get(e) for e in evidence)
        return cls(toks[1], toks[2], Promise(toks[1], toks[2], TTP), evidence, labels)


def make_resolve_msg(p: ProtocolSpec, v: Vertex) -> ResolveMsg:
    if p.role_of.get(v) in (None, TTP):
        raise SpecError(f"{v!r} is not a signer vertex")
    r = p.role_of[v]
    evidence = tuple(sorted(p.pre_knowledge(v)))
    return ResolveMsg(r, v, Promise(r, v, TTP), evidence, tuple(p.label_of[e] for e in evidence))


@dataclass(frozen=True)
class TtpState:
    decision: str = ABORT
    evidence: tuple[ResolveMsg, ...] = ()
    contacted: tuple[Vertex, ...] = ()
    dishonest: frozenset[str] = field(default_factory=frozenset)

    def key(self) -> tuple:
        """Hashable summary sufficient to predict all future replies."""
        return (self.decision, self.contacted, self.dishonest)


def _well_formed(p: ProtocolSpec, m: object) -> bool:
    return (
        isinstance(m, ResolveMsg)
        and m.requester in p.signers
        and m.own_promise == Promise(m.requester, m.vertex, TTP)
    )


def caught_roles(p: ProtocolSpec, contacted: Iterable[Vertex]) -> set[str]:
    """Roles of contacters whose later activity shows in the pooled evidence."""
    contacted = tuple(contacted)
    pooled = p.pre_knowledge(contacted) if contacted else frozenset()
    out = set()
    for w in contacted:
        r = p.role_of[w]
        if any(p.role_of[a] == r and p.dag.reaches(w, a) for a, _ in pooled):
            out.add(r)
    return out


def delta0(m: ResolveMsg | object, st: TtpState, p: ProtocolSpec) -> tuple[str, TtpState]:
    """One step of the TTP: answer request ``m`` in state ``st``."""
    if not _well_formed(p, m):
        return ABORT, st
    r = m.requester
    genuine = m.vertex in p.role_of and p.role_of[m.vertex] == r and m == make_resolve_msg(p, m.vertex)
    if r in st.dishonest or not genuine or any(p.role_of[w] == r for w in st.contacted):
        return ABORT, replace(st, dishonest=st.dishonest | {r})
    contacted = st.contacted + (m.vertex,)
    st = replace(st, contacted=contacted, evidence=st.evidence + (m,))
    if m.vertex not in p.initial_set:
        dishonest = st.dishonest | caught_roles(p, contacted)
        st = replace(st, dishonest=frozenset(dishonest))
        if all(p.role_of[w] in dishonest or p.role_of[w] == r for w in contacted):
            st = replace(st, decision=SIGNED)
    return st.decision, st


def delta1(p: ProtocolSpec, ms: Iterable[ResolveMsg]) -> tuple[str, TtpState]:
    reply, st = ABORT, TtpState()
    for m in ms:
        reply, st = delta0(m, st, p)
    return reply, st


def delta(p: ProtocolSpec, ms: Iterable[ResolveMsg]) -> str:
    """Reply to the last request of ``ms`` (``abort`` for no requests)."""
    return delta1(p, ms)[0]


def replies(p: ProtocolSpec, ms: Iterable[ResolveMsg]) -> list[str]:
    st = TtpState()
    out = []
    for m in ms:
        reply, st = delta0(m, st, p)
        out.append(reply)
    return out
