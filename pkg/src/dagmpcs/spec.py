"""DAG MPCS protocol specifications.

A protocol is authored as a :class:`SkeletalGraph` (signer vertices, the
message flow and the signing candidates) and turned into a full
:class:`ProtocolSpec` by :func:`expand`, which closes the graph under the
"every causal dependency is witnessed by a message" rule, labels every edge
and attaches the TTP vertex.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Union

from .graph import Dag, Edge, GraphError, Item, Vertex, is_edge

TTP = "T"
TTP_VERTEX = "T"


@dataclass(frozen=True)
class Epsilon:
    def __str__(self) -> str:
        return "eps"


@dataclass(frozen=True)
class Exit:
    def __str__(self) -> str:
        return "exit"


@dataclass(frozen=True, order=True)
class Promise:
    sender: str
    source: Vertex
    recipient: str

    def __str__(self) -> str:
        return f"promise({self.sender},{self.source},{self.recipient})"


@dataclass(frozen=True, order=True)
class Signature:
    signer: str

    def __str__(self) -> str:
        return f"sig({self.signer})"


EdgeLabel = Union[Epsilon, Exit, Promise, Signature]
EPSILON = Epsilon()
EXIT = Exit()


def is_message(label: EdgeLabel) -> bool:
    return isinstance(label, (Promise, Signature))


class SpecError(ValueError):
    pass


class Protocol:
    """A labelled DAG protocol: roles on vertices, labels on edges.

    This is the generic shape shared by full MPCS specifications, their
    per-role restrictions and skeletal graphs read as plain protocols.
    """

    def __init__(
        self,
        dag: Dag,
        role_of: Mapping[Vertex, str],
        label_of: Mapping[Edge, EdgeLabel],
        contract: str = "c",
        name: str = "",
    ):
        self.dag = dag
        self.role_of = dict(role_of)
        self.label_of = dict(label_of)
        self.contract = contract
        self.name = name
        for e in dag.edges:
            if e not in self.label_of:
                raise SpecError(f"edge {e[0]}->{e[1]} has no label")
        self.message_edges = tuple(e for e in dag.edges if is_message(self.label_of[e]))
        self.items: tuple[Item, ...] = dag.vertices + dag.edges

    @property
    def vertices(self) -> tuple[Vertex, ...]:
        return self.dag.vertices

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.dag.edges

    def role(self, x: Item) -> str:
        """Role of a vertex, or of the source vertex of an edge."""
        return self.role_of[x[0] if is_edge(x) else x]

    def is_message(self, e: Edge) -> bool:
        return is_message(self.label_of[e])

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name or '?'}: {self.dag!r})"


@dataclass
class SkeletalGraph:
    dag: Dag
    role_of: dict[Vertex, str]
    signers: tuple[str, ...]
    sigma: frozenset[Vertex] = frozenset()
    eps_edges: frozenset[Edge] = frozenset()
    contract_id: str = "c"
    name: str = "protocol"

    def __post_init__(self):
        self.sigma = frozenset(self.sigma)
        self.eps_edges = frozenset(self.eps_edges)
        if len(set(self.signers)) < 2:
            raise SpecError("a protocol needs at least two signers")
        if TTP in self.signers:
            raise SpecError(f"{TTP!r} is reserved for the trusted third party")
        for v in self.dag.vertices:
            if v == TTP_VERTEX:
                raise SpecError(f"vertex name {TTP_VERTEX!r} is reserved")
            if self.role_of.get(v) not in self.signers:
                raise SpecError(f"vertex {v} has unknown role {self.role_of.get(v)!r}")
        for a, b in self.eps_edges:
            if not self.dag.has_edge(a, b):
                raise SpecError(f"eps edge {a}->{b} is not an edge")
            if self.role_of[a] != self.role_of[b]:
                raise SpecError(f"eps edge {a}->{b} joins roles {self.role_of[a]} and {self.role_of[b]}")
        unknown = self.sigma - set(self.dag.vertices)
        if unknown:
            raise SpecError(f"signing vertices not in graph: {sorted(unknown)}")

    def label(self, e: Edge) -> EdgeLabel:
        a, b = e
        if self.role_of[a] == self.role_of[b]:
            return EPSILON
        if a in self.sigma:
            return Signature(self.role_of[a])
        return Promise(self.role_of[a], a, self.role_of[b])

    def as_protocol(self) -> Protocol:
        """The skeletal graph read as a plain DAG protocol (no TTP)."""
        return Protocol(
            self.dag,
            self.role_of,
            {e: self.label(e) for e in self.dag.edges},
            self.contract_id,
            self.name,
        )


class ProtocolSpec(Protocol):
    """A full DAG MPCS protocol specification with its derived vertex sets."""

    def __init__(
        self,
        dag: Dag,
        role_of: Mapping[Vertex, str],
        label_of: Mapping[Edge, EdgeLabel],
        sigma: Iterable[Vertex],
        signers: Iterable[str],
        contract: str = "c",
        name: str = "",
    ):
        super().__init__(dag, role_of, label_of, contract, name)
        self.sigma = frozenset(sigma)
        self.signers = tuple(signers)
        self.signer_vertices = tuple(v for v in dag.vertices if self.role_of[v] != TTP)
        ttps = [v for v in dag.vertices if self.role_of[v] == TTP]
        self.ttp_vertex = ttps[0] if len(ttps) == 1 else None
        self._by_role = {r: tuple(v for v in self.signer_vertices if self.role_of[v] == r) for r in self.signers}
        self._k: dict[Vertex, frozenset[Edge]] = {}
        self._kp: dict[Vertex, frozenset[Edge]] = {}
        incoming: dict[Vertex, list[Edge]] = {v: [] for v in dag.vertices}
        for e in self.message_edges:
            incoming[e[1]].append(e)
        for v in self.signer_vertices:
            same = [u for u in self._by_role.get(self.role_of[v], ()) if dag.reaches(u, v)]
            k = frozenset(e for u in same for e in incoming[u])
            self._k[v] = k
            self._kp[v] = frozenset(e for e in k if e[1] != v)
        self.signing_set = frozenset(
            v for v in self.sigma if v in dag and any(self.is_message(e) for e in dag.out_edges(v))
        )
        everyone = set(self.signers)
        self.initial_set = frozenset(
            v for v in self.signer_vertices
            if {self.role_of[w] for w, _ in self._kp[v]} | {self.role_of[v]} != everyone
        )
        self.end_set = frozenset(
            v for v in self.signer_vertices
            if {self.role_of[w] for w, _ in self._k[v] if w in self.signing_set} | {self.role_of[v]} == everyone
        )

    def vertices_of(self, role: str) -> tuple[Vertex, ...]:
        return self._by_role[role]

    def _signer_vertex(self, v: Vertex) -> None:
        if v not in self._k:
            raise SpecError(f"{v!r} is not a signer vertex")

    def knowledge(self, v: Vertex | Iterable[Vertex]) -> frozenset[Edge]:
        """Message edges received by ``r(v)`` at or before ``v`` (union over a set)."""
        return self._lookup(self._k, v)

    def pre_knowledge(self, v: Vertex | Iterable[Vertex]) -> frozenset[Edge]:
        """Like :meth:`knowledge` but excluding the edges into ``v`` itself."""
        return self._lookup(self._kp, v)

    def _lookup(self, table, v) -> frozenset[Edge]:
        if isinstance(v, str):
            self._signer_vertex(v)
            return table[v]
        out: frozenset[Edge] = frozenset()
        for u in v:
            self._signer_vertex(u)
            out |= table[u]
        return out


def knowledge(p: ProtocolSpec, v: Vertex | Iterable[Vertex]) -> frozenset[Edge]:
    return p.knowledge(v)


def pre_knowledge(p: ProtocolSpec, v: Vertex | Iterable[Vertex]) -> frozenset[Edge]:
    return p.pre_knowledge(v)


def signing_set(p: ProtocolSpec) -> frozenset[Vertex]:
    return p.signing_set


def initial_set(p: ProtocolSpec) -> frozenset[Vertex]:
    return p.initial_set


def end_set(p: ProtocolSpec) -> frozenset[Vertex]:
    return p.end_set


def mpcs_label(role_of: Mapping[Vertex, str], sigma: frozenset[Vertex], e: Edge) -> EdgeLabel:
    a, b = e
    ra, rb = role_of[a], role_of[b]
    if ra == rb:
        return EPSILON
    if b == TTP_VERTEX:
        return EXIT
    if a in sigma and rb != TTP:
        return Signature(ra)
    return Promise(ra, a, rb)


def missing_transitive_edges(dag: Dag, role_of: Mapping[Vertex, str]) -> list[Edge]:
    """Pairs ``v < w`` with no edge and no intermediate vertex of either role."""
    missing = []
    for v in dag.vertices:
        for w in sorted(dag.descendants(v)):
            if dag.has_edge(v, w):
                continue
            roles = {role_of[v], role_of[w]}
            between = dag.descendants(v) & dag.ancestors(w)
            if not any(role_of[u] in roles for u in between):
                missing.append((v, w))
    return missing


def expand(sk: SkeletalGraph) -> ProtocolSpec:
    """Minimal full graph of a skeletal graph, with labels and the TTP."""
    role_of = dict(sk.role_of)
    edges = set(sk.dag.edges) | set(missing_transitive_edges(sk.dag, role_of))
    vertices = list(sk.dag.vertices) + [TTP_VERTEX]
    role_of[TTP_VERTEX] = TTP
    edges |= {(v, TTP_VERTEX) for v in sk.dag.vertices}
    dag = Dag(vertices, edges)
    labels = {e: mpcs_label(role_of, sk.sigma, e) for e in dag.edges}
    return ProtocolSpec(dag, role_of, labels, sk.sigma, sk.signers, sk.contract_id, sk.name)


@dataclass(frozen=True)
class Violation:
    condition: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.condition}] {self.detail}"


def validate(p: ProtocolSpec) -> list[Violation]:
    """Check the MPCS specification conditions; an empty list means valid."""
    out: list[Violation] = []
    dag, role_of = p.dag, p.role_of
    ttps = [v for v in dag.vertices if role_of.get(v) == TTP]
    if len(ttps) != 1:
        out.append(Violation("ttp", f"expected exactly one TTP vertex, found {len(ttps)}: {ttps}"))
    else:
        t = ttps[0]
        for v in dag.vertices:
            if v != t and not dag.has_edge(v, t):
                out.append(Violation("ttp", f"vertex {v} has no exit edge to {t}"))
    for v in dag.vertices:
        r = role_of.get(v)
        if r != TTP and r not in p.signers:
            out.append(Violation("roles", f"vertex {v} has unknown role {r!r}"))
    if len(p.signers) < 2:
        out.append(Violation("roles", "fewer than two signers"))
    for v, w in missing_transitive_edges(dag, role_of):
        out.append(Violation("transitivity", f"{v} < {w} but no edge and no intermediate vertex of role {role_of[v]} or {role_of[w]}"))
    if len(ttps) == 1:
        for e in dag.edges:
            want = mpcs_label(role_of, p.sigma, e)
            if p.label_of[e] != want:
                out.append(Violation("labels", f"edge {e[0]}->{e[1]} labelled {p.label_of[e]}, expected {want}"))
    for e in dag.edges:
        lab = p.label_of[e]
        if isinstance(lab, Epsilon) and role_of[e[0]] != role_of[e[1]]:
            out.append(Violation("labels", f"eps edge {e[0]}->{e[1]} crosses roles"))
        if isinstance(lab, Exit) and role_of[e[1]] != TTP:
            out.append(Violation("labels", f"exit edge {e[0]}->{e[1]} does not enter the TTP"))
    return out


def restrict(p: Protocol, role: str) -> Protocol:
    """The fragment of ``p`` made of the edges touching ``role``."""
    known = set(getattr(p, "signers", ())) | set(p.role_of.values())
    if role not in known or role == TTP:
        raise SpecError(f"unknown role {role!r}")
    edges = [e for e in p.edges if p.role_of[e[0]] == role or p.role_of[e[1]] == role]
    vertices = {v for e in edges for v in e}
    return Protocol(
        Dag(vertices, edges),
        {v: p.role_of[v] for v in vertices},
        {e: p.label_of[e] for e in edges},
        p.contract,
        f"{p.name}|{role}",
    )


def is_optimistic(p: ProtocolSpec) -> bool:
    """Every signer ends up holding all signatures when nobody deviates."""
    return all(any(v in p.end_set for v in p.vertices_of(r)) for r in p.signers)


def has_in_role_parallelism(p: Protocol) -> bool:
    """Some signer's vertices are not totally ordered."""
    by_role: dict[str, list[Vertex]] = {}
    for v in p.vertices:
        if p.role_of[v] != TTP:
            by_role.setdefault(p.role_of[v], []).append(v)
    for vs in by_role.values():
        for i, v in enumerate(vs):
            for w in vs[i + 1:]:
                if not (p.dag.reaches(v, w) or p.dag.reaches(w, v)):
                    return True
    return False


# -- skeletal text format ------------------------------------------------------


@dataclass
class ParseError(SpecError):
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.message}"


def parse_skeletal(text: str) -> SkeletalGraph:
    """Read the ``.mpcs`` skeletal format.

    One declaration per line, ``#`` starts a comment::

        protocol linear2
        signers A B
        vertex A1 role=A
        vertex A2 role=A sign
        edge A1 B1
        edge A1 A2 eps
    """
    name = "protocol"
    contract = "c"
    signers: list[str] | None = None
    role_of: dict[str, str] = {}
    sigma: set[str] = set()
    edges: list[Edge] = []
    eps: set[Edge] = set()
    where: dict[object, tuple[int, int]] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        tokens = []
        pos = 0
        for tok in line.split():
            pos = line.index(tok, pos)
            tokens.append((tok, pos + 1))
            pos += len(tok)
        if not tokens:
            continue
        head, col = tokens[0]
        args = tokens[1:]

        def fail(msg: str, column: int = col) -> ParseError:
            return ParseError(lineno, column, msg)

        if head == "protocol":
            if len(args) != 1:
                raise fail("expected: protocol <name>")
            name = args[0][0]
        elif head == "contract":
            if len(args) != 1:
                raise fail("expected: contract <id>")
            contract = args[0][0]
        elif head == "signers":
            if signers is not None:
                raise fail("signers declared twice")
            signers = [a for a, _ in args]
            if len(signers) < 2:
                raise fail("at least two signers are required")
            if len(set(signers)) != len(signers):
                raise fail("duplicate signer")
            if TTP in signers:
                raise fail(f"signer name {TTP!r} is reserved")
        elif head == "vertex":
            if signers is None:
                raise fail("vertex declared before signers")
            if not args:
                raise fail("expected: vertex <id> role=<r> [sign]")
            vid, vcol = args[0]
            if vid in role_of:
                raise fail(f"duplicate vertex {vid}", vcol)
            if vid == TTP_VERTEX or "->" in vid:
                raise fail(f"invalid vertex name {vid!r}", vcol)
            role = None
            for tok, tcol in args[1:]:
                if tok.startswith("role="):
                    role = tok[5:]
                    if role not in signers:
                        raise fail(f"unknown role {role!r}", tcol)
                elif tok == "sign":
                    sigma.add(vid)
                else:
                    raise fail(f"unexpected token {tok!r}", tcol)
            if role is None:
                raise fail(f"vertex {vid} has no role")
            role_of[vid] = role
            where[vid] = (lineno, vcol)
        elif head == "edge":
            if len(args) not in (2, 3):
                raise fail("expected: edge <src> <dst> [eps]")
            (a, acol), (b, bcol) = args[0], args[1]
            for v, vcol in ((a, acol), (b, bcol)):
                if v not in role_of:
                    raise fail(f"unknown vertex {v!r}", vcol)
            if (a, b) in where:
                raise fail(f"duplicate edge {a}->{b}")
            edges.append((a, b))
            where[(a, b)] = (lineno, col)
            if len(args) == 3:
                if args[2][0] != "eps":
                    raise fail(f"unexpected token {args[2][0]!r}", args[2][1])
                if role_of[a] != role_of[b]:
                    raise fail(f"eps edge {a}->{b} joins different roles", args[2][1])
                eps.add((a, b))
        else:
            raise fail(f"unknown declaration {head!r}")

    if signers is None:
        raise ParseError(1, 1, "no signers declared")
    try:
        dag = Dag(role_of, edges)
    except GraphError as exc:
        line, column = (0, 0)
        for e in edges:
            line, column = where[e]
        raise ParseError(line, column, str(exc)) from None
    return SkeletalGraph(dag, role_of, tuple(signers), frozenset(sigma), frozenset(eps), contract, name)


def dump_skeletal(sk: SkeletalGraph) -> str:
    lines = [f"protocol {sk.name}"]
    if sk.contract_id != "c":
        lines.append(f"contract {sk.contract_id}")
    lines.append("signers " + " ".join(sk.signers))
    for r in sk.signers:
        for v in sk.dag.topological_order():
            if sk.role_of[v] == r:
                lines.append(f"vertex {v} role={r}" + (" sign" if v in sk.sigma else ""))
    for a, b in sk.dag.edges:
        same = sk.role_of[a] == sk.role_of[b]
        lines.append(f"edge {a} {b}" + (" eps" if same else ""))
    return "\n".join(lines) + "\n"


def dump_full(p: ProtocolSpec) -> str:
    """Human-readable listing of a full specification."""
    lines = [f"protocol {p.name}", "signers " + " ".join(p.signers)]
    for v in p.dag.topological_order():
        tags = []
        if v in p.sigma:
            tags.append("sign")
        if v in p.initial_set:
            tags.append("init")
        if v in p.end_set:
            tags.append("end")
        lines.append(f"vertex {v} role={p.role_of[v]}" + "".join(" " + t for t in tags))
    for e in p.edges:
        lines.append(f"edge {e[0]} {e[1]} {p.label_of[e]}")
    return "\n".join(lines) + "\n"
