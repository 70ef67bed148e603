"""Fairness of protocol runs and of whole protocols.

Three independent routes are provided:

* :func:`model_check` explores every run in which one signer is honest and
  everyone else is an arbitrary adversary, replaying TTP requests through
  :func:`dagmpcs.ttp.delta0`.
* :func:`find_ac_sequence` searches for abort-chaining sequences, a purely
  graph-level attack pattern; :func:`ac_to_execution` turns one into a
  concrete unfair run.
* :func:`check_permutation_necessary` / :func:`check_permutation_sufficient`
  are fast path-based criteria.
"""

from __future__ import annotations

import itertools
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .graph import Vertex, format_item, paths
from .semantics import Execution, Transition, honest_state, is_execution, item_space
from .spec import ProtocolSpec, Signature, SpecError, TTP, has_in_role_parallelism
from .ttp import ABORT, TtpState, delta0, make_resolve_msg, replies

DEFAULT_MAX_STATES = 10_000_000


class BudgetExceeded(RuntimeError):
    def __init__(self, states: int):
        super().__init__(f"state budget exhausted after {states} states")
        self.states = states


# -- the honesty predicate used by the TTP ------------------------------------


def hon(p: ProtocolSpec, v: Vertex, contacts: Iterable[Vertex]) -> bool:
    """No pooled pre-knowledge at ``contacts`` shows ``r(v)`` acting at or after ``v``."""
    contacts = tuple(contacts)
    if not contacts:
        return True
    r = p.role_of[v]
    return not any(p.role_of[x] == r and p.dag.reaches(v, x) for x, _ in p.pre_knowledge(contacts))


# -- fairness of a single execution --------------------------------------------


def exit_replies(p: ProtocolSpec, rho: Execution) -> list[tuple[Vertex, str]]:
    """TTP replies to the exits of ``rho``, in order, as ``(vertex, reply)``."""
    vs = [t.item[0] for t in rho.exits()]
    return list(zip(vs, replies(p, [make_resolve_msg(p, v) for v in vs])))


def sent_signature(p: ProtocolSpec, items: Iterable, role: str) -> bool:
    return any(
        isinstance(x, tuple) and isinstance(p.label_of[x], Signature) and p.role_of[x[0]] == role
        for x in items
    )


def execution_fair_for(p: ProtocolSpec, rho: Execution, role: str) -> bool:
    final = rho.final
    answered = exit_replies(p, rho)
    last = answered[-1][1] if answered else ABORT
    if last == ABORT and not sent_signature(p, final, role):
        return True
    if any(v in p.end_set and p.role_of[v] == role for v in final if isinstance(v, str)):
        return True
    return all(reply != ABORT for v, reply in answered if p.role_of[v] == role)


# -- explicit-state model checking ---------------------------------------------


@dataclass
class CheckResult:
    role: str
    fair: bool
    states: int
    counterexample: Execution | None = None

    @property
    def verdict(self) -> str:
        return "fair" if self.fair else "unfair"


class _Checker:
    """Search over runs where ``role`` is honest and the rest collude.

    A node is ``(items, ttp_state, last_reply, own_reply, own_exit)``.  Each
    move adds a list of items at once.  In reduced mode the honest signer's
    sends and internal steps fire as soon as they are enabled, and the
    adversary's deliveries are bundled with the receive they enable.
    """

    def __init__(self, p: ProtocolSpec, role: str, reduce: bool):
        if role not in p.signers:
            raise SpecError(f"unknown signer {role!r}")
        self.p = p
        self.role = role
        self.reduce = reduce
        sp = self.sp = item_space(p)
        idx = sp.index
        own = sp.role_mask[role]
        mine = [i for i in range(len(sp.items)) if own >> i & 1]
        self.honest_recv = [i for i in mine if sp.kind[i] == "recv"]
        self.honest_edges = [i for i in mine if sp.kind[i] in ("send", "eps")]
        self.honest_exits = [i for i in mine if sp.kind[i] == "exit"]
        self.end_mask = sp.mask(v for v in p.end_set if p.role_of[v] == role)
        self.sig_mask = sp.mask(
            e for e in p.message_edges if p.role_of[e[0]] == role and isinstance(p.label_of[e], Signature)
        )
        self.presend = sorted(
            e for e in p.message_edges if p.role_of[e[0]] != role and e[0] not in p.signing_set
        )
        self.start = sp.mask(self.presend)
        # adversary signatures delivered to the honest signer
        self.adv_sends = [
            idx[e] for e in p.message_edges
            if p.role_of[e[0]] != role and e[0] in p.signing_set and p.role_of[e[1]] == role
        ]
        self.adv_exits = []
        for v in p.signer_vertices:
            if p.role_of[v] != role:
                need = sp.mask(e for e in p.pre_knowledge(v) if p.role_of[e[0]] == role)
                self.adv_exits.append((idx[(v, p.ttp_vertex)], v, need))
        self.msg = {v: make_resolve_msg(p, v) for v in p.signer_vertices}

    def unfair(self, m: int, last: str, mine: str | None) -> bool:
        if mine != ABORT or m & self.end_mask:
            return False
        return last != ABORT or bool(m & self.sig_mask)

    def _saturate(self, m: int) -> tuple[int, list[int]]:
        sp = self.sp
        added = []
        progress = True
        while progress:
            progress = False
            for i in self.honest_edges:
                if not m >> i & 1 and not sp.own_pred[i] & ~m:
                    m |= 1 << i
                    added.append(i)
                    progress = True
        return m, added

    def _bits(self, m: int) -> list[int]:
        out = []
        while m:
            low = m & -m
            out.append(low.bit_length() - 1)
            m ^= low
        return out

    def moves(self, m: int, ttp: TtpState, exited: Vertex | None):
        """Yield ``(kind, items_added, vertex)`` for every successor."""
        sp = self.sp
        if self.reduce:
            for i in self.honest_recv:
                if m >> i & 1 or sp.own_pred[i] & ~m or sp.items[i] == exited:
                    continue
                missing = sp.in_mask[i] & ~m
                yield "h", self._bits(missing) + [i], None
        else:
            for i in self.honest_recv + self.honest_edges:
                if m >> i & 1 or sp.own_pred[i] & ~m or sp.in_mask[i] & ~m or sp.items[i] == exited:
                    continue
                yield "h", [i], None
        if not (self.reduce and exited is not None):
            if not self.reduce:
                for i in self.adv_sends:
                    if not m >> i & 1:
                        yield "s", [i], None
            roles_in = {self.p.role_of[w] for w in ttp.contacted}
            for i, v, need in self.adv_exits:
                if m >> i & 1 or need & ~m:
                    continue
                if self.reduce and self.p.role_of[v] in roles_in:
                    continue
                yield "x", [i], v
        if exited is None:
            for i in self.honest_exits:
                v = sp.items[i][0]
                vi = sp.index[v]
                if m >> vi & 1 or sp.own_pred[vi] & ~m:
                    continue
                yield "e", [i], v

    def run(self, max_states: int, order: str) -> CheckResult:
        m0 = self.start
        pre: list[int] = []
        if self.reduce:
            m0, pre = self._saturate(m0)
        init = (m0, TtpState(), ABORT, None, None)
        parent: dict = {self._key(init): None}
        frontier = deque([init])
        pop = frontier.pop if order == "dfs" else frontier.popleft
        states = 0
        while frontier:
            node = pop()
            m, ttp, last, mine, exited = node
            states += 1
            if states > max_states:
                raise BudgetExceeded(states)
            if self.unfair(m, last, mine):
                return CheckResult(self.role, False, states, self._trace(parent, self._key(node), pre))
            if self.reduce and mine is not None and mine != ABORT:
                continue
            succ = []
            for kind, added, v in self.moves(m, ttp, exited):
                m2 = m
                for i in added:
                    m2 |= 1 << i
                if self.reduce:
                    m2, more = self._saturate(m2)
                    added = added + more
                ttp2, last2, mine2, exited2 = ttp, last, mine, exited
                if kind in ("x", "e"):
                    last2, ttp2 = delta0(self.msg[v], ttp, self.p)
                    if kind == "e":
                        mine2, exited2 = last2, v
                nxt = (m2, ttp2, last2, mine2, exited2)
                k = self._key(nxt)
                if k in parent:
                    continue
                parent[k] = (self._key(node), added)
                succ.append(nxt)
            frontier.extend(reversed(succ) if order == "dfs" else succ)
        return CheckResult(self.role, True, states)

    @staticmethod
    def _key(node) -> tuple:
        m, ttp, last, mine, exited = node
        return (m, ttp.decision, frozenset(ttp.contacted), ttp.dishonest, last, mine, exited)

    def _trace(self, parent: dict, key, pre: list[int]) -> Execution:
        sp = self.sp
        chunks = []
        while parent[key] is not None:
            key, added = parent[key]
            chunks.append(added)
        steps = [Transition("send", e) for e in self.presend]
        steps += [Transition(sp.kind[i], sp.items[i]) for i in pre]
        for added in reversed(chunks):
            steps += [Transition(sp.kind[i], sp.items[i]) for i in added]
        return Execution(frozenset(), steps)


def model_check(
    p: ProtocolSpec,
    role: str,
    max_states: int = DEFAULT_MAX_STATES,
    order: str = "dfs",
    reduce: bool = True,
) -> CheckResult:
    """Decide whether every run with ``role`` honest is fair for ``role``.

    All other signers act as one adversary: their promises are available from
    the start, while signatures and TTP requests are explicit choices.  An
    adversary request from ``v`` needs the honest signer's part of the
    pre-knowledge of ``v`` to have been sent.  With ``reduce`` the search
    skips moves that cannot lead to an unfair state: repeated requests from
    one role, adversary moves after the honest signer's request, and anything
    after the honest signer is answered with a signed contract.
    """
    if order not in ("dfs", "bfs"):
        raise ValueError("order must be 'dfs' or 'bfs'")
    return _Checker(p, role, reduce).run(max_states, order)


# -- reports -------------------------------------------------------------------


@dataclass
class SignerResult:
    verdict: str
    states: int
    counterexample: Execution | None = None
    exit_order: list[str] = field(default_factory=list)
    ttp_replies: list[str] = field(default_factory=list)
    ac_witness: "AcSequence | None" = None

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "states_explored": self.states}
        if self.counterexample is not None:
            out["counterexample"] = [str(t) for t in self.counterexample.transitions]
            out["exit_order"] = self.exit_order
            out["ttp_replies"] = self.ttp_replies
        if self.ac_witness is not None:
            out["ac_witness"] = str(self.ac_witness)
        return out


@dataclass
class FairnessReport:
    protocol: str
    per_signer: dict[str, SignerResult]

    @property
    def overall(self) -> str:
        return "unfair" if any(r.verdict == "unfair" for r in self.per_signer.values()) else "fair"

    @property
    def states_explored(self) -> int:
        return sum(r.states for r in self.per_signer.values())

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "protocol": self.protocol,
            "overall": self.overall,
            "states_explored": self.states_explored,
            "per_signer": {r: res.to_json() for r, res in self.per_signer.items()},
        }

    def to_text(self) -> str:
        lines = [f"protocol {self.protocol}: {self.overall}"]
        for r, res in self.per_signer.items():
            lines.append(f"  signer {r}: {res.verdict} ({res.states} states)")
            if res.counterexample is not None:
                lines.append(f"    exit order: {', '.join(res.exit_order)}")
                lines.append(f"    ttp replies: {', '.join(res.ttp_replies)}")
                if res.ac_witness is not None:
                    lines.append(f"    abort chain: {res.ac_witness}")
                lines.append("    trace:")
                lines += [f"      {t}" for t in res.counterexample.transitions]
        return "\n".join(lines) + "\n"


def verify(
    p: ProtocolSpec,
    signers: Sequence[str] | None = None,
    max_states: int = DEFAULT_MAX_STATES,
    order: str = "dfs",
) -> FairnessReport:
    out = {}
    for r in signers or p.signers:
        res = model_check(p, r, max_states=max_states, order=order)
        sr = SignerResult(res.verdict, res.states)
        if res.counterexample is not None:
            sr.counterexample = res.counterexample
            answered = exit_replies(p, res.counterexample)
            sr.exit_order = [v for v, _ in answered]
            sr.ttp_replies = [reply for _, reply in answered]
            sr.ac_witness = ac_from_exits(p, sr.exit_order)
        out[r] = sr
    return FairnessReport(p.name, out)


# -- abort-chaining sequences --------------------------------------------------


@dataclass(frozen=True)
class AcSequence:
    contacts: tuple[Vertex, ...]
    sig_vertex: Vertex

    def __str__(self) -> str:
        return f"({', '.join(self.contacts)} | {self.sig_vertex})"


def _chain_ok(p: ProtocolSpec, contacts: Sequence[Vertex]) -> bool:
    """Conditions on the prefix: initial start, distinct roles, honesty chain."""
    if not contacts or contacts[0] not in p.initial_set:
        return False
    roles = [p.role_of[v] for v in contacts]
    if len(set(roles)) != len(roles):
        return False
    for i in range(len(contacts)):
        prefix = contacts[: i + 1]
        if not hon(p, contacts[i], prefix):
            return False
        if i > 0 and not hon(p, contacts[i - 1], prefix):
            return False
    return True


def _victim_signatures(p: ProtocolSpec, last: Vertex) -> list[Vertex]:
    """Signing vertices that make ``last``'s signer a victim, or [] if none."""
    r = p.role_of[last]
    if any(u in p.end_set for u in p.vertices_of(r) if p.dag.strictly_reaches(u, last)):
        return []
    return sorted(
        s for s in p.signing_set - p.end_set
        if p.role_of[s] == r and not p.dag.reaches(last, s)
    )


def is_ac_sequence(p: ProtocolSpec, contacts: Sequence[Vertex], sig_vertex: Vertex | None = None) -> bool:
    """Check the abort-chaining conditions; ``sig_vertex=None`` accepts any witness."""
    contacts = tuple(contacts)
    if not all(v in p.signer_vertices for v in contacts) or len(contacts) > len(p.signers):
        return False
    if not _chain_ok(p, contacts):
        return False
    sigs = _victim_signatures(p, contacts[-1])
    return bool(sigs) if sig_vertex is None else sig_vertex in sigs


def ac_from_exits(p: ProtocolSpec, contacts: Sequence[Vertex]) -> AcSequence | None:
    """Longest abort-chaining subsequence of an exit order that keeps its last contact."""
    contacts = tuple(contacts)
    if not contacts:
        return None
    head, last = contacts[:-1], contacts[-1]
    for size in range(min(len(head), len(p.signers) - 1), -1, -1):
        for picked in itertools.combinations(head, size):
            cand = picked + (last,)
            if is_ac_sequence(p, cand):
                return AcSequence(cand, _victim_signatures(p, last)[0])
    return None


def _ac_search(p: ProtocolSpec):
    verts = sorted(p.signer_vertices)

    def extend(prefix: tuple[Vertex, ...]):
        sigs = _victim_signatures(p, prefix[-1])
        for s in sigs:
            yield AcSequence(prefix, s)
        if len(prefix) == len(p.signers):
            return
        used = {p.role_of[v] for v in prefix}
        for w in verts:
            if p.role_of[w] in used:
                continue
            nxt = prefix + (w,)
            if hon(p, w, nxt) and hon(p, prefix[-1], nxt):
                yield from extend(nxt)

    for v in verts:
        if v in p.initial_set:
            yield from extend((v,))


def find_ac_sequence(p: ProtocolSpec) -> AcSequence | None:
    """First abort-chaining sequence in lexicographic search order, if any."""
    return next(_ac_search(p), None)


def all_ac_sequences(p: ProtocolSpec, limit: int | None = None) -> list[AcSequence]:
    return list(itertools.islice(_ac_search(p), limit))


def ac_to_execution(p: ProtocolSpec, a: AcSequence) -> Execution:
    """A concrete run realising the attack, honest and unfair for the last signer.

    The honest signer does exactly what is needed: the signature at the
    signing vertex, the messages the earlier requesters present as evidence,
    and everything before its own request.  The adversary supplies the
    messages the honest signer waits for, then the requests go out in order.
    """
    if not is_ac_sequence(p, a.contacts, a.sig_vertex):
        raise SpecError(f"{a} is not an abort-chaining sequence")
    sp = item_space(p)
    last = a.contacts[-1]
    r = p.role_of[last]
    goal = 0
    goal |= sp.mask([a.sig_vertex])
    goal |= sp.mask(e for e in p.dag.out_edges(a.sig_vertex) if isinstance(p.label_of[e], Signature))
    for v in a.contacts[:-1]:
        goal |= sp.mask(e for e in p.pre_knowledge(v) if p.role_of[e[0]] == r)
    goal |= sp.own_pred[sp.index[last]]
    own = goal
    rest = goal
    while rest:
        low = rest & -rest
        own |= sp.own_pred[low.bit_length() - 1]
        rest ^= low
    needed_in = 0
    rest = own
    while rest:
        low = rest & -rest
        i = low.bit_length() - 1
        needed_in |= sp.in_mask[i] & ~sp.role_mask[r]
        rest ^= low
    steps = [Transition("send", x) for x in sorted(sp.unmask(needed_in))]
    order = {v: k for k, v in enumerate(p.dag.topological_order())}
    # a vertex before its out-edges; vertices by topological position
    own_items = sorted(
        sp.unmask(own), key=lambda x: (order[x], 0, "") if isinstance(x, str) else (order[x[0]], 1, x[1])
    )
    steps += [Transition(sp.kind[sp.index[x]], x) for x in own_items]
    for v in a.contacts:
        steps.append(Transition("exit", (v, p.ttp_vertex)))
    rho = Execution(frozenset(), steps)
    if not is_execution(p, rho):
        raise AssertionError(f"constructed run for {a} is not an execution")
    return rho


# -- path criteria -------------------------------------------------------------


def seed_set(p: ProtocolSpec) -> frozenset[Vertex]:
    """Initial-set vertices with no later initial-set vertex of the same signer."""
    init = p.initial_set
    return frozenset(
        v for v in init
        if not any(w in init for w in p.vertices_of(p.role_of[v]) if p.dag.strictly_reaches(v, w))
    )


def _best_prefix(p: ProtocolSpec, seeds: frozenset[Vertex], target: Vertex, perm: tuple[str, ...]) -> int:
    """Longest prefix of ``perm`` matched as a subsequence along some seed-to-target path."""
    best: dict[Vertex, int] = {}
    for u in p.dag.topological_order():
        if p.role_of[u] == TTP or not p.dag.reaches(u, target):
            continue
        cands = [best[w] for w in p.dag.predecessors(u) if w in best]
        if u in seeds:
            cands.append(0)
        if not cands:
            continue
        k = max(cands)
        if k < len(perm) and perm[k] == p.role_of[u]:
            k += 1
        best[u] = k
    return best.get(target, -1)


def _others(p: ProtocolSpec, v: Vertex) -> list[str]:
    return [r for r in p.signers if r != p.role_of[v]]


def check_permutation_necessary(p: ProtocolSpec) -> list[tuple[Vertex, tuple[str, ...]]]:
    """Signing vertices and signer orders not covered by any path from the seed set."""
    seeds = seed_set(p)
    fails = []
    for v in sorted(p.signing_set):
        for perm in itertools.permutations(_others(p, v)):
            if _best_prefix(p, seeds, v, perm) < len(perm):
                fails.append((v, perm))
    return fails


def _contains(seq: Sequence[str], perm: Sequence[str]) -> bool:
    it = iter(seq)
    return all(any(x == want for x in it) for want in perm)


def check_permutation_sufficient(p: ProtocolSpec) -> dict[str, str]:
    """Per signer ``fair`` when the path criterion guarantees it, else ``inconclusive``.

    Requires every signer's vertices to be totally ordered.  Paths are
    enumerated explicitly, which keeps this independent of the dynamic
    programme in :func:`check_permutation_necessary`.
    """
    if has_in_role_parallelism(p):
        raise SpecError("a signer has parallel threads; the path criterion does not apply")
    seeds = seed_set(p)
    out = {r: "fair" for r in p.signers}
    for v in sorted(p.signing_set):
        seqs = {tuple(p.role_of[u] for u in path) for path in paths(p.dag, seeds, v)}
        for perm in itertools.permutations(_others(p, v)):
            if not any(_contains(s, perm) for s in seqs):
                out[p.role_of[v]] = "inconclusive"
                break
    return out


def describe_failure(v: Vertex, perm: Sequence[str]) -> str:
    return f"{format_item(v)}: no path covers order {' '.join(perm)}"
