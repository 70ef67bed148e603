from __future__ import annotations

import random

import pytest

from dagmpcs.complexity import message_complexity
from dagmpcs.fairness import model_check
from dagmpcs.graph import Dag, causal_closure
from dagmpcs.semantics import (
    Execution,
    ExecutionError,
    Transition,
    closed_execution,
    enabled,
    honest_state,
    is_closed,
    is_execution,
    is_honest,
    random_execution,
    restrict_execution,
    send_count,
    step,
)
from dagmpcs.spec import TTP, SkeletalGraph, SpecError, expand, restrict


def test_enabled_from_empty_state(fixtures):
    p = fixtures["linear2"]
    got = enabled(p, frozenset())
    sends = {t.item for t in got if t.label == "send"}
    exits = {t.item for t in got if t.label == "exit"}
    recvs = {t.item for t in got if t.label == "recv"}
    assert sends == set(p.message_edges)
    assert exits == {e for e in p.edges if p.role_of[e[1]] == TTP}
    assert recvs == {v for v in p.vertices if not p.dag.predecessors(v)}
    assert not [t for t in got if t.label == "eps"]


def test_nothing_enabled_in_full_state(fixtures):
    p = fixtures["linear2"]
    assert enabled(p, frozenset(p.items)) == []


def test_receive_after_send(fixtures):
    p = fixtures["linear2"]
    s = frozenset({"A1", ("A1", "B1")})
    t = Transition("recv", "B1")
    assert t in enabled(p, s)
    assert step(p, s, t) == s | {"B1"}


def test_step_rejects_disabled(fixtures):
    p = fixtures["linear2"]
    with pytest.raises(ExecutionError):
        step(p, frozenset(), Transition("recv", "A2"))


def test_transition_text_round_trip():
    for t in (Transition("send", ("A1", "B1")), Transition("recv", "B1")):
        assert Transition.parse(str(t)) == t


def test_execution_text_round_trip(fixtures):
    rho = closed_execution(fixtures["linear3"])
    assert Execution.from_text(rho.to_text()) == rho


def test_closed_send_counts(fixtures):
    assert send_count(closed_execution(fixtures["linear2"])) == 4
    p = fixtures["bcast2"]
    # the expanded graph relays nothing extra between two signers
    assert send_count(closed_execution(p)) == message_complexity(p) == 6
    assert send_count(closed_execution(fixtures["dag2"])) == 6


def test_closed_execution_is_closed(fixtures):
    for name, p in fixtures.items():
        rho = closed_execution(p)
        assert is_closed(p, rho), name
        assert not is_closed(p, rho.prefix(len(rho) - 1)), name


def test_send_count_invariant_over_random_schedules(fixtures):
    rng = random.Random(11)
    for name, p in fixtures.items():
        counts = {send_count(closed_execution(p, rng)) for _ in range(50)}
        assert counts == {len(p.message_edges)}, name


def test_closed_execution_reports_deadlock(fixtures):
    # a vertex fed only by the TTP can never be reached without conflict
    from dagmpcs.spec import Promise, ProtocolSpec

    p = fixtures["linear2"]
    t = p.ttp_vertex
    dag = Dag(list(p.vertices) + ["x"], list(p.edges) + [(t, "x")])
    labels = dict(p.label_of)
    labels[(t, "x")] = Promise("A", t, "B")
    q = ProtocolSpec(dag, dict(p.role_of, x="B"), labels, p.sigma, p.signers)
    with pytest.raises(SpecError, match="deadlocks"):
        closed_execution(q)


def test_restriction_yields_executions(fixtures):
    rng = random.Random(3)
    small = ["linear2", "bcast2", "dag2", "linear3", "parallel3_unfair", "parallel3_fair"]
    parts = {(n, r): restrict(fixtures[n], r) for n in small for r in fixtures[n].signers}
    for k in range(1000):
        name = small[k % len(small)]
        p = fixtures[name]
        rho = random_execution(p, rng, max_steps=rng.randint(0, len(p.items)))
        assert is_execution(p, rho)
        for r in p.signers:
            part = restrict_execution(p, rho, r)
            assert is_execution(parts[(name, r)], part), (name, r, k)


def test_restriction_of_untouched_role():
    sk = SkeletalGraph(Dag(["a1", "b1"], [("a1", "b1")]), {"a1": "A", "b1": "B"}, ("A", "B", "C"), frozenset(), frozenset())
    p = expand(sk)
    rho = closed_execution(p)
    part = restrict_execution(p, rho, "C")
    assert part.transitions == [] and part.states() == [frozenset()]


def test_restricted_closed_run_keeps_messages(fixtures):
    p = fixtures["linear2"]
    part = restrict_execution(p, closed_execution(p), "A")
    assert send_count(part) == 4


def own_items(p, r):
    vs = {v for v in p.vertices if p.role_of[v] == r}
    return vs | {e for e in p.edges if e[0] in vs}


def honest_oracle(p, s, r):
    """Own items closed under their own causal predecessors; one well-placed exit."""
    mine = own_items(p, r)
    exits = [x for x in s if isinstance(x, tuple) and x in mine and p.role_of[x[1]] == TTP]
    if len(exits) > 1:
        return False
    rest = set(s) - set(exits)
    for x in rest & mine:
        if not (causal_closure(p.dag, [x]) & mine) <= rest:
            return False
    if exits:
        v = exits[0][0]
        if v in s:
            return False
        before = {y for y in causal_closure(p.dag, [v]) if y != v} & mine
        if not before <= rest:
            return False
    return True


def test_honest_state_matches_oracle(fixtures):
    rng = random.Random(5)
    for name in ("linear2", "bcast2", "parallel3_unfair", "butterfly3"):
        p = fixtures[name]
        items = list(p.items)
        for _ in range(400):
            s = frozenset(rng.sample(items, rng.randint(0, min(8, len(items)))))
            if rng.random() < 0.5:
                s = causal_closure(p.dag, s) - {rng.choice(items)}
            for r in p.signers:
                assert honest_state(p, s, r) == honest_oracle(p, s, r), (name, r, sorted(map(str, s)))


def test_honesty_examples(fixtures):
    p = fixtures["bcast2"]
    assert all(is_honest(p, Execution(frozenset(), []), r) for r in p.signers)
    # A sends its final message before doing anything else
    late = [e for e in p.message_edges if p.role_of[e[0]] == "A"][-1]
    rho = Execution(frozenset(), [Transition("send", late)])
    assert not is_honest(p, rho, "A")
    t = p.ttp_vertex
    two_exits = Execution(frozenset(), [Transition("exit", ("A1", t)), Transition("exit", ("A2", t))])
    assert not is_honest(p, two_exits, "A")


def test_honesty_is_prefix_closed(fixtures):
    rng = random.Random(9)
    runs = []
    for p in fixtures.values():
        for r in p.signers:
            res = model_check(p, r)
            if res.counterexample is not None:
                runs.append((p, res.counterexample))
        for _ in range(40):
            runs.append((p, random_execution(p, rng, max_steps=25)))
    checked = 0
    for p, rho in runs:
        for r in p.signers:
            if is_honest(p, rho, r):
                checked += 1
                assert all(is_honest(p, rho.prefix(k), r) for k in range(len(rho) + 1))
    assert checked > 0
