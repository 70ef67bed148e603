from __future__ import annotations

import random
from dataclasses import replace

import pytest

from dagmpcs.fairness import hon
from dagmpcs.spec import SpecError
from dagmpcs.ttp import (
    ABORT,
    SIGNED,
    ResolveMsg,
    TtpState,
    caught_roles,
    delta,
    delta0,
    delta1,
    make_resolve_msg,
    replies,
)

FIG4 = ("linear3", "parallel3_unfair", "parallel3_fair")


def fold(p, vs):
    return replies(p, [make_resolve_msg(p, v) for v in vs])


def test_empty_fold_aborts(fixtures):
    assert delta(fixtures["linear3"], []) == ABORT


def test_resolve_message_contents(fixtures):
    p = fixtures["parallel3_unfair"]
    m = make_resolve_msg(p, "A1")
    assert m.evidence == () and m.requester == "A"
    m = make_resolve_msg(p, "C3")
    assert set(m.evidence) == p.pre_knowledge("C3")
    assert all(p.role_of[e[1]] == "C" and e[1] != "C3" for e in m.evidence)
    assert m.labels == tuple(p.label_of[e] for e in m.evidence)
    assert ResolveMsg.parse(p, str(m)) == m
    with pytest.raises(SpecError):
        make_resolve_msg(p, p.ttp_vertex)


def test_initial_contact_aborts(fixtures):
    p = fixtures["linear3"]
    v = sorted(p.initial_set)[0]
    reply, st = delta1(p, [make_resolve_msg(p, v)])
    assert reply == ABORT and st.decision == ABORT and st.contacted == (v,)


def test_abort_chain_on_unfair_parallel(fixtures):
    p = fixtures["parallel3_unfair"]
    assert fold(p, ["Bq", "C3", "A4"]) == [ABORT, ABORT, ABORT]
    _, st = delta1(p, [make_resolve_msg(p, v) for v in ("Bq", "C3", "A4")])
    assert "B" in st.dishonest and "C" not in st.dishonest


def test_lone_late_contact_resolves(fixtures):
    # A4 is past the initial set, and with nobody else on record nothing blocks resolution
    p = fixtures["parallel3_unfair"]
    assert "A4" not in p.initial_set
    assert delta(p, [make_resolve_msg(p, "A4")]) == SIGNED


def test_malformed_message_changes_nothing(fixtures):
    p = fixtures["linear3"]
    st = TtpState()
    assert delta0("garbage", st, p) == (ABORT, st)
    m = make_resolve_msg(p, "A2")
    bad = replace(m, requester="Z")
    assert delta0(bad, st, p) == (ABORT, st)


def test_forged_evidence_marks_requester(fixtures):
    p = fixtures["linear3"]
    m = make_resolve_msg(p, "A4")
    forged = replace(m, evidence=m.evidence[:-1], labels=m.labels[:-1])
    reply, st = delta0(forged, TtpState(), p)
    assert reply == ABORT and st.dishonest == {"A"} and st.contacted == ()


def walk(p, depth):
    """Every request sequence up to ``depth`` with the state after each step."""
    verts = sorted(p.signer_vertices)
    msgs = {v: make_resolve_msg(p, v) for v in verts}

    def go(seq, st):
        yield seq, st
        if len(seq) == depth:
            return
        for v in verts:
            reply, nxt = delta0(msgs[v], st, p)
            yield from go(seq + ((v, reply),), nxt)

    return go((), TtpState())


@pytest.mark.parametrize("name", FIG4)
def test_fold_properties_exhaustive(fixtures, name):
    p = fixtures[name]
    seen = 0
    for seq, st in walk(p, 4):
        seen += 1
        if not seq:
            continue
        # replay to get the previous state
        prev_st = delta1(p, [make_resolve_msg(p, v) for v, _ in seq[:-1]])[1]
        v, reply = seq[-1]
        r = p.role_of[v]
        if prev_st.decision == SIGNED:
            assert st.decision == SIGNED
        assert prev_st.dishonest <= st.dishonest
        if r in prev_st.dishonest:
            assert reply == ABORT
        if any(p.role_of[w] == r for w, _ in seq[:-1]):
            assert reply == ABORT and r in st.dishonest
    assert seen == sum(len(p.signer_vertices) ** k for k in range(5))


@pytest.mark.parametrize("name", FIG4)
def test_caught_roles_agree_with_hon(fixtures, name):
    p = fixtures[name]
    rng = random.Random(1)
    verts = sorted(p.signer_vertices)
    for _ in range(500):
        contacted = rng.sample(verts, rng.randint(1, len(p.signers)))
        want = {p.role_of[w] for w in contacted if not hon(p, w, contacted)}
        assert caught_roles(p, contacted) == want
