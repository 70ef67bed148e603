from __future__ import annotations

import itertools
import random

import pytest

from dagmpcs.generators import load_fixture, random_skeletal
from dagmpcs.graph import Dag
from dagmpcs.spec import (
    EPSILON,
    TTP,
    ParseError,
    Promise,
    ProtocolSpec,
    Signature,
    SkeletalGraph,
    SpecError,
    dump_skeletal,
    expand,
    has_in_role_parallelism,
    initial_set,
    is_optimistic,
    knowledge,
    parse_skeletal,
    pre_knowledge,
    restrict,
    signing_set,
    validate,
)

# full graph of the fair three-party protocol with a parallel B thread, as drawn
FULL_PARALLEL3 = {
    ("A1", "A2"), ("A2", "A3"), ("A3", "A4"), ("B1", "Bq"), ("Bq", "B2"), ("B2", "B3"),
    ("B3", "B4"), ("C1", "C2"), ("C2", "C3"), ("A1", "B1"), ("A1", "C1"), ("B1", "C1"),
    ("B1", "A2"), ("C1", "A2"), ("C1", "Bq"), ("A2", "B2"), ("A2", "C2"), ("B2", "C2"),
    ("B2", "A3"), ("C2", "A3"), ("Bq", "A3"), ("A3", "B3"), ("C2", "B3"), ("A3", "C3"),
    ("B3", "C3"), ("C3", "A4"), ("B3", "A4"), ("A4", "B4"), ("C3", "B4"),
}  # fmt: skip


def signer_edges(p):
    return {e for e in p.edges if p.role_of[e[1]] != TTP}


def test_expansion_matches_drawn_full_graph(fixtures):
    p = fixtures["parallel3_fair"]
    assert len(FULL_PARALLEL3) == 29
    assert signer_edges(p) == FULL_PARALLEL3


def test_expansion_labels(fixtures):
    p = fixtures["parallel3_fair"]
    assert p.label_of[("B3", "B4")] == EPSILON
    assert isinstance(p.label_of[("A3", "C3")], Signature)
    assert isinstance(p.label_of[("C3", "B4")], Signature)
    assert p.label_of[("A1", "B1")] == Promise("A", "A1", "B")
    assert ("A3", "A4") in p.edges and not p.is_message(("A3", "A4"))


def test_trivial_expansion_adds_only_ttp():
    sk = SkeletalGraph(Dag(["a1", "b1"], [("a1", "b1")]), {"a1": "A", "b1": "B"}, ("A", "B"), frozenset(), frozenset())
    p = expand(sk)
    assert signer_edges(p) == {("a1", "b1")}
    assert {e for e in p.edges if p.role_of[e[1]] == TTP} == {("a1", p.ttp_vertex), ("b1", p.ttp_vertex)}
    assert p.signing_set == frozenset() and p.end_set == frozenset()


def brute_missing(p):
    """Causally ordered signer pairs with no edge and no intermediate vertex of either role."""
    g = p.dag
    vs = [v for v in g.vertices if p.role_of[v] != TTP]
    out = []
    for v, w in itertools.permutations(vs, 2):
        if not g.strictly_reaches(v, w) or g.has_edge(v, w):
            continue
        roles = {p.role_of[v], p.role_of[w]}
        if not any(g.strictly_reaches(v, u) and g.strictly_reaches(u, w) and p.role_of[u] in roles for u in vs):
            out.append((v, w))
    return out


def test_random_expansions_are_transitively_complete():
    rng = random.Random(7)
    for _ in range(150):
        p = expand(random_skeletal(rng, optimistic=False))
        assert brute_missing(p) == []
        assert validate(p) == []


def test_validate_flags_two_ttps(fixtures):
    p = fixtures["linear2"]
    role_of = dict(p.role_of, T2=TTP)
    dag = Dag(list(p.vertices) + ["T2"], p.edges)
    q = ProtocolSpec(dag, role_of, p.label_of, p.sigma, p.signers)
    assert any(v.condition == "ttp" for v in validate(q))


def test_validate_flags_wrong_label(fixtures):
    p = fixtures["linear2"]
    labels = dict(p.label_of)
    labels[("A1", "B1")] = EPSILON
    q = ProtocolSpec(p.dag, p.role_of, labels, p.sigma, p.signers)
    assert any(v.condition == "labels" for v in validate(q))


def test_all_fixtures_validate(fixtures):
    for name, p in fixtures.items():
        assert validate(p) == [], name
        assert is_optimistic(p), name


def test_restrict_linear2(fixtures):
    p = fixtures["linear2"]
    ra = restrict(p, "A")
    assert {"A1", "A2", "A3"} <= set(ra.vertices)
    assert set(p.message_edges) <= set(ra.edges)
    for r in p.signers:
        part = restrict(p, r)
        assert set(part.edges) <= set(p.edges)
        assert all(part.label_of[e] == p.label_of[e] for e in part.edges)
    with pytest.raises(SpecError):
        restrict(p, "Z")


def test_restrict_role_without_edges():
    sk = SkeletalGraph(Dag(["a1", "b1"], [("a1", "b1")]), {"a1": "A", "b1": "B"}, ("A", "B", "C"), frozenset(), frozenset())
    part = restrict(expand(sk), "C")
    assert part.vertices == () and part.edges == ()


def test_knowledge_linear2(fixtures):
    p = fixtures["linear2"]
    assert knowledge(p, "A2") == {("B1", "A2")}
    assert pre_knowledge(p, "A2") == frozenset()
    assert pre_knowledge(p, "A1") == frozenset()
    with pytest.raises(SpecError):
        knowledge(p, p.ttp_vertex)


def test_pre_knowledge_matches_filter(fixtures):
    for p in fixtures.values():
        for v in p.signer_vertices:
            r = p.role_of[v]
            want = {
                e for e in p.message_edges
                if p.role_of[e[1]] == r and e[1] != v and p.dag.reaches(e[1], v)
            }
            assert p.pre_knowledge(v) == want


def test_pre_knowledge_of_late_vertex(fixtures):
    p = fixtures["parallel3_fair"]
    k = p.pre_knowledge("A4")
    assert ("C3", "A4") not in k
    assert {e[1] for e in k} == {"A2", "A3"}
    assert p.pre_knowledge(["A4", "C3"]) == k | p.pre_knowledge("C3")


def test_linear2_derived_sets(fixtures):
    p = fixtures["linear2"]
    assert signing_set(p) == {"A2", "B2"}
    # A2's pre-knowledge is empty, so it is initial as well
    assert initial_set(p) == {"A1", "A2", "B1"}
    assert p.end_set == {"A3", "B2"}


def test_parallel_thread_vertex_is_initial(fixtures):
    assert "Bq" in fixtures["parallel3_unfair"].initial_set
    assert "Bq" in fixtures["parallel3_fair"].initial_set


def test_set_invariants(corpus):
    for name, p in corpus:
        assert p.signing_set <= p.sigma, name
        for v in p.signer_vertices:
            if not p.pre_knowledge(v):
                assert v in p.initial_set, (name, v)


def test_initial_and_end_sets_disjoint_on_fixtures(fixtures):
    for name, p in fixtures.items():
        assert not (p.initial_set & p.end_set), name


def test_vertex_can_be_initial_and_end():
    # b1 hands over its signature before seeing anything, so a2 learns
    # everything on arrival but had no evidence just before it
    text = """
    signers A B
    vertex a1 role=A
    vertex b1 role=B sign
    vertex a2 role=A sign
    vertex b2 role=B
    edge a1 b1
    edge b1 a2
    edge a2 b2
    """
    p = expand(parse_skeletal(text))
    assert "a2" in p.initial_set and "a2" in p.end_set


def test_fair_fixtures_execute_initial_steps_first(fixtures):
    for name in ("linear2", "bcast2", "dag2", "linear3", "parallel3_fair", "butterfly3", "contractor3"):
        p = fixtures[name]
        for v in p.initial_set:
            for w in p.signing_set - p.end_set:
                if p.role_of[v] == p.role_of[w]:
                    assert p.dag.reaches(v, w), (name, v, w)


def test_fair_fixtures_are_connected_without_ttp(fixtures):
    for name, p in fixtures.items():
        if name == "parallel3_unfair":
            continue
        vs = set(p.signer_vertices)
        seen, todo = {next(iter(vs))}, [next(iter(vs))]
        while todo:
            x = todo.pop()
            for y in p.dag.successors(x) + p.dag.predecessors(x):
                if y in vs and y not in seen:
                    seen.add(y)
                    todo.append(y)
        assert seen == vs, name


def test_in_role_parallelism(fixtures):
    assert has_in_role_parallelism(fixtures["parallel3_unfair"])
    assert has_in_role_parallelism(fixtures["inrole_contractor"])
    assert not has_in_role_parallelism(fixtures["linear3"])
    assert not has_in_role_parallelism(fixtures["parallel3_fair"])


def test_skeletal_rejects_cross_role_eps():
    with pytest.raises(SpecError):
        SkeletalGraph(Dag(["a1", "b1"], [("a1", "b1")]), {"a1": "A", "b1": "B"}, ("A", "B"), frozenset(), frozenset({("a1", "b1")}))


def test_skeletal_needs_two_signers():
    with pytest.raises(SpecError):
        SkeletalGraph(Dag(["a1"], []), {"a1": "A"}, ("A",), frozenset(), frozenset())


def test_text_round_trip():
    sk = load_fixture("parallel3_unfair")
    again = parse_skeletal(dump_skeletal(sk))
    assert again.dag.edges == sk.dag.edges
    assert again.sigma == sk.sigma and again.eps_edges == sk.eps_edges
    assert again.signers == sk.signers and again.role_of == sk.role_of


def test_parser_comments_and_blank_lines():
    text = """
    # two party toy
    protocol toy
    signers A B
    vertex a1 role=A   # first
    vertex b1 role=B sign
    edge a1 b1
    """
    sk = parse_skeletal(text)
    assert sk.name == "toy" and sk.sigma == {"b1"}


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("signers A B\nvertex a1 role=A\nedge a1 zz\n", 3, 9),
        ("signers A B\nvertex a1 role=Q\n", 2, 11),
        ("signers A B\nbogus\n", 2, 1),
        ("signers A B\nvertex a1 role=A\nvertex a1 role=A\n", 3, 8),
    ],
)
def test_parser_errors_carry_position(text, line, column):
    with pytest.raises(ParseError) as info:
        parse_skeletal(text)
    assert (info.value.line, info.value.column) == (line, column)
    assert f"line {line}" in str(info.value)
