"""Constructors for the protocol families used as fixtures and benchmarks."""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources

from .graph import Dag, Edge
from .spec import SkeletalGraph, SpecError, expand, is_optimistic, parse_skeletal

FAMILIES = (
    "linear2",
    "bcast2",
    "dag2",
    "linear3",
    "parallel3_unfair",
    "parallel3_fair",
    "butterfly",
    "contractor",
    "two_contractors",
    "inrole_contractor",
)

# families taking a size parameter: (default, min, max)
SIZED = {
    "butterfly": (3, 2, 6),
    "contractor": (3, 1, 6),
    "two_contractors": (2, 1, 4),
}


@dataclass(frozen=True)
class FamilySpec:
    family: str
    n: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.family in SIZED:
            _, lo, hi = SIZED[self.family]
            if self.n is not None and not lo <= self.n <= hi:
                raise SpecError(f"{self.family} supports n in [{lo}, {hi}], got {self.n}")
        elif self.n is not None:
            raise SpecError(f"{self.family} takes no size parameter")

    @property
    def size(self) -> int | None:
        if self.family in SIZED:
            return SIZED[self.family][0] if self.n is None else self.n
        return None

    @property
    def name(self) -> str:
        return self.family if self.size is None else f"{self.family}{self.size}"


class _Builder:
    def __init__(self, name: str, signers):
        self.name = name
        self.signers = tuple(signers)
        self.role_of: dict[str, str] = {}
        self.edges: list[Edge] = []
        self.eps: set[Edge] = set()
        self.sigma: set[str] = set()

    def v(self, vid: str, role: str, sign: bool = False) -> str:
        if vid not in self.role_of:
            self.role_of[vid] = role
        if sign:
            self.sigma.add(vid)
        return vid

    def e(self, a: str, b: str) -> None:
        self.edges.append((a, b))
        if self.role_of[a] == self.role_of[b]:
            self.eps.add((a, b))

    def chain(self, *vs: str) -> None:
        for a, b in zip(vs, vs[1:]):
            self.e(a, b)

    def build(self) -> SkeletalGraph:
        dag = Dag(self.role_of, self.edges)
        return SkeletalGraph(dag, dict(self.role_of), self.signers, frozenset(self.sigma), frozenset(self.eps), "c", self.name)


def _role_names(n: int) -> list[str]:
    names = [chr(ord("A") + i) for i in range(n + 1) if chr(ord("A") + i) != "T"]
    return names[:n]


def linear2() -> SkeletalGraph:
    b = _Builder("linear2", "AB")
    b.v("A1", "A"), b.v("B1", "B"), b.v("A2", "A", True), b.v("B2", "B", True), b.v("A3", "A")
    b.chain("A1", "B1", "A2", "B2", "A3")
    return b.build()


def _two_party_rounds(name: str, eps_first: bool) -> SkeletalGraph:
    b = _Builder(name, "AB")
    for r in "AB":
        for j in range(1, 5):
            b.v(f"{r}{j}", r, j == 3)
    for j in range(1, 4):
        b.e(f"A{j}", f"B{j + 1}")
        b.e(f"B{j}", f"A{j + 1}")
    for r in "AB":
        b.chain(*(f"{r}{j}" for j in range(1 if eps_first else 2, 5)))
    return b.build()


def bcast2() -> SkeletalGraph:
    return _two_party_rounds("bcast2", eps_first=True)


def dag2() -> SkeletalGraph:
    return _two_party_rounds("dag2", eps_first=False)


def linear3() -> SkeletalGraph:
    b = _Builder("linear3", "ABC")
    order = ["A1", "B1", "C1", "A2", "B2", "C2", "A3", "B3", "C3", "A4", "B4"]
    for v in order:
        b.v(v, v[0], v in ("A3", "B3", "C3"))
    b.chain(*order)
    return b.build()


def _parallel3(name: str, fair: bool) -> SkeletalGraph:
    b = _Builder(name, "ABC")
    for v in ["A1", "B1", "C1", "A2", "Bq", "B2", "C2", "A3", "B3", "C3", "A4", "B4"]:
        b.v(v, v[0], v in ("A3", "B3", "C3"))
    b.chain("A1", "B1", "C1", "A2", "B2", "C2", "A3", "B3", "C3", "A4", "B4")
    b.chain("C1", "Bq", "A3")
    if fair:
        b.e("Bq", "B2")
    return b.build()


def parallel3_unfair() -> SkeletalGraph:
    return _parallel3("parallel3_unfair", fair=False)


def parallel3_fair() -> SkeletalGraph:
    return _parallel3("parallel3_fair", fair=True)


def butterfly(n: int) -> SkeletalGraph:
    """All-to-all rounds: n promise rounds, then one signature round."""
    roles = _role_names(n)
    b = _Builder(f"butterfly{n}", roles)
    for r in roles:
        for j in range(1, n + 3):
            b.v(f"{r}{j}", r, j == n + 1)
        b.chain(*(f"{r}{j}" for j in range(1, n + 3)))
    for j in range(1, n + 2):
        for r in roles:
            for q in roles:
                if q != r:
                    b.e(f"{r}{j}", f"{q}{j + 1}")
    return b.build()


def contractor(k: int) -> SkeletalGraph:
    """One contractor C and k subcontractors; k+1 promise rounds, one signature round.

    A round is every subcontractor sending to C, then C answering each of them.
    """
    subs = [f"S{i}" for i in range(1, k + 1)]
    b = _Builder(f"contractor{k}", ["C", *subs])
    last = k + 2
    for j in range(1, last + 1):
        b.v(f"C{j}", "C", j == last)
    for s in subs:
        for j in range(1, last + 2):
            b.v(f"{s}_{j}", s, j == last)
        b.chain(*(f"{s}_{j}" for j in range(1, last + 2)))
    b.chain(*(f"C{j}" for j in range(1, last + 1)))
    for j in range(1, last + 1):
        for s in subs:
            b.e(f"{s}_{j}", f"C{j}")
            b.e(f"C{j}", f"{s}_{j + 1}")
    return b.build()


def two_contractors(k: int) -> SkeletalGraph:
    """Contractors A and B with k joint subcontractors.

    Everyone first sends to A.  Each of the k+2 rounds is A fanning out to the
    subcontractors, each of them reporting to B, and B answering A.  The last
    round carries signatures, and A finally forwards to the subcontractors.
    """
    subs = [f"S{i}" for i in range(1, k + 1)]
    b = _Builder(f"two_contractors{k}", ["A", "B", *subs])
    rounds = k + 2
    b.v("B0", "B")
    for s in subs:
        b.v(f"{s}_0", s)
    for j in range(1, rounds + 2):
        b.v(f"A{j}", "A", j >= rounds)
    for j in range(1, rounds + 1):
        b.v(f"B{j}", "B", j == rounds)
        for s in subs:
            b.v(f"{s}_{j}", s, j == rounds)
    for s in subs:
        b.v(f"{s}_{rounds + 1}", s)
    b.e("B0", "A1")
    for s in subs:
        b.e(f"{s}_0", "A1")
    for j in range(1, rounds + 1):
        for s in subs:
            b.e(f"A{j}", f"{s}_{j}")
            b.e(f"{s}_{j}", f"B{j}")
        b.e(f"B{j}", f"A{j + 1}")
    for s in subs:
        b.e(f"A{rounds + 1}", f"{s}_{rounds + 1}")
        b.chain(*(f"{s}_{j}" for j in range(0, rounds + 2)))
    b.chain(*(f"A{j}" for j in range(1, rounds + 2)))
    b.chain(*(f"B{j}" for j in range(0, rounds + 1)))
    return b.build()


def inrole_contractor(phases: str = "sscc") -> SkeletalGraph:
    """Contractor C with subcontractors L and R, where C runs parallel threads.

    C opens by sending to both.  Each phase is the subcontractors reporting to
    C and C answering.  In an ``s`` phase C waits for both reports; in a ``c``
    (crossed) phase one thread of C forwards L's report to R while another
    forwards R's report to L, and the threads join afterwards.  The last
    phase carries signatures.
    """
    b = _Builder("inrole_contractor", "CLR")
    last = len(phases)
    b.v("C0", "C")
    for x in "LR":
        for j in range(1, last + 2):
            b.v(f"{x}{j}", x, j == last)
        b.chain(*(f"{x}{j}" for j in range(1, last + 2)))
    b.e("C0", "L1"), b.e("C0", "R1")
    prev = "C0"
    for j, kind in enumerate(phases, 1):
        sign = j == last
        if kind == "s":
            c = b.v(f"C{j}", "C", sign)
            b.chain(prev, c)
            b.e(f"L{j}", c), b.e(f"R{j}", c)
            b.e(c, f"L{j + 1}"), b.e(c, f"R{j + 1}")
        else:
            ca, cb = b.v(f"C{j}a", "C", sign), b.v(f"C{j}b", "C", sign)
            c = b.v(f"C{j}j", "C")
            b.chain(prev, ca, c)
            b.chain(prev, cb, c)
            b.chain(f"L{j}", ca, f"R{j + 1}")
            b.chain(f"R{j}", cb, f"L{j + 1}")
        prev = c
    return b.build()


_BUILDERS = {
    "linear2": linear2,
    "bcast2": bcast2,
    "dag2": dag2,
    "linear3": linear3,
    "parallel3_unfair": parallel3_unfair,
    "parallel3_fair": parallel3_fair,
    "butterfly": butterfly,
    "contractor": contractor,
    "two_contractors": two_contractors,
    "inrole_contractor": inrole_contractor,
}


def generate(f: FamilySpec | str, n: int | None = None) -> SkeletalGraph:
    if isinstance(f, str):
        f = FamilySpec(f, n)
    build = _BUILDERS[f.family]
    return build(f.size) if f.family in SIZED else build()


def fixture_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("dagmpcs.fixtures").iterdir() if p.name.endswith(".mpcs"))


def load_fixture(name: str) -> SkeletalGraph:
    path = resources.files("dagmpcs.fixtures") / f"{name}.mpcs"
    if not path.is_file():
        raise SpecError(f"no shipped fixture named {name!r}")
    return parse_skeletal(path.read_text())


def _random_free(rng: random.Random, max_signers: int, max_vertices: int) -> SkeletalGraph:
    n = rng.randint(2, max_signers)
    roles = _role_names(n)
    count = rng.randint(n + 2, max_vertices)
    seq = roles + [rng.choice(roles) for _ in range(count - n)]
    rng.shuffle(seq)
    names, role_of = _name_vertices(seq)
    edges: set[Edge] = set()
    last_of: dict[str, str] = {}
    for i, v in enumerate(names):
        r = role_of[v]
        if r in last_of and rng.random() < 0.8:
            edges.add((last_of[r], v))
        others = [u for u in names[:i] if role_of[u] != r]
        if others:
            for u in rng.sample(others, min(1 if rng.random() < 0.7 else 2, len(others))):
                edges.add((u, v))
        last_of[r] = v
    sigma = frozenset(v for v in names if rng.random() < 0.3)
    return _skeleton(names, role_of, roles, edges, sigma)


def _random_chain(rng: random.Random, max_signers: int, max_vertices: int) -> SkeletalGraph:
    """A message chain with occasional shortcuts and one signing window."""
    n = rng.randint(2, max_signers)
    roles = _role_names(n)
    count = rng.randint(n + 2, max_vertices)
    seq = [rng.choice(roles)]
    while len(seq) < count:
        seq.append(rng.choice([r for r in roles if r != seq[-1]]))
    names, role_of = _name_vertices(seq)
    edges: set[Edge] = set()
    for i in range(1, len(names)):
        if i >= 2 and rng.random() < 0.15 and role_of[names[i - 2]] != role_of[names[i]]:
            edges.add((names[i - 2], names[i]))
        else:
            edges.add((names[i - 1], names[i]))
        if rng.random() < 0.2:
            j = rng.randrange(0, i)
            if role_of[names[j]] != role_of[names[i]]:
                edges.add((names[j], names[i]))
    start = rng.randrange(max(1, len(names) - 2 * n), len(names))
    sigma = set()
    seen: set[str] = set()
    for v in names[start:]:
        if role_of[v] not in seen:
            seen.add(role_of[v])
            sigma.add(v)
    return _skeleton(names, role_of, roles, edges, frozenset(sigma))


def _name_vertices(seq: list[str]) -> tuple[list[str], dict[str, str]]:
    seen: dict[str, int] = {}
    names, role_of = [], {}
    for r in seq:
        seen[r] = seen.get(r, 0) + 1
        v = f"{r}{seen[r]}"
        names.append(v)
        role_of[v] = r
    return names, role_of


def _skeleton(names, role_of, roles, edges, sigma) -> SkeletalGraph:
    eps = frozenset(e for e in edges if role_of[e[0]] == role_of[e[1]])
    return SkeletalGraph(Dag(names, edges), role_of, tuple(roles), sigma, eps, "c", "random")


def random_skeletal(
    rng: random.Random,
    max_signers: int = 3,
    max_vertices: int = 12,
    optimistic: bool = True,
    style: str = "mixed",
    max_tries: int = 1000,
) -> SkeletalGraph:
    """A random small skeletal graph, by default one whose honest run completes.

    ``style`` is ``free`` (unstructured DAG, mostly unfair), ``chain``
    (protocol-like message chains, often fair) or ``mixed`` (either).
    """
    if style not in ("free", "chain", "mixed"):
        raise ValueError(f"unknown style {style!r}")
    for _ in range(max_tries):
        pick = style if style != "mixed" else rng.choice(("free", "chain", "chain"))
        build = _random_free if pick == "free" else _random_chain
        sk = build(rng, max_signers, max_vertices)
        if not optimistic or is_optimistic(expand(sk)):
            return sk
    raise SpecError("could not generate a matching random protocol")
