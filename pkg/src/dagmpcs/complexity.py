"""Message and parallel complexity, and the minimal-complexity bounds."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

from .spec import Protocol, SkeletalGraph, expand

# Shortest sequences over n symbols containing every permutation as a
# subsequence.  n <= 4 is recomputed by search; larger entries are n^2-2n+4.
LAMBDA_TABLE = {5: 19, 6: 28, 7: 39}
SEARCH_LIMIT = 4


def message_complexity(p: Protocol) -> int:
    """Number of message edges, i.e. sends in any complete honest run."""
    return len(p.message_edges)


def parallel_complexity(p: Protocol) -> int:
    """Length of the longest causal chain of message edges."""
    g = p.dag
    order = {v: i for i, v in enumerate(g.topological_order())}
    msgs = sorted(p.message_edges, key=lambda e: (order[e[0]], e))
    best: dict = {}
    for e in msgs:
        before = [best[f] for f in best if g.reaches(f[1], e[0])]
        best[e] = 1 + max(before, default=0)
    return max(best.values(), default=0)


def _covers_all(n: int, seq) -> bool:
    for perm in itertools.permutations(range(n)):
        it = iter(seq)
        if not all(any(x == want for x in it) for want in perm):
            return False
    return True


def _search_lambda(n: int) -> int:
    """Iterative deepening over sequences with no two equal neighbours.

    By symmetry the first symbol is fixed; a repeated neighbour never helps.
    """
    perms = list(itertools.permutations(range(n)))

    def advance(prog, sym):
        return tuple(k + 1 if k < n and perm[k] == sym else k for k, perm in zip(prog, perms))

    def dfs(prog, last, left):
        need = n - min(prog)
        if need == 0:
            return True
        if need > left:
            return False
        for sym in range(n):
            if sym != last and dfs(advance(prog, sym), sym, left - 1):
                return True
        return False

    start = advance((0,) * len(perms), 0)
    length = n
    while not dfs(start, 0, length - 1):
        length += 1
    return length


def lambda_n(n: int) -> int:
    """Length of the shortest sequence over n symbols containing all n! permutations."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n <= SEARCH_LIMIT:
        return _search_lambda(n)
    if n in LAMBDA_TABLE:
        return LAMBDA_TABLE[n]
    raise ValueError(f"lambda({n}) is outside the supported range 1..{max(LAMBDA_TABLE)}")


def bounds(n: int) -> tuple[int, int]:
    """Lower bounds (message, parallel) for a fair optimistic protocol with n signers."""
    if n < 2:
        raise ValueError("at least two signers are needed")
    return lambda_n(n) + 2 * n - 3, n + 1


@dataclass
class ComplexityReport:
    protocol: str
    n_signers: int
    mc: int
    pc: int
    mc_lower_bound: int | None
    pc_lower_bound: int | None
    mc_full: int
    pc_full: int

    COLUMNS = ("protocol", "n_signers", "mc", "pc", "mc_lower_bound", "pc_lower_bound", "mc_full", "pc_full")

    def to_json(self) -> dict:
        return asdict(self)

    def to_row(self) -> list[str]:
        return ["" if getattr(self, c) is None else str(getattr(self, c)) for c in self.COLUMNS]


def complexity_report(sk: SkeletalGraph) -> ComplexityReport:
    """Complexities of the drawn messages, plus those of the expanded graph.

    The drawn (skeletal) messages are what travels on the wire; expansion
    adds edges for relayed content, which ``mc_full`` counts separately.
    """
    drawn = sk.as_protocol()
    full = expand(sk)
    n = len(sk.signers)
    try:
        mc_min, pc_min = bounds(n)
    except ValueError:
        mc_min, pc_min = None, None
    return ComplexityReport(
        sk.name,
        n,
        message_complexity(drawn),
        parallel_complexity(drawn),
        mc_min,
        pc_min,
        message_complexity(full),
        parallel_complexity(full),
    )
