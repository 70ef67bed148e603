"""Command-line front end.

Exit codes: 0 fair / nothing found, 1 unfair / attack found, 2 bad input,
3 state budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import fairness
from .complexity import complexity_report
from .dot import to_dot
from .generators import FAMILIES, FamilySpec, fixture_names, generate, load_fixture
from .spec import SkeletalGraph, SpecError, dump_full, dump_skeletal, expand, parse_skeletal, validate

EXIT_OK, EXIT_FOUND, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def _add_input(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("input", nargs="?", help="skeletal .mpcs file")
    sp.add_argument("--family", choices=FAMILIES, help="use a built-in protocol family instead of a file")
    sp.add_argument("--n", type=int, help="size parameter for --family")


def _load(args) -> SkeletalGraph:
    if (args.input is None) == (args.family is None):
        raise InputError("give exactly one of an input file or --family")
    if args.family is not None:
        return generate(FamilySpec(args.family, args.n))
    if args.n is not None:
        raise InputError("--n only applies together with --family")
    path = args.input
    if not os.path.exists(path):
        base = os.path.basename(path)
        stem = base[:-5] if base.endswith(".mpcs") else base
        if stem in fixture_names():
            return load_fixture(stem)
        raise InputError(f"no such file: {path}")
    with open(path) as fh:
        return parse_skeletal(fh.read())


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def cmd_expand(args) -> int:
    sk = _load(args)
    p = expand(sk)
    if args.json:
        doc = {
            "schema": 1,
            "protocol": p.name,
            "signers": list(p.signers),
            "vertices": [{"id": v, "role": p.role_of[v]} for v in p.dag.topological_order()],
            "edges": [{"src": a, "dst": b, "label": str(p.label_of[(a, b)])} for a, b in p.edges],
            "signing_set": sorted(p.signing_set),
            "initial_set": sorted(p.initial_set),
            "end_set": sorted(p.end_set),
            "violations": [str(x) for x in validate(p)],
        }
        _emit(_json(doc), args.out)
    else:
        _emit(dump_full(p), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    p = expand(_load(args))
    if args.signer and args.signer not in p.signers:
        raise InputError(f"unknown signer {args.signer!r}")
    signers = [args.signer] if args.signer else None
    report = fairness.verify(p, signers, max_states=args.max_states, order=args.order)
    _emit(_json(report.to_json()) if args.json else report.to_text(), None)
    return EXIT_FOUND if report.overall == "unfair" else EXIT_OK


def cmd_ac_find(args) -> int:
    p = expand(_load(args))
    ac = fairness.find_ac_sequence(p)
    doc: dict = {"schema": 1, "protocol": p.name, "ac_sequence": None}
    lines = []
    if ac is None:
        lines.append("no AC sequence")
    else:
        doc["ac_sequence"] = {"contacts": list(ac.contacts), "sig_vertex": ac.sig_vertex}
        lines.append(f"AC sequence {ac}")
        if args.witness:
            rho = fairness.ac_to_execution(p, ac)
            answered = fairness.exit_replies(p, rho)
            doc["witness"] = [str(t) for t in rho.transitions]
            doc["ttp_replies"] = [reply for _, reply in answered]
            lines.append("ttp replies: " + ", ".join(f"{v}={r}" for v, r in answered))
            lines.append("witness:")
            lines += [f"  {t}" for t in rho.transitions]
    _emit(_json(doc) if args.json else "\n".join(lines) + "\n", None)
    return EXIT_OK if ac is None else EXIT_FOUND


def cmd_criteria(args) -> int:
    p = expand(_load(args))
    fails = fairness.check_permutation_necessary(p)
    try:
        sufficient = fairness.check_permutation_sufficient(p)
    except SpecError:
        sufficient = None
    if args.json:
        doc = {
            "schema": 1,
            "protocol": p.name,
            "necessary": {"ok": not fails, "failures": [{"vertex": v, "order": list(perm)} for v, perm in fails]},
            "sufficient": sufficient if sufficient is not None else "not applicable: parallel threads within a signer",
        }
        _emit(_json(doc), None)
    else:
        lines = [f"protocol {p.name}"]
        if fails:
            lines.append(f"necessary condition: FAILS ({len(fails)} uncovered orders), protocol is unfair")
            lines += [f"  {fairness.describe_failure(v, perm)}" for v, perm in fails]
        else:
            lines.append("necessary condition: holds")
        if sufficient is None:
            lines.append("sufficient condition: not applicable (parallel threads within a signer)")
        else:
            for r, verdict in sufficient.items():
                lines.append(f"sufficient condition for {r}: {verdict}")
        _emit("\n".join(lines) + "\n", None)
    return EXIT_FOUND if fails else EXIT_OK


def _parse_sweep(text: str) -> range:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"--sweep expects LO:HI, got {text!r}") from None
    if lo > hi:
        raise InputError("--sweep needs LO <= HI")
    return range(lo, hi + 1)


def cmd_complexity(args) -> int:
    if args.sweep:
        if args.family is None or args.input is not None:
            raise InputError("--sweep needs --family")
        sizes = list(_parse_sweep(args.sweep))
        reports = [complexity_report(generate(FamilySpec(args.family, n))) for n in sizes]
        if args.json:
            _emit(_json({"schema": 1, "family": args.family, "rows": [r.to_json() for r in reports]}), None)
        else:
            rows = ["\t".join(("n",) + reports[0].COLUMNS)]
            rows += ["\t".join([str(n)] + r.to_row()) for n, r in zip(sizes, reports)]
            _emit("\n".join(rows) + "\n", None)
        if args.figure:
            from .plotting import plot_sweep

            plot_sweep(reports, sizes, args.figure, args.family)
        return EXIT_OK
    if args.figure:
        raise InputError("--figure for complexity needs --sweep")
    rep = complexity_report(_load(args))
    if args.json:
        _emit(_json({"schema": 1, **rep.to_json()}), None)
    else:
        text = (
            f"protocol {rep.protocol}: signers={rep.n_signers} mc={rep.mc} pc={rep.pc} "
            f"bounds mc_min={rep.mc_lower_bound} pc_min={rep.pc_lower_bound} "
            f"(expanded graph: mc={rep.mc_full} pc={rep.pc_full})\n"
        )
        _emit(text, None)
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.family is None:
        raise InputError("generate needs --family")
    sk = generate(FamilySpec(args.family, args.n))
    _emit(dump_skeletal(sk), args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    sk = _load(args)
    g = expand(sk) if args.full else sk
    if args.figure:
        from .plotting import draw_protocol

        draw_protocol(g, args.figure, show_ttp=args.ttp)
    if args.out or not args.figure:
        _emit(to_dot(g, show_ttp=args.ttp), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dagmpcs", description="Analyse DAG multi-party contract signing protocols.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("expand", help="print the full graph with labels and derived sets")
    _add_input(sp)
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--out", help="write to this file instead of stdout")
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("verify", help="model check fairness for each signer")
    _add_input(sp)
    sp.add_argument("--signer", help="check only this signer")
    sp.add_argument("--max-states", type=int, default=fairness.DEFAULT_MAX_STATES)
    sp.add_argument("--order", choices=("dfs", "bfs"), default="dfs")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("ac-find", help="search for an abort-chaining attack")
    _add_input(sp)
    sp.add_argument("--witness", action="store_true", help="also print a concrete attack run")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_ac_find)

    sp = sub.add_parser("criteria", help="run the path-based necessary and sufficient checks")
    _add_input(sp)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_criteria)

    sp = sub.add_parser("complexity", help="message/parallel complexity and lower bounds")
    _add_input(sp)
    sp.add_argument("--sweep", metavar="LO:HI", help="tabulate a family over a range of sizes")
    sp.add_argument("--figure", help="with --sweep, also plot the table to this image file")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("generate", help="write a family as a skeletal .mpcs file")
    sp.add_argument("--family", choices=FAMILIES)
    sp.add_argument("--n", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_generate, input=None)

    sp = sub.add_parser("render", help="DOT (and optionally a PNG chart) of a protocol graph")
    _add_input(sp)
    sp.add_argument("--full", action="store_true", help="render the expanded graph")
    sp.add_argument("--ttp", action="store_true", help="include the TTP vertex and exit edges")
    sp.add_argument("--out", help="write DOT to this file")
    sp.add_argument("--figure", help="draw a sequence chart to this image file")
    sp.set_defaults(func=cmd_render)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except fairness.BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, SpecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
