"""Command-line interface: ``magicdb check|query|rewrite|propagate|viewupdate``."""

from __future__ import annotations

import argparse
import re
import sys
from collections import Counter
from pathlib import Path
from typing import Sequence

from . import naming
from .core import Atom, DatalogError, InconsistentStore
from .magic import ENGINES, answer_query, rewrite_query
from .parser import Program, Request, format_program, parse_atom, parse_program, parse_request
from .propagate import MODES, DeltaSet, propagate_update
from .stratify import build_dependency_graph, stratification
from .viewupdate import (
    ConstraintViolation,
    NoRealization,
    SearchExhausted,
    VURequest,
    solve_view_update,
)

EXIT_OK, EXIT_USER, EXIT_UNSAT = 0, 1, 2

# "-s(2)" must reach the request list instead of being read as an option
_REQUEST = re.compile(r"^[+-][a-z][A-Za-z0-9_]*(\(.*\))?$")
_GUARD = "\x00"


class UsageError(DatalogError):
    pass


def _load(path: str) -> Program:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    return parse_program(p.read_text(encoding="utf-8"))


def _stats_lines(stats: dict[str, int]) -> list[str]:
    counts: Counter = Counter()
    for pred, n in stats.items():
        counts[naming.relation_label(pred)] += n
    lines = [f"{rel}\t{n}" for rel, n in sorted(counts.items())]
    lines.append(f"total\t{sum(counts.values())}")
    return lines


def _query_atom(text: str) -> Atom:
    text = text.strip()
    if text.startswith("?-"):
        text = text[2:]
    return parse_atom(text.rstrip(". "))


def cmd_check(args, out) -> int:
    prog = _load(args.file)
    db = prog.database
    print(f"facts {len(db.facts) + len(db.disjunctive_facts)}, rules {len(db.rules)}, "
          f"constraints {len(db.constraints)}", file=out)
    graph = build_dependency_graph(db.rules)
    if args.dot:
        out.write(graph.to_dot())
    else:
        for s, t, pol in sorted(graph.edges):
            print(f"edge {s} -> {t} {pol}", file=out)
    result = stratification(db.rules)
    if not result:
        print(f"not stratifiable: {result.describe()}", file=out)
        return EXIT_OK
    print(f"stratifiable: {len(result)} layer(s)", file=out)
    print(result.describe(), file=out)
    return EXIT_OK


def cmd_query(args, out) -> int:
    db = _load(args.file).database
    query = _query_atom(args.query)
    ans = answer_query(db, query, engine=args.engine, magic=not args.no_magic)
    if query.is_ground():
        print("true" if ans.holds else "false", file=out)
    else:
        for a in ans.answers:
            print(a, file=out)
        if not ans.answers:
            print("no answers", file=out)
    if args.stats:
        print("\n".join(_stats_lines(ans.stats)), file=out)
    return EXIT_OK


def cmd_rewrite(args, out) -> int:
    db = _load(args.file).database
    out.write(rewrite_query(db, _query_atom(args.query)).text())
    return EXIT_OK


def _requests(tokens: Sequence[str], db) -> list[Request]:
    reqs = []
    it = iter(tokens)
    for tok in it:
        tok = tok.lstrip(_GUARD)
        if tok == "vu":
            tok = "vu " + next(it, "").lstrip(_GUARD)
        reqs.append(parse_request(tok, db))
    return reqs


def cmd_propagate(args, out) -> int:
    prog = _load(args.file)
    db = prog.database
    reqs = _requests(args.requests, db)
    if not reqs or any(r.kind != "base" for r in reqs):
        raise UsageError("propagate expects base updates such as +e(2,3) or -e(1,2)")
    update = DeltaSet({r.atom for r in reqs if r.sign == "+"}, {r.atom for r in reqs if r.sign == "-"})
    result = propagate_update(db, update, mode=args.mode)
    for line in result.delta.lines():
        print(line, file=out)
    if args.stats:
        print("\n".join(_stats_lines(result.stats)), file=out)
    if args.apply:
        new = db.with_updates(update.insertions, update.deletions)
        Path(args.apply).write_text(format_program(new, prog.queries), encoding="utf-8")
    return EXIT_OK


def cmd_viewupdate(args, out) -> int:
    db = _load(args.file).database
    reqs = _requests(args.request, db)
    if len(reqs) != 1:
        raise UsageError("viewupdate expects exactly one request such as +p(2)")
    req = reqs[0]
    result = solve_view_update(db, VURequest(req.sign, req.atom), max_depth=args.max_depth,
                               exhaustive=args.exhaustive)
    for i, r in enumerate(result.realizations, 1):
        print(f"realization {i}:", file=out)
        for line in r.lines():
            print(f"  {line}", file=out)
    if args.log:
        print("search log:", file=out)
        for line in result.log_lines():
            print(f"  {line}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magicdb", description="Deductive database engine with Magic Sets, "
                                 "Magic Updates and view update translation.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse a program and report its stratification")
    p.add_argument("file")
    p.add_argument("--dot", action="store_true", help="print the dependency graph in Graphviz format")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("query", help="answer a query")
    p.add_argument("file")
    p.add_argument("query")
    p.add_argument("--engine", choices=ENGINES, default="soft")
    p.add_argument("--no-magic", action="store_true", help="materialize the whole program instead")
    p.add_argument("--stats", action="store_true", help="print generated facts per relation")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("rewrite", help="print the Magic Sets rewriting for a query")
    p.add_argument("file")
    p.add_argument("query")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("propagate", help="compute the changes induced by base updates")
    p.add_argument("file")
    p.add_argument("requests", nargs="+", metavar="REQUEST")
    p.add_argument("--mode", choices=MODES, default="magic")
    p.add_argument("--stats", action="store_true", help="print generated facts per relation")
    p.add_argument("--apply", metavar="OUT", help="write the updated program to OUT")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("viewupdate", help="find minimal base updates realizing a view update")
    p.add_argument("file")
    p.add_argument("request", nargs="+", metavar="REQUEST")
    p.add_argument("--max-depth", type=int, default=10)
    p.add_argument("--exhaustive", action="store_true", help="search every depth up to the bound")
    p.add_argument("--log", action="store_true", help="print the search tree")
    p.set_defaults(func=cmd_viewupdate)
    return ap


def _protect(argv: Sequence[str]) -> list[str]:
    return [_GUARD + a if a.startswith("-") and _REQUEST.match(a) else a for a in argv]


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_protect(argv))
    try:
        return args.func(args, out)
    except (InconsistentStore, NoRealization, SearchExhausted, ConstraintViolation) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNSAT
    except DatalogError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
