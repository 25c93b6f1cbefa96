"""Parser and printer for the Datalog dialect.

    e(1,2).                       % base fact
    a | b.                        % disjunctive fact
    p(X,Y) :- e(X,Z), p(Z,Y).     % rule
    o(X,Y) :- not p(Y,X), p(X,Y). % negation
    a(X) | b(X) :- c(X).          % disjunctive head
    constraint ic(2).             % integrity constraint
    ?- o(1,2).                    % query
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import Atom, Database, DatalogError, Literal, Rule, Var, format_fact

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<implies>:-)
  | (?P<query>\?-)
  | (?P<punct>[(),.|])
  | (?P<sign>[+-](?=[a-z]))
  | (?P<int>-?\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*(?:\^[A-Za-z0-9_]+)*)
  | (?P<string>"[^"\n]*")
    """,
    re.VERBOSE,
)


class ParseError(DatalogError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Request:
    kind: str  # "base" or "view"
    sign: str  # "+" or "-"
    atom: Atom

    def __str__(self) -> str:
        prefix = "vu " if self.kind == "view" else ""
        return f"{prefix}{self.sign}{self.atom}"


@dataclass
class Program:
    database: Database
    queries: list = field(default_factory=list)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, allow_reserved: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.allow_reserved = allow_reserved

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def take(self, kind: str, text: str | None = None) -> _Tok:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or "end of input"
            raise self.error(f"expected {want!r}, found {got!r}")
        self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def term(self):
        tok = self.tok
        if tok.kind == "var":
            self.i += 1
            return Var(tok.text)
        if tok.kind == "int":
            self.i += 1
            return int(tok.text)
        if tok.kind == "name":
            self.i += 1
            if "^" in tok.text:
                raise self.error(f"'^' is not allowed in constant {tok.text}", tok)
            return tok.text
        if tok.kind == "string":
            self.i += 1
            return tok.text[1:-1]
        raise self.error(f"expected a term, found {tok.text or 'end of input'!r}")

    def atom(self) -> Atom:
        tok = self.take("name")
        if "^" in tok.text and not self.allow_reserved:
            raise self.error(f"predicate name {tok.text} uses the reserved character '^'", tok)
        args = []
        if self.at("punct", "("):
            self.i += 1
            args.append(self.term())
            while self.at("punct", ","):
                self.i += 1
                args.append(self.term())
            self.take("punct", ")")
        return Atom(tok.text, tuple(args))

    def literal(self) -> Literal:
        if self.at("name", "not"):
            nxt = self.toks[self.i + 1]
            if nxt.kind == "name":
                self.i += 1
                return Literal(self.atom(), False)
        return Literal(self.atom(), True)

    def statement(self, out: dict) -> None:
        start = self.tok
        if self.at("query"):
            self.i += 1
            out["queries"].append(self.atom())
            self.take("punct", ".")
            return
        if self.at("name", "constraint") and self.toks[self.i + 1].kind == "name":
            self.i += 1
            a = self.atom()
            self.take("punct", ".")
            if not a.is_ground():
                raise ParseError(f"constraint {a} is not ground", start.line, start.col)
            out["constraints"].append(a)
            return
        head = [self.atom()]
        while self.at("punct", "|"):
            self.i += 1
            head.append(self.atom())
        if self.at("implies"):
            self.i += 1
            body = [self.literal()]
            while self.at("punct", ","):
                self.i += 1
                body.append(self.literal())
            self.take("punct", ".")
            rule = Rule(tuple(head), tuple(body))
            try:
                rule.check_safe()
            except DatalogError as e:
                raise ParseError(str(e), start.line, start.col) from None
            out["rules"].append(rule)
            return
        self.take("punct", ".")
        for a in head:
            if not a.is_ground():
                raise ParseError(f"fact {a} is not ground", start.line, start.col)
        if len(head) == 1:
            out["facts"].append(head[0])
        else:
            out["disjunctive"].append(frozenset(head))

    def program(self) -> dict:
        out = {"facts": [], "disjunctive": [], "rules": [], "constraints": [], "queries": []}
        while not self.at("eof"):
            self.statement(out)
        return out


def parse_program(text: str, allow_reserved: bool = False) -> Program:
    """Parse program text into a validated :class:`Program`."""
    parts = _Parser(text, allow_reserved).program()
    rules = list(dict.fromkeys(parts["rules"]))
    db = Database(
        facts=parts["facts"],
        rules=rules,
        constraints=parts["constraints"],
        disjunctive_facts=parts["disjunctive"],
    )
    return Program(db, parts["queries"])


def parse_atom(text: str, allow_reserved: bool = False) -> Atom:
    p = _Parser(text, allow_reserved)
    a = p.atom()
    if p.at("punct", "."):
        p.i += 1
    p.take("eof")
    return a


def parse_request(text: str, db: Database | None = None) -> Request:
    """Parse ``+e(2,3)``, ``-s(2)`` or ``vu +p(2)``."""
    text = text.strip()
    kind = "base"
    if text.startswith("vu ") or text.startswith("vu\t"):
        kind = "view"
        text = text[3:].strip()
    if not text or text[0] not in "+-":
        raise ParseError(f"request must start with '+' or '-': {text!r}")
    sign = text[0]
    atom = parse_atom(text[1:].strip())
    if not atom.is_ground():
        raise ParseError(f"request {sign}{atom} is not ground")
    if db is not None:
        known = db.arities
        if atom.pred not in known:
            raise ParseError(f"unknown predicate {atom.pred}")
        if known[atom.pred] != atom.arity:
            raise ParseError(f"predicate {atom.pred} has arity {known[atom.pred]}, not {atom.arity}")
    return Request(kind, sign, atom)


def format_program(db: Database, queries=()) -> str:
    """Canonical text of a database; parses back to an equal database."""
    lines = [f"{a}." for a in sorted(db.facts)]
    lines += [format_fact(f) + "." for f in sorted(db.disjunctive_facts, key=lambda f: sorted(f))]
    lines += [str(r) for r in db.rules]
    lines += [f"constraint {a}." for a in sorted(db.constraints)]
    lines += [f"?- {q}." for q in queries]
    return "\n".join(lines) + ("\n" if lines else "")


def format_rules(rules) -> str:
    return "".join(f"{r}\n" for r in rules)
