"""Indexed workspace for bottom-up evaluation of definite rules.

A :class:`Workspace` is an append-only set of ground atoms kept as
``pred -> set of argument tuples`` with lazily built hash indexes.  The
append log gives every evaluation a cheap notion of "atoms added since
position k", which is what semi-naive evaluation needs.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .core import Atom, DatalogError, Rule, Var

Key = tuple  # (pred, args)


class Workspace:
    def __init__(self, atoms: Iterable[Atom] = ()):
        self.rel: dict[str, set[tuple]] = defaultdict(set)
        self.log: list[Key] = []
        self._idx: dict[tuple[str, tuple[int, ...]], dict[tuple, list[tuple]]] = {}
        self._idx_by_pred: dict[str, list[tuple[tuple[int, ...], dict]]] = defaultdict(list)
        for a in atoms:
            self.add(a.pred, a.args)

    def __len__(self) -> int:
        return len(self.log)

    def __contains__(self, key: Key) -> bool:
        return key[1] in self.rel.get(key[0], ())

    def has(self, pred: str, args: tuple) -> bool:
        return args in self.rel.get(pred, ())

    def add(self, pred: str, args: tuple) -> bool:
        tuples = self.rel[pred]
        if args in tuples:
            return False
        tuples.add(args)
        self.log.append((pred, args))
        for positions, index in self._idx_by_pred.get(pred, ()):
            index.setdefault(tuple(args[i] for i in positions), []).append(args)
        return True

    def lookup(self, pred: str, positions: tuple[int, ...], key: tuple) -> Iterable[tuple]:
        if not positions:
            return self.rel.get(pred, ())
        index = self._idx.get((pred, positions))
        if index is None:
            index = {}
            for args in self.rel.get(pred, ()):
                index.setdefault(tuple(args[i] for i in positions), []).append(args)
            self._idx[(pred, positions)] = index
            self._idx_by_pred[pred].append((positions, index))
        return index.get(key, ())

    def atoms(self) -> list[Atom]:
        return [Atom(p, a) for p, a in self.log]

    def count_by_pred(self, since: int = 0) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for p, _ in self.log[since:]:
            out[p] += 1
        return dict(out)


@dataclass
class _Step:
    pred: str
    args: tuple           # terms
    bind: tuple           # positions of args bound on entry (vars already bound or constants)
    out: tuple            # (position, var) newly bound by this literal
    checks: tuple         # (position, var) repeated fresh vars inside the literal


class CompiledRule:
    """A definite rule with a join plan per choice of driving literal."""

    def __init__(self, rule: Rule):
        if not rule.definite:
            raise DatalogError(f"disjunctive rule '{rule}' given to the definite engine")
        self.rule = rule
        self.head = rule.head[0]
        self.positives = [l.atom for l in rule.body if l.positive]
        self.negatives = [l.atom for l in rule.body if not l.positive]
        self.body_preds = {a.pred for a in self.positives}
        self._plans: dict[int | None, list[_Step]] = {}

    def plan(self, first: int | None) -> list[_Step]:
        if first in self._plans:
            return self._plans[first]
        order = list(range(len(self.positives)))
        if first is not None:
            order.remove(first)
            order.insert(0, first)
        bound: set[Var] = set()
        steps = []
        for i in order:
            a = self.positives[i]
            bind, out, checks = [], [], []
            seen: set[Var] = set()
            for pos, t in enumerate(a.args):
                if not isinstance(t, Var) or t in bound:
                    bind.append(pos)
                elif t in seen:
                    checks.append((pos, t))
                else:
                    seen.add(t)
                    out.append((pos, t))
            bound |= seen
            steps.append(_Step(a.pred, a.args, tuple(bind), tuple(out), tuple(checks)))
        self._plans[first] = steps
        return steps

    def fire(self, ws: Workspace, delta: dict[str, list[tuple]] | None,
             negated: Callable[[str, tuple], bool]) -> Iterable[tuple]:
        """Yield head argument tuples of instances true in ``ws``.

        With ``delta`` given, only instances using at least one delta atom
        are produced.  ``negated(pred, args)`` decides a negative literal.
        """
        if not self.positives:
            if delta is None:
                yield from self._finish({}, negated)
            return
        if delta is None:
            yield from self._run(self.plan(None), 0, {}, ws, None, negated)
            return
        for i, a in enumerate(self.positives):
            if a.pred in delta:
                yield from self._run(self.plan(i), 0, {}, ws, delta[a.pred], negated)

    def _run(self, steps, k, env, ws, first_source, negated):
        if k == len(steps):
            yield from self._finish(env, negated)
            return
        st = steps[k]
        key = tuple(env[t] if isinstance(t, Var) else t for t in (st.args[p] for p in st.bind))
        if k == 0 and first_source is not None:
            cands = first_source
            filt = True
        else:
            cands = ws.lookup(st.pred, st.bind, key)
            filt = False
        for args in cands:
            if filt and any(args[p] != v for p, v in zip(st.bind, key)):
                continue
            if st.checks and any(args[p] != args[self._first_pos(st, v)] for p, v in st.checks):
                continue
            if st.out:
                env2 = dict(env)
                for p, v in st.out:
                    env2[v] = args[p]
            else:
                env2 = env
            yield from self._run(steps, k + 1, env2, ws, first_source, negated)

    @staticmethod
    def _first_pos(st: _Step, v: Var) -> int:
        for p, w in st.out:
            if w == v:
                return p
        raise AssertionError("repeated variable without a binding position")

    def _finish(self, env, negated):
        for a in self.negatives:
            args = tuple(env[t] if isinstance(t, Var) else t for t in a.args)
            if not negated(a.pred, args):
                return
        yield tuple(env[t] if isinstance(t, Var) else t for t in self.head.args)


def compile_rules(rules: Iterable[Rule]) -> list[CompiledRule]:
    return [CompiledRule(r) for r in rules]


def delta_since(ws: Workspace, since: int) -> dict[str, list[tuple]]:
    out: dict[str, list[tuple]] = defaultdict(list)
    for p, a in ws.log[since:]:
        out[p].append(a)
    return out


def step(rules: Sequence[CompiledRule], ws: Workspace, since: int | None = None,
         negated: Callable[[str, tuple], bool] | None = None) -> list[Key]:
    """One application of the immediate consequence operator.

    Returns the head atoms not yet in ``ws``; negation is judged against the
    state before the step unless ``negated`` overrides it.  ``since`` enables
    semi-naive matching relative to an earlier log position; it is exact as
    long as every instance true at that position already had its head added.
    """
    if negated is None:
        rel = ws.rel

        def negated(p, a):
            return a not in rel.get(p, ())

    delta = None if since is None else delta_since(ws, since)
    new: dict[Key, None] = {}
    for cr in rules:
        d = delta
        if d is not None and not cr.positives:
            if since:
                continue
            d = None  # first evaluation of a rule with no positive literal
        elif d is not None and not (cr.body_preds & d.keys()):
            continue
        pred = cr.head.pred
        for args in cr.fire(ws, d, negated):
            if not ws.has(pred, args):
                new[(pred, args)] = None
    return list(new)


def saturate(rules: Sequence[CompiledRule], ws: Workspace, naive: bool = False,
             negated: Callable[[str, tuple], bool] | None = None) -> int:
    """Apply ``step`` until nothing new is derived; returns iteration count."""
    mark = 0
    rounds = 0
    while True:
        since = None if naive else mark
        mark = len(ws)
        new = step(rules, ws, since, negated)
        rounds += 1
        if not new:
            return rounds
        for p, a in new:
            ws.add(p, a)
