"""Predicate dependency analysis, stratification and soft partitions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import networkx as nx

from .core import DatalogError, Rule

POS, NEG = "pos", "neg"
HEAD = "head"  # atoms of one disjunctive head share a stratum


@dataclass(frozen=True)
class DependencyGraph:
    nodes: frozenset
    edges: frozenset  # (body_pred, head_pred, polarity)

    def successors(self, pred: str) -> set[str]:
        return {t for s, t, _ in self.edges if s == pred}

    def negative_edges(self) -> list[tuple[str, str]]:
        return sorted((s, t) for s, t, pol in self.edges if pol == NEG)

    def to_dot(self) -> str:
        lines = ["digraph dependencies {"]
        for n in sorted(self.nodes):
            lines.append(f'  "{n}";')
        for s, t, pol in sorted(self.edges):
            style = ' [style=dashed, label="neg"]' if pol == NEG else ""
            lines.append(f'  "{s}" -> "{t}"{style};')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_dependency_graph(rules: Iterable[Rule]) -> DependencyGraph:
    nodes: set[str] = set()
    edges: set[tuple[str, str, str]] = set()
    for r in rules:
        for h in r.head:
            nodes.add(h.pred)
            for lit in r.body:
                nodes.add(lit.atom.pred)
                edges.add((lit.atom.pred, h.pred, POS if lit.positive else NEG))
    return DependencyGraph(frozenset(nodes), frozenset(edges))


@dataclass(frozen=True)
class Partition:
    """Ordered layers P_1 .. P_n of a rule set."""

    layers: tuple
    strata: Mapping[str, int] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(l) for l in self.layers))

    def __len__(self) -> int:
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    def rules(self) -> list[Rule]:
        return [r for layer in self.layers for r in layer]

    def layer_preds(self) -> list[set[str]]:
        return [set().union(*(r.head_preds for r in layer)) if layer else set() for layer in self.layers]

    def describe(self) -> str:
        out = []
        for i, layer in enumerate(self.layers, 1):
            out.append(f"layer {i}:")
            out.extend(f"  {r}" for r in layer)
        return "\n".join(out)


@dataclass(frozen=True)
class Unstratifiable:
    """Outcome of :func:`stratification` for rules with recursion through negation."""

    cycle: tuple  # edges (from, to, polarity) forming a cycle with a negative edge

    def describe(self) -> str:
        parts = [self.cycle[0][0]]
        for s, t, pol in self.cycle:
            parts.append(f"-{pol}-> {t}")
        return " ".join(parts)

    def __bool__(self) -> bool:
        return False


class NotStratifiable(DatalogError):
    def __init__(self, outcome: Unstratifiable):
        self.outcome = outcome
        super().__init__(f"rules are not stratifiable: negative cycle {outcome.describe()}")


def _graph(rules: list[Rule]) -> tuple[nx.DiGraph, DependencyGraph]:
    dep = build_dependency_graph(rules)
    g = nx.DiGraph()
    g.add_nodes_from(dep.nodes)
    for s, t, pol in dep.edges:
        w = 1 if pol == NEG else 0
        if g.has_edge(s, t):
            w = max(w, g[s][t]["weight"])
        g.add_edge(s, t, weight=w)
    # atoms of one disjunctive head must share a stratum
    for r in rules:
        hp = sorted(r.head_preds)
        for a, b in zip(hp, hp[1:]):
            for s, t in ((a, b), (b, a)):
                if not g.has_edge(s, t):
                    g.add_edge(s, t, weight=0)
    return g, dep


def find_negative_cycle(rules: Iterable[Rule]) -> tuple | None:
    rules = list(rules)
    g, dep = _graph(rules)
    for comp in nx.strongly_connected_components(g):
        for s, t in dep.negative_edges():
            if s in comp and t in comp:
                path = nx.shortest_path(g.subgraph(comp), t, s)
                cycle = [(s, t, NEG)]
                for a, b in zip(path, path[1:]):
                    if (a, b, POS) in dep.edges:
                        pol = POS
                    elif (a, b, NEG) in dep.edges:
                        pol = NEG
                    else:
                        pol = HEAD
                    cycle.append((a, b, pol))
                return tuple(cycle)
    return None


def predicate_strata(rules: Iterable[Rule]) -> dict[str, int] | Unstratifiable:
    """Lowest stratum per predicate: equal across positive edges, higher across negative ones."""
    rules = list(rules)
    cycle = find_negative_cycle(rules)
    if cycle is not None:
        return Unstratifiable(cycle)
    g, _ = _graph(rules)
    cond = nx.condensation(g)
    level: dict[int, int] = {}
    for c in nx.topological_sort(cond):
        members = cond.nodes[c]["members"]
        lv = 0
        for p in cond.predecessors(c):
            for s in cond.nodes[p]["members"]:
                for t in members:
                    if g.has_edge(s, t):
                        lv = max(lv, level[p] + g[s][t]["weight"])
        level[c] = lv
    return {pred: level[cond.graph["mapping"][pred]] for pred in g.nodes}


def stratification(rules: Iterable[Rule]) -> Partition | Unstratifiable:
    """Partition induced by the canonical (lowest) stratification, or a witness cycle."""
    rules = list(rules)
    strata = predicate_strata(rules)
    if isinstance(strata, Unstratifiable):
        return strata
    by_level: dict[int, list[Rule]] = {}
    for r in rules:
        lv = max(strata[p] for p in r.head_preds)
        by_level.setdefault(lv, []).append(r)
    layers = [by_level[k] for k in sorted(by_level)]
    return Partition(tuple(layers), strata)


def stratify(rules: Iterable[Rule]) -> Partition:
    """Like :func:`stratification` but raises :class:`NotStratifiable`."""
    out = stratification(rules)
    if isinstance(out, Unstratifiable):
        raise NotStratifiable(out)
    return out


def is_stratifiable(rules: Iterable[Rule]) -> bool:
    return find_negative_cycle(rules) is None


@dataclass(frozen=True)
class Origin:
    """Where a rewritten rule came from.

    ``stratum`` is the stratum of the originating predicate in the original
    stratifiable program; magic rules carry ``magic=True`` and no stratum.
    """

    pred: str | None = None
    stratum: int | None = None
    magic: bool = False


def soft_partition(rules: Iterable[Rule], provenance: Mapping[Rule, Origin]) -> Partition:
    """Layer rewritten rules by the strata of their originating predicates.

    Magic rules go to the earliest layer that consumes the predicate they
    define.  Stratifiable input keeps its ordinary stratification.
    """
    rules = list(rules)
    plain = stratification(rules)
    if not isinstance(plain, Unstratifiable):
        return plain
    missing = [r for r in rules if r not in provenance]
    if missing:
        raise DatalogError(f"missing provenance for rule '{missing[0]}'")
    layer: dict[Rule, float] = {}
    magic_rules = []
    for r in rules:
        o = provenance[r]
        if o.magic:
            magic_rules.append(r)
            layer[r] = float("inf")
        else:
            layer[r] = o.stratum
    magic_preds = {p for r in magic_rules for p in r.head_preds}
    consumers: dict[str, list[Rule]] = {p: [] for p in magic_preds}
    for r in rules:
        for lit in r.body:
            if lit.atom.pred in consumers:
                consumers[lit.atom.pred].append(r)
    changed = True
    while changed:
        changed = False
        for r in magic_rules:
            (p,) = r.head_preds
            cands = [layer[c] for c in consumers[p]]
            best = min(cands, default=0)
            if best < layer[r]:
                layer[r] = best
                changed = True
    for r in magic_rules:
        if layer[r] == float("inf"):
            layer[r] = 0
    levels = sorted(set(layer.values()))
    index = {lv: i for i, lv in enumerate(levels)}
    layers: list[list[Rule]] = [[] for _ in levels]
    for r in rules:
        layers[index[layer[r]]].append(r)
    return Partition(tuple(layers))
