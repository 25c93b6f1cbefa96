"""Seeded random generators for programs, updates and requests."""

from __future__ import annotations

import random

from magicdb.core import Atom, Database, Literal, Rule, Var
from magicdb.stratify import is_stratifiable

VARS = (Var("X"), Var("Y"), Var("Z"))


def _args(rng: random.Random, arity: int, pool, consts, const_prob: float) -> tuple:
    return tuple(rng.choice(consts) if rng.random() < const_prob else rng.choice(pool) for _ in range(arity))


def _rule(rng, head_pred, head_arity, pos_cands, neg_cands, arities, consts, neg_prob, const_prob, max_pos=3):
    body: list[Literal] = []
    for _ in range(rng.randint(1, max_pos)):
        p = rng.choice(pos_cands)
        body.append(Literal(Atom(p, _args(rng, arities[p], VARS, consts, const_prob))))
    bound = sorted({v for l in body for v in l.atom.vars()}, key=lambda v: v.name)
    if neg_cands and rng.random() < neg_prob:
        p = rng.choice(neg_cands)
        pool = bound or None
        args = tuple(rng.choice(pool) if pool and rng.random() > const_prob else rng.choice(consts)
                     for _ in range(arities[p]))
        lit = Literal(Atom(p, args), False)
        body.insert(rng.randrange(len(body) + 1), lit)
    head_args = tuple(rng.choice(bound) if bound and rng.random() > const_prob else rng.choice(consts)
                      for _ in range(head_arity))
    return Rule((Atom(head_pred, head_args),), tuple(body))


def random_program(rng: random.Random, n_base=(1, 3), n_derived=(1, 4), n_consts=4, rules_per_pred=(1, 2),
                   neg_prob=0.35, const_prob=0.1, n_facts=(0, 10), max_arity=2, recursion=True,
                   max_rules=8) -> Database:
    """A random stratifiable definite database with its constants and arities.

    Derived predicate d_i may use d_j positively for j <= i (recursion when
    j == i) and negatively only for j < i, so a stratification always exists.
    """
    consts = list(range(1, n_consts + 1))
    base = [f"b{i}" for i in range(rng.randint(*n_base))]
    derived = [f"d{i}" for i in range(rng.randint(*n_derived))]
    arities = {p: rng.randint(0 if p.startswith("d") else 1, max_arity) for p in base + derived}
    rules: list[Rule] = []
    for i, d in enumerate(derived):
        lower = derived[:i]
        pos = base + lower + ([d] if recursion and rng.random() < 0.4 else [])
        neg = base + lower
        for _ in range(rng.randint(*rules_per_pred)):
            if len(rules) >= max_rules:
                break
            rules.append(_rule(rng, d, arities[d], pos, neg, arities, consts, neg_prob, const_prob))
    facts = set()
    for _ in range(rng.randint(*n_facts)):
        p = rng.choice(base)
        facts.add(Atom(p, tuple(rng.choice(consts) for _ in range(arities[p]))))
    # keep arity information for base predicates without facts
    return Database(facts, rules), consts, arities


def ground_atoms(preds: dict[str, int], consts) -> list[Atom]:
    import itertools

    out = []
    for p in sorted(preds):
        for args in itertools.product(consts, repeat=preds[p]):
            out.append(Atom(p, tuple(args)))
    return out


def random_update(rng: random.Random, db: Database, base_arities: dict[str, int], consts, max_size=2):
    """A true update: inserted atoms are absent, deleted ones present."""
    from magicdb.propagate import DeltaSet

    candidates = ground_atoms(base_arities, consts)
    rng.shuffle(candidates)
    ins, dels = set(), set()
    for a in candidates[: rng.randint(1, max_size)]:
        (dels if a in db.facts else ins).add(a)
    return DeltaSet(ins, dels)


def random_disjunctive(rng: random.Random, n_preds=(2, 6), consts=(1, 2), n_rules=(1, 5), n_facts=(1, 4),
                       neg_prob=0.4, disj_prob=0.5) -> Database:
    """A random disjunctive database with at most 12 ground atoms, or None if unstratifiable."""
    names = [f"q{i}" for i in range(rng.randint(*n_preds))]
    arities = {}
    budget = 12
    for p in names:
        a = rng.choice((0, 1)) if budget >= len(consts) else 0
        arities[p] = a
        budget -= len(consts) ** a
    base = names[: max(1, len(names) // 3)]
    derived = names[len(base):]
    rules = []
    cs = list(consts)
    for i, d in enumerate(derived):
        if len(rules) >= n_rules[1]:
            break
        lower = derived[:i]
        # head atoms of one rule share the stratum of d: choose partners among
        # later predicates so negation keeps pointing downwards
        heads_pool = [d] + (derived[i + 1:] if rng.random() < disj_prob else [])
        head_preds = [d] + rng.sample(heads_pool[1:], min(len(heads_pool) - 1, rng.randint(0, 1)))
        body = []
        for _ in range(rng.randint(1, 2)):
            p = rng.choice(base + lower)
            body.append(Literal(Atom(p, _args(rng, arities[p], VARS[:1], cs, 0.3))))
        bound = sorted({v for l in body for v in l.atom.vars()}, key=lambda v: v.name)
        if rng.random() < neg_prob:
            p = rng.choice(base + lower)
            args = tuple(rng.choice(bound) if bound else rng.choice(cs) for _ in range(arities[p]))
            body.append(Literal(Atom(p, args), False))
        heads = tuple(dict.fromkeys(Atom(h, tuple(rng.choice(bound) if bound else rng.choice(cs)
                                                  for _ in range(arities[h]))) for h in head_preds))
        rules.append(Rule(heads, tuple(body)))
    facts, disj = set(), set()
    base_atoms = ground_atoms({p: arities[p] for p in base}, cs)
    for _ in range(rng.randint(*n_facts)):
        k = 2 if rng.random() < disj_prob and len(base_atoms) > 1 else 1
        f = frozenset(rng.sample(base_atoms, k))
        (disj if len(f) > 1 else facts).add(f if len(f) > 1 else next(iter(f)))
    if not is_stratifiable(rules):
        return None
    return Database(facts, rules, disjunctive_facts=disj), arities


def random_vu_database(rng: random.Random):
    """Small database, a true view-update request and consistent constraints.

    Returns None when the drawn instance is unusable (no true request or
    violated constraints).
    """
    from magicdb.operators import iterated_fixpoint_model

    consts = [1, 2]
    base = [f"b{i}" for i in range(rng.randint(2, 3))]
    derived = [f"d{i}" for i in range(rng.randint(2, 3))]
    arities = {p: rng.choice((0, 1, 1)) for p in base + derived}
    rules = []
    existential_left = 1
    for i, d in enumerate(derived):
        lower = derived[:i]
        for _ in range(rng.randint(1, 2)):
            if len(rules) >= 5:
                break
            r = _rule(rng, d, arities[d], base + lower, base + lower, arities, consts, 0.4, 0.15, max_pos=2)
            ex = {v for l in r.body for v in l.atom.vars()} - r.head[0].vars()
            if len(ex) > 1 or (ex and not existential_left):
                continue
            existential_left -= bool(ex)
            rules.append(r)
    if not rules:
        return None
    facts = set()
    for a in ground_atoms({p: arities[p] for p in base}, consts):
        if rng.random() < 0.4:
            facts.add(a)
    db = Database(facts, rules)
    model = iterated_fixpoint_model(db).atoms()
    derived_atoms = ground_atoms({p: arities[p] for p in db.derived_preds()}, consts)
    constraints = set()
    true_derived = [a for a in derived_atoms if a in model]
    if true_derived and rng.random() < 0.5:
        constraints.add(rng.choice(true_derived))
    targets = [a for a in derived_atoms if a not in constraints]
    if not targets:
        return None
    atom = rng.choice(targets)
    sign = "-" if atom in model else "+"
    return Database(facts, rules, constraints), sign, atom, consts, {p: arities[p] for p in db.base_preds()}
