"""Seeded random generators for schemas, rules, databases and queries.

All functions take a :class:`random.Random` so runs are reproducible.
"""

from __future__ import annotations

import random

from .core import (
    Atom,
    ConjunctiveQuery,
    Constant,
    Disjunct,
    Dtgd,
    Egd,
    Instance,
    NegConstraint,
    Variable,
    tgd,
    variables_of,
)
from .parser import Program

VARS = [Variable(n) for n in ("X", "Y", "Z", "U", "V", "W")]


def random_schema(rng: random.Random, n_preds=4, max_arity=3, min_arity=1) -> dict:
    return {f"p{k}": rng.randint(min_arity, max_arity) for k in range(n_preds)}


def constants(n) -> list:
    return [Constant(c) for c in "abcdefgh"[:n]]


def random_atom(rng, schema, terms) -> Atom:
    pred = rng.choice(sorted(schema))
    return Atom(pred, tuple(rng.choice(terms) for _ in range(schema[pred])))


def random_tgd(rng, schema, max_body=3, max_head=2, n_vars=4, p_exist=0.4, consts=()) -> Dtgd:
    vars_ = VARS[:n_vars]
    body = [random_atom(rng, schema, vars_ + list(consts)) for _ in range(rng.randint(1, max_body))]
    return _tgd_from_body(rng, schema, body, max_head, p_exist)


def _tgd_from_body(rng, schema, body, max_head, p_exist, n_disjuncts=1):
    bvars = variables_of(body)
    disjuncts = []
    for _ in range(n_disjuncts):
        ex = []
        if not bvars or rng.random() < p_exist:
            ex = [Variable(f"E{k}") for k in range(rng.randint(1, 2))]
        pool = bvars + ex
        head = [random_atom(rng, schema, pool) for _ in range(rng.randint(1, max_head))]
        used = set(variables_of(head))
        disjuncts.append(Disjunct(frozenset(v for v in ex if v in used), tuple(head)))
    return Dtgd(tuple(body), tuple(disjuncts))


def random_tgd_set(rng, n_rules=6, n_preds=4, max_arity=3, p_exist=0.3) -> list:
    schema = random_schema(rng, rng.randint(1, n_preds), max_arity)
    return [random_tgd(rng, schema, p_exist=p_exist) for _ in range(rng.randint(1, n_rules))]


def random_database(rng, schema, n_facts=8, n_consts=4) -> Instance:
    cs = constants(n_consts)
    return Instance(random_atom(rng, schema, cs) for _ in range(rng.randint(0, n_facts)))


def schema_of(sigma, instance=()) -> dict:
    out = {}
    for d in sigma:
        atoms = list(d.body)
        if isinstance(d, Dtgd):
            atoms += [a for dj in d.disjuncts for a in dj.head]
        for a in atoms:
            out[a.predicate] = a.arity
    for a in instance:
        out[a.predicate] = a.arity
    return out


def random_id(rng, schema) -> Dtgd:
    """An inclusion dependency: one body atom, one head atom, no repeated variables."""
    bp = rng.choice(sorted(schema))
    body_vars = VARS[: schema[bp]]
    body = Atom(bp, tuple(rng.sample(body_vars, len(body_vars))))
    hp = rng.choice(sorted(schema))
    exist = [Variable(f"E{k}") for k in range(schema[hp])]
    pool = list(body_vars) + exist
    head_args = tuple(rng.sample(pool, schema[hp]))
    ex = frozenset(v for v in head_args if v in exist)
    return tgd([body], [Atom(hp, head_args)], ex)


def random_guarded(rng, schema, n_vars=4) -> Dtgd:
    """A guarded TGD: the first body atom is built to hold every body variable."""
    wide = [p for p in sorted(schema) if schema[p] >= 2] or sorted(schema)
    gp = rng.choice(wide)
    vars_ = VARS[: min(n_vars, schema[gp])]
    args = list(vars_) + [rng.choice(vars_) for _ in range(schema[gp] - len(vars_))]
    rng.shuffle(args)
    guard = Atom(gp, tuple(args))
    side = [random_atom(rng, schema, list(set(args))) for _ in range(rng.randint(0, 2))]
    body = [guard] + side
    rng.shuffle(body)
    return _tgd_from_body(rng, schema, body, 2, 0.4)


def random_bcq(rng, schema, terms_consts, n_atoms=None, n_vars=3) -> ConjunctiveQuery:
    n_atoms = n_atoms or rng.randint(1, 3)
    pool = VARS[:n_vars] + list(terms_consts)
    body = tuple(random_atom(rng, schema, pool) for _ in range(n_atoms))
    return ConjunctiveQuery((), body)


def query_from_instance(rng, instance: Instance, n_atoms=2) -> ConjunctiveQuery:
    """A boolean query likely to hold: generalise a few atoms of ``instance``."""
    atoms = instance.sorted()
    if not atoms:
        return ConjunctiveQuery((), (Atom("nothing", ()),))
    picked = [rng.choice(atoms) for _ in range(n_atoms)]
    names = {}
    body = []
    for a in picked:
        args = []
        for t in a.args:
            if isinstance(t, Constant) and rng.random() < 0.5:
                args.append(t)
            else:
                names.setdefault(t, Variable(f"Q{len(names)}"))
                args.append(names[t])
        body.append(Atom(a.predicate, tuple(args)))
    return ConjunctiveQuery((), tuple(body))


def random_disjunctive_program(rng, n_consts=3, n_preds=3, n_rules=4):
    """Existential-free program with disjunctive heads, constraints and EGDs.

    Returns (database, sigma, schema, constants).
    """
    schema = {f"p{k}": rng.randint(1, 2) for k in range(rng.randint(1, n_preds))}
    cs = constants(rng.randint(1, n_consts))
    sigma = []
    for _ in range(rng.randint(1, n_rules)):
        roll = rng.random()
        body = [random_atom(rng, schema, VARS[:3] + cs[:1]) for _ in range(rng.randint(1, 2))]
        bvars = variables_of(body)
        if roll < 0.1:
            sigma.append(NegConstraint(tuple(body)))
        elif roll < 0.18 and len(bvars) >= 2:
            l, r = rng.sample(bvars, 2)
            sigma.append(Egd(tuple(body), l, r))
        else:
            pool = bvars + cs
            disjuncts = []
            for _ in range(rng.randint(1, 3)):
                head = [random_atom(rng, schema, pool) for _ in range(rng.randint(1, 2))]
                disjuncts.append(Disjunct(frozenset(), tuple(head)))
            sigma.append(Dtgd(tuple(body), tuple(disjuncts)))
    db = Instance(random_atom(rng, schema, cs) for _ in range(rng.randint(1, 5)))
    return db, sigma, schema, cs


_ODD_CONSTANTS = ["New York", "x y", 'say "hi"', "Ünïcode", "a\\b", "", "0", "Upper", "_u"]


def random_program(rng, n_rules=4, n_facts=6, n_queries=2) -> Program:
    """Random well-formed program touching every statement form."""
    schema = random_schema(rng, rng.randint(1, 5), 3, min_arity=0)
    cs = constants(4) + [Constant(rng.choice(_ODD_CONSTANTS))]
    facts = Instance(random_atom(rng, schema, cs) for _ in range(rng.randint(0, n_facts)))
    deps = []
    for _ in range(rng.randint(0, n_rules)):
        roll = rng.random()
        body = [random_atom(rng, schema, VARS[:4] + cs[:2]) for _ in range(rng.randint(1, 3))]
        bvars = variables_of(body)
        if roll < 0.15:
            deps.append(NegConstraint(tuple(body)))
        elif roll < 0.3 and bvars:
            deps.append(Egd(tuple(body), rng.choice(bvars), rng.choice(bvars)))
        else:
            deps.append(_tgd_from_body(rng, schema, body, 2, 0.4, rng.randint(1, 3)))
    queries = []
    for k in range(rng.randint(0, n_queries)):
        body = tuple(random_atom(rng, schema, VARS[:3] + cs[:2]) for _ in range(rng.randint(1, 3)))
        bvars = variables_of(body)
        answer = tuple(rng.sample(bvars, rng.randint(0, len(bvars))))
        eqs = []
        if bvars and rng.random() < 0.5:
            eqs.append((rng.choice(bvars), rng.choice(bvars + cs)))
        queries.append(ConjunctiveQuery(answer, body, tuple(eqs), f"q{k + 1}"))
    return Program(facts, deps, queries)
