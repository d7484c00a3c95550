"""Syntactic fragment checks with witnesses.

Single-rule checks (:func:`is_inclusion_dependency`, :func:`is_linear`,
:func:`guard_of`) take one TGD. The set-level checks accept DTGDs and treat
each disjunct as a TGD sharing the rule's body; EGDs and negative
constraints are ignored.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter, deque
from dataclasses import dataclass, field

from .core import Dtgd, Position, Variable, variables_of
from .errors import NotATgd


def _require_tgd(d):
    if not isinstance(d, Dtgd) or not d.is_tgd:
        raise NotATgd(f"expected a single-disjunct TGD, got {type(d).__name__}")


def _tgds(sigma):
    """(original index, TGD) for every disjunct of every DTGD in ``sigma``."""
    out = []
    for k, d in enumerate(sigma):
        if isinstance(d, Dtgd):
            out.extend((k, t) for t in d.split())
    return out


def _all_vars_distinct(atom):
    return all(isinstance(t, Variable) for t in atom.args) and len(set(atom.args)) == len(atom.args)


def is_inclusion_dependency(d) -> bool:
    _require_tgd(d)
    return (
        len(d.body) == 1
        and len(d.head) == 1
        and _all_vars_distinct(d.body[0])
        and _all_vars_distinct(d.head[0])
    )


def is_linear(d) -> bool:
    _require_tgd(d)
    return len(d.body) == 1


def _covering_atom(body, variables):
    vs = set(variables)
    for a in body:
        if vs <= set(a.args):
            return a
    return None


def guard_of(d):
    """Leftmost body atom holding every body variable, or ``None``."""
    _require_tgd(d)
    return _covering_atom(d.body, variables_of(d.body))


def affected_positions(sigma) -> set:
    tgds = [t for _, t in _tgds(sigma)]
    affected = set()
    for t in tgds:
        for a in t.head:
            for i, x in enumerate(a.args, 1):
                if x in t.existentials:
                    affected.add(Position(a.predicate, i))
    changed = True
    while changed:
        changed = False
        for t in tgds:
            for v in _null_admitting(t.body, affected):
                for a in t.head:
                    for i, x in enumerate(a.args, 1):
                        p = Position(a.predicate, i)
                        if x == v and p not in affected:
                            affected.add(p)
                            changed = True
    return affected


def _null_admitting(body, affected):
    """Body variables whose every body occurrence is at an affected position."""
    where = {}
    for a in body:
        for i, x in enumerate(a.args, 1):
            if isinstance(x, Variable):
                where.setdefault(x, []).append(Position(a.predicate, i))
    return [v for v, ps in where.items() if all(p in affected for p in ps)]


def weak_guards(sigma) -> dict:
    """Map rule index to its weak guard (``None`` when a rule has none)."""
    affected = affected_positions(sigma)
    out = {}
    for k, d in enumerate(sigma):
        if isinstance(d, Dtgd):
            out[k] = _covering_atom(d.body, _null_admitting(d.body, affected))
    return out


def is_weakly_guarded(sigma) -> bool:
    return all(g is not None for g in weak_guards(sigma).values())


# --------------------------------------------------------------------------
# weak acyclicity

NORMAL = "normal"
SPECIAL = "special"


@dataclass(frozen=True)
class DependencyGraph:
    vertices: frozenset
    edges: frozenset  # of (Position, Position, kind)

    def successors(self):
        succ = {v: [] for v in self.vertices}
        for u, v, kind in sorted(self.edges):
            succ[u].append((v, kind))
        return succ


def dependency_graph(sigma, special_edges="literal") -> DependencyGraph:
    """Positions of Σ with normal and special edges.

    ``special_edges="literal"`` draws a special edge from every body position;
    ``"exported"`` only from positions of variables that reach the head.
    """
    if special_edges not in ("literal", "exported"):
        raise ValueError(f"unknown special_edges mode {special_edges!r}")
    vertices, edges = set(), set()
    for _, t in _tgds(sigma):
        body_pos = []
        for a in t.body:
            for i, x in enumerate(a.args, 1):
                p = Position(a.predicate, i)
                vertices.add(p)
                body_pos.append((p, x))
        head_pos = []
        for a in t.head:
            for i, x in enumerate(a.args, 1):
                p = Position(a.predicate, i)
                vertices.add(p)
                head_pos.append((p, x))
        exported = {x for _, x in head_pos if isinstance(x, Variable)}
        for p, x in body_pos:
            if not isinstance(x, Variable):
                continue
            for q, y in head_pos:
                if x == y:
                    edges.add((p, q, NORMAL))
        for q, y in head_pos:
            if y not in t.existentials:
                continue
            for p, x in body_pos:
                if special_edges == "exported" and x not in exported:
                    continue
                edges.add((p, q, SPECIAL))
    return DependencyGraph(frozenset(vertices), frozenset(edges))


def special_cycle(graph: DependencyGraph):
    """A cycle through at least one special edge, as a list of edges, or ``None``."""
    succ = graph.successors()
    for u, v, kind in sorted(graph.edges):
        if kind != SPECIAL:
            continue
        path = _path(succ, v, u)
        if path is not None:
            return [(u, v, SPECIAL)] + path
    return None


def _path(succ, src, dst):
    if src == dst:
        return []
    prev = {src: None}
    todo = deque([src])
    while todo:
        n = todo.popleft()
        for m, kind in succ[n]:
            if m in prev:
                continue
            prev[m] = (n, kind)
            if m == dst:
                out = []
                while prev[m] is not None:
                    p, k = prev[m]
                    out.append((p, m, k))
                    m = p
                return out[::-1]
            todo.append(m)
    return None


def is_weakly_acyclic(sigma, special_edges="literal") -> bool:
    return special_cycle(dependency_graph(sigma, special_edges)) is None


# --------------------------------------------------------------------------
# stickiness


@dataclass(frozen=True)
class Marking:
    # (dependency index, body atom index, argument index), all 0-based
    marked: frozenset = field(default_factory=frozenset)

    def variables(self, sigma, k) -> set:
        d = sigma[k]
        return {d.body[a].args[j] for kk, a, j in self.marked if kk == k}


def _mark_var(t, v):
    return {(a, j) for a, atom in enumerate(t.body) for j, x in enumerate(atom.args) if x == v}


def _initial_marks(tgds):
    marks = [set() for _ in tgds]
    for n, (_, t) in enumerate(tgds):
        for v in variables_of(t.body):
            if any(v not in a.args for a in t.head):
                marks[n] |= _mark_var(t, v)
    return marks


def _propagate_once(tgds, marks) -> bool:
    changed = False
    for n1, (_, t1) in enumerate(tgds):
        for v in variables_of(t1.body):
            positions = {
                (a.predicate, j) for a in t1.head for j, x in enumerate(a.args) if x == v
            }
            if not positions:
                continue
            if _mark_var(t1, v) <= marks[n1]:
                continue
            if any(_atom_marked_at(t2, marks[n2], positions) for n2, (_, t2) in enumerate(tgds)):
                marks[n1] |= _mark_var(t1, v)
                changed = True
    return changed


def _atom_marked_at(t, marks, positions):
    for a, atom in enumerate(t.body):
        if all(p == atom.predicate and (a, j) in marks for p, j in positions):
            return True
    return False


def _smark(sigma):
    tgds = _tgds(sigma)
    marks = _initial_marks(tgds)
    while _propagate_once(tgds, marks):
        pass
    return tgds, marks


def smarking(sigma) -> Marking:
    tgds, marks = _smark(sigma)
    return Marking(frozenset((k, a, j) for (k, _), ms in zip(tgds, marks) for a, j in ms))


def sticky_violation(sigma):
    """First (rule index, variable) where a marked variable repeats in the body."""
    if any(isinstance(d, Dtgd) and not d.is_tgd for d in sigma):
        warnings.warn(
            "stickiness of disjunctive rules is checked disjunct-wise", stacklevel=3
        )
    tgds, marks = _smark(sigma)
    for (k, t), ms in zip(tgds, marks):
        counts = Counter(x for atom in t.body for x in atom.args if isinstance(x, Variable))
        for a, j in sorted(ms):
            v = t.body[a].args[j]
            if counts[v] > 1:
                return k, v
    return None


def is_sticky(sigma) -> bool:
    return sticky_violation(sigma) is None


# --------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class FragmentReport:
    id: bool
    linear: bool
    guarded: bool
    weakly_guarded: bool
    weakly_acyclic: bool
    sticky: bool
    witnesses: dict

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "linear": self.linear,
            "guarded": self.guarded,
            "weakly_guarded": self.weakly_guarded,
            "weakly_acyclic": self.weakly_acyclic,
            "sticky": self.sticky,
            "witnesses": self.witnesses,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def classify(sigma, special_edges="literal") -> FragmentReport:
    from .parser import format_atom

    sigma = list(sigma)
    tgds = _tgds(sigma)
    not_id = [k for k, t in tgds if not is_inclusion_dependency(t)]
    not_linear = [k for k, t in tgds if not is_linear(t)]
    guards = {}
    for k, d in enumerate(sigma):
        if isinstance(d, Dtgd):
            guards[k] = _covering_atom(d.body, variables_of(d.body))
    wguards = weak_guards(sigma)
    cycle = special_cycle(dependency_graph(sigma, special_edges))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        violation = sticky_violation(sigma)

    def fmt(a):
        return None if a is None else format_atom(a)

    witnesses = {
        "not_id": sorted(set(not_id)),
        "not_linear": sorted(set(not_linear)),
        "guards": {str(k): fmt(g) for k, g in guards.items()},
        "affected_positions": sorted(str(p) for p in affected_positions(sigma)),
        "weak_guards": {str(k): fmt(g) for k, g in wguards.items()},
        "special_cycle": None if cycle is None else [[str(u), str(v), kind] for u, v, kind in cycle],
        "sticky_violation": None if violation is None else [violation[0], violation[1].name],
    }
    return FragmentReport(
        id=not not_id,
        linear=not not_linear,
        guarded=all(g is not None for g in guards.values()),
        weakly_guarded=all(g is not None for g in wguards.values()),
        weakly_acyclic=cycle is None,
        sticky=violation is None,
        witnesses=witnesses,
    )
