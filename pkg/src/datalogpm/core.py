"""Terms, atoms, instances, dependencies, queries and homomorphism search.

Every value here is immutable once built. Instances keep a lazily built
index so that repeated homomorphism searches against the same instance do
not pay for re-indexing; the chase modules use :class:`AtomIndex` directly
as a mutable working store.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import NotBoolean, StrictModeUnbound, UnsafeRule


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True, slots=True)
class Constant:
    name: str

    def __str__(self):
        return self.name

    @property
    def sort_key(self):
        return (0, self.name, 0)


@dataclass(frozen=True, slots=True)
class Null:
    id: int
    branch_tag: str = "0"

    def __str__(self):
        return f"_:b{self.branch_tag}_{self.id}"

    @property
    def sort_key(self):
        # numeric id order, so _:b0_2 sorts before _:b0_10
        return (1, self.branch_tag, self.id)


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self):
        return self.name

    @property
    def sort_key(self):
        return (2, self.name, 0)


Term = Union[Constant, Null, Variable]
GroundTerm = Union[Constant, Null]


def term_rank(t):
    """Total order used to pick survivors when two nulls are merged."""
    return (t.id, t.branch_tag)


# --------------------------------------------------------------------------
# atoms


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple = ()
    sort_key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(
            self, "sort_key", (self.predicate, tuple(t.sort_key for t in self.args))
        )

    @property
    def arity(self):
        return len(self.args)

    def variables(self):
        return [t for t in self.args if isinstance(t, Variable)]

    def is_ground(self):
        return not any(isinstance(t, Variable) for t in self.args)

    def __str__(self):
        return f"{self.predicate}({', '.join(str(t) for t in self.args)})"


@dataclass(frozen=True, slots=True, order=True)
class Position:
    predicate: str
    index: int  # 1-based

    def __str__(self):
        return f"{self.predicate}[{self.index}]"


def variables_of(atoms: Iterable[Atom]) -> list:
    """Variables of a conjunction, in order of first occurrence."""
    seen = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Variable) and t not in seen:
                seen[t] = None
    return list(seen)


# --------------------------------------------------------------------------
# instances


class AtomIndex:
    """Mutable set of ground atoms indexed by predicate and by (position, term).

    Every bucket is kept sorted by ``Atom.sort_key`` so that candidate lists
    come out in canonical order whichever bucket is chosen.
    """

    __slots__ = ("_atoms", "_by_pred", "_by_pos")

    def __init__(self, atoms: Iterable[Atom] = ()):
        self._atoms = set()
        self._by_pred = {}
        self._by_pos = {}
        for a in sorted(set(atoms), key=_atom_key):
            self._atoms.add(a)
            self._by_pred.setdefault(a.predicate, []).append(a)
            for i, t in enumerate(a.args):
                self._by_pos.setdefault((a.predicate, i, t), []).append(a)

    def add(self, atom: Atom) -> bool:
        if atom in self._atoms:
            return False
        self._atoms.add(atom)
        bisect.insort(self._by_pred.setdefault(atom.predicate, []), atom, key=_atom_key)
        for i, t in enumerate(atom.args):
            bisect.insort(
                self._by_pos.setdefault((atom.predicate, i, t), []), atom, key=_atom_key
            )
        return True

    def candidates(self, predicate, bound=()):
        best = self._by_pred.get(predicate, ())
        for i, t in bound:
            bucket = self._by_pos.get((predicate, i, t), ())
            if len(bucket) < len(best):
                best = bucket
                if not best:
                    break
        return best

    def __contains__(self, atom):
        return atom in self._atoms

    def __len__(self):
        return len(self._atoms)

    def __iter__(self):
        return iter(self._atoms)

    def freeze(self) -> "Instance":
        return Instance(self._atoms)


def _atom_key(a):
    return a.sort_key


class Instance:
    """A finite set of variable-free atoms."""

    __slots__ = ("atoms", "_index", "_hash")

    def __init__(self, atoms: Iterable[Atom] = ()):
        atoms = frozenset(atoms)
        for a in atoms:
            if not a.is_ground():
                raise ValueError(f"instance atom {a} contains a variable")
        self.atoms = atoms
        self._index = None
        self._hash = None

    @property
    def index(self) -> AtomIndex:
        if self._index is None:
            self._index = AtomIndex(self.atoms)
        return self._index

    def sorted(self) -> list:
        return sorted(self.atoms, key=_atom_key)

    def __iter__(self):
        return iter(self.sorted())

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom):
        return atom in self.atoms

    def __eq__(self, other):
        if isinstance(other, Instance):
            return self.atoms == other.atoms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.atoms)
        return self._hash

    def __le__(self, other):
        return self.atoms <= other.atoms

    def __repr__(self):
        return "Instance({" + ", ".join(str(a) for a in self.sorted()) + "})"

    def union(self, atoms: Iterable[Atom]) -> "Instance":
        return Instance(self.atoms.union(atoms))

    def nulls(self) -> set:
        return {t for a in self.atoms for t in a.args if isinstance(t, Null)}

    def constants(self) -> set:
        return {t for a in self.atoms for t in a.args if isinstance(t, Constant)}

    def predicates(self) -> set:
        return {a.predicate for a in self.atoms}


# --------------------------------------------------------------------------
# substitutions


class Substitution(Mapping):
    """Variable bindings plus an optional renaming of labelled nulls."""

    __slots__ = ("binding", "null_binding")

    def __init__(self, binding=None, null_binding=None):
        self.binding = dict(binding or {})
        self.null_binding = dict(null_binding or {})

    def __getitem__(self, key):
        if isinstance(key, Null):
            return self.null_binding[key]
        return self.binding[key]

    def __iter__(self):
        return iter(self.binding)

    def __len__(self):
        return len(self.binding)

    def __eq__(self, other):
        if isinstance(other, Substitution):
            return self.binding == other.binding and self.null_binding == other.null_binding
        if isinstance(other, Mapping):
            return not self.null_binding and self.binding == dict(other)
        return NotImplemented

    def __hash__(self):
        return hash((frozenset(self.binding.items()), frozenset(self.null_binding.items())))

    def extend(self, more: Mapping) -> "Substitution":
        b = dict(self.binding)
        b.update(more)
        return Substitution(b, self.null_binding)

    def restrict(self, variables) -> "Substitution":
        vs = set(variables)
        return Substitution({v: t for v, t in self.binding.items() if v in vs}, self.null_binding)

    def __repr__(self):
        return format_substitution(self)


def format_substitution(s: Mapping) -> str:
    binding = s.binding if isinstance(s, Substitution) else s
    items = sorted(binding.items(), key=lambda kv: kv[0].name)
    return "{" + ", ".join(f"{v}->{t}" for v, t in items) + "}"


def apply_to_term(s: Substitution, t, strict=False):
    if isinstance(t, Variable):
        v = s.binding.get(t)
        if v is None:
            if strict:
                raise StrictModeUnbound(t)
            return t
        return v
    if isinstance(t, Null):
        return s.null_binding.get(t, t)
    return t


def apply_substitution(s: Substitution, c: Sequence[Atom], strict=False) -> list:
    """Replace every term of ``c`` per ``s``; unbound variables stay put unless ``strict``."""
    if not isinstance(s, Substitution):
        s = Substitution(s)
    return [Atom(a.predicate, tuple(apply_to_term(s, t, strict) for t in a.args)) for a in c]


# --------------------------------------------------------------------------
# dependencies


def _check_body(body):
    if not body:
        raise UnsafeRule("dependency body must contain at least one atom")


@dataclass(frozen=True)
class Disjunct:
    existentials: frozenset
    head: tuple

    def __post_init__(self):
        object.__setattr__(self, "existentials", frozenset(self.existentials))
        object.__setattr__(self, "head", tuple(self.head))
        if not self.head:
            raise UnsafeRule("head disjunct must contain at least one atom")


@dataclass(frozen=True)
class Dtgd:
    body: tuple
    disjuncts: tuple
    label: str | None = field(default=None, compare=False)
    span: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        _check_body(self.body)
        if not self.disjuncts:
            raise UnsafeRule("a DTGD needs at least one head disjunct")
        body_vars = set(variables_of(self.body))
        for d in self.disjuncts:
            clash = d.existentials & body_vars
            if clash:
                names = ", ".join(sorted(v.name for v in clash))
                raise UnsafeRule(f"existential variable(s) {names} also occur in the body")
            for v in variables_of(d.head):
                if v not in body_vars and v not in d.existentials:
                    raise UnsafeRule(
                        f"head variable {v} is neither existential nor bound in the body"
                    )

    @property
    def is_tgd(self):
        return len(self.disjuncts) == 1

    @property
    def head(self):
        """Head atoms of a single-disjunct TGD."""
        return self.disjuncts[0].head

    @property
    def existentials(self):
        return self.disjuncts[0].existentials

    def body_variables(self):
        return variables_of(self.body)

    def split(self) -> list:
        """One TGD per disjunct, each with the shared body."""
        return [Dtgd(self.body, (d,), self.label) for d in self.disjuncts]


@dataclass(frozen=True)
class Egd:
    body: tuple
    left: Variable
    right: Variable
    label: str | None = field(default=None, compare=False)
    span: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        _check_body(self.body)
        body_vars = set(variables_of(self.body))
        for v in (self.left, self.right):
            if v not in body_vars:
                raise UnsafeRule(f"EGD variable {v} does not occur in the body")


@dataclass(frozen=True)
class NegConstraint:
    body: tuple
    label: str | None = field(default=None, compare=False)
    span: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        _check_body(self.body)


Dependency = Union[Dtgd, Egd, NegConstraint]


def tgd(body, head, existentials=(), label=None) -> Dtgd:
    return Dtgd(tuple(body), (Disjunct(frozenset(existentials), tuple(head)),), label)


# --------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class ConjunctiveQuery:
    answer_vars: tuple
    body: tuple
    equalities: tuple = ()
    name: str = "q"
    span: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "answer_vars", tuple(self.answer_vars))
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "equalities", tuple(tuple(e) for e in self.equalities))

    @property
    def arity(self):
        return len(self.answer_vars)

    @property
    def is_boolean(self):
        return not self.answer_vars


@dataclass(frozen=True)
class Unsatisfiable:
    """Result of normalising a query whose equalities equate distinct constants."""

    query: ConjunctiveQuery
    left: Constant
    right: Constant


def normalize_query(q: ConjunctiveQuery):
    """Compile equalities away by unification.

    Variables merge onto the one that occurs first; a constant always wins
    over a variable. Returns :class:`Unsatisfiable` if two distinct
    constants are forced equal.
    """
    if not q.equalities:
        _check_answer_vars(q)
        return q
    order = {}
    for t in list(q.answer_vars) + [t for a in q.body for t in a.args]:
        order.setdefault(t, len(order))
    for l, r in q.equalities:
        order.setdefault(l, len(order))
        order.setdefault(r, len(order))

    parent = {}

    def find(t):
        while parent.get(t, t) != t:
            t = parent[t]
        return t

    for l, r in q.equalities:
        a, b = find(l), find(r)
        if a == b:
            continue
        a_const = not isinstance(a, Variable)
        b_const = not isinstance(b, Variable)
        if a_const and b_const:
            return Unsatisfiable(q, a, b)
        if b_const or (not a_const and order[b] < order[a]):
            a, b = b, a
        parent[b] = a

    s = Substitution({v: find(v) for v in order if isinstance(v, Variable) and find(v) != v})
    nq = ConjunctiveQuery(
        tuple(apply_to_term(s, t) for t in q.answer_vars),
        tuple(apply_substitution(s, q.body)),
        (),
        q.name,
        q.span,
    )
    _check_answer_vars(nq)
    return nq


def _check_answer_vars(q):
    body_vars = set(variables_of(q.body))
    for v in q.answer_vars:
        if isinstance(v, Variable) and v not in body_vars:
            raise UnsafeRule(f"answer variable {v} of query {q.name} does not occur in its body")


# --------------------------------------------------------------------------
# homomorphisms


def _index_of(i):
    if isinstance(i, Instance):
        return i.index
    if isinstance(i, AtomIndex):
        return i
    return Instance(i).index


def iter_homomorphisms(
    c: Sequence[Atom], i, seed: Substitution | None = None
) -> Iterator[Substitution]:
    """Lazily enumerate extensions of ``seed`` mapping ``c`` into ``i``.

    Atoms of ``c`` are matched left to right, instance atoms in canonical
    order, so the enumeration order is fixed.
    """
    idx = _index_of(i)
    seed = seed or Substitution()
    nulls = seed.null_binding
    c = list(c)
    binding = dict(seed.binding)
    n = len(c)

    def resolve(t):
        if isinstance(t, Variable):
            return binding.get(t)
        if isinstance(t, Null):
            return nulls.get(t, t)
        return t

    def search(k):
        if k == n:
            yield Substitution(binding, nulls)
            return
        atom = c[k]
        pattern = [resolve(t) for t in atom.args]
        bound = [(j, v) for j, v in enumerate(pattern) if v is not None]
        for cand in idx.candidates(atom.predicate, bound):
            if len(cand.args) != len(pattern):
                continue
            added = []
            ok = True
            for j, want in enumerate(pattern):
                got = cand.args[j]
                if want is None:
                    var = atom.args[j]
                    prev = binding.get(var)
                    if prev is None:
                        binding[var] = got
                        added.append(var)
                    elif prev != got:
                        ok = False
                        break
                elif want != got:
                    ok = False
                    break
            if ok:
                yield from search(k + 1)
            for var in added:
                del binding[var]

    return search(0)


def find_homomorphisms(c, i, seed: Substitution | None = None) -> list:
    return list(iter_homomorphisms(c, i, seed))


def has_homomorphism(c, i, seed: Substitution | None = None) -> bool:
    return next(iter(iter_homomorphisms(c, i, seed)), None) is not None


def evaluate_bcq(q: ConjunctiveQuery, i) -> bool:
    if not q.is_boolean:
        raise NotBoolean(f"query {q.name} has arity {q.arity}")
    nq = normalize_query(q)
    if isinstance(nq, Unsatisfiable):
        return False
    return has_homomorphism(nq.body, i)


def answers(q: ConjunctiveQuery, i) -> set:
    """Constant-only images of the answer variables over ``i``."""
    nq = normalize_query(q)
    if isinstance(nq, Unsatisfiable):
        return set()
    out = set()
    for h in iter_homomorphisms(nq.body, i):
        row = tuple(apply_to_term(h, t) for t in nq.answer_vars)
        if all(isinstance(t, Constant) for t in row):
            out.add(row)
    return out
