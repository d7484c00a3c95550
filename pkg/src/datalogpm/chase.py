"""Restricted chase for TGDs, EGDs and negative constraints.

The run is organised in levels. At the start of a level every active
trigger (rule, body match whose head is not yet satisfied) is collected;
each is then re-checked against the growing instance and fired if still
active. After the batch, EGDs are applied to a fixpoint and negative
constraints are checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    AtomIndex,
    Constant,
    Dtgd,
    Egd,
    Instance,
    NegConstraint,
    Null,
    Substitution,
    apply_substitution,
    apply_to_term,
    format_substitution,
    has_homomorphism,
    iter_homomorphisms,
    term_rank,
)
from .errors import HardFailure


@dataclass
class NullSource:
    branch_tag: str = "0"
    next_id: int = 0

    def fresh(self) -> Null:
        n = Null(self.next_id, self.branch_tag)
        self.next_id += 1
        return n

    def fork(self, branch_tag) -> "NullSource":
        return NullSource(branch_tag, self.next_id)


@dataclass(frozen=True)
class Budget:
    """``None`` disables a bound. Steps count TGD applications, depth counts levels."""

    max_steps: int | None = 100_000
    max_depth: int | None = 64

    @classmethod
    def unlimited(cls):
        return cls(None, None)

    @property
    def is_unlimited(self):
        return self.max_steps is None and self.max_depth is None


@dataclass
class Success:
    result: Instance
    steps: int
    levels: int = 0
    trace: list = field(default_factory=list)


@dataclass
class Failure:
    step: int
    dependency: object
    partial: Instance | None = None
    trace: list = field(default_factory=list)


@dataclass
class BudgetExhausted:
    partial: Instance
    steps: int
    levels: int = 0
    trace: list = field(default_factory=list)


ChaseOutcome = Success | Failure | BudgetExhausted


# --------------------------------------------------------------------------
# single steps


def _disjunct_satisfied(disjunct, h, store) -> bool:
    return has_homomorphism(disjunct.head, store, h)


def is_active(d: Dtgd, h: Substitution, store) -> bool:
    """True when no disjunct of ``d`` can be satisfied by extending ``h``."""
    return not any(_disjunct_satisfied(dj, h, store) for dj in d.disjuncts)


def triggers(d: Dtgd, store):
    for h in iter_homomorphisms(d.body, store):
        if is_active(d, h, store):
            yield h


def tgd_applicable(d: Dtgd, i) -> Substitution | None:
    """First body match whose head cannot be satisfied in ``i``; ``None`` if there is none."""
    if not d.is_tgd:
        raise ValueError("tgd_applicable expects a single-disjunct TGD")
    return next(triggers(d, _store_of(i)), None)


def _store_of(i):
    return i.index if isinstance(i, Instance) else i


def head_atoms(disjunct, h: Substitution, ns: NullSource) -> list:
    ext = {v: ns.fresh() for v in sorted(disjunct.existentials, key=lambda v: v.name)}
    return apply_substitution(h.extend(ext), disjunct.head, strict=True)


def apply_tgd(d: Dtgd, h: Substitution, i: Instance, ns: NullSource) -> Instance:
    return i.union(head_atoms(d.disjuncts[0], h, ns))


def egd_pair(e: Egd, h: Substitution):
    return apply_to_term(h, e.left), apply_to_term(h, e.right)


def merge_terms(e: Egd, left, right):
    """(replaced, survivor) for an EGD firing on ``left != right``."""
    if isinstance(left, Constant) and isinstance(right, Constant):
        raise HardFailure(e, left, right)
    if isinstance(left, Constant):
        return right, left
    if isinstance(right, Constant):
        return left, right
    if term_rank(left) < term_rank(right):
        return right, left
    return left, right


def _replace(atoms, old, new):
    s = Substitution(null_binding={old: new})
    return apply_substitution(s, atoms)


def apply_egd(e: Egd, h: Substitution, i: Instance) -> Instance:
    """Merge the two terms ``h`` assigns to the EGD's sides; raises :class:`HardFailure`."""
    left, right = egd_pair(e, h)
    if left == right:
        return i
    old, new = merge_terms(e, left, right)
    return Instance(_replace(i.atoms, old, new))


def egd_fixpoint(egds, store: AtomIndex):
    """Apply EGDs until none fires. Returns (store, merges); may raise HardFailure."""
    merges = []
    while True:
        fired = None
        for e in egds:
            for h in iter_homomorphisms(e.body, store):
                left, right = egd_pair(e, h)
                if left != right:
                    fired = (e, left, right)
                    break
            if fired:
                break
        if fired is None:
            return store, merges
        e, left, right = fired
        old, new = merge_terms(e, left, right)
        merges.append((e, old, new))
        store = AtomIndex(_replace(list(store), old, new))


def violated_constraint(constraints, store):
    for c in constraints:
        if has_homomorphism(c.body, store):
            return c
    return None


def violations(instance, sigma) -> list:
    """Dependencies of Σ that ``instance`` does not satisfy."""
    store = _store_of(instance)
    out = []
    for d in sigma:
        if isinstance(d, Dtgd):
            if next(triggers(d, store), None) is not None:
                out.append(d)
        elif isinstance(d, Egd):
            if any(l != r for l, r in (egd_pair(d, h) for h in iter_homomorphisms(d.body, store))):
                out.append(d)
        elif has_homomorphism(d.body, store):
            out.append(d)
    return out


def is_model(instance, sigma) -> bool:
    return not violations(instance, sigma)


def rule_label(d, k) -> str:
    return d.label or f"r{k + 1}"


def trace_line(step, label, h, atoms) -> str:
    from .parser import format_atom

    added = ", ".join(format_atom(a) for a in atoms)
    return f"step {step}: {label} with {format_substitution(h)} added {{{added}}}"


# --------------------------------------------------------------------------
# the run


def split_sigma(sigma):
    tgds, egds, constraints = [], [], []
    for k, d in enumerate(sigma):
        if isinstance(d, Dtgd):
            tgds.append((k, d))
        elif isinstance(d, Egd):
            egds.append(d)
        elif isinstance(d, NegConstraint):
            constraints.append(d)
        else:
            raise TypeError(f"not a dependency: {d!r}")
    return tgds, egds, constraints


def collect_triggers(tgds, store, order="forward"):
    rules = tgds if order == "forward" else tgds[::-1]
    out = []
    for k, d in rules:
        hs = list(triggers(d, store))
        if order != "forward":
            hs.reverse()
        out.extend((k, d, h) for h in hs)
    return out


def chase(d, sigma, budget: Budget | None = None, order="forward", trace=False) -> ChaseOutcome:
    """Run the restricted chase of ``d`` under ``sigma``.

    ``order`` is ``"forward"`` (rules in Σ order, matches in canonical order)
    or ``"reverse"`` (both reversed); the two give the same certain answers.
    """
    budget = budget or Budget()
    if order not in ("forward", "reverse"):
        raise ValueError(f"unknown order {order!r}")
    sigma = list(sigma)
    tgds, egds, constraints = split_sigma(sigma)
    for _, t in tgds:
        if not t.is_tgd:
            raise ValueError("the standard chase only accepts single-disjunct TGDs")
    store = AtomIndex(d.atoms if isinstance(d, Instance) else d)
    ns = NullSource()
    steps = 0
    level = 0
    lines = []

    while True:
        try:
            store, _ = egd_fixpoint(egds, store)
        except HardFailure as err:
            return Failure(steps, err.dependency, store.freeze(), lines)
        bad = violated_constraint(constraints, store)
        if bad is not None:
            return Failure(steps, bad, store.freeze(), lines)

        pending = collect_triggers(tgds, store, order)
        if not pending:
            return Success(store.freeze(), steps, level, lines)
        if budget.max_depth is not None and level >= budget.max_depth:
            return BudgetExhausted(store.freeze(), steps, level, lines)
        level += 1
        for k, t, h in pending:
            if not is_active(t, h, store):
                continue
            if budget.max_steps is not None and steps >= budget.max_steps:
                return BudgetExhausted(store.freeze(), steps, level, lines)
            atoms = head_atoms(t.disjuncts[0], h, ns)
            for a in atoms:
                store.add(a)
            steps += 1
            if trace:
                lines.append(trace_line(steps, rule_label(t, k), h, atoms))
