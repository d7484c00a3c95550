"""Disjunctive chase tree and certain-answer evaluation over its leaves.

Each branch runs the same level schedule as :func:`datalogpm.chase.chase`;
a trigger of a rule with n disjuncts gives a node n children. Nodes are
expanded breadth first. The step budget is shared by the whole tree, the
depth budget (levels) applies per branch.
"""

from __future__ import annotations

import enum
import itertools
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .chase import (
    Budget,
    NullSource,
    collect_triggers,
    egd_fixpoint,
    head_atoms,
    is_active,
    rule_label,
    split_sigma,
    triggers,
    violated_constraint,
    _store_of,
)
from .core import (
    AtomIndex,
    ConjunctiveQuery,
    Constant,
    Dtgd,
    Instance,
    Substitution,
    Unsatisfiable,
    answers,
    format_substitution,
    has_homomorphism,
    normalize_query,
)
from .errors import HardFailure, NotBoolean


class Status(str, enum.Enum):
    EXPANDED = "Expanded"
    SATURATED = "Saturated"
    FAILED = "Failed"
    OPEN = "Open"


class Verdict(str, enum.Enum):
    ENTAILED = "Entailed"
    NOT_ENTAILED = "NotEntailed"
    UNKNOWN = "Unknown"


class AnswerStatus(str, enum.Enum):
    EXACT = "Exact"
    LOWER_BOUND_UNKNOWN = "LowerBoundUnknown"


@dataclass(eq=False)
class ChaseNode:
    instance: Instance
    branch_tag: str = "0"
    depth: int = 0
    status: Status | None = None
    rule: int | None = None  # index into Σ of the rule applied here
    substitution: Substitution | None = None
    children: list = field(default_factory=list)
    reason: object = None  # violated dependency of a Failed leaf
    merges: list = field(default_factory=list)
    _pending: deque = field(default_factory=deque, repr=False)
    _nulls: NullSource | None = field(default=None, repr=False)

    @property
    def is_leaf(self):
        return not self.children

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class ChaseTree:
    root: ChaseNode
    sigma: list
    steps: int = 0

    def leaves(self) -> list:
        return [n for n in self.root.walk() if n.is_leaf]

    def saturated(self) -> list:
        return [n.instance for n in self.leaves() if n.status is Status.SATURATED]

    def open_leaves(self) -> list:
        return [n for n in self.leaves() if n.status is Status.OPEN]

    def failed_leaves(self) -> list:
        return [n for n in self.leaves() if n.status is Status.FAILED]

    def live_leaves(self) -> list:
        """Saturated and Open leaves: the ones that may still have models."""
        return [n for n in self.leaves() if n.status is not Status.FAILED]

    @property
    def complete(self) -> bool:
        return not self.open_leaves()

    @property
    def all_failed(self) -> bool:
        return all(n.status is Status.FAILED for n in self.leaves())

    def _label_of(self, dep):
        for k, d in enumerate(self.sigma):
            if d is dep:
                return rule_label(d, k)
        return dep.label or "?"

    def to_dict(self) -> dict:
        from .parser import format_atom

        def node(n):
            d = {"status": n.status.value, "branch": n.branch_tag, "depth": n.depth}
            if n.rule is not None:
                d["rule"] = rule_label(self.sigma[n.rule], n.rule)
                d["substitution"] = format_substitution(n.substitution)
            if n.status is Status.FAILED and n.reason is not None:
                d["violated"] = self._label_of(n.reason)
            if n.is_leaf:
                d["instance"] = [format_atom(a) for a in n.instance.sorted()]
            else:
                d["children"] = [node(c) for c in n.children]
            return d

        return {"steps": self.steps, "root": node(self.root)}

    def to_text(self) -> str:
        lines = []

        def visit(n, indent):
            pad = "  " * indent
            if n.is_leaf:
                extra = ""
                if n.status is Status.FAILED and n.reason is not None:
                    extra = f" by {self._label_of(n.reason)}"
                lines.append(f"{pad}[{n.status.value}{extra}] {len(n.instance)} atoms (branch {n.branch_tag})")
            else:
                label = rule_label(self.sigma[n.rule], n.rule)
                lines.append(f"{pad}{label} with {format_substitution(n.substitution)}")
            for c in n.children:
                visit(c, indent + 1)

        visit(self.root, 0)
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# single steps


def dtgd_applicable(d: Dtgd, i) -> Substitution | None:
    """First body match for which no disjunct is satisfiable; ``None`` otherwise."""
    return next(triggers(d, _store_of(i)), None)


def _child_tags(tag, n):
    if n == 1:
        return [tag]
    return [f"{tag}.{k}" for k in range(1, n + 1)]


def apply_dtgd(d: Dtgd, h: Substitution, i: Instance, ns: NullSource) -> list:
    """One child instance per disjunct; fresh nulls are branch-tagged per child."""
    out = []
    for dj, tag in zip(d.disjuncts, _child_tags(ns.branch_tag, len(d.disjuncts))):
        src = ns if len(d.disjuncts) == 1 else ns.fork(tag)
        out.append(i.union(head_atoms(dj, h, src)))
    return out


# --------------------------------------------------------------------------
# tree expansion


class _Run:
    def __init__(self, sigma, budget, order):
        self.sigma = sigma
        self.budget = budget
        self.order = order
        self.tgds, self.egds, self.constraints = split_sigma(sigma)
        self.steps = 0
        self.lock = threading.Lock()

    def take_step(self) -> bool:
        with self.lock:
            if self.budget.max_steps is not None and self.steps >= self.budget.max_steps:
                return False
            self.steps += 1
            return True

    def expand(self, node: ChaseNode) -> list:
        store = AtomIndex(node.instance.atoms)
        pending = node._pending
        ns = node._nulls
        while True:
            while pending:
                k, d, h = pending.popleft()
                if not is_active(d, h, store):
                    continue
                if not self.take_step():
                    pending.appendleft((k, d, h))
                    node.instance = store.freeze()
                    node.status = Status.OPEN
                    return []
                node.instance = store.freeze()
                node.status = Status.EXPANDED
                node.rule = k
                node.substitution = h
                tags = _child_tags(node.branch_tag, len(d.disjuncts))
                for dj, tag in zip(d.disjuncts, tags):
                    src = ns if len(d.disjuncts) == 1 else ns.fork(tag)
                    child = ChaseNode(
                        node.instance.union(head_atoms(dj, h, src)),
                        tag,
                        node.depth,
                        _pending=deque(pending),
                        _nulls=src,
                    )
                    node.children.append(child)
                node._pending = deque()
                node._nulls = None
                return node.children

            # level boundary
            try:
                store, merges = egd_fixpoint(self.egds, store)
            except HardFailure as err:
                return self._close(node, store, Status.FAILED, err.dependency)
            node.merges.extend(merges)
            bad = violated_constraint(self.constraints, store)
            if bad is not None:
                return self._close(node, store, Status.FAILED, bad)
            found = collect_triggers(self.tgds, store, self.order)
            if not found:
                return self._close(node, store, Status.SATURATED)
            if self.budget.max_depth is not None and node.depth >= self.budget.max_depth:
                pending.extend(found)
                return self._close(node, store, Status.OPEN)
            node.depth += 1
            pending.extend(found)

    def _close(self, node, store, status, reason=None):
        node.instance = store.freeze()
        node.status = status
        node.reason = reason
        node._nulls = None
        return []


def disjunctive_chase(
    d, sigma, budget: Budget | None = None, order="forward", parallel=False, workers=None
) -> ChaseTree:
    """Build the disjunctive chase tree of ``d`` under ``sigma``.

    With ``parallel=True`` each breadth-first layer is expanded on a thread
    pool; the tree shape is the same unless the step budget runs out.
    """
    budget = budget or Budget()
    sigma = list(sigma)
    run = _Run(sigma, budget, order)
    instance = d if isinstance(d, Instance) else Instance(d)
    root = ChaseNode(instance, "0", 0, _nulls=NullSource("0"))
    if parallel:
        layer = [root]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            while layer:
                layer = list(itertools.chain.from_iterable(pool.map(run.expand, layer)))
    else:
        todo = deque([root])
        while todo:
            todo.extend(run.expand(todo.popleft()))
    return ChaseTree(root, sigma, run.steps)


# --------------------------------------------------------------------------
# certain answers


def _satisfies(q, instance):
    if isinstance(q, Unsatisfiable):
        return False
    return has_homomorphism(q.body, instance)


def entails(tree: ChaseTree, q: ConjunctiveQuery) -> Verdict:
    if not q.is_boolean:
        raise NotBoolean(f"query {q.name} has arity {q.arity}")
    nq = normalize_query(q)
    if tree.all_failed:
        return Verdict.ENTAILED
    unknown = False
    refuted = False
    for n in tree.live_leaves():
        if _satisfies(nq, n.instance):
            continue
        if n.status is Status.OPEN:
            unknown = True
        else:
            refuted = True
    if not unknown and not refuted:
        return Verdict.ENTAILED
    if refuted and tree.complete:
        return Verdict.NOT_ENTAILED
    return Verdict.UNKNOWN


def certain_bcq(q, d, sigma, budget: Budget | None = None, **kw) -> Verdict:
    if not q.is_boolean:
        raise NotBoolean(f"query {q.name} has arity {q.arity}")
    return entails(disjunctive_chase(d, sigma, budget, **kw), q)


@dataclass(frozen=True)
class CertainAnswers:
    tuples: frozenset
    status: AnswerStatus
    # no leaf survived: every tuple over the active domain is returned
    inconsistent: bool = False


def answers_over(tree: ChaseTree, q: ConjunctiveQuery, domain=()) -> CertainAnswers:
    status = AnswerStatus.EXACT if tree.complete else AnswerStatus.LOWER_BOUND_UNKNOWN
    if tree.all_failed:
        consts = set(domain) | tree.root.instance.constants()
        consts |= {t for a in q.body for t in a.args if isinstance(t, Constant)}
        ordered = sorted(consts, key=lambda c: c.name)
        rows = frozenset(itertools.product(ordered, repeat=q.arity))
        return CertainAnswers(rows, status, inconsistent=True)
    result = None
    for n in tree.live_leaves():
        rows = answers(q, n.instance)
        result = rows if result is None else result & rows
        if not result:
            break
    return CertainAnswers(frozenset(result or ()), status)


def certain_answers(q, d, sigma, budget: Budget | None = None, **kw) -> CertainAnswers:
    return answers_over(disjunctive_chase(d, sigma, budget, **kw), q, _sigma_constants(sigma))


def _sigma_constants(sigma):
    out = set()
    for dep in sigma:
        atoms = list(dep.body)
        if isinstance(dep, Dtgd):
            atoms += [a for dj in dep.disjuncts for a in dj.head]
        out |= {t for a in atoms for t in a.args if isinstance(t, Constant)}
    return out
