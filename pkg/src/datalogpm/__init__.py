"""Datalog+/- reasoning: fragment classification, the chase, and certain answers."""

from .chase import Budget, BudgetExhausted, Failure, NullSource, Success, chase
from .classifier import FragmentReport, classify
from .core import (
    Atom,
    ConjunctiveQuery,
    Constant,
    Disjunct,
    Dtgd,
    Egd,
    Instance,
    NegConstraint,
    Null,
    Position,
    Substitution,
    Unsatisfiable,
    Variable,
    answers,
    apply_substitution,
    evaluate_bcq,
    find_homomorphisms,
    normalize_query,
)
from .dchase import (
    AnswerStatus,
    ChaseTree,
    Status,
    Verdict,
    certain_answers,
    certain_bcq,
    disjunctive_chase,
)
from .parser import Program, parse_program, serialize_program

__version__ = "0.1.0"
