"""Text syntax for programs: facts, dependencies and queries.

::

    student(s1, c1).
    student(X, Y) -> exists Z person(X, Z).
    parent(X, Y) -> male(Y) | female(Y).
    r(X, Y), r(X, Z) -> Y = Z.
    male(X), female(X) -> false.
    tutors(X) :- tutor(X, Y).
    ? male(p).

Identifiers starting with an uppercase letter or ``_`` are variables,
lowercase identifiers and numbers are constants; any other constant is
written as a double-quoted string. ``%`` starts a comment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

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
    normalize_query,
)
from .errors import ArityMismatch, ParseError, UnsafeRule

KEYWORDS = frozenset({"exists", "false"})

_PLAIN_CONSTANT = re.compile(r"[a-z0-9][A-Za-z0-9_]*\Z")
_PREDICATE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<arrow>->)
  | (?P<implied>:-)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z0-9_]+)
  | (?P<punct>[(),.|=?])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "var", "ident", "string", or the literal punctuation
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        val = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            out.append(Token("var" if val[0].isupper() or val[0] == "_" else "ident", val, line, col))
        elif kind == "string":
            out.append(Token("string", val, line, col))
        elif kind in ("arrow", "implied", "punct"):
            out.append(Token(val, val, line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


@dataclass(frozen=True)
class Program:
    facts: Instance = field(default_factory=Instance)
    dependencies: tuple = ()
    queries: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "dependencies", tuple(self.dependencies))
        object.__setattr__(self, "queries", tuple(self.queries))
        if self.facts.nulls():
            raise ValueError("program facts may not contain labelled nulls")


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0
        self.arity = {}
        self.facts = []
        self.deps = []
        self.queries = []

    # -- token helpers

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message, expected=(), tok=None, cls=ParseError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, expected)

    def expect(self, kind):
        if self.tok.kind != kind:
            shown = self.tok.text or "end of input"
            raise self.error(f"unexpected {shown!r}", {kind})
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind):
        if self.tok.kind == kind:
            self.i += 1
            return True
        return False

    # -- grammar

    def program(self):
        while self.tok.kind != "eof":
            self.statement()
        return Program(Instance(self.facts), self.deps, self.queries)

    def statement(self):
        start = self.tok
        if self.accept("?"):
            body, eqs = self.conjunction(allow_eq=True)
            self.expect(".")
            name = f"q{len(self.queries) + 1}"
            self.add_query(ConjunctiveQuery((), body, eqs, name, (start.line, start.col)), start)
            return
        if self.tok.kind == "ident" and self.peek().kind == "(" and self._is_query_head():
            self.query(start)
            return
        body, eqs = self.conjunction(allow_eq=True)
        if self.accept("."):
            if eqs:
                raise self.error("equalities are only allowed in query bodies", tok=start)
            for a in body:
                if not a.is_ground():
                    raise self.error(f"fact {a} must not contain variables", tok=start)
            self.facts.extend(body)
            return
        if eqs:
            raise self.error("equalities are only allowed in query bodies", tok=start)
        if not self.accept("->"):
            raise self.error(f"unexpected {self.tok.text or 'end of input'!r}", {".", "->", ","})
        self.head(body, start)

    def _is_query_head(self):
        # scan to the matching ")" and check for ":-"
        depth, k = 0, self.i + 1
        while k < len(self.toks):
            kind = self.toks[k].kind
            if kind == "(":
                depth += 1
            elif kind == ")":
                depth -= 1
                if depth == 0:
                    return self.toks[k + 1].kind == ":-"
            elif kind in (".", "eof"):
                return False
            k += 1
        return False

    def query(self, start):
        name = self.expect("ident").text
        self.expect("(")
        answer = []
        if self.tok.kind != ")":
            while True:
                answer.append(Variable(self.expect("var").text))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect(":-")
        body, eqs = self.conjunction(allow_eq=True)
        self.expect(".")
        self.add_query(ConjunctiveQuery(tuple(answer), body, eqs, name, (start.line, start.col)), start)

    def add_query(self, q, start):
        try:
            normalize_query(q)
        except UnsafeRule as e:
            raise UnsafeRule(e.message, start.line, start.col) from None
        self.queries.append(q)

    def head(self, body, start):
        span = (start.line, start.col)
        label = f"r{len(self.deps) + 1}"
        try:
            if self.tok.kind == "ident" and self.tok.text == "false" and self.peek().kind == ".":
                self.i += 1
                self.expect(".")
                self.deps.append(NegConstraint(tuple(body), label, span))
                return
            if self.tok.kind == "var" and self.peek().kind == "=":
                left = Variable(self.expect("var").text)
                self.expect("=")
                right = Variable(self.expect("var").text)
                self.expect(".")
                self.deps.append(Egd(tuple(body), left, right, label, span))
                return
            disjuncts = [self.disjunct()]
            while self.accept("|"):
                disjuncts.append(self.disjunct())
            self.expect(".")
            self.deps.append(Dtgd(tuple(body), tuple(disjuncts), label, span))
        except UnsafeRule as e:
            if e.line is not None:
                raise
            raise UnsafeRule(e.message, start.line, start.col) from None

    def disjunct(self):
        existentials = []
        if self.tok.kind == "ident" and self.tok.text == "exists" and self.peek().kind == "var":
            self.i += 1
            existentials.append(Variable(self.expect("var").text))
            while self.tok.kind == "," and self.peek().kind == "var":
                self.i += 1
                existentials.append(Variable(self.expect("var").text))
        atoms = [self.atom()]
        while self.accept(","):
            atoms.append(self.atom())
        return Disjunct(frozenset(existentials), tuple(atoms))

    def conjunction(self, allow_eq):
        atoms, eqs = [], []
        while True:
            if self.peek().kind == "=" and self.tok.kind in ("var", "ident", "string"):
                if not allow_eq:
                    raise self.error("equality not allowed here")
                left = self.term()
                self.expect("=")
                eqs.append((left, self.term()))
            else:
                atoms.append(self.atom())
            if not self.accept(","):
                break
        return tuple(atoms), tuple(eqs)

    def atom(self):
        tok = self.tok
        if tok.kind != "ident" or not _PREDICATE.match(tok.text):
            raise self.error(f"expected a predicate name, got {tok.text or 'end of input'!r}", {"predicate"})
        if tok.text in KEYWORDS:
            raise self.error(f"{tok.text!r} is reserved and cannot name a predicate")
        self.i += 1
        args = []
        if self.accept("("):
            if self.tok.kind != ")":
                while True:
                    args.append(self.term())
                    if not self.accept(","):
                        break
            self.expect(")")
        known = self.arity.setdefault(tok.text, len(args))
        if known != len(args):
            raise ArityMismatch(
                f"predicate {tok.text} used with arity {len(args)}, previously {known}",
                tok.line,
                tok.col,
            )
        return Atom(tok.text, tuple(args))

    def term(self):
        tok = self.tok
        if tok.kind == "var":
            self.i += 1
            return Variable(tok.text)
        if tok.kind == "ident":
            self.i += 1
            return Constant(tok.text)
        if tok.kind == "string":
            self.i += 1
            return Constant(json.loads(tok.text))
        raise self.error(f"expected a term, got {tok.text or 'end of input'!r}", {"variable", "constant"})


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_dependency(text: str):
    p = parse_program(text)
    if len(p.dependencies) != 1 or p.facts or p.queries:
        raise ParseError("expected exactly one dependency")
    return p.dependencies[0]


def parse_dependencies(text: str) -> list:
    return list(parse_program(text).dependencies)


def parse_query(text: str) -> ConjunctiveQuery:
    p = parse_program(text)
    if len(p.queries) != 1 or p.facts or p.dependencies:
        raise ParseError("expected exactly one query")
    return p.queries[0]


def parse_facts(text: str) -> Instance:
    return parse_program(text).facts


# --------------------------------------------------------------------------
# serialization


def format_term(t) -> str:
    if isinstance(t, Constant):
        if _PLAIN_CONSTANT.match(t.name):
            return t.name
        return json.dumps(t.name, ensure_ascii=False)
    return str(t)


def format_atom(a: Atom) -> str:
    return f"{a.predicate}({', '.join(format_term(t) for t in a.args)})"


def _conj(atoms) -> str:
    return ", ".join(format_atom(a) for a in atoms)


def format_dependency(d) -> str:
    body = _conj(d.body)
    if isinstance(d, NegConstraint):
        return f"{body} -> false."
    if isinstance(d, Egd):
        return f"{body} -> {d.left} = {d.right}."
    parts = []
    for dj in d.disjuncts:
        ex = ""
        if dj.existentials:
            ex = "exists " + ", ".join(sorted(v.name for v in dj.existentials)) + " "
        parts.append(ex + _conj(dj.head))
    return f"{body} -> {' | '.join(parts)}."


def format_query(q: ConjunctiveQuery) -> str:
    items = [format_atom(a) for a in q.body]
    items += [f"{format_term(l)} = {format_term(r)}" for l, r in q.equalities]
    head = ", ".join(str(v) for v in q.answer_vars)
    return f"{q.name}({head}) :- {', '.join(items)}."


def serialize_facts(instance: Instance) -> str:
    """Facts one per line in canonical order; nulls print as ``_:b<branch>_<id>``."""
    return "".join(f"{format_atom(a)}.\n" for a in instance.sorted())


def serialize_program(p: Program) -> str:
    out = [serialize_facts(p.facts)]
    out += [format_dependency(d) + "\n" for d in p.dependencies]
    out += [format_query(q) + "\n" for q in p.queries]
    return "".join(out)
