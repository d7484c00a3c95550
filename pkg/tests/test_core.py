import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datalogpm.core import (
    Atom,
    ConjunctiveQuery,
    Constant,
    Instance,
    Null,
    Substitution,
    Unsatisfiable,
    Variable,
    answers,
    apply_substitution,
    evaluate_bcq,
    find_homomorphisms,
    normalize_query,
)
from datalogpm.errors import NotBoolean, StrictModeUnbound, UnsafeRule

from oracles import brute_force_homomorphisms

a, b, c = Constant("a"), Constant("b"), Constant("c")
X, Y, Z = Variable("X"), Variable("Y"), Variable("Z")
n1 = Null(1)


def atom(p, *args):
    return Atom(p, tuple(args))


def test_terms_are_disjoint_and_structural():
    assert Constant("X") != Variable("X")
    assert Null(0, "0") == Null(0, "0")
    assert Null(0, "0") != Null(0, "1")
    assert str(Null(3, "0.2")) == "_:b0.2_3"


def test_instance_rejects_variables():
    with pytest.raises(ValueError):
        Instance([atom("p", X)])


def test_instance_is_a_set():
    i = Instance([atom("p", a), atom("p", a)])
    assert len(i) == 1


class TestApplySubstitution:
    def test_empty_is_identity(self):
        assert apply_substitution(Substitution(), [atom("person", a)]) == [atom("person", a)]

    def test_direct_replacement(self):
        s = Substitution({X: a, Z: n1})
        assert apply_substitution(s, [atom("person", X, Z)]) == [atom("person", a, n1)]

    def test_strict_unbound(self):
        with pytest.raises(StrictModeUnbound):
            apply_substitution(Substitution({X: a}), [atom("r", X, Y)], strict=True)

    def test_lenient_keeps_residual_variables(self):
        assert apply_substitution(Substitution({X: a}), [atom("r", X, Y)]) == [atom("r", a, Y)]

    def test_null_binding(self):
        s = Substitution(null_binding={n1: b})
        assert apply_substitution(s, [atom("r", a, n1)]) == [atom("r", a, b)]


class TestFindHomomorphisms:
    def test_empty_body(self):
        assert find_homomorphisms([], Instance([atom("p", a)])) == [{}]

    def test_two_matches_in_canonical_order(self):
        i = Instance([atom("person", b), atom("person", a)])
        assert find_homomorphisms([atom("person", X)], i) == [{X: a}, {X: b}]

    def test_repeated_variable(self):
        assert find_homomorphisms([atom("r", X, X)], Instance([atom("r", a, b)])) == []

    def test_seed_is_respected(self):
        i = Instance([atom("r", a, b), atom("r", b, c)])
        got = find_homomorphisms([atom("r", X, Y)], i, Substitution({X: b}))
        assert got == [{X: b, Y: c}]

    def test_nulls_in_pattern_match_exactly(self):
        i = Instance([atom("r", a, n1), atom("r", a, b)])
        assert find_homomorphisms([atom("r", X, n1)], i) == [{X: a}]

    def test_nulls_in_pattern_follow_null_binding(self):
        i = Instance([atom("r", a, n1), atom("r", a, b)])
        got = find_homomorphisms([atom("r", X, n1)], i, Substitution(null_binding={n1: b}))
        assert [h.binding for h in got] == [{X: a}]

    def test_arity_mismatch_never_matches(self):
        assert find_homomorphisms([atom("r", X)], Instance([atom("r", a, b)])) == []


class TestNormalizeQuery:
    def test_variable_merge(self):
        q = ConjunctiveQuery((), (atom("r", X, Y),), ((X, Y),))
        assert normalize_query(q) == ConjunctiveQuery((), (atom("r", X, X),))

    def test_constant_substitution(self):
        q = ConjunctiveQuery((), (atom("r", X),), ((X, a),))
        assert normalize_query(q) == ConjunctiveQuery((), (atom("r", a),))

    def test_distinct_constants(self):
        q = ConjunctiveQuery((), (atom("r", X),), ((a, b),))
        assert isinstance(normalize_query(q), Unsatisfiable)

    def test_chain_to_constant_then_conflict(self):
        q = ConjunctiveQuery((), (atom("r", X, Y),), ((X, Y), (Y, a), (X, b)))
        assert isinstance(normalize_query(q), Unsatisfiable)

    def test_answer_vars_rewritten(self):
        q = ConjunctiveQuery((X, Y), (atom("r", X, Y),), ((Y, X),))
        assert normalize_query(q).answer_vars == (X, X)

    def test_unsafe_answer_variable(self):
        with pytest.raises(UnsafeRule):
            normalize_query(ConjunctiveQuery((Z,), (atom("r", X),)))


class TestEvaluate:
    def test_direct_match(self):
        assert evaluate_bcq(ConjunctiveQuery((), (atom("person", X),)), Instance([atom("person", a)]))

    def test_empty_instance(self):
        assert not evaluate_bcq(ConjunctiveQuery((), (atom("person", X),)), Instance())

    def test_join_fails(self):
        q = ConjunctiveQuery((), (atom("r", X, Y), atom("s", Y)))
        i = Instance([atom("r", a, b), atom("s", c)])
        assert not evaluate_bcq(q, i)
        assert brute_force_homomorphisms(q.body, i) == []

    def test_not_boolean(self):
        with pytest.raises(NotBoolean):
            evaluate_bcq(ConjunctiveQuery((X,), (atom("p", X),)), Instance())

    def test_answers_drop_nulls(self):
        q = ConjunctiveQuery((X,), (atom("person", X),))
        assert answers(q, Instance([atom("person", a), atom("person", n1)])) == {(a,)}

    def test_boolean_answers(self):
        q = ConjunctiveQuery((), (atom("person", a),))
        assert answers(q, Instance([atom("person", a)])) == {()}

    def test_binary_answers(self):
        q = ConjunctiveQuery((X, Y), (atom("r", X, Y),))
        assert answers(q, Instance([atom("r", a, b), atom("r", b, a)])) == {(a, b), (b, a)}

    def test_nulls_allowed_on_non_answer_variables(self):
        q = ConjunctiveQuery((X,), (atom("r", X, Y),))
        assert answers(q, Instance([atom("r", a, n1)])) == {(a,)}


# -- properties


DOMAIN = [a, b, c, Null(0), Null(1)]
VARS = [Variable(n) for n in "XYZW"]


@st.composite
def query_and_instance(draw):
    preds = {"p": 1, "r": 2, "s": 2}
    terms = st.sampled_from(VARS + DOMAIN[:2])
    body = draw(st.lists(
        st.sampled_from(sorted(preds)).flatmap(
            lambda p: st.tuples(st.just(p), st.lists(terms, min_size=preds[p], max_size=preds[p]))
        ),
        min_size=0, max_size=3,
    ))
    body = [Atom(p, tuple(args)) for p, args in body]
    facts = draw(st.lists(
        st.sampled_from(sorted(preds)).flatmap(
            lambda p: st.tuples(st.just(p), st.lists(st.sampled_from(DOMAIN), min_size=preds[p], max_size=preds[p]))
        ),
        max_size=10,
    ))
    return body, Instance(Atom(p, tuple(args)) for p, args in facts)


@settings(max_examples=200, deadline=None)
@given(query_and_instance())
def test_homomorphisms_sound_and_complete(pair):
    body, inst = pair
    got = find_homomorphisms(body, inst)
    for h in got:
        assert set(apply_substitution(h, body)) <= inst.atoms
    expected = brute_force_homomorphisms(body, inst)
    as_set = lambda hs: {frozenset(dict(h).items()) for h in hs}
    assert as_set(got) == as_set(expected)
    assert len(got) == len(as_set(got))


@settings(max_examples=100, deadline=None)
@given(query_and_instance(), st.randoms(use_true_random=False))
def test_composition(pair, rnd):
    body, inst = pair
    vs = sorted({t for a_ in body for t in a_.args if isinstance(t, Variable)}, key=str)
    h = Substitution({v: rnd.choice(DOMAIN) for v in vs})
    g = Substitution(null_binding={Null(0): a, Null(1): Null(0)})
    composed = Substitution(
        {v: g.null_binding.get(t, t) for v, t in h.binding.items()}, g.null_binding
    )
    once = apply_substitution(composed, body)
    twice = apply_substitution(g, apply_substitution(h, body))
    assert once == twice


@settings(max_examples=100, deadline=None)
@given(query_and_instance())
def test_boolean_answers_match_evaluation(pair):
    body, inst = pair
    q = ConjunctiveQuery((), tuple(body))
    assert (answers(q, inst) == {()}) == evaluate_bcq(q, inst)


def test_canonical_order_is_lexicographic():
    rng = random.Random(7)
    facts = [atom("r", rng.choice(DOMAIN), rng.choice(DOMAIN)) for _ in range(12)]
    got = find_homomorphisms([atom("r", X, Y)], Instance(facts))
    keys = [(h[X].sort_key, h[Y].sort_key) for h in got]
    assert keys == sorted(keys)
