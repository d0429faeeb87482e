import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chrl.ct import (
    DEFAULT_CT,
    FALSITY,
    SaturationBudgetExceeded,
    eq,
    entailment_witness,
    entails,
    satisfiable,
    solve,
)
from chrl.syntax import parse_goal, parse_program
from chrl.states import conjuncts
from chrl.terms import Fn, Var, apply_subst, substitute
from oracles import naive_unifiable

X, Y, Z, W = Var("X"), Var("Y"), Var("Z"), Var("W")
a, b = Fn("a"), Fn("b")


def atoms(text):
    return conjuncts(parse_goal(text))


def test_transitive_equality_solves_to_constants():
    sf = solve([eq(X, a), eq(Y, X)])
    assert not sf.inconsistent
    assert apply_subst(sf.bindings, X) == a and apply_subst(sf.bindings, Y) == a
    assert sf.residue == ()


def test_coin_clash_is_inconsistent():
    assert solve([eq(X, Fn("head")), eq(X, Fn("tail"))]).inconsistent


def test_explicit_falsity_is_inconsistent():
    assert solve([FALSITY]).inconsistent


def test_bound_variable_entails_top():
    assert entails([eq(X, Fn(3))], (), [])


def test_existential_witness_is_found_among_subterms():
    b_ = [eq(X, Fn("f", (Y,))), eq(Y, a)]
    w = entailment_witness(b_, [Z], [eq(X, Fn("f", (Z,)))])
    assert w == {Z: a}
    # oracle: try every subterm of the store as the witness
    sigma = naive_unifiable([tuple(e.args) for e in b_])
    found = {substitute(sigma, c) for c in (X, Y, a, Fn("f", (Y,)))
             if substitute(sigma, X) == substitute(sigma, Fn("f", (c,)))}
    assert found == {a}

def test_nothing_entails_a_fresh_binding():
    assert not entails([], (), [eq(X, a)])


def test_satisfiability_examples():
    assert not satisfiable([eq(X, a), eq(X, b)])
    assert satisfiable([])


def test_ground_modular_arithmetic():
    store = atoms("Y = (X + 1) mod N, X = 2, N = 5")
    sf = solve(store)
    assert not sf.inconsistent
    assert apply_subst(sf.bindings, Y) == Fn((2 + 1) % 5)


def test_false_ground_comparison_is_inconsistent():
    assert not satisfiable(atoms("X = 3, X >= 4"))
    assert satisfiable(atoms("X = 3, X >= 1"))


def test_non_ground_arithmetic_stays_in_residue():
    sf = solve(atoms("X >= 1"))
    assert len(sf.residue) == 1
    assert entails(atoms("X >= 1"), (), atoms("X >= 1"))
    assert not entails([], (), atoms("X >= 1"))


def test_user_axiom_saturation():
    p, ct = parse_program(":- builtin lt/2.\naxiom lt(X,Y), lt(Y,Z) ==> lt(X,Z).\n"
                          "axiom lt(X,X) ==> false.\n")
    store = atoms_ct("lt(A,B), lt(B,C)", ct)
    assert entails(store, (), atoms_ct("lt(A,C)", ct), ct)
    assert not satisfiable(atoms_ct("lt(A,B), lt(B,A)", ct), ct)


def test_saturation_budget_is_reported():
    p, ct = parse_program(":- builtin nat/1.\naxiom nat(X) ==> nat(s(X)).\n")
    with pytest.raises(SaturationBudgetExceeded):
        solve(atoms_ct("nat(z)", ct), ct)


def atoms_ct(text, ct):
    return conjuncts(parse_goal(text, ct))


# ------------------------------------------------------------------ properties

vars_ = st.sampled_from([X, Y, Z, W])
consts = st.sampled_from([a, b])
terms = st.one_of(vars_, consts, st.builds(lambda t: Fn("f", (t,)), st.one_of(vars_, consts)))
equations = st.builds(eq, vars_, terms)
stores = st.lists(equations, max_size=4)


@given(stores)
def test_solver_matches_naive_substitution(store):
    expected = naive_unifiable([tuple(e.args) for e in store])
    sf = solve(store)
    assert sf.inconsistent == (expected is None)
    if expected is not None:
        for v, t in expected.items():
            assert apply_subst(sf.bindings, v) == apply_subst(sf.bindings, t)


@given(stores)
def test_entailment_is_reflexive(store):
    assert entails(store, (), store)


@given(stores)
def test_solving_is_idempotent(store):
    sf = solve(store)
    if sf.inconsistent:
        return
    again = solve([*sf.equations(), *sf.residue])
    assert not again.inconsistent
    for v in sf.bindings:
        assert apply_subst(again.bindings, v) == apply_subst(sf.bindings, v) or \
            apply_subst(again.bindings, apply_subst(sf.bindings, v)) == apply_subst(again.bindings, v)


@given(stores, stores, stores)
def test_entailment_is_monotone(b1, b2, b3):
    if entails(b1, (), b2) and satisfiable(b1 + b3):
        assert entails(b1 + b3, (), b2)


@given(stores, stores, stores)
def test_entailment_is_transitive(b1, b2, b3):
    if entails(b1, (), b2) and entails(b2, (), b3):
        assert entails(b1, (), b3)


@given(stores, stores)
def test_entailment_invariant_under_renaming(b1, b2):
    names = [X, Y, Z, W]
    for perm in itertools.islice(itertools.permutations(names), 3):
        ren = dict(zip(names, perm))
        r1 = [x.substitute(ren) for x in b1]
        r2 = [x.substitute(ren) for x in b2]
        assert entails(b1, (), b2) == entails(r1, (), r2)


def test_default_theory_is_deterministic():
    store = [eq(X, a), eq(Y, Fn("f", (X,)))]
    assert solve(store, DEFAULT_CT) == solve(store, DEFAULT_CT)
