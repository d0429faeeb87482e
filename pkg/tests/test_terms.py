from hypothesis import given, settings
from hypothesis import strategies as st

from chrl.engine import Rule
from chrl.ct import Atom
from chrl.states import NormalState
from chrl.terms import (
    Clash,
    Fn,
    NoMatch,
    Var,
    apply_subst,
    fresh_variant,
    is_ground,
    make_list,
    match_one_sided,
    normalize_subst,
    substitute,
    term_vars,
    unify,
)
from oracles import naive_unifiable

X, Y, Z = Var("X"), Var("Y"), Var("Z")
a, b = Fn("a"), Fn("b")


def f(*args):
    return Fn("f", args)


def g(*args):
    return Fn("g", args)


variables_ = st.sampled_from([Var(n) for n in "XYZW"])
constants = st.sampled_from([Fn("a"), Fn("b"), Fn(0), Fn(1)])
terms = st.recursive(
    st.one_of(variables_, constants),
    lambda inner: st.builds(lambda name, args: Fn(name, tuple(args)),
                            st.sampled_from(["f", "g"]), st.lists(inner, min_size=1, max_size=2)),
    max_leaves=6,
)


def test_unify_textbook_mgu():
    s = normalize_subst(unify(f(X, b), f(a, Y)))
    assert s == {X: a, Y: b}


def test_unify_occurs_check():
    assert unify(X, f(X)) is Clash


def test_unify_functor_clash():
    assert unify(f(X), g(X)) is Clash


def test_match_is_one_sided():
    assert match_one_sided(f(X), f(a)) == {X: a}
    assert match_one_sided(f(a), f(X)) is NoMatch


def test_list_sugar_builds_cons_cells():
    lst = make_list([a, b], X)
    assert lst == Fn(".", (a, Fn(".", (b, X))))
    assert str(make_list([a])) == "[a]"


def test_fresh_variant_of_rule_renames_every_variable():
    leq = Rule("rT", (Atom("leq", (X, Y)), Atom("leq", (Y, Z))), (), (), Atom("leq", (X, Z)))
    renamed, mapping = fresh_variant(leq, avoid={X, Y, Z})
    assert set(mapping) == {X, Y, Z}
    assert not set(renamed.variables()) & {X, Y, Z}
    assert renamed.kept[0].args[1] == renamed.kept[1].args[0]


def test_fresh_variant_renames_with_empty_avoid():
    t, mapping = fresh_variant(f(X))
    assert t != f(X) and mapping[X] != X


def test_fresh_variant_keeps_globals_of_state():
    s = NormalState((Atom("c", (X,)),), (), frozenset({Y}))
    renamed, mapping = fresh_variant(s, only=[X])
    assert Y in renamed.globals and renamed.user[0].args[0] != X
    assert set(mapping) == {X}


def test_fresh_names_never_collide():
    seen = set()
    for _ in range(10_000):
        t, _m = fresh_variant(X)
        assert t not in seen
        seen.add(t)


@given(terms, terms)
def test_unifier_equalises_both_sides(t1, t2):
    s = unify(t1, t2)
    if s is not Clash:
        assert apply_subst(s, t1) == apply_subst(s, t2)


@given(terms, terms)
def test_unify_agrees_with_naive_substitution(t1, t2):
    assert (unify(t1, t2) is Clash) == (naive_unifiable([(t1, t2)]) is None)


@given(terms, terms)
def test_matching_is_restricted_unification(pattern, target):
    ren = {v: Var(v.name + "t") for v in term_vars(target)}
    target = substitute(ren, target)
    m = match_one_sided(pattern, target)
    if m is not NoMatch:
        u = unify(pattern, target)
        assert u is not Clash
        nu = normalize_subst(u)
        assert {v: apply_subst(nu, v) for v in term_vars(pattern)} == {
            v: apply_subst(m, v) for v in term_vars(pattern)}


@given(terms, st.sets(variables_))
@settings(max_examples=40)
def test_fresh_variant_avoids_given_names(t, avoid):
    renamed, _ = fresh_variant(t, avoid=avoid)
    assert not term_vars(renamed) & avoid
    assert is_ground(renamed) == is_ground(t)
