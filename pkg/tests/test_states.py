import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chrl.ct import FALSITY, Atom, entails, eq
from chrl.states import (
    EPSILON,
    FAILED,
    Configuration,
    DnfBlowup,
    NormalState,
    State,
    config_entails,
    config_equiv,
    config_normalize,
    conj,
    conjuncts,
    dnf,
    is_compact,
    match_userstores,
    merge,
    normalize_state,
    state_entails,
    state_equiv,
)
from chrl.syntax import parse_config, parse_goal, parse_state
from chrl.terms import Fn, Var
from oracles import equivalent_variant, mutated_state, random_state, rewriting_equivalent

X, Y, Z, G = Var("X"), Var("Y"), Var("Z"), Var("G")
a = Fn("a")


def c(t):
    return Atom("c", (t,))


def d(t):
    return Atom("d", (t,))


def prop(name):
    return Atom(name, ())


def S(text):
    return parse_state(text)


def multiset(goal):
    return sorted(str(x) for x in conjuncts(goal))


# ---------------------------------------------------------------------- dnf

def test_dnf_distributes_left_to_right():
    g = parse_goal("g1, (g2 ; g3)")
    assert [multiset(x) for x in dnf(g)] == [["g1", "g2"], ["g1", "g3"]]


def test_dnf_of_flat_goal_is_itself():
    g = parse_goal("p, q")
    assert dnf(g) == [g]


def test_dnf_product_matches_truth_sets():
    g = parse_goal("(a1 ; b1), (c1 ; d1)")
    got = sorted(tuple(multiset(x)) for x in dnf(g))
    expected = sorted(tuple(sorted([x, y])) for x in ("a1", "b1") for y in ("c1", "d1"))
    assert got == expected


def test_dnf_cap_raises():
    g = conj([parse_goal(f"(p{i} ; q{i})") for i in range(6)])
    with pytest.raises(DnfBlowup):
        dnf(g, cap=16)


# ------------------------------------------------------------ normalization

def test_normalize_applies_bindings():
    n = normalize_state(State(conj([c(X), eq(X, a)])))
    assert n == NormalState((c(a),), (), frozenset())


def test_normalize_failed_state():
    assert normalize_state(State(conj([c(X), FALSITY]), frozenset({X}))) == FAILED


def test_normalize_drops_redundant_global():
    assert normalize_state(State(conj([]), frozenset({X}))) == NormalState()


# ----------------------------------------------------------------- matching

def test_match_singleton_gives_argument_equation():
    [(perm, eqs)] = match_userstores([c(X)], [c(a)])
    assert perm == (0,) and eqs == [eq(X, a)]


def test_match_symmetric_store_gives_two_permutations():
    assert len(match_userstores([c(X), c(Y)], [c(Y), c(X)])) == 2


def test_match_symbol_mismatch():
    assert match_userstores([c(X)], [d(X)]) == []


# -------------------------------------------------------------- equivalence

def test_substituted_state_is_equivalent():
    assert state_equiv(S("<c(X) ; X = a ; {}>"), S("<c(a) ; true ; {}>"))


def test_failed_states_are_equivalent():
    assert state_equiv(FAILED, State(conj([d(Z), FALSITY]), frozenset({Z})))


def test_multiset_semantics_of_user_store():
    assert not state_equiv(S("<c(X), c(X) ; true ; {}>"), S("<c(X) ; true ; {}>"))


def test_entailment_examples():
    assert state_entails(S("<true ; X = 3 ; {X}>"), S("<true ; true ; {}>"))
    assert state_entails(S("<c(0) ; true ; {}>"), S("<c(X) ; true ; {}>"))
    assert not state_entails(S("<true ; true ; {}>"), S("<true ; X = 3 ; {X}>"))


# ------------------------------------------------------------------- merging

def test_merge_is_conjunction_with_shared_globals():
    s1 = NormalState((c(X),), (), frozenset({G}))
    s2 = NormalState((d(Y),), (eq(Y, G),), frozenset({G}))
    m = merge(s1, s2)
    assert m.globals == {G}
    assert state_equiv(m, NormalState((c(X), d(Y)), (eq(Y, G),), frozenset({G})))


def test_merge_with_empty_state_is_unit():
    s1 = NormalState((c(X),), (eq(X, a),), frozenset())
    assert state_equiv(merge(s1, NormalState()), s1)


def test_merge_renames_shared_locals_apart():
    s1 = NormalState((c(X),), (), frozenset())
    s2 = NormalState((d(X),), (eq(X, a),), frozenset())
    m = merge(s1, s2)
    assert m.user[0].args[0] != m.user[1].args[0]
    assert state_equiv(m, NormalState((c(Y), d(a)), (), frozenset()))


# ------------------------------------------------------------ configurations

def test_split_and_normalize_configuration():
    conf = config_normalize(S("<(albatross, flies ; penguin, flies) ; {}>"))
    assert len(conf) == 2
    assert config_equiv(conf, parse_config("<albatross, flies ; {}> ; <penguin, flies ; {}>"))


def test_failed_member_is_neutral():
    t = parse_config("<c(X) ; {X}>")
    assert config_equiv(Configuration((FAILED, *t.members)), t)
    assert config_normalize(EPSILON) == EPSILON


def test_configuration_order_does_not_matter():
    assert config_equiv(parse_config("<p ; {}> ; <q ; {}>"), parse_config("<q ; {}> ; <p ; {}>"))


def test_duplicate_member_is_not_equivalent():
    s = parse_config("<p ; {}>")
    assert not config_equiv(s, parse_config("<p ; {}> ; <p ; {}>"))


def test_configuration_entailment_examples():
    t = parse_config("<p ; {}>")
    assert config_entails(t, parse_config("<q ; {}> ; <p ; {}>"))
    both = parse_config("<c(0) ; {}> ; <c(X) ; {}>")
    one = parse_config("<c(X) ; {}>")
    assert config_entails(both, one) and config_entails(one, both)
    assert not config_entails(one, parse_config("<c(0) ; {}>"))


def test_compactness_examples():
    assert not is_compact(parse_config("<c(0) ; {}> ; <c(X) ; {}>"))
    assert is_compact(parse_config("<c(X) ; {}>"))
    assert is_compact(parse_config("<c(X) ; X = [] ; {X}> ; <c(X) ; X = [H|L] ; {X}>"))


# ---------------------------------------------------------------- properties

def _pairs(seed, n):
    rng = random.Random(seed)
    for _ in range(n):
        s1 = random_state(rng)
        roll = rng.random()
        if roll < 0.4:
            s2 = equivalent_variant(rng, s1)
        elif roll < 0.7:
            s2 = mutated_state(rng, s1)
        else:
            s2 = random_state(rng)
        yield s1, s2


def test_equivalence_agrees_with_rewriting_oracle():
    bad = [(str(s1), str(s2)) for s1, s2 in _pairs(5, 120)
           if state_equiv(s1, s2) != rewriting_equivalent(s1, s2)]
    assert bad == []


def test_equivalence_is_mutual_entailment():
    for s1, s2 in _pairs(6, 200):
        assert state_equiv(s1, s2) == (state_entails(s1, s2) and state_entails(s2, s1))


seeds = st.integers(0, 10_000)


@given(seeds)
def test_normalization_is_equivalent_and_idempotent(seed):
    s = random_state(random.Random(seed))
    n = normalize_state(s)
    assert state_equiv(s, n)
    again = normalize_state(n)
    assert again.user == n.user and again.globals == n.globals
    assert set(again.builtin) == set(n.builtin)


@given(seeds)
def test_entailment_reflexive_and_transitive(seed):
    rng = random.Random(seed)
    s1, s2, s3 = random_state(rng), random_state(rng), random_state(rng)
    assert state_entails(s1, s1)
    if state_entails(s1, s2) and state_entails(s2, s3):
        assert state_entails(s1, s3)


@given(seeds)
def test_equivalent_states_have_equivalent_stores(seed):
    rng = random.Random(seed)
    s1 = random_state(rng)
    s2 = equivalent_variant(rng, s1)
    assert state_equiv(s1, s2)
    n1, n2 = normalize_state(s1), normalize_state(s2)
    if not n1.failed:
        def full(n):
            return [*[eq(Fn("u", x.args), Fn("u", x.args)) for x in n.user], *n.builtin]
        l1, l2 = n1.locals(), n2.locals()
        assert entails(full(n1), l2, full(n2)) and entails(full(n2), l1, full(n1))


@given(seeds)
def test_merge_preserves_entailment(seed):
    rng = random.Random(seed)
    s = normalize_state(random_state(rng))
    s2 = normalize_state(mutated_state(rng, s.to_state()))
    t = normalize_state(random_state(rng))
    if state_entails(s, s2):
        assert state_entails(merge(s, t), merge(s2, t))


@given(seeds)
@settings(max_examples=40)
def test_configuration_relations(seed):
    rng = random.Random(seed)
    c1 = Configuration(tuple(random_state(rng, 2) for _ in range(rng.randint(0, 2))))
    c2 = Configuration(tuple(random_state(rng, 2) for _ in range(rng.randint(0, 2))))
    assert config_entails(c1, c1)
    if config_equiv(c1, c2):
        assert config_entails(c1, c2) and config_entails(c2, c1)
    if is_compact(c1) and is_compact(c2) and config_entails(c1, c2) and config_entails(c2, c1):
        assert config_equiv(c1, c2)
