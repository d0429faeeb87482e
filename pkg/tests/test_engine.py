import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chrl.ct import eq
from chrl.engine import (
    Derivation,
    Limits,
    LimitReached,
    Step,
    applicable,
    apply,
    derive,
    observables,
    replay,
    run,
)
from chrl.states import (
    EPSILON,
    Configuration,
    NormalState,
    State,
    config_entails,
    config_equiv,
    config_normalize,
    merge,
    normalize_state,
    state_entails,
)
from chrl.syntax import parse_config, parse_program, parse_state
from oracles import CONSTANTS, VARS, equivalent_variant, random_program, random_store

C_ZERO = parse_program("r @ c(0) <=> d(0).\n")[0]
A_TO_B = parse_program("r @ a <=> b.\n")[0]


def members(conf):
    return config_normalize(conf).members


# --------------------------------------------------------------- applicable

def test_transitivity_instance_on_leq(load):
    p, ct = load("leq")
    s = parse_state("<leq(A,B), leq(B,C), leq(C,A) ; {A,B,C}>")
    insts = [i for i in applicable(s, p, ct) if i.rule.id == "rT"]
    store = members(s)[0].user
    pairs = {(str(store[i.kept[0]]), str(store[i.kept[1]])) for i in insts}
    assert ("leq(A,B)", "leq(B,C)") in pairs


def test_no_transition_from_empty_user_store(load):
    p, ct = load("leq")
    assert applicable(parse_state("<true ; A = B ; {A,B}>"), p, ct) == []


def test_specific_head_does_not_fire_on_general_state():
    assert applicable(parse_state("<c(X) ; {X}>"), C_ZERO) == []


def test_specific_head_fires_on_matching_member_only():
    conf = parse_config("<c(0) ; {}> ; <c(X) ; {}>")
    insts = applicable(conf, C_ZERO)
    assert [i.member for i in insts] == [0]
    assert config_equiv(apply(insts[0], conf, C_ZERO), parse_config("<d(0) ; {}> ; <c(X) ; {}>"))


# -------------------------------------------------------------------- apply

def test_antisymmetry_step(load):
    p, ct = load("leq")
    pre = parse_state("<leq(A,C), leq(A,B), leq(B,C), leq(C,A) ; {A,B,C}>")
    post = parse_state("<leq(A,B), leq(B,C) ; A = C ; {A,B,C}>")
    results = [apply(i, pre, p, ct) for i in applicable(pre, p, ct) if i.rule.id == "rA"]
    assert any(config_equiv(r, post, ct) for r in results)


def test_bird_splits(load):
    p, ct = load("bird")
    s = p.query("q")
    [inst] = applicable(s, p, ct)
    got = apply(inst, s, p, ct)
    assert config_equiv(got, parse_config("<albatross, flies ; {}> ; <penguin, flies ; {}>"), ct)


def test_penguin_member_fails_and_is_dropped(load):
    p, ct = load("bird")
    conf = parse_config("<albatross, flies ; {}> ; <penguin, flies ; {}>")
    [inst] = applicable(conf, p, ct)
    assert config_equiv(apply(inst, conf, p, ct), parse_config("<albatross, flies ; {}>"), ct)


# ------------------------------------------------------------------- derive

def test_leq_reaches_the_answer(load):
    p, ct = load("leq")
    tree = derive(p.query("q0"), p, ct, limits=Limits(depth=4), on_limit="flag")
    target = parse_state("<true ; A = B, A = C ; {A,B,C}>")
    assert any(config_equiv(tree.nodes[k].config, target, ct) for k in tree.answers)


def test_no_backward_step():
    tree = derive(parse_state("<b ; {}>"), A_TO_B)
    assert list(tree.nodes) == [tree.root] and not tree.truncated


def test_leq_without_history_diverges(load):
    p, ct = load("leq")
    with pytest.raises(LimitReached) as info:
        derive(p.query("q0"), p, ct, limits=Limits(depth=3, history=False))
    assert info.value.tree.truncated


# -------------------------------------------------------------- observables

def test_leq_answers_are_data_sufficient(load):
    p, ct = load("leq")
    lim = Limits(depth=4)
    ans = observables(p.query("q0"), p, ct, "A", lim)
    suf = observables(p.query("q0"), p, ct, "S", lim)
    target = parse_state("<true ; A = B, A = C ; {A,B,C}>")
    assert len(ans.configs) == 1 and config_equiv(ans.configs[0], target, ct)
    assert len(suf.configs) == 1 and config_equiv(suf.configs[0], target, ct)


def test_bird_answers(load):
    p, ct = load("bird")
    ans = observables(p.query("q"), p, ct, "A")
    assert ans.complete
    assert len(ans.configs) == 1
    assert config_equiv(ans.configs[0], parse_config("<albatross, flies ; {}>"), ct)
    assert observables(p.query("q"), p, ct, "S").configs == []


def test_empty_program_has_single_computable_state():
    from chrl.engine import Program
    s = parse_state("<c(X) ; X = 1 ; {X}>")
    obs = observables(s, Program(), kind="C")
    assert obs.complete and len(obs.configs) == 1 and config_equiv(obs.configs[0], s)


# ------------------------------------------------------------------- replay

def test_recorded_leq_derivation_replays(load):
    p, ct = load("leq")
    d = run(p.query("q0"), p, ct, Limits(depth=20))
    assert d.steps and replay(d, p, ct)


def test_swapped_steps_do_not_replay(load):
    p, ct = load("leq")
    d = run(p.query("q0"), p, ct, Limits(depth=20))
    swapped = Derivation(d.initial, [d.steps[1], d.steps[0], *d.steps[2:]])
    assert not replay(swapped, p, ct)


def test_empty_derivation_replays(load):
    p, ct = load("leq")
    assert replay(Derivation(Configuration((NormalState(),))), p, ct)


def test_trace_format(load):
    p, ct = load("bird")
    d = run(p.query("q"), p, ct)
    lines = d.to_trace(ct).splitlines()
    assert lines[0].startswith("INIT ")
    assert lines[1].startswith("STEP r1 ") and " -> " in lines[1]
    assert any(x.startswith("STATE ") for x in lines)


# --------------------------------------------------------------- properties

seeds = st.integers(0, 10_000)


@given(seeds)
@settings(max_examples=30)
def test_hierarchy_of_observables(seed):
    rng = random.Random(seed)
    p, s = random_program(rng), random_store(rng, 3)
    lim = Limits(depth=3, nodes=300)
    obs = {k: observables(s, p, kind=k, limits=lim) for k in "CAS"}
    keys = {k: set(o.keys) for k, o in obs.items()}
    assert keys["S"] <= keys["A"] <= set(obs["C"].tree.nodes)


@given(seeds)
@settings(max_examples=30)
def test_failed_members_have_no_successors(seed):
    rng = random.Random(seed)
    p, s = random_program(rng), random_store(rng, 3)
    tree = derive(s, p, limits=Limits(depth=3, nodes=300), on_limit="flag")
    for node in tree.nodes.values():
        assert all(not m.state.failed for m in node.members)


@given(seeds)
@settings(max_examples=30)
def test_equivalent_states_have_corresponding_successors(seed):
    rng = random.Random(seed)
    p, s1 = random_program(rng), random_store(rng, 3)
    s2 = equivalent_variant(rng, s1)
    lim = Limits(history=False)
    r1 = [apply(i, s1, p, limits=lim) for i in applicable(s1, p, limits=lim)]
    r2 = [apply(i, s2, p, limits=lim) for i in applicable(s2, p, limits=lim)]
    assert all(any(config_equiv(x, y) for y in r2) for x in r1)
    assert all(any(config_equiv(x, y) for y in r1) for x in r2)


@given(seeds)
@settings(max_examples=30)
def test_exchange_of_entailment_and_transition(seed):
    rng = random.Random(seed)
    p, u = random_program(rng), random_store(rng, 3)
    extra = eq(rng.choice(VARS), rng.choice(CONSTANTS))
    un = normalize_state(u)
    s = normalize_state(NormalState(un.user, (*un.builtin, extra), un.globals))
    if s.failed or un.failed:
        return
    assert state_entails(s, un)
    lim = Limits(history=False)
    succ_s = [apply(i, s, p, limits=lim) for i in applicable(s, p, limits=lim)]
    for inst in applicable(un, p, limits=lim):
        t = apply(inst, un, p, limits=lim)
        assert any(config_entails(v, t) for v in succ_s)


@given(seeds)
@settings(max_examples=30)
def test_transitions_survive_merging(seed):
    rng = random.Random(seed)
    p = random_program(rng)
    s = normalize_state(random_store(rng, 2))
    t = normalize_state(random_store(rng, 2))
    if s.failed or t.failed:
        return
    lim = Limits(history=False)
    merged = merge(s, t)
    if normalize_state(merged).failed:
        return
    after_merge = [(i.rule.id, apply(i, merged, p, limits=lim)) for i in applicable(merged, p, limits=lim)]
    for inst in applicable(s, p, limits=lim):
        post = apply(inst, s, p, limits=lim)
        expected = EPSILON if not post.members else Configuration((merge(post.members[0], t),))
        assert any(rid == inst.rule.id and config_equiv(c, expected) for rid, c in after_merge)
        step = Derivation(Configuration((merged,)),
                          [Step(inst.rule.id, None, Configuration((merged,)), expected)])
        assert replay(step, p)


def test_state_input_types_agree():
    s = State(parse_state("<c(X) ; {}>").goal)
    assert config_equiv(s, normalize_state(s))
