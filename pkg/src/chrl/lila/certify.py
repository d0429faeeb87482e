"""Constructive soundness: proof trees for derivations and entailments.

Every proof is assembled from a few building blocks:

* left decomposition of existentials, tensors, units and additive
  disjunctions into a flat context of user atoms and banged built-ins;
* closing a flat context against a configuration: choose an entailed
  member, instantiate its local variables, obtain the needed built-ins from
  one constraint-theory axiom, rewrite user-atom arguments with equation
  axioms, weaken the rest and rebuild the tensor;
* one rule-application axiom per derivation step, framed by cuts.
"""

from __future__ import annotations

from typing import Callable, Sequence

from chrl.ct import DEFAULT_CT, EQ, Atom, CTheory, satisfiable
from chrl.engine import (
    Derivation,
    Limits,
    Node,
    Program,
    RuleInstance,
    apply_instance,
    applicable,
    initial_node,
)
from chrl.states import (
    Configuration,
    NormalState,
    State,
    as_config,
    config_equiv,
    criterion_witness,
    is_flat,
    normalize_state,
    state_parts,
)
from chrl.terms import Var, fresh_var
from chrl.lila.axioms import SIGMA_CT, SIGMA_EQ, SIGMA_P, ProperAxiomSet
from chrl.lila.formulas import (
    ONE,
    Bang,
    Exists,
    Formula,
    One,
    Plus,
    Prop,
    Sequent,
    Tensor,
    Zero,
    ZERO,
    alpha_eq,
    alpha_key,
    sequent_free_vars,
    subst,
    tensor,
)
from chrl.lila.proof import ProofTree
from chrl.lila.translate import rule_sides, translate_atom, translate_config, translate_goal, translate_state


class CertificationFailed(Exception):
    def __init__(self, message: str, step: int | None = None) -> None:
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


def _node(rule_name: str, ante: Sequence[Formula], cons: Formula,
           premises: Sequence[ProofTree] = (), **inst) -> ProofTree:
    return ProofTree(rule_name, Sequent(tuple(ante), cons), tuple(premises), inst)


def _remove_one(fs: Sequence[Formula], f: Formula) -> list[Formula]:
    key = alpha_key(f)
    for i, g in enumerate(fs):
        if g == f or alpha_key(g) == key:
            return list(fs[:i]) + list(fs[i + 1:])
    raise CertificationFailed(f"formula missing from context: {f}")


# ------------------------------------------------------------ basic blocks

def build_tensor(items: Sequence[Formula]) -> ProofTree:
    """items |- tensor(items) from identities."""
    items = list(items)
    if not items:
        return _node("ROne", [], ONE)
    if len(items) == 1:
        return _node("Identity", items, items[0])
    rest = build_tensor(items[1:])
    return _node("RTensor", items, Tensor(items[0], rest.conclusion.consequent),
                 [_node("Identity", [items[0]], items[0]), rest])


def _leaves(f: Formula) -> list[Formula]:
    if isinstance(f, One):
        return []
    if isinstance(f, Tensor):
        return _leaves(f.left) + _leaves(f.right)
    return [f]


def build_formula(f: Formula) -> ProofTree:
    """leaves(f) |- f for a tensor tree of atoms and units."""
    if isinstance(f, One):
        return _node("ROne", [], ONE)
    if isinstance(f, Tensor):
        left, right = build_formula(f.left), build_formula(f.right)
        ante = list(left.conclusion.antecedent) + list(right.conclusion.antecedent)
        return _node("RTensor", ante, f, [left, right])
    return _node("Identity", [f], f)


def cut(left: ProofTree, right: ProofTree) -> ProofTree:
    """Compose ``G |- A`` with ``A, D |- B`` into ``G, D |- B``."""
    a = left.conclusion.consequent
    rest = _remove_one(right.conclusion.antecedent, a)
    return _node("Cut", list(left.conclusion.antecedent) + rest, right.conclusion.consequent, [left, right])


def decompose_left(ctx: Sequence[Formula], goal: Formula,
                   then: Callable[[list[Formula], dict], ProofTree], ren: dict | None = None) -> ProofTree:
    """Apply invertible left rules eagerly, then hand the flat context and
    the accumulated eigenvariable renaming to ``then``."""
    ctx = list(ctx)
    ren = dict(ren or {})
    for i, f in enumerate(ctx):
        rest = ctx[:i] + ctx[i + 1:]
        if isinstance(f, Zero):
            return _node("LZero", ctx, goal)
        if isinstance(f, One):
            sub = decompose_left(rest, goal, then, ren)
            return _node("LOne", ctx, goal, [sub])
        if isinstance(f, Tensor):
            sub = decompose_left(rest + [f.left, f.right], goal, then, ren)
            return _node("LTensor", ctx, goal, [sub])
        if isinstance(f, Exists):
            used = sequent_free_vars(ctx, goal)
            y = f.var if f.var not in used else fresh_var()
            if y != f.var:
                ren[f.var] = y
            sub = decompose_left(rest + [subst(f.body, {f.var: y})], goal, then, ren)
            return _node("LExists", ctx, goal, [sub], eigen=y)
        if isinstance(f, Plus):
            left = decompose_left(rest + [f.left], goal, then, ren)
            right = decompose_left(rest + [f.right], goal, then, ren)
            return _node("LPlus", ctx, goal, [left, right])
    return then(ctx, ren)


def _weaken(ctx: list[Formula], extras: Sequence[Formula], goal: Formula, inner: ProofTree) -> ProofTree:
    """From ``ctx - extras |- goal`` conclude ``ctx |- goal`` by weakening."""
    proof = inner
    current = list(inner.conclusion.antecedent)
    for f in extras:
        current = current + [f]
        proof = _node("Weakening", current, goal, [proof])
    return proof


def _split_flat(ctx: Sequence[Formula], ct: CTheory) -> tuple[list[Formula], list[Formula]]:
    users, builtins = [], []
    for f in ctx:
        if isinstance(f, Prop) and not ct.is_builtin(f.name, len(f.args)):
            users.append(f)
        elif isinstance(f, Bang) and isinstance(f.body, Prop):
            builtins.append(f)
        else:
            raise CertificationFailed(f"unexpected formula in a flat context: {f}")
    return users, builtins


def _as_normal(m) -> NormalState:
    if isinstance(m, NormalState):
        return m
    if isinstance(m, State) and is_flat(m.goal):
        u, b, g = state_parts(m)
        return NormalState(tuple(u), tuple(b), g)
    raise CertificationFailed(f"cannot close against a disjunctive state {m}")


def _plus_path(members: Sequence[Formula], k: int, ante: list[Formula], inner: ProofTree) -> ProofTree:
    """Wrap a proof of ``ante |- members[k]`` into ``ante |- plus(members)``."""
    n = len(members)
    if n == 1:
        return inner
    proof = inner
    if k < n - 1:
        proof = _node("RPlus1", ante, Plus(members[k], _plus_tail(members[k + 1:])), [proof])
    for j in reversed(range(k)):
        proof = _node("RPlus2", ante, Plus(members[j], _plus_tail(members[j + 1:])), [proof])
    return proof


def _plus_tail(members: Sequence[Formula]) -> Formula:
    out = members[-1]
    for f in reversed(members[:-1]):
        out = Plus(f, out)
    return out


# ------------------------------------------------------------- close_flat

def _branches(f: Formula):
    """Each way of picking one side of every additive disjunction in ``f``:
    the picked leaves and a builder for ``leaves |- f``."""
    if isinstance(f, One):
        yield [], lambda: _node("ROne", [], ONE)
    elif isinstance(f, Tensor):
        for l1, b1 in _branches(f.left):
            for l2, b2 in _branches(f.right):
                yield l1 + l2, (lambda l1=l1, l2=l2, b1=b1, b2=b2:
                                _node("RTensor", l1 + l2, f, [b1(), b2()]))
    elif isinstance(f, Plus):
        for leaves, b in _branches(f.left):
            yield leaves, (lambda leaves=leaves, b=b: _node("RPlus1", leaves, f, [b()]))
        for leaves, b in _branches(f.right):
            yield leaves, (lambda leaves=leaves, b=b: _node("RPlus2", leaves, f, [b()]))
    else:
        yield [f], lambda: _node("Identity", [f], f)


def _choice_lemma(m: State, target: Formula, index: int) -> Callable[[Formula], ProofTree]:
    """``flat |- target`` where ``flat`` is the closure of the ``index``-th
    disjunct choice of ``m`` and ``target`` is the closure of ``m``."""

    def lemma(flat: Formula) -> ProofTree:
        def then(ctx: list[Formula], ren: dict) -> ProofTree:
            chain, cur = [], target
            for z in m.locals():
                t = ren.get(z, z)
                chain.append((cur, t))
                cur = subst(cur.body, {cur.var: t})
            _leaves_i, build = list(_branches(cur))[index]
            proof = build()
            for q, t in reversed(chain):
                proof = _node("RExists", list(proof.conclusion.antecedent), q, [proof], term=t)
            return proof

        return decompose_left([flat], target, then)

    return lemma


class Certifier:
    def __init__(self, program: Program | None = None, ct: CTheory = DEFAULT_CT) -> None:
        self.program = program or Program()
        self.ct = ct
        self.axioms = ProperAxiomSet(ct, self.program)

    # -- flat context against a configuration
    def close_flat(self, ctx: list[Formula], target, forms: Sequence[Formula] | None = None,
                   orders: Sequence[Sequence[Var]] | None = None) -> ProofTree:
        """Prove ``ctx |- target^L`` for a context of user atoms and banged
        built-ins.  ``forms``/``orders`` override the member formulas and
        their quantifier orders when the target was read back from a formula."""
        config = as_config(target)
        if forms is None:
            forms = [translate_state(m) for m in config.members]
        goal = _plus_tail(list(forms)) if forms else ZERO
        users, builtins = _split_flat(ctx, self.ct)
        b_atoms = [Atom(f.body.name, f.body.args, True) for f in builtins]
        if not satisfiable(b_atoms, self.ct):
            left = cut(build_tensor(builtins), _node(SIGMA_CT, [tensor(builtins)], ZERO))
            return cut(left, _node("LZero", [ZERO] + users, goal))
        u_atoms = [Atom(f.name, f.args, False) for f in users]
        glob = set()
        for f in ctx:
            glob |= sequent_free_vars([f], ONE)
        for k, m, nm, form, wrap in self._candidates(config, forms):
            if nm.failed or len(nm.user) != len(u_atoms):
                continue
            n1 = normalize_state(NormalState(tuple(u_atoms), tuple(b_atoms),
                                             frozenset(glob | set(nm.globals))), self.ct)
            if n1.failed:
                continue
            w = criterion_witness(n1, nm, self.ct)
            if w is None:
                continue
            if wrap is not None:
                order = nm.locals()
            else:
                order = orders[k] if orders is not None else m.locals()
            inner = self._close_member(ctx, users, builtins, nm, order, form, w)
            if wrap is not None:
                inner = cut(inner, wrap(form))
            return _plus_path(forms, k, list(ctx), inner)
        raise CertificationFailed(f"no member of {config} is entailed by the context")

    def _candidates(self, config: Configuration, forms: Sequence[Formula]):
        """Flat states to close against, one per member and, for a member
        with disjunctive goal, one per choice of disjuncts.  ``wrap`` turns
        the flat state's formula into a proof that it entails the member."""
        for k, m in enumerate(config.members):
            if isinstance(m, NormalState) or is_flat(m.goal):
                yield k, m, _as_normal(m), forms[k], None
                continue
            choices = list(_branches(translate_goal(m.goal)))
            for i, (leaves, _build) in enumerate(choices):
                users = tuple(Atom(f.name, f.args, False) for f in leaves if isinstance(f, Prop))
                builtins = tuple(Atom(f.body.name, f.body.args, True) for f in leaves if isinstance(f, Bang))
                nm = NormalState(users, builtins, m.globals)
                yield k, m, nm, translate_state(nm), _choice_lemma(m, forms[k], i)


    def _close_member(self, ctx, users, builtins, nm: NormalState, locals_, form: Formula, w) -> ProofTree:
        # Instantiate the member's local variables, outermost first.
        terms = [w.theta.get(w.renaming.get(z, z), w.renaming.get(z, z)) for z in locals_]
        chain = []
        cur = form
        for t in terms:
            if not isinstance(cur, Exists):
                raise CertificationFailed("quantifier prefix does not match the member's locals")
            chain.append((cur, t))
            cur = subst(cur.body, {cur.var: t})
        body = cur
        items = _leaves(body)
        t_users = [f for f in items if isinstance(f, Prop)]
        t_builtins = [f for f in items if not isinstance(f, Prop)]
        # Equations needed to rewrite each context atom into its partner.
        rewrites, eqs = [], []
        for i, a in enumerate(users):
            partner = t_users[w.perm[i]]
            cur_args = list(a.args)
            for j, (x, y) in enumerate(zip(a.args, partner.args)):
                if x != y:
                    e = Bang(Prop(EQ, (x, y)))
                    before = Prop(a.name, tuple(cur_args))
                    cur_args[j] = y
                    rewrites.append((before, Prop(a.name, tuple(cur_args)), e))
                    if all(e != g for g in eqs):
                        eqs.append(e)
        need = eqs + list(t_builtins)
        proof = self._finish(users, need, rewrites, t_builtins, body, builtins)
        # Wrap with the existential introductions, innermost first.
        for q, t in reversed(chain):
            proof = _node("RExists", list(ctx), q, [proof], term=t)
        return proof

    def _finish(self, users, need, rewrites, t_builtins, body, builtins) -> ProofTree:
        if not need:
            ctx_final = list(users)
            core = self._rewrite_and_build(ctx_final, rewrites, [], body)
            return _weaken(list(users), builtins, body, core) if builtins else core
        need_f = tensor(need)
        left = cut(build_tensor(builtins), _node(SIGMA_CT, [tensor(builtins)], need_f))

        def after(flat: list[Formula], _ren: dict) -> ProofTree:
            extras = list(need)
            for f in t_builtins:
                extras = _remove_one(extras, f)
            return self._rewrite_and_build(flat, rewrites, extras, body)

        right = decompose_left(list(users) + [need_f], body, after)
        return cut(left, right)

    def _rewrite_and_build(self, ctx, rewrites, extras, body) -> ProofTree:
        """Rewrite atoms with equation axioms, weaken ``extras`` and rebuild ``body``."""
        if rewrites:
            (before, after_atom, e), rest_rw = rewrites[0], rewrites[1:]
            others = _remove_one(_remove_one(ctx, before), e)
            pair = Tensor(before, e)
            pair2 = Tensor(after_atom, e)
            cont = self._rewrite_and_build(others + [after_atom, e], rest_rw, extras, body)
            opened = _node("LTensor", [pair2] + others, body, [cont])
            step = cut(_node(SIGMA_EQ, [pair], pair2), opened)
            join = _node("RTensor", [before, e], pair,
                         [_node("Identity", [before], before), _node("Identity", [e], e)])
            return cut(join, step)
        remaining = list(ctx)
        for f in extras:
            remaining = _remove_one(remaining, f)
        pool = list(remaining)
        for f in _leaves(body):
            pool = _remove_one(pool, f)
        if pool:
            raise CertificationFailed("context has leftover linear resources")
        built = build_formula(body)
        return _weaken(remaining, extras, body, built) if extras else built

    # -- entailment
    def entailment(self, s1, s2) -> ProofTree:
        f1, f2 = translate_state(s1), translate_state(s2)
        if alpha_eq(f1, f2):
            return _node("Identity", [f1], f2)
        return decompose_left([f1], f2, lambda ctx, _r: self.close_flat(ctx, Configuration((s2,))))

    def config_entailment(self, c1, c2) -> ProofTree:
        f1, f2 = translate_config(c1), translate_config(c2)
        if alpha_eq(f1, f2):
            return _node("Identity", [f1], f2)
        return decompose_left([f1], f2, lambda ctx, _r: self.close_flat(ctx, c2))

    # -- one derivation step
    def step(self, pre: Configuration, post: Configuration, inst: RuleInstance) -> ProofTree:
        members = [translate_state(m) for m in pre.members]
        goal = translate_config(post)
        post_forms = [translate_state(m) for m in post.members]

        def member_proof(i: int) -> ProofTree:
            f = members[i]
            if i == inst.member:
                return self._fire(pre.members[i], inst, goal, post)
            for j, g in enumerate(post_forms):
                if alpha_eq(f, g):
                    return _plus_path(post_forms, j, [f], _node("Identity", [f], g))
            return decompose_left([f], goal, lambda ctx, _r: self.close_flat(ctx, post))

        def split(i: int) -> ProofTree:
            if i == len(members) - 1:
                return member_proof(i)
            rest = split(i + 1)
            head = member_proof(i)
            whole = Plus(members[i], rest.conclusion.antecedent[0])
            return _node("LPlus", [whole], goal, [head, rest])

        if not members:
            return _node("LZero", [ZERO], goal)
        return split(0)

    def _fire(self, state: NormalState, inst: RuleInstance, goal: Formula, post: Configuration) -> ProofTree:
        variant = inst.variant
        store = state.user
        used = set(inst.kept) | set(inst.removed)
        rest = [a for k, a in enumerate(store) if k not in used]
        framed = NormalState(tuple(variant.heads) + tuple(rest),
                             tuple(state.builtin) + tuple(inst.head_equations(store)) + tuple(variant.guard),
                             state.globals)
        to_framed = self.entailment(state, framed)
        framed_f = translate_state(framed)

        def fire(ctx: list[Formula], ren: dict) -> ProofTree:
            v = variant.substitute(ren) if ren else variant
            hv = [translate_atom(a) for a in v.heads]
            gv = [translate_atom(a) for a in v.guard]
            lhs, rhs = rule_sides(v)
            leaf = _node(SIGMA_P, [lhs], rhs, rule=inst.rule.id)
            apply_rule = cut(build_formula(lhs), leaf)
            remaining = list(ctx)
            for f in hv + gv:
                remaining = _remove_one(remaining, f)
            after = decompose_left([rhs] + remaining, goal, lambda c, _r: self.close_flat(c, post))
            return cut(apply_rule, after)

        return cut(to_framed, decompose_left([framed_f], goal, fire))

    # -- whole derivations
    def derivation(self, d: Derivation, limits: Limits | None = None, start=None) -> ProofTree:
        limits = limits or Limits()
        start = d.initial if start is None else start
        node = initial_node(start, self.ct, limits.dnf_cap)
        proofs: list[ProofTree] = []
        if not alpha_eq(translate_config(start), translate_config(node.config)):
            proofs.append(self.config_entailment(start, node.config))
        for k, st in enumerate(d.steps):
            inst = self._find_instance(node, st, limits, k)
            nxt = apply_instance(node, inst, self.program, self.ct, _plain(limits))
            try:
                proofs.append(self.step(node.config, nxt.config, inst))
            except CertificationFailed as e:
                raise CertificationFailed(str(e), k) from None
            node = nxt
        final = d.final
        if proofs and not alpha_eq(translate_config(node.config), translate_config(final)):
            proofs.append(self.config_entailment(node.config, final))
        if not proofs:
            f = translate_config(start)
            return _node("Identity", [f], f)
        proof = proofs[0]
        for p in proofs[1:]:
            proof = cut(proof, p)
        return proof

    def _find_instance(self, node: Node, st, limits: Limits, k: int) -> RuleInstance:
        rec = st.instance
        for inst in applicable(None, self.program, self.ct, _plain(limits), node=node):
            if inst.rule.id != st.rule_id:
                continue
            if rec is not None and (inst.member, inst.kept, inst.removed) == (rec.member, rec.kept, rec.removed):
                return inst
            if rec is None:
                post = apply_instance(node, inst, self.program, self.ct, _plain(limits)).config
                if config_equiv(post, st.post, self.ct):
                    return inst
        raise CertificationFailed(f"rule {st.rule_id} does not reproduce the recorded step", k)


def _plain(limits: Limits) -> Limits:
    return Limits(limits.depth, limits.nodes, limits.dnf_cap, limits.match_budget, False)


# ---------------------------------------------------------------- public API

def certify_derivation(d: Derivation, p: Program, ct: CTheory = DEFAULT_CT,
                       limits: Limits | None = None, start=None) -> ProofTree:
    """A proof of ``initial^L |- final^L`` checkable against the proper axioms
    of ``p`` and ``ct``.  ``start`` replaces the derivation's (normalized)
    initial configuration as the proof's antecedent."""
    return Certifier(p, ct).derivation(d, limits, start)


def certify_entailment(s1, s2, ct: CTheory = DEFAULT_CT) -> ProofTree:
    """A proof of ``s1^L |- s2^L`` from constraint-theory and equation axioms."""
    return Certifier(None, ct).entailment(s1, s2)


def certify_config_entailment(c1, c2, ct: CTheory = DEFAULT_CT) -> ProofTree:
    return Certifier(None, ct).config_entailment(c1, c2)
