"""Bounded backward proof search.

The search applies invertible rules eagerly and enumerates the remaining
choices (additive choice, tensor context splits, quantifier witnesses,
uses of banged formulas) under iterative deepening with a global node
budget.  Leaves are logical axioms, possibly after weakening banged
formulas, or proper axioms.

For sequents whose antecedent has been decomposed into user atoms and
banged built-ins, two derived moves are available: closing the context
against a state-shaped consequent by the entailment construction, and
firing a program rule on the context as a state.  Both produce ordinary
checkable subtrees.

A :class:`NotFound` result only means the budget ran out or the bounded
space holds no proof; it is never a claim of non-provability.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

from chrl.ct import Atom
from chrl.engine import Limits, Node, Member, apply_instance, applicable
from chrl.states import Configuration, NormalState, normalize_state
from chrl.terms import Fn, Term, Var, fresh_var
from chrl.lila.axioms import SIGMA_CT, SIGMA_EQ, SIGMA_P, ProperAxiomSet, decode_builtin
from chrl.lila.certify import Certifier, CertificationFailed, _node, _weaken, cut
from chrl.lila.formulas import (
    ONE,
    Bang,
    Exists,
    Forall,
    Formula,
    Lolli,
    One,
    Plus,
    Prop,
    Sequent,
    Tensor,
    Top,
    With,
    Zero,
    alpha_eq,
    alpha_key,
    free_vars,
    plus_members,
    sequent_free_vars,
    subst,
)
from chrl.lila.proof import ProofTree, check_proof
from chrl.lila.translate import translate_config

DEFAULT_BUDGET = 2000
DEFAULT_DEPTH = 10


@dataclass(frozen=True)
class NotFound:
    """No proof within the budget; not evidence of non-provability."""

    nodes: int
    reason: str

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"NotFound ({self.reason}; {self.nodes} nodes)"


class _Budget(Exception):
    pass


def _subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Fn):
        for a in t.args:
            yield from _subterms(a)


def _formula_terms(f: Formula, bound: frozenset = frozenset()) -> Iterator[Term]:
    if isinstance(f, Prop):
        for a in f.args:
            for t in _subterms(a):
                if not (set(_vars(t)) & bound):
                    yield t
    elif isinstance(f, Bang):
        yield from _formula_terms(f.body, bound)
    elif isinstance(f, (Forall, Exists)):
        yield from _formula_terms(f.body, bound | {f.var})
    elif isinstance(f, (Tensor, Lolli, With, Plus)):
        yield from _formula_terms(f.left, bound)
        yield from _formula_terms(f.right, bound)


def _vars(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    else:
        for a in t.args:
            yield from _vars(a)


def _is_flat(ctx: Sequence[Formula], axioms: ProperAxiomSet) -> bool:
    ct = axioms.ct
    for f in ctx:
        if isinstance(f, Prop) and not ct.is_builtin(f.name, len(f.args)):
            continue
        if isinstance(f, Bang) and isinstance(f.body, Prop) and ct.is_builtin(f.body.name, len(f.body.args)):
            continue
        return False
    return True


def _leaves(f: Formula) -> list[Formula]:
    if isinstance(f, One):
        return []
    if isinstance(f, Tensor):
        return _leaves(f.left) + _leaves(f.right)
    return [f]


def decode_config(f: Formula, axioms: ProperAxiomSet):
    """Read a formula of the shape of a configuration translation back as
    (configuration, member formulas, quantifier orders); None otherwise."""
    ct = axioms.ct
    members, forms, orders = [], [], []
    glob = frozenset(free_vars(f))
    for m in plus_members(f):
        order, body = [], m
        while isinstance(body, Exists):
            order.append(body.var)
            body = body.body
        if len(set(order)) != len(order) or set(order) & glob:
            return None
        user, builtin = [], []
        for leaf in _leaves(body):
            if isinstance(leaf, Zero):
                builtin.append(Atom("false", (), True))
            elif isinstance(leaf, Prop) and not ct.is_builtin(leaf.name, len(leaf.args)):
                user.append(Atom(leaf.name, leaf.args, False))
            elif isinstance(leaf, Bang) and isinstance(leaf.body, Prop) and ct.is_builtin(leaf.body.name, len(leaf.body.args)):
                builtin.append(Atom(leaf.body.name, leaf.body.args, True))
            else:
                return None
        members.append(NormalState(tuple(user), tuple(builtin), glob))
        forms.append(m)
        orders.append(order)
    return Configuration(tuple(members)), forms, orders


class _Search:
    def __init__(self, axioms: ProperAxiomSet, budget: int, macros: bool) -> None:
        self.axioms = axioms
        self.ct = axioms.ct
        self.budget = budget
        self.used = 0
        self.macros = macros
        self.certifier = Certifier(axioms.program, axioms.ct)

    def tick(self) -> None:
        self.used += 1
        if self.used > self.budget:
            raise _Budget()

    # ----------------------------------------------------------------- leaves
    def leaf(self, ante: list[Formula], cons: Formula) -> ProofTree | None:
        seq = Sequent(tuple(ante), cons)
        if any(isinstance(f, Zero) for f in ante):
            return _node("LZero", ante, cons)
        if isinstance(cons, Top):
            return _node("RTop", ante, cons)
        linear = [f for f in ante if not isinstance(f, Bang)]
        banged = [f for f in ante if isinstance(f, Bang)]
        if isinstance(cons, One) and not linear:
            return _weaken(ante, banged, cons, _node("ROne", [], ONE))
        if not linear:
            for i, f in enumerate(banged):
                if alpha_eq(f, cons):
                    return _weaken(ante, banged[:i] + banged[i + 1:], cons, _node("Identity", [f], cons))
        if len(linear) == 1 and alpha_eq(linear[0], cons):
            return _weaken(ante, banged, cons, _node("Identity", linear, cons))
        if decode_builtin(ante, self.ct) is not None and decode_builtin([cons], self.ct) is not None:
            if self.axioms.is_valid(SIGMA_CT, seq):
                return _node(SIGMA_CT, ante, cons)
        if self.axioms.is_valid(SIGMA_EQ, seq):
            return _node(SIGMA_EQ, ante, cons)
        for r in self.axioms.program.rules:
            if self.axioms.is_valid(SIGMA_P, seq, {"rule": r.id}):
                return _node(SIGMA_P, ante, cons, rule=r.id)
        return None

    # ----------------------------------------------------------------- search
    def prove(self, ante: list[Formula], cons: Formula, depth: int) -> ProofTree | None:
        self.tick()
        found = self.leaf(ante, cons)
        if found is not None:
            return found
        if depth <= 0:
            return None
        inv = self.invertible(ante, cons, depth)
        if inv is not False:
            return inv
        if self.macros and _is_flat(ante, self.axioms):
            got = self.macro(ante, cons, depth)
            if got is not None:
                return got
        for p in self.choices(ante, cons, depth):
            if p is not None:
                return p
        return None

    def invertible(self, ante, cons, depth):
        """Apply the first invertible rule; False when none applies."""
        for i, f in enumerate(ante):
            rest = ante[:i] + ante[i + 1:]
            if isinstance(f, One):
                sub = self.prove(rest, cons, depth)
                return sub and _node("LOne", ante, cons, [sub])
            if isinstance(f, Tensor):
                sub = self.prove(rest + [f.left, f.right], cons, depth)
                return sub and _node("LTensor", ante, cons, [sub])
            if isinstance(f, Exists):
                y = f.var if f.var not in sequent_free_vars(ante, cons) else fresh_var()
                sub = self.prove(rest + [subst(f.body, {f.var: y})], cons, depth)
                return sub and _node("LExists", ante, cons, [sub], eigen=y)
            if isinstance(f, Plus):
                left = self.prove(rest + [f.left], cons, depth)
                if left is None:
                    return None
                right = self.prove(rest + [f.right], cons, depth)
                return right and _node("LPlus", ante, cons, [left, right])
        if isinstance(cons, Lolli):
            sub = self.prove(ante + [cons.left], cons.right, depth)
            return sub and _node("RLolli", ante, cons, [sub])
        if isinstance(cons, Forall):
            y = cons.var if cons.var not in sequent_free_vars(ante, cons) else fresh_var()
            sub = self.prove(ante, subst(cons.body, {cons.var: y}), depth)
            return sub and _node("RForall", ante, cons, [sub], eigen=y)
        if isinstance(cons, With):
            left = self.prove(ante, cons.left, depth)
            if left is None:
                return None
            right = self.prove(ante, cons.right, depth)
            return right and _node("RWith", ante, cons, [left, right])
        return False

    # ----------------------------------------------------------------- macros
    def macro(self, ante, cons, depth) -> ProofTree | None:
        decoded = decode_config(cons, self.axioms)
        if decoded is None:
            return None
        config, forms, orders = decoded
        try:
            return self.certifier.close_flat(list(ante), config, forms, orders)
        except CertificationFailed:
            pass
        if not self.axioms.program.rules:
            return None
        users = [Atom(f.name, f.args, False) for f in ante if isinstance(f, Prop)]
        builtins = [Atom(f.body.name, f.body.args, True) for f in ante if isinstance(f, Bang)]
        glob = frozenset(sequent_free_vars(ante, cons))
        state = normalize_state(NormalState(tuple(users), tuple(builtins), glob), self.ct)
        if state.failed:
            return None
        node = Node((Member(state, tuple(range(len(state.user)))),), len(state.user))
        limits = Limits(history=False)
        try:
            to_state = self.certifier.close_flat(list(ante), Configuration((state,)))
        except CertificationFailed:
            return None
        for inst in applicable(None, self.axioms.program, self.ct, limits, node=node):
            self.tick()
            nxt = apply_instance(node, inst, self.axioms.program, self.ct, limits)
            try:
                step = self.certifier.step(node.config, nxt.config, inst)
            except CertificationFailed:
                continue
            post = translate_config(nxt.config)
            rest = self.prove([post], cons, depth - 1)
            if rest is not None:
                return cut(cut(to_state, step), rest)
        return None

    # ---------------------------------------------------------------- choices
    def terms(self, ante, cons) -> list[Term]:
        seen: dict = {}
        for f in list(ante) + [cons]:
            for t in _formula_terms(f):
                seen.setdefault(t, None)
        return list(seen)

    def choices(self, ante, cons, depth) -> Iterator[ProofTree | None]:
        linear = [f for f in ante if not isinstance(f, Bang)]
        banged = [f for f in ante if isinstance(f, Bang)]
        d = depth - 1
        # uses of banged formulas: keep a copy and derelict the other
        for i, f in enumerate(banged):
            if isinstance(f.body, Prop) and not (isinstance(cons, Prop) and alpha_eq(cons, f.body)):
                continue
            if any(alpha_eq(g, f.body) for g in ante):
                continue
            sub = self.prove(ante + [f.body], cons, d)
            if sub is not None:
                der = _node("Dereliction", ante + [f], cons, [sub])
                yield _node("Contraction", ante, cons, [der])
                return
        if isinstance(cons, Plus):
            for name, side in (("RPlus1", cons.left), ("RPlus2", cons.right)):
                sub = self.prove(ante, side, d)
                if sub is not None:
                    yield _node(name, ante, cons, [sub])
                    return
        if isinstance(cons, Exists):
            for t in self.terms(ante, cons) + [fresh_var()]:
                sub = self.prove(ante, subst(cons.body, {cons.var: t}), d)
                if sub is not None:
                    yield _node("RExists", ante, cons, [sub], term=t)
                    return
        if isinstance(cons, Bang) and not linear:
            sub = self.prove(ante, cons.body, d)
            if sub is not None:
                yield _node("RBang", ante, cons, [sub])
                return
        if isinstance(cons, Tensor):
            for left_ctx, right_ctx in _splits(linear):
                p1 = self.prove(left_ctx + banged, cons.left, d)
                if p1 is None:
                    continue
                p2 = self.prove(right_ctx + banged, cons.right, d)
                if p2 is None:
                    continue
                yield _share(ante, banged, cons, _node("RTensor", left_ctx + banged + right_ctx + banged,
                                                       cons, [p1, p2]))
                return
        for i, f in enumerate(linear):
            others = linear[:i] + linear[i + 1:]
            ctx = others + banged
            if isinstance(f, With):
                for name, side in (("LWith1", f.left), ("LWith2", f.right)):
                    sub = self.prove(ctx + [side], cons, d)
                    if sub is not None:
                        yield _node(name, ante, cons, [sub])
                        return
            if isinstance(f, Forall):
                for t in self.terms(ante, cons):
                    sub = self.prove(ctx + [subst(f.body, {f.var: t})], cons, d)
                    if sub is not None:
                        yield _node("LForall", ante, cons, [sub], term=t)
                        return
            if isinstance(f, Lolli):
                for left_ctx, right_ctx in _splits(others):
                    p1 = self.prove(left_ctx + banged, f.left, d)
                    if p1 is None:
                        continue
                    p2 = self.prove(right_ctx + banged + [f.right], cons, d)
                    if p2 is None:
                        continue
                    full = left_ctx + banged + right_ctx + banged + [f]
                    yield _share(ante, banged, cons, _node("LLolli", full, cons, [p1, p2]))
                    return


def _splits(items: list[Formula]) -> Iterator[tuple[list[Formula], list[Formula]]]:
    n = len(items)
    seen = set()
    for mask in product((0, 1), repeat=n):
        left = [f for f, b in zip(items, mask) if b == 0]
        right = [f for f, b in zip(items, mask) if b == 1]
        key = (tuple(sorted(alpha_key(f) for f in left)), tuple(sorted(alpha_key(f) for f in right)))
        if key in seen:
            continue
        seen.add(key)
        yield left, right


def _share(ante: list[Formula], banged: list[Formula], cons: Formula, inner: ProofTree) -> ProofTree:
    """Duplicate every banged formula by contraction so both premises of a
    two-premise rule receive a copy."""
    proof = inner
    current = list(inner.conclusion.antecedent)
    for f in banged:
        current = _remove(current, f)
        proof = _node("Contraction", current, cons, [proof])
    return proof


def _remove(fs: list[Formula], f: Formula) -> list[Formula]:
    for i, g in enumerate(fs):
        if g == f:
            return fs[:i] + fs[i + 1:]
    return fs


def bounded_prove(seq: Sequent, axioms: ProperAxiomSet | None = None, budget: int = DEFAULT_BUDGET,
                  max_depth: int = DEFAULT_DEPTH, macros: bool = True) -> ProofTree | NotFound:
    """Search for a proof of ``seq`` by iterative deepening; every returned
    tree passes :func:`check_proof`."""
    axioms = axioms or ProperAxiomSet()
    search = _Search(axioms, budget, macros)
    try:
        for depth in range(max_depth + 1):
            found = search.prove(list(seq.antecedent), seq.consequent, depth)
            if found is not None:
                verdict = check_proof(found, axioms)
                if not verdict:
                    return NotFound(search.used, f"internal: search produced an invalid tree ({verdict})")
                return found
    except _Budget:
        return NotFound(search.used, f"node budget {budget} exhausted")
    return NotFound(search.used, f"no proof up to depth {max_depth}")
