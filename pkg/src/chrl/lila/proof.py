"""Sequent proof trees and the proof checker."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from chrl.terms import Term, Var
from chrl.lila.axioms import PROPER, InvalidAxiomInstance, ProperAxiomSet
from chrl.lila.formulas import (
    ONE,
    Bang,
    Exists,
    Forall,
    Formula,
    Lolli,
    One,
    Plus,
    Sequent,
    Tensor,
    Top,
    With,
    Zero,
    alpha_eq,
    alpha_key,
    sequent_free_vars,
    subst,
)

LOGICAL_RULES = (
    "Identity", "Cut", "LTensor", "RTensor", "LOne", "ROne", "LLolli", "RLolli",
    "RBang", "Dereliction", "Contraction", "Weakening", "LWith1", "LWith2", "RWith",
    "RTop", "LPlus", "RPlus1", "RPlus2", "LZero", "LForall", "RForall", "LExists", "RExists",
)
RULES = LOGICAL_RULES + PROPER
LEAF_RULES = ("Identity", "ROne", "RTop", "LZero") + PROPER


@dataclass
class ProofTree:
    """A node: rule name, conclusion, premises and instantiation data
    (``term`` for L-forall/R-exists, ``eigen`` for R-forall/L-exists,
    ``rule`` for rule-application axioms)."""

    rule: str
    conclusion: Sequent
    premises: tuple["ProofTree", ...] = ()
    inst: dict = field(default_factory=dict)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def nodes(self, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], "ProofTree"]]:
        yield path, self
        for i, p in enumerate(self.premises):
            yield from p.nodes(path + (i,))

    def is_complete(self) -> bool:
        return all(n.rule in LEAF_RULES for _, n in self.nodes() if not n.premises)

    def is_cut_reduced(self) -> bool:
        """Cut only at the leaves: every Cut has a proper-axiom or Identity premise."""
        for _, n in self.nodes():
            if n.rule == "Cut" and not any(p.rule in PROPER + ("Identity",) for p in n.premises):
                return False
        return True


@dataclass(frozen=True)
class Valid:
    def __bool__(self) -> bool:
        return True

    def __str__(self) -> str:
        return "Valid"


@dataclass(frozen=True)
class Invalid:
    path: tuple[int, ...]
    reason: str

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        where = ".".join(map(str, self.path)) if self.path else "root"
        return f"Invalid at {where}: {self.reason}"


# ------------------------------------------------------------------ helpers

def _ms(fs: Sequence[Formula]) -> Counter:
    return Counter(alpha_key(f) for f in fs)


def _same(a: Sequence[Formula], b: Sequence[Formula]) -> bool:
    return _ms(a) == _ms(b)


def _without(fs: Sequence[Formula], i: int) -> list[Formula]:
    return list(fs[:i]) + list(fs[i + 1:])


def _remove(fs: Sequence[Formula], f: Formula) -> list[Formula] | None:
    key = alpha_key(f)
    for i, g in enumerate(fs):
        if alpha_key(g) == key:
            return _without(fs, i)
    return None


def _candidates(fs: Sequence[Formula], kind) -> Iterator[tuple[int, Formula]]:
    seen = set()
    for i, f in enumerate(fs):
        if isinstance(f, kind):
            k = alpha_key(f)
            if k not in seen:
                seen.add(k)
                yield i, f


class _Fail(Exception):
    pass


def _need(cond: bool, reason: str) -> None:
    if not cond:
        raise _Fail(reason)


def _arity(node: ProofTree, n: int) -> None:
    _need(len(node.premises) == n, f"{node.rule} expects {n} premise(s), found {len(node.premises)}")


def _inst_term(node: ProofTree, key: str) -> Term:
    t = node.inst.get(key)
    _need(isinstance(t, (Var,)) or hasattr(t, "functor"), f"{node.rule} needs instantiation data '{key}'")
    return t


# ------------------------------------------------------------------- rules

def _check_one(node: ProofTree, axioms: ProperAxiomSet) -> None:
    g, a = list(node.conclusion.antecedent), node.conclusion.consequent
    ps = node.premises
    r = node.rule
    if r == "Identity":
        _arity(node, 0)
        _need(len(g) == 1 and alpha_eq(g[0], a), "antecedent and consequent differ")
    elif r == "Cut":
        _arity(node, 2)
        p1, p2 = ps[0].conclusion, ps[1].conclusion
        _need(alpha_eq(p2.consequent, a), "consequent differs from the right premise")
        rest = _remove(p2.antecedent, p1.consequent)
        _need(rest is not None, "cut formula missing from the right premise")
        _need(_same(g, list(p1.antecedent) + rest), "context does not split between the premises")
    elif r == "LTensor":
        _arity(node, 1)
        p = ps[0].conclusion
        _need(alpha_eq(p.consequent, a), "consequent changed")
        _need(any(_same(_without(g, i) + [f.left, f.right], p.antecedent)
                  for i, f in _candidates(g, Tensor)), "no tensor decomposes into the premise")
    elif r == "RTensor":
        _arity(node, 2)
        _need(isinstance(a, Tensor), "consequent is not a tensor")
        p1, p2 = ps[0].conclusion, ps[1].conclusion
        _need(alpha_eq(p1.consequent, a.left) and alpha_eq(p2.consequent, a.right),
              "premise consequents do not match the tensor")
        _need(_same(g, list(p1.antecedent) + list(p2.antecedent)), "context does not split between the premises")
    elif r == "LOne":
        _arity(node, 1)
        p = ps[0].conclusion
        rest = _remove(g, ONE)
        _need(rest is not None, "no 1 in the antecedent")
        _need(alpha_eq(p.consequent, a) and _same(rest, p.antecedent), "premise is not the conclusion without 1")
    elif r == "ROne":
        _arity(node, 0)
        _need(not g and isinstance(a, One), "expected |- 1")
    elif r == "LLolli":
        _arity(node, 2)
        p1, p2 = ps[0].conclusion, ps[1].conclusion
        _need(alpha_eq(p2.consequent, a), "consequent differs from the right premise")
        ok = False
        for i, f in _candidates(g, Lolli):
            if not alpha_eq(f.left, p1.consequent):
                continue
            rest = _remove(p2.antecedent, f.right)
            if rest is not None and _same(_without(g, i), list(p1.antecedent) + rest):
                ok = True
                break
        _need(ok, "no linear implication matches the premises")
    elif r == "RLolli":
        _arity(node, 1)
        _need(isinstance(a, Lolli), "consequent is not a linear implication")
        p = ps[0].conclusion
        _need(alpha_eq(p.consequent, a.right) and _same(g + [a.left], p.antecedent),
              "premise is not the introduction form")
    elif r == "RBang":
        _arity(node, 1)
        _need(isinstance(a, Bang), "consequent is not banged")
        _need(all(isinstance(f, Bang) for f in g), "antecedent contains an unbanged formula")
        p = ps[0].conclusion
        _need(alpha_eq(p.consequent, a.body) and _same(g, p.antecedent), "premise is not the promotion form")
    elif r in ("Dereliction", "Contraction", "Weakening"):
        _arity(node, 1)
        p = ps[0].conclusion
        _need(alpha_eq(p.consequent, a), "consequent changed")
        ok = False
        for i, f in _candidates(g, Bang):
            if r == "Dereliction":
                expect = _without(g, i) + [f.body]
            elif r == "Contraction":
                expect = g + [f]
            else:
                expect = _without(g, i)
            if _same(expect, p.antecedent):
                ok = True
                break
        _need(ok, f"no banged formula justifies {r}")
    elif r in ("LWith1", "LWith2"):
        _arity(node, 1)
        p = ps[0].conclusion
        _need(alpha_eq(p.consequent, a), "consequent changed")
        pick = (lambda f: f.left) if r == "LWith1" else (lambda f: f.right)
        _need(any(_same(_without(g, i) + [pick(f)], p.antecedent) for i, f in _candidates(g, With)),
              "no additive conjunction matches the premise")
    elif r == "RWith":
        _arity(node, 2)
        _need(isinstance(a, With), "consequent is not an additive conjunction")
        p1, p2 = ps[0].conclusion, ps[1].conclusion
        _need(alpha_eq(p1.consequent, a.left) and alpha_eq(p2.consequent, a.right), "premise consequents differ")
        _need(_same(g, p1.antecedent) and _same(g, p2.antecedent), "premise contexts differ")
    elif r == "RTop":
        _arity(node, 0)
        _need(isinstance(a, Top), "consequent is not top")
    elif r == "LPlus":
        _arity(node, 2)
        p1, p2 = ps[0].conclusion, ps[1].conclusion
        _need(alpha_eq(p1.consequent, a) and alpha_eq(p2.consequent, a), "consequent changed")
        _need(any(_same(_without(g, i) + [f.left], p1.antecedent)
                  and _same(_without(g, i) + [f.right], p2.antecedent)
                  for i, f in _candidates(g, Plus)), "no additive disjunction matches the premises")
    elif r in ("RPlus1", "RPlus2"):
        _arity(node, 1)
        _need(isinstance(a, Plus), "consequent is not an additive disjunction")
        p = ps[0].conclusion
        side = a.left if r == "RPlus1" else a.right
        _need(alpha_eq(p.consequent, side) and _same(g, p.antecedent), "premise is not the chosen disjunct")
    elif r == "LZero":
        _arity(node, 0)
        _need(any(isinstance(f, Zero) for f in g), "no 0 in the antecedent")
    elif r == "LForall":
        _arity(node, 1)
        t = _inst_term(node, "term")
        p = ps[0].conclusion
        _need(alpha_eq(p.consequent, a), "consequent changed")
        _need(any(_same(_without(g, i) + [subst(f.body, {f.var: t})], p.antecedent)
                  for i, f in _candidates(g, Forall)), "no universal formula instantiates to the premise")
    elif r == "RExists":
        _arity(node, 1)
        t = _inst_term(node, "term")
        _need(isinstance(a, Exists), "consequent is not existential")
        p = ps[0].conclusion
        _need(_same(g, p.antecedent), "context changed")
        _need(alpha_eq(p.consequent, subst(a.body, {a.var: t})), "premise is not the instance")
    elif r == "RForall":
        _arity(node, 1)
        y = node.inst.get("eigen")
        _need(isinstance(y, Var), "RForall needs an eigenvariable")
        _need(isinstance(a, Forall), "consequent is not universal")
        _need(y not in sequent_free_vars(g, a), "eigenvariable occurs free in the conclusion")
        p = ps[0].conclusion
        _need(_same(g, p.antecedent) and alpha_eq(p.consequent, subst(a.body, {a.var: y})),
              "premise is not the generic instance")
    elif r == "LExists":
        _arity(node, 1)
        y = node.inst.get("eigen")
        _need(isinstance(y, Var), "LExists needs an eigenvariable")
        _need(y not in sequent_free_vars(g, a), "eigenvariable occurs free in the conclusion")
        p = ps[0].conclusion
        _need(alpha_eq(p.consequent, a), "consequent changed")
        _need(any(_same(_without(g, i) + [subst(f.body, {f.var: y})], p.antecedent)
                  for i, f in _candidates(g, Exists)), "no existential formula opens to the premise")
    elif r in PROPER:
        _arity(node, 0)
        try:
            axioms.check(r, node.conclusion, node.inst)
        except InvalidAxiomInstance as e:
            raise _Fail(str(e)) from None
    else:
        raise _Fail(f"unknown rule {r!r}")


def check_proof(t: ProofTree, axioms: ProperAxiomSet | None = None) -> Valid | Invalid:
    """Check every node against its named rule; the first failure in
    pre-order is reported with its path from the root."""
    axioms = axioms or ProperAxiomSet()
    stack = [((), t)]
    while stack:
        path, node = stack.pop()
        try:
            _check_one(node, axioms)
        except _Fail as e:
            return Invalid(path, str(e))
        for i in reversed(range(len(node.premises))):
            stack.append((path + (i,), node.premises[i]))
    return Valid()
