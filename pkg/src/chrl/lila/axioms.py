"""Proper axioms: constraint-theory consequences, argument rewriting under
an equation, and rule application.  Instances are validated on use; the
schemas are never materialized."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from chrl.ct import DEFAULT_CT, EQ, FALSITY, Atom, CTheory, entails
from chrl.engine import Program, Rule
from chrl.terms import Var, fresh_var
from chrl.lila.formulas import (
    ZERO,
    Bang,
    Exists,
    Formula,
    One,
    Prop,
    Sequent,
    Tensor,
    ac_key,
    flatten_tensor,
    subst,
)
from chrl.lila.translate import rule_sides

SIGMA_CT = "SigmaCT"
SIGMA_EQ = "SigmaEq"
SIGMA_P = "SigmaP"
PROPER = (SIGMA_CT, SIGMA_EQ, SIGMA_P)


class InvalidAxiomInstance(Exception):
    def __init__(self, schema: str, reason: str) -> None:
        super().__init__(f"{schema}: {reason}")
        self.schema = schema
        self.reason = reason


def _items(fs: Sequence[Formula]) -> list[Formula]:
    out = []
    for f in fs:
        out.extend(g for g in flatten_tensor(f) if not isinstance(g, One))
    return out


def decode_builtin(fs: Sequence[Formula], ct: CTheory) -> tuple[list[Var], list[Atom]] | None:
    """Read ``exists x. B^L`` back as (x, B); None when a non-built-in part
    occurs.  Bound variables are renamed to fresh ones."""
    exvars: list[Var] = []
    atoms: list[Atom] = []
    todo = list(fs)
    while todo:
        f = todo.pop(0)
        if isinstance(f, One):
            continue
        if f == ZERO:
            atoms.append(FALSITY)
        elif isinstance(f, Tensor):
            todo[:0] = [f.left, f.right]
        elif isinstance(f, Exists):
            v = fresh_var()
            exvars.append(v)
            todo.insert(0, subst(f.body, {f.var: v}))
        elif isinstance(f, Bang) and isinstance(f.body, Prop) and ct.is_builtin(f.body.name, len(f.body.args)):
            atoms.append(Atom(f.body.name, f.body.args, True))
        else:
            return None
    return exvars, atoms


@dataclass
class ProperAxiomSet:
    """Validators for the three proper-axiom schemas of a program and theory."""

    ct: CTheory = DEFAULT_CT
    program: Program = field(default_factory=Program)

    # -------------------------------------------------------- constraint theory
    def check_ct(self, seq: Sequent) -> None:
        left = decode_builtin(seq.antecedent, self.ct)
        right = decode_builtin([seq.consequent], self.ct)
        if left is None or right is None:
            raise InvalidAxiomInstance(SIGMA_CT, "sequent is not built-in only")
        _, b = left
        ex, b2 = right
        if not entails(b, ex, b2, self.ct):
            raise InvalidAxiomInstance(SIGMA_CT, "constraint theory does not entail the consequent")

    # ------------------------------------------------------------- rewriting
    def check_eq(self, seq: Sequent) -> None:
        left, right = _items(seq.antecedent), _items([seq.consequent])
        if len(left) != 2 or len(right) != 2:
            raise InvalidAxiomInstance(SIGMA_EQ, "expected one constraint and one equation on each side")

        def split(items):
            eqs = [f for f in items if isinstance(f, Bang) and isinstance(f.body, Prop)
                   and f.body.name == EQ and len(f.body.args) == 2]
            users = [f for f in items if isinstance(f, Prop) and not self.ct.is_builtin(f.name, len(f.args))]
            if len(eqs) == 2 and not users:
                return None
            if len(eqs) != 1 or len(users) != 1:
                return None
            return users[0], eqs[0]

        ls, rs = split(left), split(right)
        if ls is None or rs is None:
            raise InvalidAxiomInstance(SIGMA_EQ, "expected one constraint and one equation on each side")
        (c1, e1), (c2, e2) = ls, rs
        if e1 != e2:
            raise InvalidAxiomInstance(SIGMA_EQ, "equation differs between the sides")
        if c1.name != c2.name or len(c1.args) != len(c2.args):
            raise InvalidAxiomInstance(SIGMA_EQ, "constraint symbol differs between the sides")
        a, b = e1.body.args
        diff = [j for j, (x, y) in enumerate(zip(c1.args, c2.args)) if x != y]
        if not diff:
            return
        if len(diff) > 1:
            raise InvalidAxiomInstance(SIGMA_EQ, "more than one argument rewritten")
        j = diff[0]
        if {c1.args[j], c2.args[j]} != {a, b}:
            raise InvalidAxiomInstance(SIGMA_EQ, "rewritten argument does not follow the equation")

    # ------------------------------------------------------------------ rules
    def check_rule(self, seq: Sequent, rule_id: str | None = None) -> None:
        rules = self.program.rules
        if rule_id is not None:
            rules = tuple(r for r in rules if r.id == rule_id)
            if not rules:
                raise InvalidAxiomInstance(SIGMA_P, f"unknown rule {rule_id}")
        for r in rules:
            if self._rule_instance(r, seq):
                return
        raise InvalidAxiomInstance(SIGMA_P, "not a variant of any program rule")

    def _rule_instance(self, r: Rule, seq: Sequent) -> bool:
        lhs, rhs = rule_sides(r)
        pattern = _items([lhs])
        target = _items(seq.antecedent)
        if len(pattern) != len(target):
            return False
        want = ac_key(seq.consequent)
        rule_vars = set(r.head_vars()) | set(v for a in r.guard for v in a.variables())

        def go(i: int, used: frozenset, rho: dict):
            if i == len(pattern):
                yield rho
                return
            for j, t in enumerate(target):
                if j in used:
                    continue
                r2 = _match_variant(pattern[i], t, rho, rule_vars)
                if r2 is not None:
                    yield from go(i + 1, used | {j}, r2)

        for rho in go(0, frozenset(), {}):
            if ac_key(subst(rhs, rho)) == want:
                return True
        return False

    # --------------------------------------------------------------- dispatch
    def check(self, tag: str, seq: Sequent, inst: dict | None = None) -> None:
        inst = inst or {}
        if tag == SIGMA_CT:
            self.check_ct(seq)
        elif tag == SIGMA_EQ:
            self.check_eq(seq)
        elif tag == SIGMA_P:
            self.check_rule(seq, inst.get("rule"))
        else:
            raise InvalidAxiomInstance(tag, "unknown proper axiom schema")

    def is_valid(self, tag: str, seq: Sequent, inst: dict | None = None) -> bool:
        try:
            self.check(tag, seq, inst)
        except InvalidAxiomInstance:
            return False
        return True


def sigma_axioms(ct: CTheory = DEFAULT_CT, p: Program | None = None) -> ProperAxiomSet:
    """The proper-axiom validators of a program over a constraint theory."""
    return ProperAxiomSet(ct, p or Program())


def _match_variant(p: Formula, t: Formula, rho: dict, rule_vars: set) -> dict | None:
    """Match a schema item against a sequent item, mapping rule variables
    injectively to variables."""
    if isinstance(p, Bang) and isinstance(t, Bang):
        return _match_variant(p.body, t.body, rho, rule_vars)
    if not (isinstance(p, Prop) and isinstance(t, Prop)):
        return None
    if p.name != t.name or len(p.args) != len(t.args):
        return None
    rho = dict(rho)
    stack = list(zip(p.args, t.args))
    while stack:
        x, y = stack.pop()
        if isinstance(x, Var) and x in rule_vars:
            if not isinstance(y, Var):
                return None
            if x in rho:
                if rho[x] != y:
                    return None
            else:
                if y in rho.values():
                    return None
                rho[x] = y
        elif isinstance(x, Var) or isinstance(y, Var):
            if x != y:
                return None
        elif x.functor != y.functor or len(x.args) != len(y.args):
            return None
        else:
            stack.extend(zip(x.args, y.args))
    return rho


def sigma_p_sequent(r: Rule, variant: Rule) -> Sequent:
    """The rule-application axiom instance for a variant of ``r``."""
    lhs, rhs = rule_sides(variant)
    return Sequent((lhs,), rhs)
