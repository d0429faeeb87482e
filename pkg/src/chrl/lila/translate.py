"""Translations of goals, states, configurations, rules and theories into
linear logic, and the classical first-order reading."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from chrl.ct import EQ, FALSE, Atom, CTAxiom, CTheory
from chrl.engine import ModeError, Program, Rule
from chrl.states import (
    And,
    Goal,
    NormalState,
    Or,
    State,
    Top,
    as_config,
    is_flat,
)
from chrl.terms import Var
from chrl.lila.formulas import (
    ONE,
    ZERO,
    Bang,
    Exists,
    Forall,
    Formula,
    Lolli,
    Plus,
    Prop,
    Tensor,
    exists_many,
    forall_many,
    free_vars_ordered,
    plus,
    tensor,
)


# ------------------------------------------------------------ goals/states

def translate_atom(a: Atom) -> Formula:
    if a.builtin and a.name == FALSE and not a.args:
        return ZERO
    if a.builtin:
        return Bang(Prop(a.name, a.args))
    return Prop(a.name, a.args)


def translate_goal(g: Goal) -> Formula:
    """Structure-preserving: conjunction becomes tensor, disjunction becomes
    additive disjunction, the empty goal becomes ``1``."""
    if isinstance(g, Top):
        return ONE
    if isinstance(g, Atom):
        return translate_atom(g)
    if isinstance(g, And):
        return Tensor(translate_goal(g.left), translate_goal(g.right))
    if isinstance(g, Or):
        return Plus(translate_goal(g.left), translate_goal(g.right))
    raise TypeError(g)


def state_body(s: NormalState) -> Formula:
    """Tensor of the user atoms followed by the banged built-ins."""
    return tensor([translate_atom(a) for a in (*s.user, *s.builtin)])


def translate_state(s) -> Formula:
    """Existential closure over the local variables, in first-occurrence order."""
    if isinstance(s, NormalState):
        return exists_many(s.locals(), state_body(s))
    if isinstance(s, State):
        return exists_many(s.locals(), translate_goal(s.goal))
    raise TypeError(s)


def translate_config(c) -> Formula:
    """Right-nested additive disjunction of the members; ``eps`` is ``0``."""
    return plus([translate_state(m) for m in as_config(c).members])


# --------------------------------------------------- intuitionistic formulas

@dataclass(frozen=True)
class IAtom:
    atom: Atom


@dataclass(frozen=True)
class ITrue:
    pass


@dataclass(frozen=True)
class IFalse:
    pass


@dataclass(frozen=True)
class IAnd:
    left: "IFormula"
    right: "IFormula"


@dataclass(frozen=True)
class IOr:
    left: "IFormula"
    right: "IFormula"


@dataclass(frozen=True)
class IImp:
    left: "IFormula"
    right: "IFormula"


@dataclass(frozen=True)
class IIff:
    left: "IFormula"
    right: "IFormula"


@dataclass(frozen=True)
class IForall:
    var: Var
    body: "IFormula"


@dataclass(frozen=True)
class IExists:
    var: Var
    body: "IFormula"


IFormula = Union[IAtom, ITrue, IFalse, IAnd, IOr, IImp, IIff, IForall, IExists]
I_TRUE, I_FALSE = ITrue(), IFalse()


def iconj(items: Sequence[IFormula]) -> IFormula:
    items = [i for i in items if i != I_TRUE]
    if not items:
        return I_TRUE
    out = items[-1]
    for f in reversed(items[:-1]):
        out = IAnd(f, out)
    return out


def iexists(vs: Sequence[Var], body: IFormula) -> IFormula:
    for v in reversed(list(vs)):
        body = IExists(v, body)
    return body


def iforall(vs: Sequence[Var], body: IFormula) -> IFormula:
    for v in reversed(list(vs)):
        body = IForall(v, body)
    return body


def ifree_vars(f: IFormula) -> list[Var]:
    out: dict[Var, None] = {}

    def go(g, bound):
        if isinstance(g, IAtom):
            for v in g.atom.variables():
                if v not in bound:
                    out.setdefault(v, None)
        elif isinstance(g, (IAnd, IOr, IImp, IIff)):
            go(g.left, bound)
            go(g.right, bound)
        elif isinstance(g, (IForall, IExists)):
            go(g.body, bound | {g.var})

    go(f, frozenset())
    return list(out)


def goal_to_ifo(g: Goal) -> IFormula:
    if isinstance(g, Top):
        return I_TRUE
    if isinstance(g, Atom):
        return I_FALSE if (g.builtin and g.name == FALSE and not g.args) else IAtom(g)
    if isinstance(g, And):
        return IAnd(goal_to_ifo(g.left), goal_to_ifo(g.right))
    if isinstance(g, Or):
        return IOr(goal_to_ifo(g.left), goal_to_ifo(g.right))
    raise TypeError(g)


def atoms_to_ifo(atoms: Sequence[Atom]) -> IFormula:
    return iconj([goal_to_ifo(a) for a in atoms])


_IPREC = {IIff: 1, IImp: 2, IOr: 3, IAnd: 4}
_ISYM = {IIff: "<->", IImp: "->", IOr: "\\/", IAnd: "/\\"}


def format_ifo(f: IFormula) -> str:
    if isinstance(f, IAtom):
        return str(f.atom)
    if isinstance(f, ITrue):
        return "true"
    if isinstance(f, IFalse):
        return "false"
    if isinstance(f, (IForall, IExists)):
        word = "forall" if isinstance(f, IForall) else "exists"
        return f"{word} {f.var.name}. {format_ifo(f.body)}"
    level = _IPREC[type(f)]

    def side(g, strict):
        text = format_ifo(g)
        if isinstance(g, (IForall, IExists)):
            return f"({text})"
        if type(g) in _IPREC and (_IPREC[type(g)] < level or (not strict and _IPREC[type(g)] == level)):
            return f"({text})"
        return text

    return f"{side(f.left, False)} {_ISYM[type(f)]} {side(f.right, True)}"


# ------------------------------------------------------------ negri star

def negri_star(f: IFormula) -> Formula:
    """Atoms are banged, conjunction and disjunction become tensor and plus,
    implication becomes a banged linear implication, universal quantifiers
    are banged.  Equivalence is expanded to a conjunction of implications."""
    if isinstance(f, IAtom):
        return Bang(Prop(f.atom.name, f.atom.args))
    if isinstance(f, IFalse):
        return ZERO
    if isinstance(f, ITrue):
        return ONE
    if isinstance(f, IAnd):
        return Tensor(negri_star(f.left), negri_star(f.right))
    if isinstance(f, IOr):
        return Plus(negri_star(f.left), negri_star(f.right))
    if isinstance(f, IImp):
        return Bang(Lolli(negri_star(f.left), negri_star(f.right)))
    if isinstance(f, IIff):
        return negri_star(IAnd(IImp(f.left, f.right), IImp(f.right, f.left)))
    if isinstance(f, IForall):
        return Bang(Forall(f.var, negri_star(f.body)))
    if isinstance(f, IExists):
        return Exists(f.var, negri_star(f.body))
    raise TypeError(f)


# ------------------------------------------------------ classical reading

def _require_pure(g: Goal, what: str) -> None:
    if not is_flat(g):
        raise ModeError(f"{what}: the classical reading is defined for pure programs only")


def classical_state(s) -> IFormula:
    if isinstance(s, NormalState):
        return iexists(s.locals(), atoms_to_ifo([*s.user, *s.builtin]))
    _require_pure(s.goal, "state")
    return iexists(s.locals(), goal_to_ifo(s.goal))


def classical_rule(r: Rule) -> IFormula:
    """forall(G -> (H1 -> (H2 <-> exists y. B))), dropping an empty guard and
    an empty kept head."""
    _require_pure(r.body, f"rule {r.id}")
    body = iexists(r.local_vars(), goal_to_ifo(r.body))
    inner: IFormula = IIff(atoms_to_ifo(r.removed), body)
    if r.kept:
        inner = IImp(atoms_to_ifo(r.kept), inner)
    if r.guard:
        inner = IImp(atoms_to_ifo(r.guard), inner)
    return iforall(ifree_vars(inner), inner)


def classical_reading(obj) -> IFormula:
    if isinstance(obj, Program):
        return iconj([classical_rule(r) for r in obj.rules])
    if isinstance(obj, Rule):
        return classical_rule(obj)
    if isinstance(obj, (State, NormalState)):
        return classical_state(obj)
    raise TypeError(obj)


# ----------------------------------------------------------------- encoding

def rule_sides(r: Rule) -> tuple[Formula, Formula]:
    """Antecedent and consequent of the rule's linear implication:
    H1 * H2 * G  and  H1 * exists y.(B * G)."""
    guard = [translate_atom(a) for a in r.guard]
    heads = [translate_atom(a) for a in r.kept + r.removed]
    lhs = tensor(heads + guard)
    body = translate_goal(r.body)
    inner = Tensor(body, tensor(guard)) if guard else body
    rhs_items = [translate_atom(a) for a in r.kept] + [exists_many(r.local_vars(), inner)]
    return lhs, tensor(rhs_items)


def encode_rule(r: Rule) -> Formula:
    lhs, rhs = rule_sides(r)
    inner = Lolli(lhs, rhs)
    return Bang(forall_many(free_vars_ordered(inner), inner))


def encode_program(p: Program) -> list[Formula]:
    return [encode_rule(r) for r in p.rules]


def _axiom_ifo(ax: CTAxiom) -> IFormula:
    lhs = iexists(ax.ex_lhs, atoms_to_ifo(ax.lhs))
    rhs = iexists(ax.ex_rhs, atoms_to_ifo(ax.rhs))
    inner = IImp(lhs, rhs)
    return iforall(ifree_vars(inner), inner)


def encode_ct(ct: CTheory, symbols: Sequence[tuple[str, int]]) -> list[Formula]:
    """Negri translation of each axiom plus one banged argument-rewrite
    formula per user symbol and argument position."""
    out = [negri_star(_axiom_ifo(ax)) for ax in ct.axioms]
    for name, arity in symbols:
        xs = [Var(f"X{i + 1}") for i in range(arity)]
        y = Var("Y")
        for j in range(arity):
            eqj = Bang(Prop(EQ, (xs[j], y)))
            before = Tensor(Prop(name, tuple(xs)), eqj)
            after_args = tuple(y if k == j else x for k, x in enumerate(xs))
            after = Tensor(Prop(name, after_args), eqj)
            out.append(Bang(forall_many([*xs, y], Lolli(before, after))))
    return out


def encode_all(p: Program, ct: CTheory) -> list[Formula]:
    return encode_ct(ct, p.user_signatures()) + encode_program(p)
