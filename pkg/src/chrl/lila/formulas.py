"""Intuitionistic linear logic formulas and sequents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

from chrl.ct import INFIX
from chrl.terms import Fn, Term, Var, format_term, fresh_var, substitute, variables


@dataclass(frozen=True, slots=True)
class Prop:
    """An atomic formula ``name(args)``."""

    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True, slots=True)
class One:
    pass


@dataclass(frozen=True, slots=True)
class Zero:
    pass


@dataclass(frozen=True, slots=True)
class Top:
    pass


@dataclass(frozen=True, slots=True)
class Tensor:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Lolli:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class With:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Plus:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Bang:
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    var: Var
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Exists:
    var: Var
    body: "Formula"


Formula = Union[Prop, One, Zero, Top, Tensor, Lolli, With, Plus, Bang, Forall, Exists]
ONE, ZERO, TOP = One(), Zero(), Top()
BINARY = (Tensor, Lolli, With, Plus)
QUANTIFIERS = (Forall, Exists)


@dataclass(frozen=True)
class Sequent:
    antecedent: tuple[Formula, ...]
    consequent: Formula

    def __str__(self) -> str:
        return format_sequent(self)


# ------------------------------------------------------------ construction

def tensor(items: Sequence[Formula]) -> Formula:
    """Right-folded tensor; the empty tensor is ``1``."""
    items = list(items)
    if not items:
        return ONE
    out = items[-1]
    for f in reversed(items[:-1]):
        out = Tensor(f, out)
    return out


def plus(items: Sequence[Formula]) -> Formula:
    """Right-folded additive disjunction; the empty one is ``0``."""
    items = list(items)
    if not items:
        return ZERO
    out = items[-1]
    for f in reversed(items[:-1]):
        out = Plus(f, out)
    return out


def exists_many(vs: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = Exists(v, body)
    return body


def forall_many(vs: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = Forall(v, body)
    return body


def flatten_tensor(f: Formula) -> list[Formula]:
    if isinstance(f, Tensor):
        return flatten_tensor(f.left) + flatten_tensor(f.right)
    return [f]


def plus_members(f: Formula) -> list[Formula]:
    if isinstance(f, Plus):
        return [f.left] + plus_members(f.right)
    if f == ZERO:
        return []
    return [f]


# ---------------------------------------------------------------- variables

def free_vars(f: Formula) -> set[Var]:
    if isinstance(f, Prop):
        return {v for a in f.args for v in variables(a)}
    if isinstance(f, BINARY):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, Bang):
        return free_vars(f.body)
    if isinstance(f, QUANTIFIERS):
        return free_vars(f.body) - {f.var}
    return set()


def free_vars_ordered(f: Formula) -> list[Var]:
    out: dict[Var, None] = {}

    def go(g: Formula, bound: frozenset) -> None:
        if isinstance(g, Prop):
            for a in g.args:
                for v in variables(a):
                    if v not in bound:
                        out.setdefault(v, None)
        elif isinstance(g, BINARY):
            go(g.left, bound)
            go(g.right, bound)
        elif isinstance(g, Bang):
            go(g.body, bound)
        elif isinstance(g, QUANTIFIERS):
            go(g.body, bound | {g.var})

    go(f, frozenset())
    return list(out)


def sequent_free_vars(antecedent: Iterable[Formula], consequent: Formula) -> set[Var]:
    out = set(free_vars(consequent))
    for f in antecedent:
        out |= free_vars(f)
    return out


def subst(f: Formula, mapping: Mapping[Var, Term]) -> Formula:
    """Capture-avoiding simultaneous substitution."""
    if not mapping:
        return f
    if isinstance(f, Prop):
        return Prop(f.name, tuple(substitute(mapping, a) for a in f.args))
    if isinstance(f, BINARY):
        return type(f)(subst(f.left, mapping), subst(f.right, mapping))
    if isinstance(f, Bang):
        return Bang(subst(f.body, mapping))
    if isinstance(f, QUANTIFIERS):
        inner = {v: t for v, t in mapping.items() if v != f.var}
        if not inner:
            return f
        incoming = {v for t in inner.values() for v in variables(t)}
        if f.var in incoming and f.var in free_vars(f.body):
            new = fresh_var()
            inner[f.var] = new
            return type(f)(new, subst(f.body, inner))
        return type(f)(f.var, subst(f.body, inner))
    return f


# --------------------------------------------------------------------- keys

def _term_key(t: Term, env: Mapping[Var, int]) -> str:
    if isinstance(t, Var):
        return f"#{env[t]}" if t in env else f"?{t.name}"
    if not t.args:
        return repr(t.functor)
    return repr(t.functor) + "(" + ",".join(_term_key(a, env) for a in t.args) + ")"


def _key(f: Formula, env: dict, depth: int, ac: bool) -> str:
    if isinstance(f, Prop):
        return f"P{f.name!r}(" + ",".join(_term_key(a, env) for a in f.args) + ")"
    if isinstance(f, One):
        return "1"
    if isinstance(f, Zero):
        return "0"
    if isinstance(f, Top):
        return "T"
    if isinstance(f, Tensor) and ac:
        parts = sorted(k for k in (_key(g, env, depth, ac) for g in flatten_tensor(f)) if k != "1")
        if not parts:
            return "1"
        if len(parts) == 1:
            return parts[0]
        return "*[" + "|".join(parts) + "]"
    if isinstance(f, BINARY):
        tag = {Tensor: "*", Lolli: ">", With: "&", Plus: "+"}[type(f)]
        return f"{tag}({_key(f.left, env, depth, ac)},{_key(f.right, env, depth, ac)})"
    if isinstance(f, Bang):
        return "!" + _key(f.body, env, depth, ac)
    if isinstance(f, QUANTIFIERS):
        tag = "A" if isinstance(f, Forall) else "E"
        inner = dict(env)
        inner[f.var] = depth
        return f"{tag}." + _key(f.body, inner, depth + 1, ac)
    raise TypeError(f)


def alpha_key(f: Formula) -> str:
    """Key equal for alpha-equivalent formulas."""
    return _key(f, {}, 0, False)


def ac_key(f: Formula) -> str:
    """Key equal modulo alpha, associativity/commutativity of the tensor and
    removal of the unit ``1``."""
    return _key(f, {}, 0, True)


def alpha_eq(f: Formula, g: Formula) -> bool:
    return f == g or alpha_key(f) == alpha_key(g)


def multiset_key(fs: Iterable[Formula]) -> tuple[str, ...]:
    return tuple(sorted(alpha_key(f) for f in fs))


# ----------------------------------------------------------------- printing

_LEVEL = {Lolli: 1, Plus: 2, With: 3, Tensor: 4}
_SYMBOL = {Lolli: "-o", Plus: "+", With: "&", Tensor: "*"}


def _format_prop(p: Prop) -> str:
    if p.name in INFIX and len(p.args) == 2:
        return f"{format_term(p.args[0])} {p.name} {format_term(p.args[1])}"
    if not p.args and p.name in ("top",):
        return "'top'"
    return format_term(Fn(p.name, p.args))


def format_formula(f: Formula) -> str:
    if isinstance(f, Prop):
        return _format_prop(f)
    if isinstance(f, One):
        return "1"
    if isinstance(f, Zero):
        return "0"
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Bang):
        body = f.body
        text = format_formula(body)
        if isinstance(body, (One, Zero, Top, Bang)) or (
                isinstance(body, Prop) and not (body.name in INFIX and len(body.args) == 2)):
            return "!" + text
        return "!(" + text + ")"
    if isinstance(f, QUANTIFIERS):
        word = "forall" if isinstance(f, Forall) else "exists"
        return f"{word} {f.var.name}. {format_formula(f.body)}"
    level = _LEVEL[type(f)]
    left, right = format_formula(f.left), format_formula(f.right)
    if (isinstance(f.left, BINARY) and _LEVEL[type(f.left)] <= level) or isinstance(f.left, QUANTIFIERS):
        left = f"({left})"
    if (isinstance(f.right, BINARY) and _LEVEL[type(f.right)] < level) or isinstance(f.right, QUANTIFIERS):
        right = f"({right})"
    return f"{left} {_SYMBOL[type(f)]} {right}"


def format_sequent(s: Sequent) -> str:
    ante = ", ".join(format_formula(f) for f in s.antecedent)
    return f"{ante} |- {format_formula(s.consequent)}" if ante else f"|- {format_formula(s.consequent)}"


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, (Bang,)):
        yield from subformulas(f.body)
    elif isinstance(f, QUANTIFIERS):
        yield from subformulas(f.body)
