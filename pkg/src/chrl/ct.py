"""The built-in constraint theory: Herbrand equality, falsity, ground
arithmetic and bounded forward chaining over user axioms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from chrl.terms import (
    Fn,
    Subst,
    Term,
    Var,
    apply_subst,
    fresh_var,
    format_term,
    is_int,
    normalize_subst,
    occurs,
    substitute,
    term_order_key,
    variables,
    walk,
)

EQ = "="
FALSE = "false"
COMPARISONS = {
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}
ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "mod": lambda a, b: a % b if b else None,
}
INFIX = {EQ, *COMPARISONS}
STANDARD_BUILTINS = frozenset({(EQ, 2), (FALSE, 0), *((c, 2) for c in COMPARISONS)})


class SaturationBudgetExceeded(Exception):
    """Axiom chaining did not reach a fixpoint within the saturation depth."""


@dataclass(frozen=True, slots=True)
class Atom:
    """An atomic constraint; ``builtin`` separates CT symbols from user ones."""

    name: str
    args: tuple[Term, ...] = ()
    builtin: bool = False

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> tuple[str, int]:
        return (self.name, len(self.args))

    def variables(self) -> Iterator[Var]:
        for a in self.args:
            yield from variables(a)

    def substitute(self, mapping: Mapping[Var, Term]) -> "Atom":
        if not mapping:
            return self
        return Atom(self.name, tuple(substitute(mapping, a) for a in self.args), self.builtin)

    def apply(self, s: Mapping[Var, Term]) -> "Atom":
        if not s:
            return self
        return Atom(self.name, tuple(apply_subst(s, a) for a in self.args), self.builtin)

    def order_key(self) -> tuple:
        return (self.name, len(self.args), tuple(term_order_key(a) for a in self.args))

    def __str__(self) -> str:
        if self.builtin and self.name in INFIX and len(self.args) == 2:
            return f"{format_term(self.args[0])} {self.name} {format_term(self.args[1])}"
        return format_term(Fn(self.name, self.args))


def eq(a: Term, b: Term) -> Atom:
    return Atom(EQ, (a, b), True)


FALSITY = Atom(FALSE, (), True)


def atoms_vars(atoms: Iterable[Atom]) -> list[Var]:
    """Variables in first-occurrence order, without repeats."""
    out: dict[Var, None] = {}
    for a in atoms:
        for v in a.variables():
            out.setdefault(v, None)
    return list(out)


@dataclass(frozen=True)
class CTAxiom:
    """``forall (exists ex_lhs. lhs -> exists ex_rhs. rhs)``."""

    ex_lhs: tuple[Var, ...]
    lhs: tuple[Atom, ...]
    ex_rhs: tuple[Var, ...]
    rhs: tuple[Atom, ...]

    def __str__(self) -> str:
        def side(ex, atoms):
            body = ", ".join(str(a) for a in atoms) or "true"
            if ex:
                return "exists " + ",".join(v.name for v in ex) + ": " + body
            return body

        return f"axiom {side(self.ex_lhs, self.lhs)} ==> {side(self.ex_rhs, self.rhs)}."


@dataclass(frozen=True)
class CTheory:
    axioms: tuple[CTAxiom, ...] = ()
    arithmetic_enabled: bool = True
    saturation_depth: int = 8
    builtins: frozenset[tuple[str, int]] = field(default=STANDARD_BUILTINS)

    def is_builtin(self, name: str, arity: int) -> bool:
        return (name, arity) in self.builtins


DEFAULT_CT = CTheory()


@dataclass(frozen=True)
class SolvedForm:
    bindings: Subst
    residue: tuple[Atom, ...]
    inconsistent: bool
    facts: tuple[Atom, ...] = ()
    closure: Subst | None = None

    @property
    def closure_bindings(self) -> Subst:
        return self.bindings if self.closure is None else self.closure

    def equations(self) -> list[Atom]:
        return [eq(v, t) for v, t in self.bindings.items()]


INCONSISTENT = SolvedForm({}, (), True)


# ---------------------------------------------------------------- arithmetic

def _is_arith(t: Term) -> bool:
    return isinstance(t, Fn) and t.functor in ARITH and len(t.args) == 2


def evaluate(t: Term) -> Term:
    """Evaluate every ground arithmetic subterm of ``t`` to an integer."""
    if isinstance(t, Var) or not t.args:
        return t
    args = tuple(evaluate(a) for a in t.args)
    if t.functor in ARITH and len(args) == 2 and is_int(args[0]) and is_int(args[1]):
        value = ARITH[t.functor](args[0].functor, args[1].functor)
        if value is not None:
            return Fn(value)
    return Fn(t.functor, args)


def _has_open_arith(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    return _is_arith(t) or any(_has_open_arith(a) for a in t.args)


# ------------------------------------------------------------------- solving

Rank = Callable[[Var], tuple]


def _default_rank(v: Var) -> tuple:
    return (v.name,)


def _unify_eqs(pairs: Sequence[tuple[Term, Term]], s: Subst, arith: bool,
               rank: Rank, bindable=None):
    """Unify ``pairs`` into ``s``; returns (s, deferred) or None on clash.

    Pairs whose structure hides a non-ground arithmetic term are deferred
    instead of clashing.  ``rank`` picks the representative of two variables:
    the one with the smaller rank survives.
    """
    s = dict(s)
    deferred: list[tuple[Term, Term]] = []
    stack = list(pairs)
    while stack:
        a, b = stack.pop()
        a, b = walk(a, s), walk(b, s)
        if arith:
            a2, b2 = evaluate(apply_subst(s, a)), evaluate(apply_subst(s, b))
            if (a2, b2) != (a, b):
                a, b = walk(a2, s), walk(b2, s)
        if a == b:
            continue
        av = isinstance(a, Var) and (bindable is None or a in bindable)
        bv = isinstance(b, Var) and (bindable is None or b in bindable)
        if av and bv:
            if rank(b) < rank(a):
                s[a] = b
            else:
                s[b] = a
        elif av or bv:
            v, t = (a, b) if av else (b, a)
            if occurs(v, t, s):
                return None
            s[v] = t
        elif isinstance(a, Var) or isinstance(b, Var):
            if arith and (_has_open_arith(a) or _has_open_arith(b)):
                deferred.append((a, b))
                continue
            return None
        elif arith and (_is_arith(a) or _is_arith(b)):
            deferred.append((a, b))
        elif a.functor != b.functor or len(a.args) != len(b.args):
            return None
        else:
            stack.extend(zip(a.args, b.args))
    return s, deferred


def _solve_equalities(pairs, s, arith, rank, bindable=None):
    todo = list(pairs)
    while True:
        res = _unify_eqs(todo, s, arith, rank, bindable)
        if res is None:
            return None
        s2, deferred = res
        if not deferred or len(s2) == len(s):
            return s2, deferred
        s, todo = s2, deferred


def _check_ground(atom: Atom, arith: bool):
    """True/False for decidable ground arithmetic tests, else None."""
    if arith and atom.name in COMPARISONS and len(atom.args) == 2:
        a, b = (evaluate(x) for x in atom.args)
        if is_int(a) and is_int(b):
            return COMPARISONS[atom.name](a.functor, b.functor)
    return None


def _core_solve(atoms: Iterable[Atom], ct: CTheory, rank: Rank) -> SolvedForm:
    pairs, others = [], []
    for a in atoms:
        if a.name == FALSE and not a.args:
            return INCONSISTENT
        if a.name == EQ and len(a.args) == 2 and a.builtin:
            pairs.append(a.args)
        else:
            others.append(a)
    res = _solve_equalities(pairs, {}, ct.arithmetic_enabled, rank)
    if res is None:
        return INCONSISTENT
    s, deferred = res
    s = normalize_subst(s)
    residue: dict[Atom, None] = {}
    for l, r in deferred:
        residue[eq(evaluate(apply_subst(s, l)), evaluate(apply_subst(s, r)))] = None
    for a in others:
        a = a.apply(s)
        if ct.arithmetic_enabled:
            a = Atom(a.name, tuple(evaluate(x) for x in a.args), a.builtin)
        verdict = _check_ground(a, ct.arithmetic_enabled)
        if verdict is False:
            return INCONSISTENT
        if verdict is None:
            residue[a] = None
    return SolvedForm(s, tuple(residue), False, tuple(residue))


def solve(b: Iterable[Atom], ct: CTheory = DEFAULT_CT, rank: Rank | None = None) -> SolvedForm:
    """Solve a builtin store: mgu of equations, residue, consistency."""
    rank = rank or _default_rank
    atoms = list(b)
    sf = _core_solve(atoms, ct, rank)
    if sf.inconsistent or not ct.axioms:
        return sf
    return _saturate(atoms, sf, ct, rank)


def _saturate(atoms: list[Atom], sf: SolvedForm, ct: CTheory, rank: Rank) -> SolvedForm:
    fired: set = set()
    store = list(atoms)
    current = sf
    for _ in range(ct.saturation_depth):
        new: list[Atom] = []
        for idx, ax in enumerate(ct.axioms):
            lhs_vars = atoms_vars(ax.lhs)
            for theta in _solutions(list(ax.lhs), set(lhs_vars), current, ct):
                inst = tuple(apply_subst(theta, v) for v in lhs_vars)
                key = (idx, tuple(apply_subst(current.bindings, t) for t in inst))
                if key in fired:
                    continue
                fired.add(key)
                ren = {v: fresh_var() for v in ax.ex_rhs}
                sub = dict(theta)
                sub.update(ren)
                new.extend(a.apply(sub) for a in ax.rhs)
        if not new:
            return SolvedForm(sf.bindings, sf.residue, False, current.facts, current.bindings)
        store.extend(new)
        current = _core_solve(store, ct, rank)
        if current.inconsistent:
            return INCONSISTENT
    raise SaturationBudgetExceeded(
        f"axiom saturation did not converge within depth {ct.saturation_depth}")


# ----------------------------------------------------------------- entailment

def _solutions(goals: list[Atom], exvars: set[Var], sf: SolvedForm, ct: CTheory,
               theta: Subst | None = None) -> Iterator[Subst]:
    """Instantiations of ``exvars`` under which every goal holds in ``sf``."""
    theta = dict(theta or {})
    arith = ct.arithmetic_enabled
    pending = [g.apply(sf.closure_bindings) for g in goals]
    # Equations first: they are deterministic under rigid unification.
    eqs = [g for g in pending if g.name == EQ and g.builtin and len(g.args) == 2]
    rest = [g for g in pending if not (g.name == EQ and g.builtin and len(g.args) == 2)]
    for g in rest:
        if g.name == FALSE and not g.args:
            return
    res = _solve_equalities([g.args for g in eqs], theta, arith, _default_rank, exvars)
    if res is None:
        return
    theta, deferred = res
    for l, r in deferred:
        rest.append(eq(l, r))
    yield from _match_facts(rest, exvars, sf, ct, theta)


def _match_facts(goals: list[Atom], exvars: set[Var], sf: SolvedForm, ct: CTheory,
                 theta: Subst) -> Iterator[Subst]:
    if not goals:
        yield theta
        return
    arith = ct.arithmetic_enabled
    g = goals[0].apply(theta)
    if arith:
        g = Atom(g.name, tuple(evaluate(x) for x in g.args), g.builtin)
    verdict = _check_ground(g, arith)
    if verdict is True:
        yield from _match_facts(goals[1:], exvars, sf, ct, theta)
        return
    if verdict is False:
        return
    if g.name == EQ and g.builtin and len(g.args) == 2:
        res = _solve_equalities([g.args], theta, arith, _default_rank, exvars)
        if res is not None and not res[1]:
            yield from _match_facts(goals[1:], exvars, sf, ct, res[0])
            return
    for fact in sf.facts:
        if fact.name != g.name or len(fact.args) != len(g.args):
            continue
        res = _solve_equalities(list(zip(g.args, fact.args)), theta, arith,
                                _default_rank, exvars)
        if res is not None and not res[1]:
            yield from _match_facts(goals[1:], exvars, sf, ct, res[0])


def _rename_apart(exvars: Iterable[Var], b2: Iterable[Atom]):
    ren = {v: fresh_var() for v in exvars}
    return set(ren.values()), [a.substitute(ren) for a in b2], ren


def entailment_witness(b: Iterable[Atom], exvars: Iterable[Var], b2: Iterable[Atom],
                       ct: CTheory = DEFAULT_CT):
    """A substitution for ``exvars`` showing CT |= forall(b -> b2), or None.

    An inconsistent ``b`` yields the empty witness (ex falso).
    """
    sf = solve(b, ct)
    if sf.inconsistent:
        return {}
    exvars = list(exvars)
    fresh, goals, ren = _rename_apart(exvars, b2)
    for theta in _solutions(goals, fresh, sf, ct):
        theta = normalize_subst(theta)
        return {v: theta.get(ren[v], ren[v]) for v in exvars}
    return None


def entails(b: Iterable[Atom], exvars: Iterable[Var], b2: Iterable[Atom],
            ct: CTheory = DEFAULT_CT) -> bool:
    """CT |= forall(b -> exists exvars. b2)."""
    return entailment_witness(b, exvars, b2, ct) is not None


def satisfiable(b: Iterable[Atom], ct: CTheory = DEFAULT_CT) -> bool:
    return not solve(b, ct).inconsistent
