"""Goals, states and configurations, with the decidable equivalence and
entailment criteria."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

from chrl.ct import (
    DEFAULT_CT,
    FALSITY,
    Atom,
    CTheory,
    _solutions,
    atoms_vars,
    eq,
    evaluate,
    solve,
)
from chrl.terms import Term, Var, fresh_var, normalize_subst

DNF_CAP = 4096
MATCH_BUDGET = 10000


class DnfBlowup(Exception):
    """A disjunctive normal form exceeded the configured cap."""


class MatchBudgetExceeded(Exception):
    """The permutation search of a matching exceeded its node budget."""


# --------------------------------------------------------------------- goals

@dataclass(frozen=True, slots=True)
class Top:
    def __str__(self) -> str:
        return "true"


TOP = Top()


@dataclass(frozen=True, slots=True)
class And:
    left: "Goal"
    right: "Goal"

    def __str__(self) -> str:
        return format_goal(self)


@dataclass(frozen=True, slots=True)
class Or:
    left: "Goal"
    right: "Goal"

    def __str__(self) -> str:
        return format_goal(self)


Goal = Union[Atom, Top, And, Or]


def conj(goals: Iterable[Goal]) -> Goal:
    """Right-nested conjunction; the empty conjunction is ``true``."""
    items = [g for g in goals if g != TOP]
    if not items:
        return TOP
    out = items[-1]
    for g in reversed(items[:-1]):
        out = And(g, out)
    return out


def disj(goals: Sequence[Goal]) -> Goal:
    if not goals:
        return FALSITY
    out = goals[-1]
    for g in reversed(goals[:-1]):
        out = Or(g, out)
    return out


def goal_atoms(g: Goal) -> Iterator[Atom]:
    match g:
        case Atom():
            yield g
        case And(l, r) | Or(l, r):
            yield from goal_atoms(l)
            yield from goal_atoms(r)


def goal_vars(g: Goal) -> list[Var]:
    return atoms_vars(goal_atoms(g))


def substitute_goal(g: Goal, mapping: Mapping[Var, Term]) -> Goal:
    match g:
        case Atom():
            return g.substitute(mapping)
        case And(l, r):
            return And(substitute_goal(l, mapping), substitute_goal(r, mapping))
        case Or(l, r):
            return Or(substitute_goal(l, mapping), substitute_goal(r, mapping))
    return g


def is_flat(g: Goal) -> bool:
    match g:
        case Or():
            return False
        case And(l, r):
            return is_flat(l) and is_flat(r)
    return True


def conjuncts(g: Goal) -> list[Atom]:
    """Atoms of a flat goal, in order (``true`` contributes nothing)."""
    if not is_flat(g):
        raise ValueError("goal is not flat")
    return list(goal_atoms(g))


def dnf(g: Goal, cap: int = DNF_CAP) -> list[Goal]:
    """Disjuncts of ``g``; distribution is applied left to right."""

    def go(g: Goal) -> list[tuple[Atom, ...]]:
        match g:
            case Top():
                return [()]
            case Atom():
                return [(g,)]
            case Or(l, r):
                out = go(l) + go(r)
            case And(l, r):
                left, right = go(l), go(r)
                if len(left) * len(right) > cap:
                    raise DnfBlowup(f"more than {cap} disjuncts")
                out = [a + b for a in left for b in right]
        if len(out) > cap:
            raise DnfBlowup(f"more than {cap} disjuncts")
        return out

    return [conj(d) for d in go(g)]


def format_goal(g: Goal, top: bool = True) -> str:
    match g:
        case Top():
            return "true"
        case Atom():
            return str(g)
        case And(l, r):
            return f"{format_goal(l, False)}, {format_goal(r, False)}"
        case Or(l, r):
            text = f"{format_goal(l, False)} ; {format_goal(r, False)}"
            return text if top else f"({text})"
    raise TypeError(g)


# -------------------------------------------------------------------- states

def _format_vars(vs: Iterable[Var]) -> str:
    return "{" + ",".join(sorted(v.name for v in vs)) + "}"


@dataclass(frozen=True)
class State:
    """A state <G ; V> with an arbitrary goal."""

    goal: Goal
    globals: frozenset[Var] = frozenset()

    def variables(self) -> list[Var]:
        return list(dict.fromkeys([*goal_vars(self.goal), *sorted(self.globals, key=_vkey)]))

    def locals(self) -> list[Var]:
        return [v for v in goal_vars(self.goal) if v not in self.globals]

    def substitute(self, mapping: Mapping[Var, Term]) -> "State":
        glob = frozenset(mapping.get(v, v) for v in self.globals)
        return State(substitute_goal(self.goal, mapping), glob)

    def __str__(self) -> str:
        return f"<{format_goal(self.goal, top=False)} ; {_format_vars(self.globals)}>"


def _vkey(v: Var) -> str:
    return v.name


@dataclass(frozen=True)
class NormalState:
    """A flat state in ternary form <U ; B ; V>."""

    user: tuple[Atom, ...] = ()
    builtin: tuple[Atom, ...] = ()
    globals: frozenset[Var] = frozenset()

    @property
    def failed(self) -> bool:
        return FALSITY in self.builtin

    @property
    def goal(self) -> Goal:
        return conj([*self.user, *self.builtin])

    def variables(self) -> list[Var]:
        return list(dict.fromkeys([*atoms_vars(self.user), *atoms_vars(self.builtin),
                                   *sorted(self.globals, key=_vkey)]))

    def locals(self) -> list[Var]:
        return [v for v in atoms_vars([*self.user, *self.builtin]) if v not in self.globals]

    def strictly_locals(self) -> list[Var]:
        uv = set(atoms_vars(self.user))
        return [v for v in self.locals() if v not in uv]

    def substitute(self, mapping: Mapping[Var, Term]) -> "NormalState":
        glob = frozenset(mapping.get(v, v) for v in self.globals)
        return NormalState(tuple(a.substitute(mapping) for a in self.user),
                           tuple(a.substitute(mapping) for a in self.builtin), glob)

    def to_state(self) -> State:
        return State(self.goal, self.globals)

    def __str__(self) -> str:
        u = ", ".join(str(a) for a in self.user) or "true"
        b = ", ".join(str(a) for a in self.builtin) or "true"
        return f"<{u} ; {b} ; {_format_vars(self.globals)}>"


FAILED = NormalState((), (FALSITY,), frozenset())
EMPTY = NormalState()
AnyState = Union[State, NormalState]


def state_parts(s: AnyState) -> tuple[list[Atom], list[Atom], frozenset[Var]]:
    if isinstance(s, NormalState):
        return list(s.user), list(s.builtin), s.globals
    atoms = conjuncts(s.goal)
    return ([a for a in atoms if not a.builtin], [a for a in atoms if a.builtin], s.globals)


def normalize_state(s: AnyState, ct: CTheory = DEFAULT_CT) -> NormalState:
    """Ternary normal form: solved builtins, bindings applied to the user
    store, strictly local equations and redundant globals dropped."""
    user, builtin, glob = state_parts(s)
    user_vars = set(atoms_vars(user))

    def rank(v: Var) -> tuple:
        return (0 if v in glob else 1 if v in user_vars else 2, v.name)

    sf = solve(builtin, ct, rank)
    if sf.inconsistent:
        return FAILED
    arith = ct.arithmetic_enabled
    new_user = []
    for a in user:
        a = a.apply(sf.bindings)
        if arith:
            a = Atom(a.name, tuple(evaluate(x) for x in a.args), a.builtin)
        new_user.append(a)
    new_builtin: dict[Atom, None] = {}
    for v, t in sf.bindings.items():
        if v in glob:
            atom = eq(t, v) if isinstance(t, Var) else eq(v, t)
            new_builtin[atom] = None
    for a in sf.residue:
        new_builtin[a] = None
    occurring = set(atoms_vars(new_user)) | set(atoms_vars(new_builtin))
    return NormalState(tuple(new_user), tuple(new_builtin), frozenset(glob & occurring))


def is_failed(s: AnyState, ct: CTheory = DEFAULT_CT) -> bool:
    return normalize_state(s, ct).failed


def canonical_key(n: NormalState) -> str:
    """Text key identical for states differing only in local names and
    atom order."""
    if n.failed:
        return "FAILED"
    glob = n.globals

    def shape(a: Atom) -> tuple:
        hidden = {v: Var("_") for v in a.variables() if v not in glob}
        return a.substitute(hidden).order_key()

    user = sorted(n.user, key=shape)
    builtin = sorted(n.builtin, key=shape)
    names: dict[Var, Var] = {}
    for a in [*user, *builtin]:
        for v in a.variables():
            if v not in glob and v not in names:
                names[v] = Var(f"_L{len(names)}")
    user = sorted((a.substitute(names) for a in user), key=Atom.order_key)
    builtin = sorted((a.substitute(names) for a in builtin), key=Atom.order_key)
    return str(NormalState(tuple(user), tuple(builtin), glob))


# ------------------------------------------------------------------ matching

def match_userstores(u1: Sequence[Atom], u2: Sequence[Atom]) -> list[tuple[tuple[int, ...], list[Atom]]]:
    """All permutations pairing ``u1[i]`` with ``u2[perm[i]]`` by symbol,
    each with its (unsolved) argument equations."""
    if len(u1) != len(u2):
        return []
    out = []

    def go(i: int, used: tuple[int, ...]):
        if i == len(u1):
            eqs = [eq(x, y) for k, j in enumerate(used)
                   for x, y in zip(u1[k].args, u2[j].args)]
            out.append((used, eqs))
            return
        for j, b in enumerate(u2):
            if j not in used and b.signature == u1[i].signature:
                go(i + 1, used + (j,))

    go(0, ())
    return out


@dataclass
class _Budget:
    limit: int
    used: int = 0

    def tick(self) -> None:
        self.used += 1
        if self.used > self.limit:
            raise MatchBudgetExceeded(f"matching search exceeded {self.limit} nodes")


@dataclass(frozen=True)
class Witness:
    """Instantiation of the criterion: ``perm[i]`` is the index of the right
    user atom matched to left atom ``i``; ``theta`` instantiates the right
    side's local variables (after renaming by ``renaming``)."""

    perm: tuple[int, ...]
    theta: dict
    renaming: dict


def _rename_locals_apart(n: NormalState, avoid: set[Var]) -> tuple[NormalState, dict]:
    ren = {}
    for v in n.locals():
        ren[v] = fresh_var()
    return n.substitute(ren), ren


def criterion_witness(n1: NormalState, n2: NormalState, ct: CTheory = DEFAULT_CT,
                      budget: int = MATCH_BUDGET) -> Witness | None:
    """One direction of the criterion: CT |= forall(B1 -> exists l2.((U1 = U2) and B2)).

    Both states must be consistent and normalized; globals of ``n2`` are
    taken as shared with ``n1``.
    """
    if len(n1.user) != len(n2.user):
        return None
    r2, ren = _rename_locals_apart(n2, set(n1.variables()))
    exvars = set(ren.values())
    sf = solve(n1.builtin, ct)
    if sf.inconsistent:
        return Witness(tuple(range(len(n1.user))), {}, ren)
    u1 = list(n1.user)
    u2 = [a.apply(sf.closure_bindings) for a in r2.user]
    b2 = list(r2.builtin)
    counter = _Budget(budget)
    from chrl.ct import _solve_equalities, _default_rank

    def go(i: int, used: tuple[int, ...], theta: dict):
        counter.tick()
        if i == len(u1):
            eqs = [eq(x, y) for k, j in enumerate(used) for x, y in zip(u1[k].args, r2.user[j].args)]
            for sol in _solutions(eqs + b2, exvars, sf, ct):
                return used, sol
            return None
        for j, b in enumerate(u2):
            if j in used or b.signature != u1[i].signature:
                continue
            res = _solve_equalities(list(zip(u1[i].args, b.args)), theta,
                                    ct.arithmetic_enabled, _default_rank, exvars)
            if res is None:
                continue
            found = go(i + 1, used + (j,), res[0])
            if found:
                return found
        return None

    found = go(0, (), {})
    if not found:
        return None
    perm, sol = found
    sol = normalize_subst(sol)
    theta = {v: sol.get(v, v) for v in exvars}
    return Witness(perm, theta, ren)


def _normal(s: AnyState, ct: CTheory) -> NormalState:
    return normalize_state(s, ct)


def state_entails(s1: AnyState, s2: AnyState, ct: CTheory = DEFAULT_CT,
                  budget: int = MATCH_BUDGET) -> bool:
    return entailment_witness(s1, s2, ct, budget) is not None


def entailment_witness(s1: AnyState, s2: AnyState, ct: CTheory = DEFAULT_CT,
                       budget: int = MATCH_BUDGET) -> Witness | None:
    n1, n2 = _normal(s1, ct), _normal(s2, ct)
    if n1.failed:
        return Witness((), {}, {})
    if n2.failed:
        return None
    if not n2.globals <= n1.globals:
        return None
    return criterion_witness(n1, n2, ct, budget)


def state_equiv(s1: AnyState, s2: AnyState, ct: CTheory = DEFAULT_CT,
                budget: int = MATCH_BUDGET) -> bool:
    n1, n2 = _normal(s1, ct), _normal(s2, ct)
    if n1.failed or n2.failed:
        return n1.failed and n2.failed
    if n1.globals != n2.globals or len(n1.user) != len(n2.user):
        return False
    return (criterion_witness(n1, n2, ct, budget) is not None
            and criterion_witness(n2, n1, ct, budget) is not None)


def merge(s1: NormalState, s2: NormalState) -> NormalState:
    """Conjunction of two states with locals renamed apart and shared globals."""
    glob = s1.globals | s2.globals
    clash1 = set(s2.variables())
    ren1 = {v: fresh_var() for v in s1.locals() if v in clash1 or v in glob}
    s1 = s1.substitute(ren1)
    clash2 = set(s1.variables())
    ren2 = {v: fresh_var() for v in s2.locals() if v in clash2 or v in glob}
    s2 = s2.substitute(ren2)
    return NormalState(s1.user + s2.user, s1.builtin + s2.builtin, glob)


# ------------------------------------------------------------ configurations

@dataclass(frozen=True)
class Configuration:
    """A disjunction of states; no members is the empty configuration."""

    members: tuple[AnyState, ...] = ()

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __str__(self) -> str:
        if not self.members:
            return "eps"
        return " ; ".join(str(m) for m in self.members)


EPSILON = Configuration(())


def as_config(obj) -> Configuration:
    if isinstance(obj, Configuration):
        return obj
    return Configuration((obj,))


def split_state(s: AnyState, cap: int = DNF_CAP) -> list[State]:
    if isinstance(s, NormalState):
        return [s.to_state()]
    return [State(g, s.globals) for g in dnf(s.goal, cap)]


def config_normalize(c, ct: CTheory = DEFAULT_CT, cap: int = DNF_CAP) -> Configuration:
    out = []
    for m in as_config(c).members:
        for part in split_state(m, cap):
            n = normalize_state(part, ct)
            if not n.failed:
                out.append(n)
    return Configuration(tuple(out))


def config_equiv(c1, c2, ct: CTheory = DEFAULT_CT, cap: int = DNF_CAP) -> bool:
    m1 = config_normalize(c1, ct, cap).members
    m2 = config_normalize(c2, ct, cap).members
    if len(m1) != len(m2):
        return False

    def go(i: int, used: frozenset) -> bool:
        if i == len(m1):
            return True
        return any(go(i + 1, used | {j}) for j, t in enumerate(m2)
                   if j not in used and state_equiv(m1[i], t, ct))

    return go(0, frozenset())


def config_entails(c1, c2, ct: CTheory = DEFAULT_CT, cap: int = DNF_CAP) -> bool:
    m1 = config_normalize(c1, ct, cap).members
    m2 = config_normalize(c2, ct, cap).members
    return all(any(state_entails(s, t, ct) for t in m2) for s in m1)


def is_compact(c, ct: CTheory = DEFAULT_CT, cap: int = DNF_CAP) -> bool:
    ms = config_normalize(c, ct, cap).members
    return not any(i != j and state_entails(s, t, ct)
                   for i, s in enumerate(ms) for j, t in enumerate(ms))


def format_config(c: Configuration) -> str:
    return str(c)
