"""Independent reference procedures the tests compare the package against.

Nothing here calls the decision procedures under test: equality solving is
redone by naive substitution, state equivalence by bounded rewriting with the
equivalence axioms, and random programs come from a seeded generator.
"""

from __future__ import annotations

import itertools
import random
from collections import deque

from chrl.ct import EQ, FALSITY, Atom, eq, entails, satisfiable
from chrl.engine import Program, Rule
from chrl.states import NormalState, State, conj, disj, state_parts
from chrl.terms import Fn, Var, format_term, substitute, variables

# ------------------------------------------------------------ equality solving


def naive_unifiable(pairs) -> dict | None:
    """Solve a list of term equations by repeated substitution.

    Returns a fully substituted binding map, or None on a clash.
    """
    work = list(pairs)
    binding: dict[Var, object] = {}
    while work:
        a, b = work.pop()
        a = substitute(binding, a)
        b = substitute(binding, b)
        if a == b:
            continue
        if isinstance(b, Var) and not isinstance(a, Var):
            a, b = b, a
        if isinstance(a, Var):
            if a in set(variables(b)):
                return None
            binding = {v: substitute({a: b}, t) for v, t in binding.items()}
            binding[a] = b
            continue
        if a.functor != b.functor or len(a.args) != len(b.args):
            return None
        work.extend(zip(a.args, b.args))
    return binding


# ------------------------------------------------- state equivalence by rewriting

def _atom_text(a: Atom, names: dict) -> str:
    args = [format_term(substitute(names, t)) for t in a.args]
    if a.builtin and a.name == EQ:
        args.sort()
    return f"{a.name}({','.join(args)})"


def rewrite_key(user, builtin, glob) -> str:
    """Key of a state modulo associativity/commutativity of conjunction,
    renaming of local variables, set semantics and symmetry of equations."""
    if not satisfiable(builtin):
        return "FAILED"
    occurring = {v for a in [*user, *builtin] for v in a.variables()}
    glob = frozenset(glob) & occurring
    local = sorted({v for v in occurring if v not in glob}, key=lambda v: v.name)
    best = None
    for perm in itertools.permutations(range(len(local))):
        names = {v: Var(f"L{i}") for v, i in zip(local, perm)}
        u = sorted(_atom_text(a, names) for a in user)
        b = sorted({_atom_text(a, names) for a in builtin})
        text = " & ".join(u) + " | " + " & ".join(b) + " | " + ",".join(sorted(v.name for v in glob))
        if best is None or text < best:
            best = text
    return best


def _subterms(t):
    yield t
    if isinstance(t, Fn):
        for a in t.args:
            yield from _subterms(a)


def _ct_equivalent(user, b1, b2, glob) -> bool:
    """The side condition of the CT-application axiom: the builtin stores
    are equivalent once their strictly local variables are hidden."""
    uv = {v for a in user for v in a.variables()}

    def strict(b):
        return {v for a in b for v in a.variables()} - uv - set(glob)

    s1, s2 = strict(b1), strict(b2)
    ren2 = {v: Var(f"_R{v.name}") for v in s2}
    ren1 = {v: Var(f"_R{v.name}") for v in s1}
    fwd = entails(b1, set(ren2.values()), [a.substitute(ren2) for a in b2])
    back = entails(b2, set(ren1.values()), [a.substitute(ren1) for a in b1])
    return fwd and back


def _moves(user, builtin, glob):
    """Single applications of the substitution and CT-application axioms."""
    for a in builtin:
        if a.name != EQ:
            continue
        x, t = a.args
        for v, val in ((x, t), (t, x)):
            if isinstance(v, Var):
                new_user = tuple(u.substitute({v: val}) for u in user)
                if new_user != tuple(user):
                    yield new_user, builtin
    for i in range(len(builtin)):
        rest = builtin[:i] + builtin[i + 1:]
        if _ct_equivalent(user, builtin, rest, glob):
            yield user, rest
    terms = set()
    for a in [*user, *builtin]:
        for arg in a.args:
            terms.update(_subterms(arg))
    for s, t in itertools.combinations(sorted(terms, key=format_term), 2):
        e = eq(s, t)
        if e in builtin:
            continue
        if entails(builtin, (), [e]):
            yield user, builtin + (e,)


def _reach(s, depth: int) -> set[str]:
    user, builtin, glob = state_parts(s)
    start = (tuple(user), tuple(builtin))
    seen = {rewrite_key(*start, glob): start}
    if "FAILED" in seen:
        return {"FAILED"}
    frontier = deque([(start, 0)])
    while frontier:
        (u, b), d = frontier.popleft()
        if d >= depth:
            continue
        for nu, nb in _moves(u, b, glob):
            key = rewrite_key(nu, nb, glob)
            if key not in seen:
                seen[key] = (nu, nb)
                frontier.append(((nu, nb), d + 1))
    return set(seen)


def rewriting_equivalent(s1, s2, depth: int = 3) -> bool:
    """Bounded search for a chain of equivalence axioms linking two states.

    Each side is rewritten up to ``depth`` steps; the states are equivalent
    if the two sets of reachable keys meet.
    """
    return bool(_reach(s1, depth) & _reach(s2, depth))


# ----------------------------------------------------------- random generation

USER_SYMBOLS = (("c", 1), ("d", 2), ("e", 0))
CONSTANTS = (Fn("a"), Fn("b"))
VARS = (Var("X"), Var("Y"), Var("Z"))


def random_term(rng: random.Random, depth: int = 1):
    roll = rng.random()
    if roll < 0.55:
        return rng.choice(VARS)
    if roll < 0.9 or depth <= 0:
        return rng.choice(CONSTANTS)
    return Fn("f", (random_term(rng, depth - 1),))


def random_user_atom(rng: random.Random) -> Atom:
    name, n = rng.choice(USER_SYMBOLS)
    return Atom(name, tuple(random_term(rng) for _ in range(n)))


def random_state(rng: random.Random, max_atoms: int = 3) -> State:
    n = rng.randint(1, max_atoms)
    atoms = []
    for _ in range(n):
        if rng.random() < 0.55:
            atoms.append(random_user_atom(rng))
        else:
            atoms.append(eq(rng.choice(VARS), random_term(rng)))
    glob = frozenset(v for v in VARS if rng.random() < 0.4)
    return State(conj(atoms), glob)


def equivalent_variant(rng: random.Random, s: State) -> State:
    """A state equivalent to ``s`` by construction: local renaming, atom
    shuffling, substitution of solved equations into the user store and
    redundant globals."""
    user, builtin, glob = state_parts(s)
    locals_ = sorted({v for a in [*user, *builtin] for v in a.variables()} - set(glob),
                     key=lambda v: v.name)
    ren = {v: Var(f"W{i}") for i, v in enumerate(locals_)}
    user = [a.substitute(ren) for a in user]
    builtin = [a.substitute(ren) for a in builtin]
    for a in builtin:
        if a.name == EQ and isinstance(a.args[0], Var) and rng.random() < 0.5:
            x, t = a.args
            user = [u.substitute({x: t}) for u in user]
    atoms = user + builtin
    rng.shuffle(atoms)
    extra = {Var("Extra")} if rng.random() < 0.3 else set()
    return State(conj(atoms), frozenset(glob) | extra)


def mutated_state(rng: random.Random, s: State) -> State:
    user, builtin, glob = state_parts(s)
    atoms = user + builtin
    roll = rng.random()
    if roll < 0.3 and len(atoms) > 1:
        atoms.pop(rng.randrange(len(atoms)))
    elif roll < 0.6:
        atoms.append(random_user_atom(rng) if rng.random() < 0.5 else eq(rng.choice(VARS), random_term(rng)))
    else:
        glob = frozenset(glob) ^ {rng.choice(VARS)}
    return State(conj(atoms), frozenset(glob))


def random_program(rng: random.Random, n_rules: int | None = None) -> Program:
    """A small pure program over c/1, d/2 and e/0 with at most five rules."""
    n_rules = n_rules or rng.randint(1, 5)
    rules = []
    for i in range(n_rules):
        heads = [random_user_atom(rng) for _ in range(rng.randint(1, 2))]
        kind = rng.random()
        if kind < 0.6 or len(heads) == 1 and kind < 0.8:
            kept, removed = (), tuple(heads)
        elif len(heads) == 2 and kind < 0.85:
            kept, removed = (heads[0],), (heads[1],)
        else:
            kept, removed = tuple(heads), ()
        hv = [v for a in heads for v in a.variables()]
        guard = ()
        if hv and rng.random() < 0.3:
            guard = (eq(rng.choice(hv), rng.choice(CONSTANTS)),)
        body_atoms = []
        for _ in range(rng.randint(0, 2)):
            if rng.random() < 0.5 and not kept:
                body_atoms.append(random_user_atom(rng))
            else:
                body_atoms.append(eq(rng.choice(VARS), random_term(rng)))
        if kept and rng.random() < 0.3:
            body_atoms = [FALSITY] if rng.random() < 0.2 else body_atoms
        rules.append(Rule(f"r{i}", kept, removed, guard, conj(body_atoms)))
    return Program(tuple(rules))


def random_vee_program(rng: random.Random) -> Program:
    """A program whose rule bodies branch over equations on head variables,
    so some bodies have exclusive disjuncts and some overlap."""
    base = random_program(rng)
    rules = []
    for r in base.rules:
        hv = [v for a in (*r.kept, *r.removed) for v in a.variables()]
        if not hv or r.kept or rng.random() < 0.3:
            rules.append(r)
            continue
        x = rng.choice(hv)
        branches = [conj([eq(x, c), *([random_user_atom(rng)] if rng.random() < 0.3 else [])])
                    for c in rng.sample(CONSTANTS + (Fn("f", (Fn("a"),)),), rng.randint(2, 3))]
        if rng.random() < 0.3:
            branches.append(conj([eq(rng.choice(VARS), rng.choice(CONSTANTS))]))
        rules.append(Rule(r.id, r.kept, r.removed, r.guard, disj(branches)))
    return Program(tuple(rules), "vee")


def random_store(rng: random.Random, max_atoms: int = 4) -> State:
    atoms = [random_user_atom(rng) for _ in range(rng.randint(1, max_atoms))]
    if rng.random() < 0.4:
        atoms.append(eq(rng.choice(VARS), rng.choice(CONSTANTS)))
    glob = frozenset(v for v in VARS if rng.random() < 0.5)
    return State(conj(atoms), glob)


def as_normal(user, builtin=(), glob=()) -> NormalState:
    return NormalState(tuple(user), tuple(builtin), frozenset(glob))

