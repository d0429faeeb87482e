"""Rule application and derivation search for pure CHR and CHR with
disjunction, under the equivalence-based semantics."""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Literal, Mapping, Sequence

from chrl.ct import (
    DEFAULT_CT,
    Atom,
    CTheory,
    _default_rank,
    _solutions,
    _solve_equalities,
    atoms_vars,
    eq,
    solve,
)
from chrl.states import (
    DNF_CAP,
    MATCH_BUDGET,
    TOP,
    AnyState,
    Configuration,
    Goal,
    MatchBudgetExceeded,
    NormalState,
    as_config,
    canonical_key,
    config_equiv,
    dnf,
    format_goal,
    goal_atoms,
    is_flat,
    normalize_state,
    split_state,
    substitute_goal,
)
from chrl.terms import Term, Var, fresh_variant, normalize_subst

Mode = Literal["pure", "vee"]


class ModeError(Exception):
    """A disjunction was used where the program mode forbids it."""


class LimitReached(Exception):
    """Search stopped at a depth or node limit; ``tree`` holds what was built."""

    def __init__(self, message: str, tree: "DerivationTree") -> None:
        super().__init__(message)
        self.tree = tree


# --------------------------------------------------------------------- rules

@dataclass(frozen=True)
class Rule:
    """``id @ kept \\ removed <=> guard | body``."""

    id: str
    kept: tuple[Atom, ...]
    removed: tuple[Atom, ...]
    guard: tuple[Atom, ...] = ()
    body: Goal = TOP

    def __post_init__(self) -> None:
        if not self.kept and not self.removed:
            raise ValueError(f"rule {self.id}: empty head")

    @property
    def heads(self) -> tuple[Atom, ...]:
        return self.kept + self.removed

    @property
    def is_propagation(self) -> bool:
        return not self.removed

    def head_vars(self) -> list[Var]:
        return atoms_vars(self.heads)

    def local_vars(self) -> list[Var]:
        """Variables of guard and body that do not occur in the head."""
        hv = set(self.head_vars())
        return [v for v in atoms_vars([*self.guard, *goal_atoms(self.body)]) if v not in hv]

    def guard_locals(self) -> list[Var]:
        hv = set(self.head_vars())
        return [v for v in atoms_vars(self.guard) if v not in hv]

    def variables(self) -> list[Var]:
        return atoms_vars([*self.heads, *self.guard, *goal_atoms(self.body)])

    def substitute(self, mapping: Mapping[Var, Term]) -> "Rule":
        return Rule(self.id,
                    tuple(a.substitute(mapping) for a in self.kept),
                    tuple(a.substitute(mapping) for a in self.removed),
                    tuple(a.substitute(mapping) for a in self.guard),
                    substitute_goal(self.body, mapping))

    def __str__(self) -> str:
        def atoms(xs):
            return ", ".join(str(a) for a in xs)

        if self.removed and self.kept:
            head, arrow = f"{atoms(self.kept)} \\ {atoms(self.removed)}", "<=>"
        elif self.removed:
            head, arrow = atoms(self.removed), "<=>"
        else:
            head, arrow = atoms(self.kept), "==>"
        guard = f"{atoms(self.guard)} | " if self.guard else ""
        return f"{self.id} @ {head} {arrow} {guard}{format_goal(self.body, top=False)}."


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...] = ()
    mode: Mode = "pure"
    confluent: bool = False
    queries: tuple[tuple[str, AnyState], ...] = ()

    def __post_init__(self) -> None:
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError("rule identifiers must be unique")
        if self.mode == "pure":
            for r in self.rules:
                if not is_flat(r.body):
                    raise ModeError(f"rule {r.id}: disjunction in a pure program")

    def rule(self, rid: str) -> Rule:
        for r in self.rules:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def query(self, name: str) -> AnyState:
        for n, s in self.queries:
            if n == name:
                return s
        raise KeyError(name)

    def user_signatures(self) -> list[tuple[str, int]]:
        out: dict = {}
        for r in self.rules:
            for a in [*r.heads, *goal_atoms(r.body)]:
                if not a.builtin:
                    out.setdefault(a.signature, None)
        return list(out)


# ------------------------------------------------------------- search nodes

@dataclass(frozen=True)
class Member:
    """A normalized member state with stable atom identities and the
    propagation history of its user store."""

    state: NormalState
    ids: tuple[int, ...]
    history: frozenset = frozenset()


@dataclass(frozen=True)
class Node:
    members: tuple[Member, ...]
    next_id: int

    @property
    def config(self) -> Configuration:
        return Configuration(tuple(m.state for m in self.members))


def _member_key(m: Member, history: bool) -> str:
    text = canonical_key(m.state)
    if not history or not m.history:
        return text
    glob = m.state.globals
    order = sorted(range(len(m.state.user)),
                   key=lambda i: _hidden_key(m.state.user[i], glob))
    pos = {m.ids[i]: k for k, i in enumerate(order)}
    tokens = sorted(f"{rid}{tuple(pos[i] for i in ids)}" for rid, ids in m.history)
    return text + " H" + ",".join(tokens)


def _hidden_key(a: Atom, glob) -> tuple:
    hidden = {v: Var("_") for v in a.variables() if v not in glob}
    return a.substitute(hidden).order_key()


def node_key(node: Node, history: bool = True) -> str:
    return " ; ".join(sorted(_member_key(m, history) for m in node.members)) or "eps"


def config_key(c: Configuration, ct: CTheory = DEFAULT_CT) -> str:
    parts = [canonical_key(normalize_state(m, ct)) for m in c.members]
    return " ; ".join(sorted(parts)) or "eps"


def state_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def initial_node(s, ct: CTheory = DEFAULT_CT, cap: int = DNF_CAP) -> Node:
    members, nid = [], 0
    for m in as_config(s).members:
        for part in split_state(m, cap):
            n = normalize_state(part, ct)
            if n.failed:
                continue
            ids = tuple(range(nid, nid + len(n.user)))
            nid += len(n.user)
            members.append(Member(n, ids))
    return Node(tuple(members), nid)


# ----------------------------------------------------------------- instances

@dataclass(frozen=True)
class RuleInstance:
    member: int
    rule: Rule
    variant: Rule
    kept: tuple[int, ...]
    removed: tuple[int, ...]
    theta: dict = field(hash=False, compare=False)

    def head_equations(self, store: Sequence[Atom]) -> list[Atom]:
        out = []
        for h, i in zip(self.variant.heads, self.kept + self.removed):
            out.extend(eq(x, y) for x, y in zip(h.args, store[i].args))
        return out

    def describe(self) -> str:
        return f"{self.rule.id} member={self.member} kept={list(self.kept)} removed={list(self.removed)}"


@dataclass
class Limits:
    depth: int = 6
    nodes: int = 10000
    dnf_cap: int = DNF_CAP
    match_budget: int = MATCH_BUDGET
    history: bool = True


def _state_matches(state: NormalState, p: Program, ct: CTheory,
                   limits: Limits) -> list[tuple[Rule, Rule, tuple[int, ...], tuple[int, ...], dict]]:
    """History-independent instances on one normalized member state."""
    store = state.user
    if not store:
        return []
    sf = solve(state.builtin, ct)
    avoid = set(state.variables())
    budget = [0]
    out = []
    for rule in p.rules:
        variant, _ = fresh_variant(rule, avoid)
        heads = variant.heads
        hv = set(variant.head_vars())
        exvars = hv | set(variant.guard_locals())

        def go(i: int, chosen: tuple[int, ...], theta: dict):
            budget[0] += 1
            if budget[0] > limits.match_budget:
                raise MatchBudgetExceeded(f"rule matching exceeded {limits.match_budget} nodes")
            if i == len(heads):
                yield chosen
                return
            for j, atom in enumerate(store):
                if j in chosen or atom.signature != heads[i].signature:
                    continue
                res = _solve_equalities(list(zip(heads[i].args, atom.args)), theta,
                                        ct.arithmetic_enabled, _default_rank, hv)
                if res is not None:
                    yield from go(i + 1, chosen + (j,), res[0])

        nk = len(variant.kept)
        for chosen in go(0, (), {}):
            goals = [eq(x, y) for h, j in zip(heads, chosen) for x, y in zip(h.args, store[j].args)]
            goals += list(variant.guard)
            for sol in _solutions(goals, exvars, sf, ct):
                out.append((rule, variant, chosen[:nk], chosen[nk:], normalize_subst(sol)))
                break
    return out


class MatchCache:
    """Memo of history-independent matches keyed by member state."""

    def __init__(self, size: int = 50000) -> None:
        self.size = size
        self.table: dict = {}

    def get(self, state: NormalState, p: Program, ct: CTheory, limits: Limits):
        key = (state, id(p), id(ct))
        hit = self.table.get(key)
        if hit is None:
            if len(self.table) >= self.size:
                self.table.clear()
            hit = self.table[key] = _state_matches(state, p, ct, limits)
        return hit


def _member_instances(node: Node, idx: int, p: Program, ct: CTheory, limits: Limits,
                      cache: MatchCache | None = None) -> Iterator[RuleInstance]:
    member = node.members[idx]
    matches = (cache.get(member.state, p, ct, limits) if cache is not None
               else _state_matches(member.state, p, ct, limits))
    for rule, variant, kept, removed, theta in matches:
        if limits.history and rule.is_propagation:
            token = (rule.id, tuple(member.ids[j] for j in kept + removed))
            if token in member.history:
                continue
        yield RuleInstance(idx, rule, variant, kept, removed, theta)


def applicable(c, p: Program, ct: CTheory = DEFAULT_CT, limits: Limits | None = None,
               node: Node | None = None, cache: MatchCache | None = None) -> list[RuleInstance]:
    """All applicable rule instances, member by member, in rule order and
    then leftmost store match."""
    limits = limits or Limits()
    node = node or initial_node(c, ct, limits.dnf_cap)
    out = []
    for idx in range(len(node.members)):
        out.extend(_member_instances(node, idx, p, ct, limits, cache))
    return out


def apply_instance(node: Node, inst: RuleInstance, p: Program, ct: CTheory = DEFAULT_CT,
                   limits: Limits | None = None) -> Node:
    limits = limits or Limits()
    member = node.members[inst.member]
    state = member.state
    variant = inst.variant
    removed = set(inst.removed)
    rest = [(a, i) for a, i, k in zip(state.user, member.ids, range(len(state.user)))
            if k not in removed]
    base_builtin = [*state.builtin, *inst.head_equations(state.user), *variant.guard]
    history = member.history
    if limits.history and inst.rule.is_propagation:
        history = history | {(inst.rule.id, tuple(member.ids[j] for j in inst.kept))}
    new_members = []
    nid = node.next_id
    for disjunct in dnf(variant.body, limits.dnf_cap):
        atoms = list(goal_atoms(disjunct))
        body_user = [a for a in atoms if not a.builtin]
        body_builtin = [a for a in atoms if a.builtin]
        user = [a for a, _ in rest] + body_user
        ids = tuple(i for _, i in rest) + tuple(range(nid, nid + len(body_user)))
        nid += len(body_user)
        n = normalize_state(NormalState(tuple(user), tuple(base_builtin + body_builtin),
                                        state.globals), ct)
        if n.failed:
            continue
        alive = set(ids)
        hist = frozenset(h for h in history if all(i in alive for i in h[1]))
        new_members.append(Member(n, ids, hist))
    members = node.members[:inst.member] + tuple(new_members) + node.members[inst.member + 1:]
    return Node(members, nid)


def apply(inst: RuleInstance, c, p: Program, ct: CTheory = DEFAULT_CT,
          limits: Limits | None = None) -> Configuration:
    """Fire ``inst`` on configuration ``c`` (as produced by :func:`applicable`)."""
    limits = limits or Limits()
    return apply_instance(initial_node(c, ct, limits.dnf_cap), inst, p, ct, limits).config


# --------------------------------------------------------------- derivations

@dataclass(frozen=True)
class Step:
    rule_id: str
    instance: RuleInstance | None
    pre: Configuration
    post: Configuration


@dataclass
class Derivation:
    initial: Configuration
    steps: list[Step] = field(default_factory=list)

    @property
    def final(self) -> Configuration:
        return self.steps[-1].post if self.steps else self.initial

    def to_trace(self, ct: CTheory = DEFAULT_CT) -> str:
        texts: dict[str, str] = {}

        def h(c: Configuration) -> str:
            key = config_key(c, ct)
            digest = state_hash(key)
            texts.setdefault(digest, str(c))
            return digest

        lines = [f"INIT {h(self.initial)}"]
        for st in self.steps:
            lines.append(f"STEP {st.rule_id} {h(st.pre)} -> {h(st.post)}")
        lines.extend(f"STATE {k} {v}" for k, v in texts.items())
        return "\n".join(lines) + "\n"


@dataclass
class DerivationTree:
    root: str
    nodes: dict[str, Node]
    depth: dict[str, int]
    parent: dict[str, tuple[str, RuleInstance] | None]
    edges: list[tuple[str, str, str]]
    answers: list[str]
    frontier: list[str]
    truncated: bool

    def derivation_to(self, key: str) -> Derivation:
        chain = []
        while self.parent.get(key):
            pkey, inst = self.parent[key]
            chain.append(Step(inst.rule.id, inst, self.nodes[pkey].config, self.nodes[key].config))
            key = pkey
        chain.reverse()
        return Derivation(self.nodes[self.root].config, chain)


def derive(s, p: Program, ct: CTheory = DEFAULT_CT, strategy: str = "bfs",
           limits: Limits | None = None, on_limit: str = "raise") -> DerivationTree:
    """Explore derivations from ``s`` over equivalence classes.

    ``strategy`` is ``bfs``/``dfs`` for exhaustive exploration, or ``first``
    for a single committed run taking the first instance at every step.
    Canonical keys identify states up to local renaming and atom order, so a
    key collision always denotes the same class.
    """
    limits = limits or Limits()
    root = initial_node(s, ct, limits.dnf_cap)
    rkey = node_key(root, limits.history)
    nodes, depth, parent = {rkey: root}, {rkey: 0}, {rkey: None}
    edges, answers, frontier = [], [], []
    agenda = deque([rkey])
    truncated = False
    cache = MatchCache()
    while agenda:
        key = agenda.popleft() if strategy != "dfs" else agenda.pop()
        node = nodes[key]
        insts = applicable(None, p, ct, limits, node=node, cache=cache)
        if not insts:
            answers.append(key)
            continue
        if depth[key] >= limits.depth:
            frontier.append(key)
            truncated = True
            continue
        if strategy == "first":
            insts = insts[:1]
        for inst in insts:
            child = apply_instance(node, inst, p, ct, limits)
            ckey = node_key(child, limits.history)
            edges.append((key, inst.rule.id, ckey))
            if ckey in nodes:
                continue
            if len(nodes) >= limits.nodes:
                truncated = True
                frontier.append(key)
                break
            nodes[ckey], depth[ckey], parent[ckey] = child, depth[key] + 1, (key, inst)
            agenda.append(ckey)
    tree = DerivationTree(rkey, nodes, depth, parent, edges, answers, frontier, truncated)
    if truncated and on_limit == "raise":
        raise LimitReached(f"search truncated (depth {limits.depth}, nodes {limits.nodes})", tree)
    return tree


def run(s, p: Program, ct: CTheory = DEFAULT_CT, limits: Limits | None = None) -> Derivation:
    """A single committed-choice derivation (first instance at every step)."""
    limits = limits or Limits()
    tree = derive(s, p, ct, "first", limits, on_limit="flag")
    end = tree.answers[0] if tree.answers else (tree.frontier[0] if tree.frontier else tree.root)
    return tree.derivation_to(end)


# --------------------------------------------------------------- observables

@dataclass
class Observables:
    kind: str
    configs: list[Configuration]
    complete: bool
    keys: list[str]
    tree: DerivationTree


def _dedupe(configs: list[tuple[str, Configuration]], ct: CTheory) -> list[tuple[str, Configuration]]:
    seen: dict[str, None] = {}
    groups: dict[tuple, list[tuple[str, Configuration]]] = {}
    out = []
    for key, c in configs:
        if key in seen:
            continue
        seen[key] = None
        sig = tuple(sorted((tuple(sorted(a.signature for a in m.user)), m.globals.__hash__())
                           for m in c.members))
        group = groups.setdefault(sig, [])
        if any(config_equiv(c, other, ct) for _, other in group):
            continue
        group.append((key, c))
        out.append((key, c))
    return out


def observables(s, p: Program, ct: CTheory = DEFAULT_CT, kind: str = "A",
                limits: Limits | None = None) -> Observables:
    """Computable states (C), answers (A) or data-sufficient answers (S),
    as equivalence classes of configurations with a completeness flag."""
    limits = limits or Limits()
    tree = derive(s, p, ct, "bfs", limits, on_limit="flag")
    kind = kind.upper()
    if kind == "C":
        keys = list(tree.nodes)
    elif kind == "A":
        keys = tree.answers
    elif kind == "S":
        keys = [k for k in tree.answers if all(not m.state.user for m in tree.nodes[k].members)]
    else:
        raise ValueError(f"unknown observable kind {kind!r}")
    items = [(config_key(tree.nodes[k].config, ct), tree.nodes[k].config) for k in keys]
    kept = _dedupe(items, ct)
    by_conf = {ck: k for k in keys for ck in [config_key(tree.nodes[k].config, ct)]}
    return Observables(kind, [c for _, c in kept], not tree.truncated,
                       [by_conf[ck] for ck, _ in kept], tree)


# -------------------------------------------------------------------- replay

def replay(d: Derivation, p: Program, ct: CTheory = DEFAULT_CT,
           limits: Limits | None = None) -> bool:
    """Check every step of ``d`` against the program."""
    limits = limits or Limits()
    current = d.initial
    for st in d.steps:
        if not config_equiv(current, st.pre, ct):
            return False
        node = initial_node(st.pre, ct, limits.dnf_cap)
        ok = False
        for inst in applicable(None, p, ct, _no_history(limits), node=node):
            if inst.rule.id != st.rule_id:
                continue
            if st.instance is not None and (inst.member, inst.kept, inst.removed) != (
                    st.instance.member, st.instance.kept, st.instance.removed):
                continue
            post = apply_instance(node, inst, p, ct, _no_history(limits)).config
            if config_equiv(post, st.post, ct):
                ok = True
                break
        if not ok:
            return False
        current = st.post
    return True


def _no_history(limits: Limits) -> Limits:
    return Limits(limits.depth, limits.nodes, limits.dnf_cap, limits.match_budget, False)
