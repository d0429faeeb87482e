"""Reasoning procedures built on the engine and the linear-logic backend:
membership in logical observables, failure exclusion, data-sufficiency,
safety, analyticness and program comparison.

Universal claims over infinite state spaces are only ever reported
relative to the search bounds and the query corpus; refutations carry
replayable derivations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, product
from typing import Iterable, Sequence

from chrl.ct import DEFAULT_CT, Atom, CTheory, satisfiable
from chrl.engine import (
    Derivation,
    DerivationTree,
    Limits,
    Program,
    Rule,
    derive,
    observables,
)
from chrl.states import (
    Configuration,
    NormalState,
    State,
    as_config,
    config_entails,
    config_equiv,
    conj,
    dnf,
    goal_atoms,
    is_compact,
)
from chrl.terms import Fn, Var
from chrl.lila.axioms import ProperAxiomSet
from chrl.lila.certify import CertificationFailed, Certifier, cut
from chrl.lila.proof import ProofTree, check_proof
from chrl.lila.syntax import format_proof

HOLDS, FAILS, UNKNOWN = "holds", "fails", "unknown"


@dataclass
class Evidence:
    label: str
    text: str
    obj: object = None


@dataclass
class AnalysisReport:
    """Verdict with evidence and the bounds it is relative to."""

    verdict: str
    evidence: list[Evidence] = field(default_factory=list)
    bounds: str = ""
    witness: object = None

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    @property
    def fails(self) -> bool:
        return self.verdict == FAILS

    def add(self, label: str, text: str, obj: object = None) -> "AnalysisReport":
        self.evidence.append(Evidence(label, text, obj))
        return self

    def to_text(self) -> str:
        lines = [f"VERDICT: {self.verdict}", "EVIDENCE:"]
        if not self.evidence:
            lines.append("  (none)")
        for e in self.evidence:
            body = e.text.rstrip("\n").split("\n")
            lines.append(f"  {e.label}: {body[0]}")
            lines.extend(f"    {line}" for line in body[1:])
        lines.append(f"BOUNDS: {self.bounds}")
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return self.to_text()


def _bounds(limits: Limits, complete: bool | None = None) -> str:
    text = f"depth={limits.depth} nodes={limits.nodes} history={'on' if limits.history else 'off'}"
    if complete is not None:
        text += f" search={'complete' if complete else 'truncated'}"
    return text


def _trace(d: Derivation, ct: CTheory) -> str:
    return d.to_trace(ct)


def _reachable(s, p: Program, ct: CTheory, limits: Limits) -> DerivationTree:
    return derive(s, p, ct, "bfs", limits, on_limit="flag")


# ---------------------------------------------------------- lower closures

def logical_observable_member(s, p: Program, target, kind: str = "C", ct: CTheory = DEFAULT_CT,
                              limits: Limits | None = None) -> AnalysisReport:
    """Is ``target`` in the lower closure of the computable (C) or
    data-sufficient (S) observables of ``s``?"""
    limits = limits or Limits()
    kind = kind.upper()
    obs = observables(s, p, ct, kind, limits)
    target_c = as_config(target)
    for key, c in zip(obs.keys, obs.configs):
        if config_entails(c, target_c, ct):
            d = obs.tree.derivation_to(key)
            rep = AnalysisReport(HOLDS, bounds=_bounds(limits, obs.complete), witness=c)
            rep.add("observable", f"{c} entails {target_c}")
            return rep.add("derivation", _trace(d, ct), d)
    if obs.complete:
        rep = AnalysisReport(FAILS, bounds=_bounds(limits, True))
        return rep.add("search", f"none of the {len(obs.configs)} {kind} observables entails {target_c}")
    rep = AnalysisReport(UNKNOWN, bounds=_bounds(limits, False))
    return rep.add("search", "no entailing observable within the bounds; the search was truncated")


def lower_closure_contains(configs: Iterable, target, ct: CTheory = DEFAULT_CT) -> bool:
    """Membership in the lower closure of a finite set of configurations."""
    return any(config_entails(c, target, ct) for c in configs)


# ------------------------------------------------------------ failure

def exclude_failure(s, p: Program, ct: CTheory = DEFAULT_CT, limits: Limits | None = None) -> AnalysisReport:
    """Failure is the empty configuration: every branch inconsistent."""
    limits = limits or Limits()
    tree = _reachable(s, p, ct, limits)
    for key, node in tree.nodes.items():
        if not node.members:
            d = tree.derivation_to(key)
            rep = AnalysisReport(FAILS, bounds=_bounds(limits, not tree.truncated), witness=d)
            return rep.add("derivation to failure", _trace(d, ct), d)
    if tree.truncated:
        rep = AnalysisReport(UNKNOWN, bounds=_bounds(limits, False))
        return rep.add("search", f"no failed class among {len(tree.nodes)} explored classes; search truncated")
    rep = AnalysisReport(HOLDS, bounds=_bounds(limits, True))
    rep.add("search", f"{len(tree.nodes)} reachable classes, none failed")
    bottom = NormalState((), (Atom("false", (), True),), frozenset())
    rep.add("sufficient condition", f"{bottom} is entailed by no reachable class, so it lies outside "
                                    "the logical observables and failure is excluded")
    return rep


# ------------------------------------------------------- data sufficiency

def assure_data_sufficient(s, p: Program, ct: CTheory = DEFAULT_CT,
                           limits: Limits | None = None) -> AnalysisReport:
    limits = limits or Limits()
    obs = observables(s, p, ct, "S", limits)
    if obs.configs:
        rep = AnalysisReport(HOLDS, bounds=_bounds(limits, obs.complete), witness=obs.configs[0])
        d = obs.tree.derivation_to(obs.keys[0])
        rep.add("answer", f"{obs.configs[0]} entails <true ; true ; {{}}>")
        rep.add("derivation", _trace(d, ct), d)
        if p.confluent:
            rep.add("uniqueness", "the program is declared confluent, so this data-sufficient answer is unique")
            if len(obs.configs) > 1:
                rep.add("warning", f"{len(obs.configs)} distinct answers found despite the confluence declaration")
        return rep
    if obs.complete:
        rep = AnalysisReport(FAILS, bounds=_bounds(limits, True))
        return rep.add("search", "search complete; no data-sufficient answer exists")
    rep = AnalysisReport(UNKNOWN, bounds=_bounds(limits, False))
    return rep.add("search", "no data-sufficient answer within the bounds; search truncated")


# ------------------------------------------------------------------ safety

def safety_check(s, bad, p: Program, ct: CTheory = DEFAULT_CT, limits: Limits | None = None) -> AnalysisReport:
    """``holds`` when no reachable class entails ``bad`` in a completed search."""
    limits = limits or Limits()
    tree = _reachable(s, p, ct, limits)
    bad_c = as_config(bad)
    for key, node in tree.nodes.items():
        if config_entails(node.config, bad_c, ct):
            d = tree.derivation_to(key)
            rep = AnalysisReport(FAILS, bounds=_bounds(limits, not tree.truncated), witness=d)
            rep.add("reached", f"{node.config} entails {bad_c}")
            return rep.add("derivation", _trace(d, ct), d)
    if tree.truncated:
        rep = AnalysisReport(UNKNOWN, bounds=_bounds(limits, False))
        rep.add("search", f"{len(tree.nodes)} classes explored without reaching the bad state; search truncated")
        return rep.add("limitation", "non-derivability proofs (phase semantics) are not attempted")
    rep = AnalysisReport(HOLDS, bounds=_bounds(limits, True))
    rep.add("search", f"all {len(tree.nodes)} reachable classes explored; none entails {bad_c}")
    rep.add("scope", "bounded result for this initial state only")
    return rep.add("limitation", "non-derivability proofs (phase semantics) are not attempted")


# ------------------------------------------------------------ analyticness

def analytic_criterion(p: Program, ct: CTheory = DEFAULT_CT, limits: Limits | None = None) -> AnalysisReport:
    """Sufficient criterion: in every rule body, distinct disjuncts have
    jointly unsatisfiable built-in parts."""
    limits = limits or Limits()
    offending = []
    checked = 0
    for r in p.rules:
        parts = [[a for a in goal_atoms(d) if a.builtin] for d in dnf(r.body, limits.dnf_cap)]
        for i, j in combinations(range(len(parts)), 2):
            checked += 1
            if satisfiable(parts[i] + parts[j], ct):
                offending.append((r.id, i, j, parts[i], parts[j]))
    bounds = f"{checked} disjunct pairs checked; sufficient condition only"
    if offending:
        rep = AnalysisReport(FAILS, bounds=bounds, witness=offending[0][:3])
        for rid, i, j, bi, bj in offending:
            text = " , ".join(map(str, bi)) or "true"
            text2 = " , ".join(map(str, bj)) or "true"
            rep.add(f"rule {rid}", f"disjuncts {i} and {j} are jointly satisfiable: ({text}) with ({text2})")
        return rep
    rep = AnalysisReport(HOLDS, bounds=bounds)
    rep.add("criterion", "every pair of distinct body disjuncts is contradictory"
            if checked else "no rule body has more than one disjunct")
    if checked:
        rep.add("caveat", "a clash on a variable that is local to the whole state disappears "
                "when the local is hidden, so branches can still coincide; compactness_probe checks "
                "concrete initial states")
    return rep


def compactness_probe(s, p: Program, ct: CTheory = DEFAULT_CT, limits: Limits | None = None) -> list[Configuration]:
    """Reachable configurations that are not compact."""
    limits = limits or Limits()
    tree = _reachable(s, p, ct, limits)
    return [n.config for n in tree.nodes.values() if not is_compact(n.config, ct)]


# ------------------------------------------------------ program comparison

def head_corpus(programs: Sequence[Program], max_atoms: int = 2, constants: Sequence = (0,),
                global_vars: bool = True) -> list[State]:
    """Small initial states over the user symbols of the programs: up to
    ``max_atoms`` atoms whose arguments are drawn from a shared pool of
    variables and the given constants."""
    sigs: dict = {}
    for p in programs:
        for sig in p.user_signatures():
            sigs.setdefault(sig, None)
    sigs = list(sigs)
    out: list[State] = []
    seen: set = set()
    for n in range(1, max_atoms + 1):
        for combo in combinations_with_replacement(sigs, n):
            arity = sum(a for _, a in combo)
            pool = [Var(f"X{i}") for i in range(max(arity, 1))] + [Fn(c) for c in constants]
            for args in product(pool, repeat=arity):
                if not _canonical_args(args):
                    continue
                atoms, k = [], 0
                for name, a in combo:
                    atoms.append(Atom(name, tuple(args[k:k + a]), False))
                    k += a
                goal = conj(atoms)
                vs = [v for v in dict.fromkeys(x for x in args if isinstance(x, Var))]
                for globs in ([frozenset(), frozenset(vs)] if global_vars and vs else [frozenset()]):
                    st = State(goal, globs)
                    key = str(st)
                    if key not in seen:
                        seen.add(key)
                        out.append(st)
    return out


def _canonical_args(args) -> bool:
    """Variables appear in first-use order X0, X1, ... (skip renamings)."""
    nxt = 0
    for a in args:
        if isinstance(a, Var):
            idx = int(a.name[1:])
            if idx > nxt:
                return False
            if idx == nxt:
                nxt += 1
    return True


def _diff(a: Sequence[Configuration], b: Sequence[Configuration], ct: CTheory) -> list[Configuration]:
    return [c for c in a if not any(config_equiv(c, d, ct) for d in b)]


def compare_programs_operational(p1: Program, p2: Program, ct: CTheory = DEFAULT_CT, kind: str = "S",
                                 corpus: Sequence | None = None, limits: Limits | None = None) -> AnalysisReport:
    """Compare observables query by query; a difference found with both
    searches complete is a definite witness."""
    limits = limits or Limits()
    kind = kind.upper()
    corpus = list(corpus) if corpus is not None else head_corpus([p1, p2])
    truncated = 0
    for s in corpus:
        o1 = observables(s, p1, ct, kind, limits)
        o2 = observables(s, p2, ct, kind, limits)
        only1 = _diff(o1.configs, o2.configs, ct)
        only2 = _diff(o2.configs, o1.configs, ct)
        if not (o1.complete and o2.complete):
            truncated += 1
            # a class computed by one side that the other cannot reach is
            # only certain if the other side's search was complete
            if not ((only1 and o2.complete) or (only2 and o1.complete)):
                continue
        if only1 or only2:
            bounds = _bounds(limits) + f" corpus={len(corpus)}"
            rep = AnalysisReport(FAILS, bounds=bounds)
            distinguishing = (only1 or only2)[0]
            rep.witness = (s, distinguishing)
            rep.add("query", str(s))
            rep.add(f"{kind} of first", "{" + ", ".join(map(str, o1.configs)) + "}")
            rep.add(f"{kind} of second", "{" + ", ".join(map(str, o2.configs)) + "}")
            side = "first" if only1 else "second"
            rep.add("distinguishing", f"{distinguishing} is an observable of the {side} program only")
            if kind == "S":
                c1 = observables(s, p1, ct, "C", limits).configs
                c2 = observables(s, p2, ct, "C", limits).configs
                differs = bool(_diff(c1, c2, ct) or _diff(c2, c1, ct))
                rep.add("hierarchy", "the same query also separates the computable states"
                        if differs else "WARNING: computable states agree on this query")
            return rep
    bounds = _bounds(limits) + f" corpus={len(corpus)} truncated_queries={truncated}"
    verdict = HOLDS if truncated == 0 else UNKNOWN
    rep = AnalysisReport(verdict, bounds=bounds)
    return rep.add("corpus", f"{kind}-observables agree on all {len(corpus)} queries"
                   + ("" if not truncated else f" ({truncated} only up to truncation)"))


def _head_state(r: Rule) -> State:
    goal = conj([*r.kept, *r.removed, *r.guard])
    return State(goal, frozenset(r.head_vars()))


def _body_state(r: Rule) -> State:
    goal = conj([*r.kept, r.body, *r.guard])
    return State(goal, frozenset(r.head_vars()))


def logical_program_implication(p1: Program, p2: Program, ct: CTheory = DEFAULT_CT,
                                limits: Limits | None = None) -> AnalysisReport:
    """Every rule of ``p2`` is simulated by ``p1``: from the rule's head
    state some ``p1`` derivation reaches a configuration entailing the
    body state.  Each simulation is certified by a checked proof."""
    limits = limits or Limits()
    certifier = Certifier(p1, ct)
    axioms = ProperAxiomSet(ct, p1)
    rep = AnalysisReport(HOLDS, bounds=_bounds(limits))
    undecided = []
    for r in p2.rules:
        head, body = _head_state(r), _body_state(r)
        tree = _reachable(head, p1, ct, limits)
        found = None
        for key, node in tree.nodes.items():
            if config_entails(node.config, body, ct):
                found = key
                break
        if found is None:
            if tree.truncated:
                undecided.append(r.id)
                rep.add(f"rule {r.id}", "no simulating derivation within the bounds (search truncated)")
                continue
            out = AnalysisReport(FAILS, evidence=rep.evidence, bounds=_bounds(limits, True), witness=r.id)
            return out.add(f"rule {r.id}", f"no derivation from {head} reaches a configuration entailing {body}")
        d = tree.derivation_to(found)
        try:
            proof = certifier.derivation(d, limits, start=head)
            final = tree.nodes[found].config
            proof = cut(proof, certifier.config_entailment(final, as_config(body)))
        except CertificationFailed as e:
            out = AnalysisReport(UNKNOWN, evidence=rep.evidence, bounds=rep.bounds)
            return out.add(f"rule {r.id}", f"certification failed: {e}")
        verdict = check_proof(proof, axioms)
        if not verdict:
            out = AnalysisReport(UNKNOWN, evidence=rep.evidence, bounds=rep.bounds)
            return out.add(f"rule {r.id}", f"certificate rejected: {verdict}")
        rep.add(f"rule {r.id}", f"simulated in {len(d.steps)} step(s); certificate checked "
                f"({proof.size()} nodes)", proof)
    if undecided:
        rep.verdict = UNKNOWN
    return rep


def certificates(rep: AnalysisReport) -> list[ProofTree]:
    return [e.obj for e in rep.evidence if isinstance(e.obj, ProofTree)]


def format_certificates(rep: AnalysisReport) -> str:
    return "\n".join(format_proof(t) for t in certificates(rep))


# --------------------------------------------------------------- tautology

def tautology_rule_note(p: Program, ct: CTheory = DEFAULT_CT) -> list[str]:
    """Rules whose body state is equivalent to their head state: logical
    no-ops that can still change the answers of a program."""
    out = []
    for r in p.rules:
        if config_equiv(_head_state(r), _body_state(r), ct):
            out.append(r.id)
    return out
