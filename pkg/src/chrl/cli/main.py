"""The ``chrl`` command.

Exit codes: 0 success, 1 negative verdict (not entailed, invalid proof,
property fails), 2 input error (syntax, mode, missing file), 3 budget
reached or verdict unknown, 4 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from chrl.analysis import (
    FAILS,
    HOLDS,
    AnalysisReport,
    analytic_criterion,
    assure_data_sufficient,
    compare_programs_operational,
    exclude_failure,
    head_corpus,
    logical_program_implication,
    logical_observable_member,
    safety_check,
    tautology_rule_note,
)
from chrl.ct import DEFAULT_CT, SaturationBudgetExceeded
from chrl.engine import LimitReached, Limits, ModeError, Program, derive, observables, run
from chrl.states import (
    DnfBlowup,
    MatchBudgetExceeded,
    entailment_witness,
    normalize_state,
    state_equiv,
)
from chrl.syntax import ParseError, parse_program, parse_state_or_config
from chrl.terms import format_term, reset_fresh
from chrl.lila.axioms import ProperAxiomSet
from chrl.lila.certify import CertificationFailed, certify_derivation
from chrl.lila.formulas import format_formula, format_sequent
from chrl.lila.proof import check_proof
from chrl.lila.prover import bounded_prove
from chrl.lila.syntax import format_certificate, format_proof, parse_proof_file, parse_sequent
from chrl.lila.translate import (
    classical_reading,
    encode_all,
    format_ifo,
    negri_star,
    rule_sides,
    translate_config,
    _axiom_ifo,
)

EXIT_OK, EXIT_FAILS, EXIT_INPUT, EXIT_BUDGET, EXIT_INTERNAL = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


# ------------------------------------------------------------------ helpers

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _load(args) -> tuple[Program, object, str]:
    text = _read(args.program)
    p, ct = parse_program(text)
    if getattr(args, "saturation", None) is not None:
        ct = dataclasses.replace(ct, saturation_depth=args.saturation)
    return p, ct, text


def _limits(args) -> Limits:
    return Limits(depth=args.depth, nodes=args.nodes, dnf_cap=args.dnf_cap,
                  match_budget=args.match_budget, history=not getattr(args, "no_history", False))


def _start(p: Program, ct, args, attr: str = "query", state_attr: str = "state"):
    name = getattr(args, attr, None)
    text = getattr(args, state_attr, None)
    if text:
        return parse_state_or_config(text, ct)
    if name:
        try:
            return p.query(name)
        except KeyError:
            raise InputError(f"no query named {name!r}") from None
    if len(p.queries) == 1:
        return p.queries[0][1]
    raise InputError("name a query with --query or give a state with --state")


def _named_or_text(p: Program, ct, value: str):
    for name, st in p.queries:
        if name == value:
            return st
    return parse_state_or_config(value, ct)


def _report(rep: AnalysisReport) -> int:
    sys.stdout.write(rep.to_text())
    if rep.verdict == HOLDS:
        return EXIT_OK
    if rep.verdict == FAILS:
        return EXIT_FAILS
    return EXIT_BUDGET


# ------------------------------------------------------------- subcommands

def cmd_run(args) -> int:
    p, ct, _ = _load(args)
    s = _start(p, ct, args)
    limits = _limits(args)
    if args.explore:
        obs = observables(s, p, ct, "A", limits)
        print(f"ANSWERS ({'complete' if obs.complete else 'incomplete: search truncated'})")
        for c in obs.configs:
            print(f"  {c}")
        print(f"EXPLORED {len(obs.tree.nodes)} classes")
        return EXIT_OK if obs.complete else EXIT_BUDGET
    tree = derive(s, p, ct, "first", limits, on_limit="flag")
    end = tree.answers[0] if tree.answers else tree.frontier[0]
    d = tree.derivation_to(end)
    sys.stdout.write(d.to_trace(ct))
    print(f"FINAL {d.final}")
    if not tree.answers:
        print("STOPPED at the depth bound; further rules apply")
        return EXIT_BUDGET
    return EXIT_OK


def _states(args):
    ct = DEFAULT_CT
    if args.program:
        _, ct, _ = _load(args)
    return parse_state_or_config(args.left, ct), parse_state_or_config(args.right, ct), ct


def _witness_text(w) -> str:
    perm = ", ".join(f"{i}->{j}" for i, j in enumerate(w.perm))
    inv = {v: k for k, v in w.renaming.items()}
    theta = ", ".join(f"{inv.get(v, v).name}:={format_term(t)}" for v, t in sorted(w.theta.items(), key=lambda kv: kv[0].name))
    return f"atoms [{perm}] locals [{theta}]"


def cmd_entail(args) -> int:
    s1, s2, ct = _states(args)
    w = entailment_witness(s1, s2, ct)
    print("true" if w else "false")
    if w:
        print(f"witness: {_witness_text(w)}")
    return EXIT_OK if w else EXIT_FAILS


def cmd_equiv(args) -> int:
    s1, s2, ct = _states(args)
    ok = state_equiv(s1, s2, ct)
    print("true" if ok else "false")
    if ok:
        print(f"left-to-right: {_witness_text(entailment_witness(s1, s2, ct))}")
        print(f"right-to-left: {_witness_text(entailment_witness(s2, s1, ct))}")
    return EXIT_OK if ok else EXIT_FAILS


def cmd_translate(args) -> int:
    p, ct, _ = _load(args)
    start = None
    if args.query or args.state:
        start = _start(p, ct, args)
    if args.to == "axiomatic":
        for r in p.rules:
            lhs, rhs = rule_sides(r)
            print(f"{r.id}: {format_sequent(_seq(lhs, rhs))}")
        if start is not None:
            print(f"state: {format_formula(translate_config(start))}")
    elif args.to == "encoding":
        for f in encode_all(p, ct):
            print(format_formula(f))
        if start is not None:
            print(f"state: {format_formula(translate_config(start))}")
    elif args.to == "classical":
        for r in p.rules:
            print(f"{r.id}: {format_ifo(classical_reading(r))}")
        if start is not None:
            print(f"state: {format_ifo(classical_reading(normalize_state(start, ct)))}")
    elif args.to == "negri":
        for ax in ct.axioms:
            print(f"axiom: {format_formula(negri_star(_axiom_ifo(ax)))}")
        for r in p.rules:
            print(f"{r.id}: {format_formula(negri_star(classical_reading(r)))}")
    return EXIT_OK


def _seq(lhs, rhs):
    from chrl.lila.formulas import Sequent
    return Sequent((lhs,), rhs)


def cmd_certify(args) -> int:
    p, ct, text = _load(args)
    s = _start(p, ct, args)
    limits = _limits(args)
    d = run(s, p, ct, limits)
    proof = certify_derivation(d, p, ct, limits, start=s)
    out = format_certificate(proof, text)
    # re-check what was written, through the text format
    cert = parse_proof_file(out)
    p2, ct2 = parse_program(cert.program_text)
    verdict = check_proof(cert.tree, ProperAxiomSet(ct2, p2))
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    print(f"{format_sequent(proof.conclusion)}: {verdict} ({proof.size()} nodes)",
          file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK if verdict else EXIT_INTERNAL


def cmd_check_proof(args) -> int:
    cert = parse_proof_file(_read(args.proof))
    text = _read(args.program) if args.program else cert.program_text
    if text is not None:
        p, ct = parse_program(text)
    else:
        p, ct = Program(), DEFAULT_CT
    verdict = check_proof(cert.tree, ProperAxiomSet(ct, p))
    print(verdict)
    return EXIT_OK if verdict else EXIT_FAILS


def cmd_prove(args) -> int:
    seq = parse_sequent(args.sequent)
    if args.program:
        p, ct, _ = _load(args)
    else:
        p, ct = Program(), DEFAULT_CT
    found = bounded_prove(seq, ProperAxiomSet(ct, p), budget=args.budget, max_depth=args.max_depth)
    if not found:
        print(found)
        return EXIT_BUDGET
    sys.stdout.write(format_proof(found) + "\n")
    return EXIT_OK


def cmd_observables(args) -> int:
    p, ct, _ = _load(args)
    s = _start(p, ct, args)
    obs = observables(s, p, ct, args.kind, _limits(args))
    print(f"{args.kind.upper()} ({'complete' if obs.complete else 'incomplete: search truncated'})")
    for c in obs.configs:
        print(f"  {c}")
    return EXIT_OK if obs.complete else EXIT_BUDGET


def cmd_member(args) -> int:
    p, ct, _ = _load(args)
    s = _start(p, ct, args)
    target = _named_or_text(p, ct, args.target)
    return _report(logical_observable_member(s, p, target, args.kind, ct, _limits(args)))


def cmd_failure(args) -> int:
    p, ct, _ = _load(args)
    return _report(exclude_failure(_start(p, ct, args), p, ct, _limits(args)))


def cmd_sufficient(args) -> int:
    p, ct, _ = _load(args)
    return _report(assure_data_sufficient(_start(p, ct, args), p, ct, _limits(args)))


def cmd_analytic(args) -> int:
    p, ct, _ = _load(args)
    rep = analytic_criterion(p, ct, _limits(args))
    notes = tautology_rule_note(p, ct)
    if notes:
        rep.add("logical no-ops", ", ".join(notes) + " (logically trivial; may still change answers)")
    return _report(rep)


def cmd_compare(args) -> int:
    p1, ct, _ = _load(args)
    p2, _ = parse_program(_read(args.other))
    corpus = None
    if args.query:
        corpus = [_named_or_text(p1, ct, q) for q in args.query]
    else:
        corpus = head_corpus([p1, p2], args.max_atoms)
    if args.logical:
        first = logical_program_implication(p1, p2, ct, _limits(args))
        second = logical_program_implication(p2, p1, ct, _limits(args))
        print("first simulates second:")
        code1 = _report(first)
        print("second simulates first:")
        code2 = _report(second)
        return max(code1, code2)
    return _report(compare_programs_operational(p1, p2, ct, args.kind, corpus, _limits(args)))


def cmd_safety(args) -> int:
    p, ct, _ = _load(args)
    s = _start(p, ct, args)
    bad = _named_or_text(p, ct, args.bad)
    return _report(safety_check(s, bad, p, ct, _limits(args)))


# ------------------------------------------------------------------ parser

def _budget_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--depth", type=int, default=6, help="derivation depth bound (default 6)")
    sp.add_argument("--nodes", type=int, default=10000, help="explored class bound (default 10000)")
    sp.add_argument("--dnf-cap", type=int, default=4096, help="disjuncts per split (default 4096)")
    sp.add_argument("--saturation", type=int, default=None, help="axiom saturation rounds (default 8)")
    sp.add_argument("--match-budget", type=int, default=10000, help="matching search nodes (default 10000)")
    sp.add_argument("--no-history", action="store_true", help="disable the propagation history")


def _query_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--query", help="named query from the program file")
    sp.add_argument("--state", help="initial state or configuration as text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chrl", description="CHR and CHR with disjunction, with a linear-logic backend.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="run a query and print the derivation")
    sp.add_argument("program")
    _query_flags(sp)
    sp.add_argument("--explore", action="store_true", help="explore all derivations and list the answers")
    _budget_flags(sp)
    sp.set_defaults(func=cmd_run)

    for name, func, text in (("entail", cmd_entail, "decide state entailment"),
                             ("equiv", cmd_equiv, "decide state equivalence")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("left")
        sp.add_argument("right")
        sp.add_argument("--program", help="program file declaring extra built-ins")
        sp.set_defaults(func=func, saturation=None)

    sp = sub.add_parser("translate", help="print a logical reading of a program")
    sp.add_argument("program")
    sp.add_argument("--to", choices=["axiomatic", "encoding", "classical", "negri"], default="axiomatic")
    _query_flags(sp)
    sp.set_defaults(func=cmd_translate, saturation=None)

    sp = sub.add_parser("certify", help="emit a checked proof certificate for a derivation")
    sp.add_argument("program")
    _query_flags(sp)
    sp.add_argument("--out", help="write the certificate here instead of standard output")
    _budget_flags(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("check-proof", help="check a proof or certificate file")
    sp.add_argument("proof")
    sp.add_argument("--program", help="program supplying the rule axioms (default: embedded text)")
    sp.set_defaults(func=cmd_check_proof, saturation=None)

    sp = sub.add_parser("prove", help="bounded proof search for a sequent")
    sp.add_argument("sequent")
    sp.add_argument("--program", help="program supplying the proper axioms")
    sp.add_argument("--budget", type=int, default=2000)
    sp.add_argument("--max-depth", type=int, default=10)
    sp.set_defaults(func=cmd_prove, saturation=None)

    sp = sub.add_parser("observables", help="list computable states, answers or data-sufficient answers")
    sp.add_argument("program")
    _query_flags(sp)
    sp.add_argument("--kind", choices=["C", "A", "S", "c", "a", "s"], default="A")
    _budget_flags(sp)
    sp.set_defaults(func=cmd_observables)

    sp = sub.add_parser("member", help="membership in the logical observables")
    sp.add_argument("program")
    sp.add_argument("target", help="query name or state text")
    _query_flags(sp)
    sp.add_argument("--kind", choices=["C", "S"], default="C")
    _budget_flags(sp)
    sp.set_defaults(func=cmd_member)

    sp = sub.add_parser("failure", help="check that failure is unreachable")
    sp.add_argument("program")
    _query_flags(sp)
    _budget_flags(sp)
    sp.set_defaults(func=cmd_failure)

    sp = sub.add_parser("sufficient", help="check for a data-sufficient answer")
    sp.add_argument("program")
    _query_flags(sp)
    _budget_flags(sp)
    sp.set_defaults(func=cmd_sufficient)

    sp = sub.add_parser("analytic", help="sufficient analyticness criterion")
    sp.add_argument("program")
    _budget_flags(sp)
    sp.set_defaults(func=cmd_analytic)

    sp = sub.add_parser("compare", help="compare two programs on a query corpus")
    sp.add_argument("program")
    sp.add_argument("other")
    sp.add_argument("--kind", choices=["S", "A", "C"], default="S")
    sp.add_argument("--query", action="append", help="query name or state text (repeatable)")
    sp.add_argument("--max-atoms", type=int, default=2, help="atoms per generated query (default 2)")
    sp.add_argument("--logical", action="store_true", help="check rule simulation in both directions instead")
    _budget_flags(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("safety", help="bounded search for a reachable bad state")
    sp.add_argument("program")
    _query_flags(sp)
    sp.add_argument("--bad", required=True, help="query name or state text")
    _budget_flags(sp)
    sp.set_defaults(func=cmd_safety)
    return ap


def main(argv: list[str] | None = None) -> int:
    seed = os.environ.get("CHRL_SEED")
    reset_fresh(int(seed) if seed and seed.isdigit() else None)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ModeError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (LimitReached, MatchBudgetExceeded, SaturationBudgetExceeded, DnfBlowup) as e:
        print(f"budget: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except CertificationFailed as e:
        print(f"internal: certification failed: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # noqa: BLE001 - last-resort classification
        print(f"internal: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
