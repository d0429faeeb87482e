import os
import random
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chrl.cli.main import EXIT_BUDGET, EXIT_FAILS, EXIT_INPUT, EXIT_OK, main
from chrl.states import State
from chrl.syntax import ParseError, format_program, parse_program, parse_state
from oracles import random_program, random_state

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def chrl(*argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_entail_example_pair(capsys):
    code, out, _ = chrl("entail", "<true ; X=3 ; {X}>", "<true ; true ; {}>", capsys=capsys)
    assert code == EXIT_OK and out.startswith("true")
    code, out, _ = chrl("entail", "<true ; true ; {}>", "<true ; X=3 ; {X}>", capsys=capsys)
    assert code == EXIT_FAILS and out.startswith("false")


def test_equiv_prints_both_directions(capsys):
    code, out, _ = chrl("equiv", "<c(X) ; X=a ; {}>", "<c(a) ; {}>", capsys=capsys)
    assert code == EXIT_OK
    assert "left-to-right" in out and "right-to-left" in out


def test_run_explore_prints_the_leq_answer(capsys):
    code, out, _ = chrl("run", PROGRAMS / "leq.chr", "--query", "q0", "--explore", "--depth", "4",
                        capsys=capsys)
    assert code in (EXIT_OK, EXIT_BUDGET)
    answers = out.split("ANSWERS", 1)[1]
    assert "<true ; A = B, A = C ; {A,B,C}>" in answers


def test_run_prints_a_trace(capsys):
    code, out, _ = chrl("run", PROGRAMS / "bird.chr", "--query", "q", capsys=capsys)
    assert code == EXIT_OK
    assert "INIT" in out and "STEP" in out


def test_certify_then_check(tmp_path, capsys):
    proof = tmp_path / "leq.proof"
    code, out, _ = chrl("certify", PROGRAMS / "leq.chr", "--query", "q0", "--out", proof, capsys=capsys)
    assert code == EXIT_OK and "Valid" in out
    code, out, _ = chrl("check-proof", proof, capsys=capsys)
    assert code == EXIT_OK and out.strip() == "Valid"


def test_check_proof_rejects_a_tampered_file(tmp_path, capsys):
    proof = tmp_path / "leq.proof"
    chrl("certify", PROGRAMS / "leq.chr", "--query", "q0", "--out", proof, capsys=capsys)
    text = proof.read_text().replace("(Identity", "(ROne", 1)
    proof.write_text(text)
    code, out, _ = chrl("check-proof", proof, capsys=capsys)
    assert code == EXIT_FAILS and out.startswith("Invalid")


def test_empty_body_is_a_parse_error(tmp_path, capsys):
    with pytest.raises(ParseError):
        parse_program("c <=>.\n")
    bad = tmp_path / "bad.chr"
    bad.write_text("c <=>.\n")
    code, _, err = chrl("run", bad, "--state", "<c ; {}>", capsys=capsys)
    assert code == EXIT_INPUT and "line 1" in err


def test_missing_file_is_an_input_error(capsys):
    code, _, _ = chrl("run", "/nonexistent/p.chr", "--state", "<c ; {}>", capsys=capsys)
    assert code == EXIT_INPUT


def test_truncated_search_exits_with_budget_code(capsys):
    code, out, _ = chrl("observables", PROGRAMS / "leq.chr", "--query", "q0", "--kind", "C",
                        "--depth", "2", capsys=capsys)
    assert code == EXIT_BUDGET


def test_analysis_verdicts_map_to_exit_codes(capsys):
    code, out, _ = chrl("analytic", PROGRAMS / "append_p1.chr", capsys=capsys)
    assert code == EXIT_OK and "VERDICT" in out
    code, out, _ = chrl("analytic", PROGRAMS / "bird.chr", capsys=capsys)
    assert code == EXIT_FAILS


@pytest.mark.parametrize("kind", ["axiomatic", "encoding", "classical", "negri"])
def test_translate_emits_text(kind, capsys):
    code, out, _ = chrl("translate", PROGRAMS / "leq.chr", "--to", kind, capsys=capsys)
    assert code == EXIT_OK and out.strip()


def test_classical_reading_refuses_disjunctive_programs(capsys):
    code, _, err = chrl("translate", PROGRAMS / "bird.chr", "--to", "classical", capsys=capsys)
    assert code == EXIT_INPUT and "pure" in err


def test_example_programs_round_trip():
    for path in sorted(PROGRAMS.glob("*.chr")):
        p, ct = parse_program(path.read_text())
        text = format_program(p, ct)
        p2, ct2 = parse_program(text)
        assert p2.rules == p.rules, path.name
        assert format_program(p2, ct2) == text


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_random_programs_round_trip(seed):
    p = random_program(random.Random(seed))
    p2, _ = parse_program(format_program(p))
    assert p2.rules == p.rules


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_states_round_trip(seed):
    s = random_state(random.Random(seed))
    back = parse_state(str(s))
    assert isinstance(back, State)
    assert back.goal == s.goal and back.globals == s.globals


def test_seeded_runs_are_bit_identical():
    env = dict(os.environ, CHRL_SEED="7")
    cmd = [sys.executable, "-m", "chrl.cli.main", "run", str(PROGRAMS / "leq.chr"),
           "--query", "q0", "--explore", "--depth", "3"]
    first = subprocess.run(cmd, env=env, capture_output=True, text=True)
    second = subprocess.run(cmd, env=env, capture_output=True, text=True)
    assert first.stdout and first.stdout == second.stdout
