"""Run the partial-order solver on a cycle of three inequalities.

The cycle a <= b <= c <= a collapses to a = b = c. The script prints one
committed-choice derivation, the full answer set, and a checked proof
certificate for that derivation.
"""

from pathlib import Path

from chrl.engine import Limits, observables, run
from chrl.lila.axioms import sigma_axioms
from chrl.lila.certify import certify_derivation
from chrl.lila.proof import check_proof
from chrl.syntax import parse_program

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def main():
    program, ct = parse_program((PROGRAMS / "leq.chr").read_text())
    query = program.query("q0")

    derivation = run(query, program, ct)
    print("one derivation:")
    print(derivation.to_trace(ct))

    answers = observables(query, program, ct, "A", Limits(depth=4))
    print("\nanswers found by exhaustive search (depth 4):")
    for config in answers.configs:
        print(" ", config)

    proof = certify_derivation(derivation, program, ct, start=query)
    print("\ncertificate:", proof.conclusion)
    print("checked:", check_proof(proof, sigma_axioms(ct, program)))


if __name__ == "__main__":
    main()
