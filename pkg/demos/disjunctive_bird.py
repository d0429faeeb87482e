"""Branching with disjunctive rule bodies.

A bird is an albatross or a penguin, and penguins do not fly. Starting from
a flying bird, only the albatross branch survives, so no answer leaves the
user store empty.
"""

from pathlib import Path

from chrl.analysis import analytic_criterion, assure_data_sufficient, exclude_failure
from chrl.engine import derive
from chrl.syntax import parse_program

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def main():
    program, ct = parse_program((PROGRAMS / "bird.chr").read_text())
    tree = derive(program.query("q"), program, ct, on_limit="flag")
    for key in tree.answers:
        print("final configuration:", tree.nodes[key].config)

    print()
    print(assure_data_sufficient(program.query("q"), program, ct).to_text())
    print(exclude_failure(program.query("penguin"), program, ct).to_text())
    print(analytic_criterion(program, ct).to_text())


if __name__ == "__main__":
    main()
