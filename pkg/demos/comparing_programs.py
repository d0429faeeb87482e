"""Two ways of telling programs apart.

The a/b pair agrees on every data-sufficient answer but not on the states
it passes through. The c(X) pair differs already on data-sufficient answers,
because the extra rule c(X) <=> true throws the bound away.
"""

from pathlib import Path

from chrl.analysis import compare_programs_operational, logical_program_implication
from chrl.syntax import parse_program

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def load(name):
    return parse_program((PROGRAMS / f"{name}.chr").read_text())


def main():
    first, ct = load("ab_first")
    second, _ = load("ab_second")
    for kind in ("S", "C"):
        print(f"a/b programs, kind {kind}:")
        print(compare_programs_operational(first, second, ct, kind).to_text())

    first, ct = load("c_geq")
    second, _ = load("c_geq_or_true")
    print("c(X) programs, kind S:")
    print(compare_programs_operational(first, second, ct, "S", corpus=[first.query("q")]).to_text())
    print("does the bounded program simulate the extra rule?")
    print(logical_program_implication(first, second, ct).to_text())


if __name__ == "__main__":
    main()
