"""A program that passes the analyticness criterion but reaches a
non-compact configuration.

Every pair of branches of c(X) <=> X = a ; X = b is contradictory, yet
when X is bound to a variable local to the whole state, hiding that
variable makes both branches the empty state.
"""

from chrl.analysis import analytic_criterion, compactness_probe
from chrl.syntax import parse_program, parse_state

PROGRAM = ":- mode vee.\nc(X) <=> X = a ; X = b.\n"


def main():
    program, ct = parse_program(PROGRAM)
    print(analytic_criterion(program, ct).to_text())
    for text in ("<c(Z) ; {Z}>", "<c(Z) ; {}>"):
        found = compactness_probe(parse_state(text), program, ct)
        print(f"{text}: {'non-compact ' + str(found[0]) if found else 'all reachable configurations compact'}")


if __name__ == "__main__":
    main()
