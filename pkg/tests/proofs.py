"""Hand transcriptions of two published proof trees and a mutation fuzzer."""

from __future__ import annotations

import random
from dataclasses import replace

from chrl.lila.formulas import Prop, Sequent
from chrl.lila.proof import RULES, ProofTree
from chrl.lila.syntax import parse_sequent as S
from chrl.terms import Fn, Var


def P(rule, seq, *premises, **inst):
    return ProofTree(rule, S(seq), tuple(premises), inst)


def coffee_proof() -> ProofTree:
    """One euro buys a coffee; with unlimited supply of the rule, two coffees."""
    return P("Dereliction", "!(e -o !c) |- e -o c * c",
             P("RLolli", "e -o !c |- e -o c * c",
               P("LLolli", "e -o !c, e |- c * c",
                 P("Identity", "e |- e"),
                 P("Contraction", "!c |- c * c",
                   P("RTensor", "!c, !c |- c * c",
                     P("Dereliction", "!c |- c", P("Identity", "c |- c")),
                     P("Dereliction", "!c |- c", P("Identity", "c |- c")))))))


def coffee_with_bad_contraction() -> ProofTree:
    """Contraction applied to the unbanged coffee."""
    return P("LLolli", "e -o c, e |- c * c",
             P("Identity", "e |- e"),
             P("Contraction", "c |- c * c",
               P("RTensor", "c, c |- c * c", P("Identity", "c |- c"), P("Identity", "c |- c"))))


def soundness_proof() -> ProofTree:
    """exists A.(leq(3,A) * !(A = 3)) |- 1 under the partial-order program."""
    return P("LExists", "exists A. leq(3,A) * !(A = 3) |- 1",
             P("Cut", "leq(3,X) * !(X = 3) |- 1",
               P("Cut", "leq(3,X) * !(X = 3) |- 1 * !(X = 3)",
                 P("SigmaEq", "leq(3,X) * !(X = 3) |- leq(X,X) * !(X = 3)"),
                 P("LTensor", "leq(X,X) * !(X = 3) |- 1 * !(X = 3)",
                   P("RTensor", "leq(X,X), !(X = 3) |- 1 * !(X = 3)",
                     P("SigmaP", "leq(X,X) |- 1"),
                     P("Identity", "!(X = 3) |- !(X = 3)")))),
               P("SigmaCT", "1 * !(X = 3) |- 1")),
             eigen=Var("X"))


def _edit(tree: ProofTree, path: tuple[int, ...], fn) -> ProofTree:
    if not path:
        return fn(tree)
    kids = list(tree.premises)
    kids[path[0]] = _edit(kids[path[0]], path[1:], fn)
    return replace(tree, premises=tuple(kids))


JUNK = Prop("junk", ())


def mutations(tree: ProofTree, count: int, seed: int = 0) -> list[tuple[str, ProofTree]]:
    """``count`` distinct single-node mutations of ``tree``."""
    rng = random.Random(seed)
    nodes = list(tree.nodes())
    out: list[tuple[str, ProofTree]] = []
    seen = set()
    while len(out) < count:
        path, node = rng.choice(nodes)
        kind = rng.choice(["rule", "drop", "add", "consequent", "inst"])
        seq = node.conclusion
        if kind == "rule":
            other = rng.choice([r for r in RULES if r != node.rule])
            new = lambda n, o=other: replace(n, rule=o)
        elif kind == "drop" and seq.antecedent:
            i = rng.randrange(len(seq.antecedent))
            ante = seq.antecedent[:i] + seq.antecedent[i + 1:]
            new = lambda n, a=ante: replace(n, conclusion=Sequent(a, n.conclusion.consequent))
        elif kind == "add":
            new = lambda n: replace(n, conclusion=Sequent(n.conclusion.antecedent + (JUNK,),
                                                          n.conclusion.consequent))
        elif kind == "consequent":
            new = lambda n: replace(n, conclusion=Sequent(n.conclusion.antecedent, JUNK))
        elif kind == "inst" and node.inst:
            key = rng.choice(sorted(node.inst))
            value = Var("Fresh") if key == "eigen" else Fn("zz") if key == "term" else "nosuchrule"
            new = lambda n, k=key, v=value: replace(n, inst={**n.inst, k: v})
        else:
            continue
        label = f"{kind}@{'.'.join(map(str, path)) or 'root'}"
        if label in seen and kind != "rule":
            continue
        mutated = _edit(tree, path, new)
        if mutated == tree:
            continue
        seen.add(label)
        out.append((label, mutated))
    return out
