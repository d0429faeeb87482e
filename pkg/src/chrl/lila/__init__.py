"""Linear-logic kernel: formulas, translations, proper axioms, proof
checking, certification and bounded proof search."""
