"""Constraint Handling Rules with disjunction under equivalence-based
semantics, with a linear-logic backend for translation, proof checking
and program reasoning."""

__version__ = "0.1.0"
