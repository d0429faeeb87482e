"""Concrete syntax for programs, goals, states and configurations.

EBNF of the program file format::

    file       ::= item*
    item       ::= directive | axiom | query | rule
    directive  ::= ":-" "mode" ("pure" | "vee") "."
                 | ":-" "confluent" "."
                 | ":-" "builtin" NAME "/" INT ("," NAME "/" INT)* "."
    axiom      ::= "axiom" [exists] conj "==>" [exists] conj "."
    exists     ::= "exists" VAR ("," VAR)* ":"
    query      ::= "query" NAME "=" config "."
    rule       ::= [NAME "@"] conj ["\\" conj] ("<=>" | "==>") [conj "|"] goal "."
    goal       ::= conj (";" conj)*          (";" is disjunction)
    conj       ::= cmp ("," cmp)*
    cmp        ::= sum [("=" | "=<" | ">=" | "<" | ">") sum]
    sum        ::= prod (("+" | "-") prod)*
    prod       ::= unary (("*" | "mod" | "/") unary)*
    unary      ::= "-" unary | primary
    primary    ::= VAR | INT | name ["(" cmp ("," cmp)* ")"] | list | "(" goal ")"
    list       ::= "[" "]" | "[" cmp ("," cmp)* ["|" cmp] "]"
    name       ::= NAME | QUOTED
    state      ::= "<" conj ";" varset ">" | "<" conj ";" conj ";" varset ">"
    config     ::= "eps" | state (";" state)*
    varset     ::= "{" [VAR ("," VAR)*] "}"

``%`` starts a comment.  ``true`` is the empty goal and ``false`` is
falsity.  A disjunction inside a state must be parenthesized, because a
top-level ``;`` separates the state components.  Variables starting with
``_V`` are reserved for generated names.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError, UnexpectedInput

from chrl.ct import (
    ARITH,
    FALSE,
    FALSITY,
    STANDARD_BUILTINS,
    Atom,
    CTAxiom,
    CTheory,
)
from chrl.engine import ModeError, Program, Rule
from chrl.states import (
    TOP,
    And,
    Configuration,
    Goal,
    NormalState,
    Or,
    State,
    goal_atoms,
    is_flat,
)
from chrl.terms import FRESH_PREFIX, NIL, Fn, Term, Var, make_list

GRAMMAR = r"""
start: item*
?item: directive | axiom | query | rule

directive: ":-" MODE NAME "."            -> mode
         | ":-" CONFLUENT "."            -> confluent
         | ":-" BUILTIN sig ("," sig)* "." -> builtins
sig: name "/" INT

axiom: AXIOM exprefix? t1000 PROP exprefix? t1000 "."
exprefix: EXISTS VAR ("," VAR)* ":"

query: QUERY NAME "=" config "."

rule: label? t1000 ("\\" t1000)? (SIMP | PROP) t1100 ("|" t1100)? "."
label: NAME "@"
SIMP.3: "<=>"
PROP.3: "==>"

config: state (";" state)*
      | EPS                              -> eps_config
state: LT t1000 ";" varset GT            -> binary_state
     | LT t1000 ";" t1000 ";" varset GT  -> ternary_state
varset: "{" [VAR ("," VAR)*] "}"

?t1100: t1000 ";" t1100                  -> or_
      | t1000
?t1000: t700 "," t1000                   -> and_
      | t700
?t700: t500 comp t500                    -> binop
     | t500
comp: EQ | LE | GE | LT | GT
?t500: t500 PLUS t400                    -> binop_arith
     | t500 MINUS t400                   -> binop_arith
     | t400
?t400: t400 MULOP t200                   -> binop_arith
     | t200
?t200: MINUS t200                        -> neg
     | primary
?primary: VAR                            -> var
        | INT                            -> int_
        | name                           -> const
        | name "(" t700 ("," t700)* ")"  -> compound
        | "[" "]"                        -> nil
        | "[" t700 ("," t700)* list_tail? "]" -> list_
        | "(" t1100 ")"
name: NAME | QUOTED
list_tail: "|" t700

MODE.2: "mode"
CONFLUENT.2: "confluent"
BUILTIN.2: "builtin"
AXIOM.2: "axiom"
EXISTS.2: "exists"
QUERY.2: "query"
EPS.2: "eps"
EQ: "="
LE: "=<"
GE: ">="
LT: "<"
GT: ">"
PLUS: "+"
MINUS: "-"
MULOP: "*" | "mod" | "/"
VAR: /[A-Z_][A-Za-z0-9_]*/
NAME: /[a-z][A-Za-z0-9_]*/
QUOTED: /'(\\.|[^'\\])*'/
INT: /[0-9]+/
COMMENT: /%[^\n]*/
%import common.WS
%ignore WS
%ignore COMMENT
"""


class ParseError(Exception):
    """Syntax error with 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        super().__init__(f"{message} (line {line}, column {column})" if line else message)
        self.line = line
        self.column = column


# Raw syntax: terms are Fn/Var; conjunction and disjunction are tagged tuples.

@dataclass(frozen=True)
class _Conn:
    op: str  # "," or ";"
    left: object
    right: object


@dataclass(frozen=True)
class _Item:
    kind: str
    data: tuple
    line: int = 0
    column: int = 0


def _unquote(s: str) -> str:
    out, i = [], 1
    while i < len(s) - 1:
        if s[i] == "\\":
            out.append(s[i + 1])
            i += 2
        else:
            out.append(s[i])
            i += 1
    return "".join(out)


@v_args(inline=True)
class _Builder(Transformer):
    def __init__(self, allow_reserved: bool) -> None:
        super().__init__()
        self.allow_reserved = allow_reserved
        self.anon = itertools.count()

    def start(self, *items):
        return list(items)

    def name(self, tok):
        return _unquote(str(tok)) if tok.type == "QUOTED" else str(tok)

    def var(self, tok):
        name = str(tok)
        if name == "_":
            return Var(f"_A{next(self.anon)}")
        if name.startswith(FRESH_PREFIX) and not self.allow_reserved:
            raise ParseError(f"variable prefix {FRESH_PREFIX} is reserved", tok.line, tok.column)
        return Var(name)

    def int_(self, tok):
        return Fn(int(tok))

    def const(self, name):
        return Fn(name)

    def compound(self, name, *args):
        return Fn(name, tuple(args))

    def nil(self):
        return NIL

    def list_(self, *items):
        return ("list", [x for x in items if x is not None])

    def list_tail(self, t):
        return _ListTail(t)

    def neg(self, _minus, t):
        if isinstance(t, Fn) and isinstance(t.functor, int):
            return Fn(-t.functor)
        return Fn("-", (Fn(0), t))

    def binop_arith(self, a, op, b):
        return Fn(str(op), (a, b))

    def comp(self, tok):
        return str(tok)

    def binop(self, a, op, b):
        return Fn(op, (a, b))

    def and_(self, a, b):
        return _Conn(",", a, b)

    def or_(self, a, b):
        return _Conn(";", a, b)

    def varset(self, *vs):
        return frozenset(self.var(v) for v in vs if v is not None)

    def binary_state(self, _lt, goal, vs, _gt):
        return ("state2", goal, vs)

    def ternary_state(self, _lt, user, builtin, vs, _gt):
        return ("state3", user, builtin, vs)

    def config(self, *states):
        return ("config", list(states))

    def eps_config(self, _tok):
        return ("config", [])

    def label(self, tok):
        return ("label", str(tok))

    def sig(self, name, arity):
        return (name, int(arity))

    def mode(self, _kw, tok):
        return _Item("mode", (str(tok),), tok.line, tok.column)

    def confluent(self, tok):
        return _Item("confluent", (), tok.line, tok.column)

    def builtins(self, tok, *sigs):
        return _Item("builtin", sigs, tok.line, tok.column)

    def exprefix(self, _kw, *vs):
        return ("exists", [self.var(v) for v in vs])

    def axiom(self, kw, *parts):
        parts = [p for p in parts if getattr(p, "type", None) != "PROP"]
        ex_l = parts.pop(0)[1] if isinstance(parts[0], tuple) and parts[0][0] == "exists" else []
        lhs = parts.pop(0)
        ex_r = parts.pop(0)[1] if isinstance(parts[0], tuple) and parts[0][0] == "exists" else []
        rhs = parts.pop(0)
        return _Item("axiom", (ex_l, lhs, ex_r, rhs), kw.line, kw.column)

    def query(self, kw, name, cfg):
        return _Item("query", (str(name), cfg), kw.line, kw.column)

    def rule(self, *parts):
        parts = list(parts)
        label = parts.pop(0)[1] if isinstance(parts[0], tuple) and parts[0][0] == "label" else None
        arrow_at = next(i for i, p in enumerate(parts) if getattr(p, "type", None) in ("SIMP", "PROP"))
        heads = parts[:arrow_at]
        arrow = parts[arrow_at]
        rest = parts[arrow_at + 1:]
        guard, body = (rest[0], rest[1]) if len(rest) == 2 else (None, rest[0])
        return _Item("rule", (label, heads, str(arrow), guard, body), arrow.line, arrow.column)


_PARSER_CACHE: dict[str, Lark] = {}


def _parser(start: str) -> Lark:
    if start not in _PARSER_CACHE:
        _PARSER_CACHE[start] = Lark(GRAMMAR, start=start, parser="lalr",
                                    propagate_positions=False, maybe_placeholders=True)
    return _PARSER_CACHE[start]


def _parse(text: str, start: str, allow_reserved: bool):
    try:
        tree = _parser(start).parse(text)
    except UnexpectedInput as e:
        raise ParseError(f"unexpected input: {_snippet(text, e)}", e.line, e.column) from None
    except LarkError as e:
        raise ParseError(str(e)) from None
    try:
        return _Builder(allow_reserved).transform(tree)
    except LarkError as e:
        inner = getattr(e, "orig_exc", None)
        if isinstance(inner, (ParseError, ModeError)):
            raise inner from None
        raise ParseError(str(inner or e)) from None


def _snippet(text: str, e: UnexpectedInput) -> str:
    try:
        return repr(e.get_context(text, 20).strip())
    except Exception:  # pragma: no cover - context is best effort
        return "?"


# ---------------------------------------------------------- raw -> semantics

class _Converter:
    def __init__(self, builtins: Iterable[tuple[str, int]]) -> None:
        self.builtins = frozenset(builtins)

    def term(self, t, pos=(0, 0)) -> Term:
        if isinstance(t, (Var, Fn)):
            if isinstance(t, Fn) and t.args:
                return Fn(t.functor, tuple(self.term(a, pos) for a in t.args))
            return t
        if isinstance(t, tuple) and t[0] == "list":
            return _build_list(t[1], self)
        raise ParseError(f"expected a term, found {self._show(t)}", *pos)

    def _show(self, t) -> str:
        if isinstance(t, _Conn):
            return "a conjunction" if t.op == "," else "a disjunction"
        return str(t)

    def goal(self, t, pos=(0, 0)) -> Goal:
        if isinstance(t, _Conn):
            left, right = self.goal(t.left, pos), self.goal(t.right, pos)
            if t.op == ",":
                if left == TOP:
                    return right
                if right == TOP:
                    return left
                return And(left, right)
            return Or(left, right)
        t = self.term(t, pos)
        if isinstance(t, Var):
            raise ParseError(f"variable {t} used as a constraint", *pos)
        if isinstance(t.functor, int):
            raise ParseError(f"number {t} used as a constraint", *pos)
        if t.functor == "true" and not t.args:
            return TOP
        if t.functor == FALSE and not t.args:
            return FALSITY
        if t.functor in ARITH and len(t.args) == 2 and (t.functor, 2) not in self.builtins:
            raise ParseError(f"arithmetic term {t} used as a constraint", *pos)
        builtin = (t.functor, len(t.args)) in self.builtins
        return Atom(t.functor, t.args, builtin)

    def atoms(self, t, pos=(0, 0)) -> tuple[Atom, ...]:
        g = self.goal(t, pos)
        if not is_flat(g):
            raise ParseError("disjunction not allowed here", *pos)
        return tuple(goal_atoms(g))

    def state(self, raw, pos=(0, 0)):
        if raw[0] == "state2":
            _, goal, vs = raw
            return State(self.goal(goal, pos), vs)
        _, user, builtin, vs = raw
        u, b = self.atoms(user, pos), self.atoms(builtin, pos)
        if any(a.builtin for a in u):
            raise ParseError("built-in constraint in the user store", *pos)
        if any(not a.builtin for a in b):
            raise ParseError("user-defined constraint in the built-in store", *pos)
        return NormalState(u, b, vs)

    def config(self, raw, pos=(0, 0)) -> Configuration:
        return Configuration(tuple(self.state(s, pos) for s in raw[1]))


def _build_list(items, conv: _Converter) -> Term:
    elems = [conv.term(x) for x in items if not isinstance(x, _ListTail)]
    tails = [conv.term(x.term) for x in items if isinstance(x, _ListTail)]
    return make_list(elems, tails[0] if tails else NIL)


@dataclass(frozen=True)
class _ListTail:
    term: object


# --------------------------------------------------------------- public API

def parse_program(text: str, allow_reserved: bool = False) -> tuple[Program, CTheory]:
    """Parse a program file into a :class:`Program` and its :class:`CTheory`."""
    items = _parse(text, "start", allow_reserved)
    mode, confluent, declared = "pure", False, []
    for it in items:
        if it.kind == "mode":
            if it.data[0] not in ("pure", "vee"):
                raise ParseError(f"unknown mode {it.data[0]!r}", it.line, it.column)
            mode = it.data[0]
        elif it.kind == "confluent":
            confluent = True
        elif it.kind == "builtin":
            declared.extend(it.data)
    builtins = STANDARD_BUILTINS | frozenset(declared)
    conv = _Converter(builtins)
    rules, axioms, queries = [], [], []
    for it in items:
        pos = (it.line, it.column)
        if it.kind == "rule":
            label, heads, arrow, guard, body = it.data
            rules.append(_make_rule(conv, label or f"r{len(rules) + 1}", heads, arrow,
                                    guard, body, mode, pos))
        elif it.kind == "axiom":
            ex_l, lhs, ex_r, rhs = it.data
            axioms.append(CTAxiom(tuple(ex_l), conv.atoms(lhs, pos), tuple(ex_r), conv.atoms(rhs, pos)))
        elif it.kind == "query":
            name, cfg = it.data
            c = conv.config(cfg, pos)
            q = c.members[0] if len(c.members) == 1 else c
            if mode == "pure" and any(not is_flat(m.goal if isinstance(m, State) else TOP)
                                      for m in c.members):
                raise ModeError(f"query {name}: disjunction in a pure program")
            queries.append((name, q))
    ct = CTheory(tuple(axioms), builtins=builtins)
    program = Program(tuple(rules), mode, confluent, tuple(queries))
    return program, ct


def _make_rule(conv, rid, heads, arrow, guard, body, mode, pos) -> Rule:
    if len(heads) == 2:
        kept, removed = conv.atoms(heads[0], pos), conv.atoms(heads[1], pos)
        if arrow != "<=>":
            raise ParseError("simpagation rules use <=>", *pos)
    elif arrow == "<=>":
        kept, removed = (), conv.atoms(heads[0], pos)
    else:
        kept, removed = conv.atoms(heads[0], pos), ()
    for a in [*kept, *removed]:
        if a.builtin:
            raise ParseError(f"rule {rid}: built-in constraint {a} in the head", *pos)
    g = conv.atoms(guard, pos) if guard is not None else ()
    for a in g:
        if not a.builtin:
            raise ParseError(f"rule {rid}: user constraint {a} in the guard", *pos)
    b = conv.goal(body, pos)
    if mode == "pure" and not is_flat(b):
        raise ModeError(f"rule {rid}: disjunction in a pure program")
    return Rule(rid, kept, removed, g, b)


def _converter(ct: CTheory | None) -> _Converter:
    return _Converter(ct.builtins if ct is not None else STANDARD_BUILTINS)


def parse_goal(text: str, ct: CTheory | None = None, allow_reserved: bool = False) -> Goal:
    return _converter(ct).goal(_parse(text, "t1100", allow_reserved))


def parse_term(text: str, allow_reserved: bool = False) -> Term:
    return _converter(None).term(_parse(text, "t700", allow_reserved))


def parse_state(text: str, ct: CTheory | None = None, allow_reserved: bool = False):
    """Parse ``<Goal ; {V}>`` into a :class:`State` or ``<U ; B ; {V}>`` into
    a :class:`NormalState`."""
    return _converter(ct).state(_parse(text, "state", allow_reserved))


def parse_config(text: str, ct: CTheory | None = None, allow_reserved: bool = False) -> Configuration:
    return _converter(ct).config(_parse(text, "config", allow_reserved))


def parse_state_or_config(text: str, ct: CTheory | None = None, allow_reserved: bool = False):
    c = parse_config(text, ct, allow_reserved)
    return c.members[0] if len(c.members) == 1 else c


# ----------------------------------------------------------------- printing

def format_program(p: Program, ct: CTheory | None = None) -> str:
    lines = []
    if p.mode != "pure":
        lines.append(f":- mode {p.mode}.")
    if p.confluent:
        lines.append(":- confluent.")
    if ct is not None:
        extra = sorted(ct.builtins - STANDARD_BUILTINS)
        if extra:
            lines.append(":- builtin " + ", ".join(f"{_fname(n)}/{k}" for n, k in extra) + ".")
        lines.extend(str(ax) for ax in ct.axioms)
    lines.extend(str(r) for r in p.rules)
    for name, q in p.queries:
        lines.append(f"query {name} = {q}.")
    return "\n".join(lines) + "\n"


def _fname(n: str) -> str:
    from chrl.terms import format_functor

    return format_functor(n)
