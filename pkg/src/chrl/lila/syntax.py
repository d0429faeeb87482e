"""Text formats for formulas, sequents and proof trees.

Formula syntax, loosest binding first::

    formula ::= sum "-o" formula | sum
    sum     ::= choice "+" sum | choice
    choice  ::= prod "&" choice | prod
    prod    ::= unary "*" prod | unary
    unary   ::= "!" unary | "forall" VAR "." formula | "exists" VAR "." formula
              | "1" | "0" | "top" | "(" formula ")" | pred | term CMP term
    sequent ::= [formula ("," formula)*] "|-" formula

Terms inside atoms use functional notation for arithmetic, e.g.
``'+'(X,1)``.  Proof trees are nested s-expressions::

    proof ::= "(" RULE "(sequent" STRING ")" "(inst" (KEY "=" STRING)* ")" proof* ")"
    file  ::= proof | "(certificate" "(program" STRING ")" proof ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError, UnexpectedInput

from chrl.syntax import ParseError, parse_term
from chrl.terms import NIL, Fn, Term, Var, format_term, make_list
from chrl.lila.formulas import (
    ONE,
    TOP,
    ZERO,
    Bang,
    Exists,
    Forall,
    Formula,
    Lolli,
    Plus,
    Prop,
    Sequent,
    Tensor,
    With,
    format_sequent,
)
from chrl.lila.proof import ProofTree

FORMULA_GRAMMAR = r"""
sequent: [formula ("," formula)*] TURNSTILE formula
?formula: sum LOLLI formula               -> lolli
        | sum
?sum: choice "+" sum                      -> plus
    | choice
?choice: prod "&" choice                  -> with_
       | prod
?prod: unary "*" prod                     -> tensor
     | unary
?unary: "!" unary                         -> bang
      | FORALL VAR "." formula            -> forall
      | EXISTS VAR "." formula            -> exists
      | atomic
?atomic: INT                              -> unit
       | TOPK                             -> top
       | "(" formula ")"
       | name                             -> pred0
       | name "(" fterm ("," fterm)* ")"  -> pred
       | fterm CMP fterm                  -> cmp
?fterm: VAR                               -> var
      | INT                               -> int_
      | "-" INT                           -> negint
      | name                              -> const
      | name "(" fterm ("," fterm)* ")"   -> compound
      | "[" "]"                           -> nil
      | "[" fterm ("," fterm)* list_tail? "]" -> list_
list_tail: "|" fterm
name: NAME | QUOTED

TURNSTILE: "|-"
LOLLI: "-o"
FORALL.2: "forall"
EXISTS.2: "exists"
TOPK.2: "top"
CMP: "=<" | ">=" | "<" | ">" | "="
VAR: /[A-Z_][A-Za-z0-9_]*/
NAME: /[a-z][A-Za-z0-9_]*/
QUOTED: /'(\\.|[^'\\])*'/
INT: /[0-9]+/
%import common.WS
%ignore WS
"""

_PARSERS: dict[str, Lark] = {}


def _parser(start: str) -> Lark:
    if start not in _PARSERS:
        _PARSERS[start] = Lark(FORMULA_GRAMMAR, start=start, parser="lalr", maybe_placeholders=True)
    return _PARSERS[start]


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


@dataclass(frozen=True)
class _Tail:
    term: Term


@v_args(inline=True)
class _FormulaBuilder(Transformer):
    def sequent(self, *parts):
        parts = [p for p in parts if p is not None and getattr(p, "type", None) != "TURNSTILE"]
        return Sequent(tuple(parts[:-1]), parts[-1])

    def lolli(self, a, _tok, b):
        return Lolli(a, b)

    def plus(self, a, b):
        return Plus(a, b)

    def with_(self, a, b):
        return With(a, b)

    def tensor(self, a, b):
        return Tensor(a, b)

    def bang(self, a):
        return Bang(a)

    def forall(self, _kw, v, body):
        return Forall(Var(str(v)), body)

    def exists(self, _kw, v, body):
        return Exists(Var(str(v)), body)

    def unit(self, tok):
        if str(tok) == "1":
            return ONE
        if str(tok) == "0":
            return ZERO
        raise ParseError(f"number {tok} used as a formula", tok.line, tok.column)

    def top(self, _tok):
        return TOP

    def name(self, tok):
        return _unquote(str(tok)) if tok.type == "QUOTED" else str(tok)

    def pred0(self, name):
        return Prop(name, ())

    def pred(self, name, *args):
        return Prop(name, tuple(args))

    def cmp(self, a, op, b):
        return Prop(str(op), (a, b))

    def var(self, tok):
        return Var(str(tok))

    def int_(self, tok):
        return Fn(int(tok))

    def negint(self, tok):
        return Fn(-int(tok))

    def const(self, name):
        return Fn(name)

    def compound(self, name, *args):
        return Fn(name, tuple(args))

    def nil(self):
        return NIL

    def list_tail(self, t):
        return _Tail(t)

    def list_(self, *items):
        items = [i for i in items if i is not None]
        tail = items[-1].term if items and isinstance(items[-1], _Tail) else NIL
        elems = [i for i in items if not isinstance(i, _Tail)]
        return make_list(elems, tail)


def _run(text: str, start: str):
    try:
        tree = _parser(start).parse(text)
        return _FormulaBuilder().transform(tree)
    except UnexpectedInput as e:
        raise ParseError(f"unexpected input in {start}", e.line, e.column) from None
    except LarkError as e:
        inner = getattr(e, "orig_exc", None)
        if isinstance(inner, ParseError):
            raise inner from None
        raise ParseError(str(inner or e)) from None


def parse_formula(text: str) -> Formula:
    return _run(text, "formula")


def parse_sequent(text: str) -> Sequent:
    return _run(text, "sequent")


# ------------------------------------------------------------- s-expressions

_TOKEN = re.compile(r'\s*(?:(\()|(\))|"((?:\\.|[^"\\])*)"|([^\s()"=]+)=|([^\s()"]+))', re.S)


def _tokens(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                return
            raise ParseError(f"bad proof syntax near {text[pos:pos + 20]!r}")
        pos = m.end()
        if m.group(1):
            yield ("(", None)
        elif m.group(2):
            yield (")", None)
        elif m.group(3) is not None:
            yield ("str", re.sub(r"\\(.)", r"\1", m.group(3)))
        elif m.group(4):
            yield ("key", m.group(4))
        elif m.group(5):
            yield ("sym", m.group(5))


def _read(tokens: list, i: int):
    kind, val = tokens[i]
    if kind != "(":
        return val if kind in ("str", "sym") else (kind, val), i + 1
    out = []
    i += 1
    while i < len(tokens) and tokens[i][0] != ")":
        if tokens[i][0] == "key":
            key = tokens[i][1]
            if i + 1 >= len(tokens) or tokens[i + 1][0] != "str":
                raise ParseError(f"instantiation key {key} lacks a quoted value")
            out.append((key, tokens[i + 1][1]))
            i += 2
            continue
        item, i = _read(tokens, i)
        out.append(item)
    if i >= len(tokens):
        raise ParseError("unbalanced parentheses in proof")
    return out, i + 1


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _inst_to_text(key: str, value) -> str:
    if isinstance(value, (Var, Fn)):
        return format_term(value)
    return str(value)


def _inst_from_text(key: str, text: str):
    if key == "eigen":
        return Var(text)
    if key == "term":
        return parse_term(text, allow_reserved=True)
    return text


def format_proof(t: ProofTree, indent: int = 0) -> str:
    pad = "  " * indent
    inst = " ".join(f"{k}={_quote(_inst_to_text(k, v))}" for k, v in sorted(t.inst.items()))
    head = f"{pad}({t.rule} (sequent {_quote(format_sequent(t.conclusion))}) (inst{' ' + inst if inst else ''})"
    if not t.premises:
        return head + ")"
    kids = "\n".join(format_proof(p, indent + 1) for p in t.premises)
    return f"{head}\n{kids})"


def _to_tree(node) -> ProofTree:
    if not isinstance(node, list) or not node or not isinstance(node[0], str):
        raise ParseError("proof node must start with a rule name")
    rule = node[0]
    rest = node[1:]
    if not rest or not isinstance(rest[0], list) or rest[0][:1] != ["sequent"] or len(rest[0]) != 2:
        raise ParseError(f"{rule}: missing (sequent \"...\")")
    seq = parse_sequent(rest[0][1])
    rest = rest[1:]
    inst = {}
    if rest and isinstance(rest[0], list) and rest[0][:1] == ["inst"]:
        for kv in rest[0][1:]:
            if not isinstance(kv, tuple):
                raise ParseError(f"{rule}: malformed instantiation entry")
            inst[kv[0]] = _inst_from_text(kv[0], kv[1])
        rest = rest[1:]
    return ProofTree(rule, seq, tuple(_to_tree(c) for c in rest), inst)


@dataclass
class Certificate:
    tree: ProofTree
    program_text: str | None = None


def parse_proof_file(text: str) -> Certificate:
    tokens = list(_tokens(text))
    if not tokens:
        raise ParseError("empty proof file")
    node, i = _read(tokens, 0)
    if i != len(tokens):
        raise ParseError("trailing input after proof")
    if isinstance(node, list) and node and node[0] == "certificate":
        prog = None
        tree = None
        for item in node[1:]:
            if isinstance(item, list) and item[:1] == ["program"] and len(item) == 2:
                prog = item[1]
            else:
                tree = item
        if tree is None:
            raise ParseError("certificate without a proof")
        return Certificate(_to_tree(tree), prog)
    return Certificate(_to_tree(node), None)


def parse_proof(text: str) -> ProofTree:
    return parse_proof_file(text).tree


def format_certificate(t: ProofTree, program_text: str | None = None) -> str:
    if program_text is None:
        return format_proof(t) + "\n"
    return f"(certificate (program {_quote(program_text)})\n{format_proof(t, 1)})\n"
