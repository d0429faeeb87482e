"""First-order terms, substitutions, matching and unification.

Terms are immutable.  A :class:`Var` is a variable, a :class:`Fn` is a
compound whose functor is a string or an integer; zero-arity compounds are
constants.  Substitutions are plain dicts from :class:`Var` to terms and are
kept in triangular form: :func:`apply_subst` chases bindings to a fixpoint.
"""

from __future__ import annotations

import itertools
import os
import re
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

FRESH_PREFIX = "_V"


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Fn:
    functor: Union[str, int]
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        return format_term(self)


Term = Union[Var, Fn]
Subst = dict[Var, Term]


class _Failure:
    __slots__ = ("label",)

    def __init__(self, label: str) -> None:
        self.label = label

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        return self.label


NoMatch = _Failure("NoMatch")
Clash = _Failure("Clash")

NIL = Fn("[]")


def const(value: Union[str, int]) -> Fn:
    return Fn(value)


def cons(head: Term, tail: Term) -> Fn:
    return Fn(".", (head, tail))


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = cons(item, out)
    return out


def is_int(t: Term) -> bool:
    return isinstance(t, Fn) and isinstance(t.functor, int)


def variables(t: Term) -> Iterator[Var]:
    """Variables of ``t`` in left-to-right first-occurrence order (with repeats)."""
    if isinstance(t, Var):
        yield t
    else:
        for a in t.args:
            yield from variables(a)


def term_vars(t: Term) -> set[Var]:
    return set(variables(t))


def is_ground(t: Term) -> bool:
    return next(variables(t), None) is None


def occurs(v: Var, t: Term, s: Mapping[Var, Term]) -> bool:
    t = walk(t, s)
    if t == v:
        return True
    if isinstance(t, Fn):
        return any(occurs(v, a, s) for a in t.args)
    return False


def walk(t: Term, s: Mapping[Var, Term]) -> Term:
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def apply_subst(s: Mapping[Var, Term], t: Term) -> Term:
    if not s:
        return t
    if isinstance(t, Var):
        if t in s:
            return apply_subst(s, s[t])
        return t
    if not t.args:
        return t
    return Fn(t.functor, tuple(apply_subst(s, a) for a in t.args))


def normalize_subst(s: Mapping[Var, Term]) -> Subst:
    """Resolve a triangular substitution into idempotent form."""
    return {v: apply_subst(s, t) for v, t in s.items()}


def term_order_key(t: Term) -> tuple:
    """Total structural order used for sorting atoms and stores."""
    if isinstance(t, Var):
        return (0, t.name)
    if isinstance(t.functor, int):
        return (1, t.functor)
    return (2, t.functor, len(t.args), tuple(term_order_key(a) for a in t.args))


def match_one_sided(pattern: Term, target: Term, s: Subst | None = None):
    """Bind only variables of ``pattern`` so that it becomes ``target``."""
    s = dict(s) if s else {}
    stack = [(pattern, target)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            if p in s:
                if s[p] != t:
                    return NoMatch
            else:
                s[p] = t
        elif isinstance(t, Var):
            return NoMatch
        elif p.functor != t.functor or len(p.args) != len(t.args):
            return NoMatch
        else:
            stack.extend(zip(p.args, t.args))
    return s


def unify(t1: Term, t2: Term, s: Subst | None = None, bindable=None):
    """Most general unifier with occurs check.

    ``bindable`` optionally restricts which variables may be bound; all other
    variables behave as rigid constants.  The result is triangular; use
    :func:`normalize_subst` for idempotent form.
    """
    s = dict(s) if s else {}
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a, s), walk(b, s)
        if a == b:
            continue
        if isinstance(a, Var) and (bindable is None or a in bindable):
            if occurs(a, b, s):
                return Clash
            s[a] = b
        elif isinstance(b, Var) and (bindable is None or b in bindable):
            if occurs(b, a, s):
                return Clash
            s[b] = a
        elif isinstance(a, Fn) and isinstance(b, Fn):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return Clash
            stack.extend(zip(a.args, b.args))
        else:
            return Clash
    return s


class _FreshCounter:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.reset()

    def reset(self, base: int | None = None) -> None:
        if base is None:
            base = int(os.environ.get("CHRL_SEED", "0"))
        with self._lock:
            self._it = itertools.count(base)

    def next(self) -> int:
        with self._lock:
            return next(self._it)


_counter = _FreshCounter()


def reset_fresh(base: int | None = None) -> None:
    """Restart the fresh-name counter (``CHRL_SEED`` gives the default base)."""
    _counter.reset(base)


def fresh_var(hint: str = "") -> Var:
    return Var(f"{FRESH_PREFIX}{_counter.next()}")


def substitute(mapping: Mapping[Var, Term], t: Term) -> Term:
    """Simultaneous (single-pass) substitution; safe for swaps."""
    if not mapping:
        return t
    if isinstance(t, Var):
        return mapping.get(t, t)
    if not t.args:
        return t
    return Fn(t.functor, tuple(substitute(mapping, a) for a in t.args))


_PLAIN = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


def format_functor(f: Union[str, int]) -> str:
    if isinstance(f, int):
        return str(f)
    if f == "[]" or _PLAIN.match(f):
        return f
    return "'" + f.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if t.functor == "." and len(t.args) == 2:
        items = []
        while isinstance(t, Fn) and t.functor == "." and len(t.args) == 2:
            items.append(format_term(t.args[0]))
            t = t.args[1]
        if t == NIL:
            return "[" + ",".join(items) + "]"
        return "[" + ",".join(items) + "|" + format_term(t) + "]"
    name = format_functor(t.functor)
    if not t.args:
        return name
    return name + "(" + ",".join(format_term(a) for a in t.args) + ")"


def fresh_variant(obj, avoid: Iterable[Var] = (), only: Iterable[Var] | None = None):
    """Rename variables of ``obj`` to globally fresh, pairwise distinct ones.

    ``obj`` is a term, or any object exposing ``variables()`` and
    ``substitute(mapping)``.  Only the variables in ``only`` are renamed when it
    is given.  Returns ``(renamed, mapping)``.
    """
    avoid = set(avoid)
    if isinstance(obj, (Var, Fn)):
        vs = list(dict.fromkeys(variables(obj)))
    else:
        vs = list(dict.fromkeys(obj.variables()))
    if only is not None:
        keep = set(only)
        vs = [v for v in vs if v in keep]
    mapping: dict[Var, Term] = {}
    for v in vs:
        w = fresh_var()
        while w in avoid:
            w = fresh_var()
        mapping[v] = w
    if isinstance(obj, (Var, Fn)):
        return substitute(mapping, obj), mapping
    return obj.substitute(mapping), mapping
