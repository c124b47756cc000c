"""Pure syntactic operations on terms."""

from __future__ import annotations

import itertools
from typing import Callable, Iterator

from .terms import (
    Abs, App, Case, Check, Comp, Dispatch, Fix, Guard, If, Mem, Pair, Prob, Proj, Scoped,
    Term, Var,
)
from .typesys import STR, Type

_fresh_counter = itertools.count(1)


def fresh(base: str, avoid: set[str] | frozenset[str] = frozenset()) -> str:
    base = base.split("'")[0] or "x"
    while True:
        name = f"{base}'{next(_fresh_counter)}"
        if name not in avoid:
            return name


def children(t: Term) -> Iterator[tuple[str, Term]]:
    """Immediate subterms with their path segment."""
    match t:
        case Abs(_, _, b):
            yield "body", b
        case App(f, a):
            yield "fn", f
            yield "arg", a
        case Comp(a, b):
            yield "first", a
            yield "second", b
        case If(c, a, b):
            yield "cond", c
            yield "then", a
            yield "orelse", b
        case Fix(_, b):
            yield "body", b
        case Pair(a, b):
            yield "left", a
            yield "right", b
        case Proj(_, e):
            yield "inner", e
        case Case(c, branches, d):
            yield "classifier", c
            for label, e in branches:
                yield f"branches[{label}]", e
            if d is not None:
                yield "default", d
        case Guard(e, _) | Mem(e, _) | Check(e, _) | Scoped(e, _):
            yield "inner", e
        case Prob(a, b, _):
            yield "left", a
            yield "right", b
        case Dispatch(s, branches, d, a):
            yield "scrutinee", s
            for label, e in branches:
                yield f"branches[{label}]", e
            if d is not None:
                yield "default", d
            yield "arg", a


def map_children(t: Term, f: Callable[[Term], Term]) -> Term:
    match t:
        case Abs(x, ty, b):
            return Abs(x, ty, f(b))
        case App(a, b):
            return App(f(a), f(b))
        case Comp(a, b):
            return Comp(f(a), f(b))
        case If(c, a, b):
            return If(f(c), f(a), f(b))
        case Fix(n, b):
            return Fix(n, f(b))
        case Pair(a, b):
            return Pair(f(a), f(b))
        case Proj(i, e):
            return Proj(i, f(e))
        case Case(c, branches, d):
            return Case(f(c), tuple((l, f(e)) for l, e in branches),
                        None if d is None else f(d))
        case Guard(e, p):
            return Guard(f(e), p)
        case Mem(e, s):
            return Mem(f(e), s)
        case Prob(a, b, p):
            return Prob(f(a), f(b), p)
        case Dispatch(s, branches, d, a):
            return Dispatch(f(s), tuple((l, f(e)) for l, e in branches),
                            None if d is None else f(d), f(a))
        case Check(e, p):
            return Check(f(e), p)
        case Scoped(e, s):
            return Scoped(f(e), s)
    return t


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(x):
            return frozenset({x})
        case Abs(x, _, b):
            return free_vars(b) - {x}
    out: frozenset[str] = frozenset()
    for _, c in children(t):
        out |= free_vars(c)
    return out


def is_closed(t: Term) -> bool:
    return not free_vars(t)


def substitute(body: Term, var_name: str, replacement: Term) -> Term:
    """Capture-avoiding ``body[var_name := replacement]``."""
    fv_r = free_vars(replacement)

    def go(t: Term) -> Term:
        match t:
            case Var(x):
                return replacement if x == var_name else t
            case Abs(x, ty, b):
                if x == var_name:
                    return t
                if x in fv_r and var_name in free_vars(b):
                    y = fresh(x, fv_r | free_vars(b))
                    b = substitute(b, x, Var(y))
                    return Abs(y, ty, go(b))
                return Abs(x, ty, go(b))
        return map_children(t, go)

    return go(body)


def desugar_comp(t: Term, param_type: Type = STR) -> Abs:
    """``e1 >> e2`` becomes ``λx. e2 (e1 x)`` with a fresh ``x``."""
    if not isinstance(t, Comp):
        raise TypeError(f"desugar_comp expects a Comp, got {type(t).__name__}")
    x = fresh("x", free_vars(t))
    return Abs(x, param_type, App(t.second, App(t.first, Var(x))))


def compose(*stages: Term) -> Term:
    """Right-nested composition of one or more stages."""
    if not stages:
        raise ValueError("compose needs at least one stage")
    out = stages[-1]
    for s in reversed(stages[:-1]):
        out = Comp(s, out)
    return out


def parallel(*branches: Term, param_type: Type = STR) -> Abs:
    """``e1 | e2 | ...`` as ``λx. ⟨e1 x, ⟨e2 x, ...⟩⟩``."""
    if len(branches) < 2:
        raise ValueError("parallel needs at least two branches")
    # a fixed name keeps printed output stable; "x" unless a branch mentions it
    avoid = frozenset().union(*(free_vars(b) for b in branches))
    names = itertools.chain(["x"], (f"x{i}" for i in itertools.count()))
    x = next(n for n in names if n not in avoid)
    apps = [App(b, Var(x)) for b in branches]
    out = apps[-1]
    for a in reversed(apps[:-1]):
        out = Pair(a, out)
    return Abs(x, param_type, out)


def let(name: str, ty: Type, value: Term, body: Term) -> App:
    return App(Abs(name, ty, body), value)


def alpha_normalize(t: Term) -> Term:
    """Rename every binder to its de Bruijn level (``_0``, ``_1``, ...)."""

    def go(t: Term, env: dict[str, str], depth: int) -> Term:
        match t:
            case Var(x):
                return Var(env.get(x, x))
            case Abs(x, ty, b):
                name = f"_{depth}"
                return Abs(name, ty, go(b, {**env, x: name}, depth + 1))
        return map_children(t, lambda c: go(c, env, depth))

    return go(t, {}, 0)


def alpha_equal(a: Term, b: Term) -> bool:
    return alpha_normalize(a) == alpha_normalize(b)


def size(t: Term) -> int:
    return 1 + sum(size(c) for _, c in children(t))


def depth(t: Term) -> int:
    return 1 + max((depth(c) for _, c in children(t)), default=0)


def subterm_at(t: Term, path: str) -> Term:
    """Follow a dotted path as produced by :func:`children` segments."""
    if not path:
        return t
    for seg in _split_path(path):
        for name, c in children(t):
            if name == seg:
                t = c
                break
        else:
            raise KeyError(f"no subterm {seg!r} under {type(t).__name__}")
    return t


def _split_path(path: str) -> list[str]:
    out, cur, depth_ = [], "", 0
    for ch in path:
        if ch == "[":
            depth_ += 1
        elif ch == "]":
            depth_ -= 1
        if ch == "." and depth_ == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        out.append(cur)
    return out
