"""Textual rendering of terms.

The output is deterministic and fully parenthesized where precedence
would otherwise be ambiguous, so distinct (α-normalized) terms never
print the same.  Precedence levels: 0 = binders and infix forms,
1 = application and keyword-headed forms, 2 = atoms.
"""

from __future__ import annotations

import json
import re

from .terms import (
    Abs, App, Case, Check, Comp, Dispatch, Fix, Guard, If, LabelLit, LamOracle, Mem,
    ModelParams, Pair, Prob, Proj, Scoped, StoreRef, StrLit, StrV, Term, Tool, Var,
)
from .typesys import show_label, show_predicate, show_type

_TOOL_ID_RE = re.compile(r"^@?[A-Za-z_][A-Za-z0-9_\-]*$")


def _q(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def show_tool_id(tool_id: str) -> str:
    return tool_id if _TOOL_ID_RE.match(tool_id) else _q(tool_id)


def show_params(params: ModelParams) -> str:
    return f"θ({_q(params.model_name)}, {params.temperature!r})"


def show_store(ref: StoreRef) -> str:
    fields = []
    if ref.name != "σ":
        fields.append(f"name={_q(ref.name)}")
    if ref.strategy != "local":
        fields.append(f"strategy={show_label(ref.strategy)}")
    if ref.capacity is not None:
        fields.append(f"capacity={ref.capacity}")
    if ref.ttl is not None:
        fields.append(f"ttl={ref.ttl}")
    if ref.initial:
        items = ", ".join(
            f"{_q(k)}: {_q(v.text) if isinstance(v, StrV) else repr(v)}" for k, v in ref.initial
        )
        fields.append(f"init={{{items}}}")
    return f"σ[{', '.join(fields)}]"


def _level(t: Term) -> int:
    match t:
        case Var() | StrLit() | Tool() | Pair() | LabelLit() | Dispatch() | Check() | Scoped():
            return 2
        case App(Abs(), _):
            return 0
        case App() | Fix() | Proj() | Guard() | Mem() | LamOracle() | Case():
            return 1
    return 0


def _at(t: Term, level: int) -> str:
    s = pretty(t)
    return f"({s})" if _level(t) < level else s


def _branches(branches, default) -> str:
    parts = [f"{show_label(l)} ⇒ {_at(e, 0)}" for l, e in branches]
    if default is not None:
        parts.append(f"_ ⇒ {_at(default, 0)}")
    return "{" + "; ".join(parts) + "}"


def pretty(t: Term) -> str:
    """Render ``t`` in the λ export syntax."""
    match t:
        case Var(x):
            return x
        case StrLit(s):
            return _q(s)
        case Tool(f):
            return f"tool[{show_tool_id(f)}]"
        case LabelLit(l, vt):
            return f"(#{show_label(l)} : {show_type(vt)})"
        case Pair(a, b):
            return f"⟨{_at(a, 0)}, {_at(b, 0)}⟩"
        case App(Abs(x, ty, body), e):
            return f"let {x}:{show_type(ty)} = {_at(e, 0)} in {_at(body, 0)}"
        case App(f, a):
            return f"{_at(f, 1)} {_at(a, 2)}"
        case Fix(n, e):
            return f"fix_{n} {_at(e, 2)}"
        case Proj(i, e):
            return f"π{i} {_at(e, 2)}"
        case Guard(e, p):
            return f"guard {_at(e, 2)} {show_predicate(p)}"
        case Mem(e, ref):
            return f"mem {_at(e, 2)} {show_store(ref)}"
        case LamOracle(prompt, params):
            return f"lam {_q(prompt)} {show_params(params)}"
        case Case(c, branches, d):
            return f"case {_at(c, 1)} of {_branches(branches, d)}"
        case Abs(x, ty, body):
            return f"λ{x}:{show_type(ty)}. {_at(body, 0)}"
        case If(c, a, b):
            return f"if {_at(c, 1)} then {_at(a, 1)} else {_at(b, 0)}"
        case Comp(a, b):
            return f"{_at(a, 1)} >> {_at(b, 1)}"
        case Prob(a, b, p):
            return f"{_at(a, 1)} ⊕[{p!r}] {_at(b, 1)}"
        case Dispatch(s, branches, d, a):
            return f"⟦dispatch {_at(s, 0)} of {_branches(branches, d)} on {_at(a, 0)}⟧"
        case Check(e, p):
            return f"⟦check {_at(e, 0)} {show_predicate(p)}⟧"
        case Scoped(e, ref):
            return f"⟦scoped {_at(e, 0)} {show_store(ref)}⟧"
    raise TypeError(f"not a term: {t!r}")
