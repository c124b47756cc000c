"""Static upper bounds on oracle cost.

``_Cost.value`` bounds the cost of evaluating a term to a value;
``_Cost.apply`` bounds the cost of applying that value to an argument.
A ``fix_n`` loop costs ``n`` times its worst single unfolding, with the
recursive self-call costed at zero (it is accounted for by the factor).
Branching forms take the maximum over branches.
"""

from __future__ import annotations

from typing import Callable, Mapping

from .terms import (
    Abs, App, Case, Comp, Dispatch, Fix, Guard, If, LabelLit, LamOracle, Mem, Pair, Prob, Proj,
    StrLit, Term, Tool, Var,
)
from .syntax import children

FREE_TOOLS = frozenset({"terminate"})


def oracle_id(t: Term) -> str | None:
    """Cost-map key for an oracle-like term, or None if it is free."""
    match t:
        case LamOracle(_, params):
            return f"llm:{params.model_name}"
        case Tool(f):
            return None if f in FREE_TOOLS or f.startswith("@") else f
    return None


def oracles(t: Term) -> set[str]:
    ids = set()
    oid = oracle_id(t)
    if oid:
        ids.add(oid)
    for _, c in children(t):
        ids |= oracles(c)
    return ids


class _Cost:
    def __init__(self, price: Callable[[str], float]):
        self.price = price

    def value(self, t: Term, env: Mapping[str, float]) -> float:
        match t:
            case Var() | StrLit() | LabelLit() | Abs() | Tool() | LamOracle():
                return 0.0
            case App(Abs(x, _, body), a):
                fn_cost = self._maybe_apply(a, env)
                return self.value(a, env) + self.value(body, {**env, x: fn_cost})
            case App(f, a):
                return self.value(f, env) + self.value(a, env) + self.apply(f, env)
            case Prob(a, b, _):
                return max(self.value(a, env), self.value(b, env))
            case Dispatch(s, branches, d, a):
                alts = [e for _, e in branches] + ([d] if d is not None else [])
                return (self.value(s, env) + self.value(a, env)
                        + max((self.apply(e, env) for e in alts), default=0.0))
        return sum((self.value(c, env) for _, c in children(t)), 0.0)

    def _maybe_apply(self, t: Term, env) -> float | None:
        try:
            return self.apply(t, env)
        except _NotAFunction:
            return None

    def apply(self, t: Term, env: Mapping[str, float]) -> float:
        match t:
            case Var(x):
                c = env.get(x)
                if c is None:
                    # an unknown argument: fine as data, unboundable if applied
                    raise _NotAFunction(f"cannot bound an application of parameter {x!r}")
                return c
            case Tool() | LamOracle():
                oid = oracle_id(t)
                return self.price(oid) if oid else 0.0
            case Abs(x, _, body):
                return self.value(body, {**env, x: None})
            case Comp(a, b):
                return self.apply(a, env) + self.apply(b, env)
            case If(c, a, b):
                return self.apply(c, env) + max(self.apply(a, env), self.apply(b, env))
            case Case(c, branches, d):
                alts = [e for _, e in branches] + ([d] if d is not None else [])
                return self.apply(c, env) + max((self.apply(e, env) for e in alts), default=0.0)
            case Guard(e, _) | Mem(e, _):
                return self.apply(e, env)
            case Prob(a, b, _):
                return max(self.apply(a, env), self.apply(b, env))
            case Fix(n, body):
                if n == 0:
                    return 0.0
                if not isinstance(body, Abs):
                    raise ValueError("fix body must be an abstraction over the self reference")
                if _self_uses(body.body, body.param) > 1:
                    raise ValueError("self reference used more than once per unfolding")
                return n * self.apply(body.body, {**env, body.param: 0.0})
            case App(Abs(x, _, body), a):
                return self.apply(body, {**env, x: self._maybe_apply(a, env)})
            case StrLit() | LabelLit() | Pair() | Proj() | App():
                # data, or a computed result whose cost is charged where it is computed
                raise _NotAFunction()
        raise ValueError(f"cannot bound the cost of applying {type(t).__name__}")


class _NotAFunction(ValueError):
    pass


def _self_uses(t: Term, s: str) -> int:
    """Maximum number of occurrences of ``s`` along any execution path."""
    match t:
        case Var(x):
            return 1 if x == s else 0
        case Abs(x, _, body):
            return 0 if x == s else _self_uses(body, s)
        case If(c, a, b):
            return _self_uses(c, s) + max(_self_uses(a, s), _self_uses(b, s))
        case Case(c, branches, d) | Dispatch(c, branches, d, _):
            alts = [e for _, e in branches] + ([d] if d is not None else [])
            extra = _self_uses(t.arg, s) if isinstance(t, Dispatch) else 0
            return _self_uses(c, s) + extra + max((_self_uses(e, s) for e in alts), default=0)
        case Prob(a, b, _):
            return max(_self_uses(a, s), _self_uses(b, s))
    return sum(_self_uses(c, s) for _, c in children(t))


def _pricer(per_oracle_cost: Mapping[str, float]) -> Callable[[str], float]:
    for k, v in per_oracle_cost.items():
        if v < 0:
            raise ValueError(f"negative cost for {k}")

    def price(oid: str) -> float:
        if oid not in per_oracle_cost:
            raise KeyError(f"unknown oracle id {oid!r}")
        return float(per_oracle_cost[oid])

    return price


def cost_estimate(t: Term, per_oracle_cost: Mapping[str, float]) -> float:
    """Upper bound on the cost of one application of ``t``."""
    return _Cost(_pricer(per_oracle_cost)).apply(t, {})


def predicted_calls(t: Term) -> int:
    """Upper bound on oracle calls (LLM + external tools) for one application."""
    return int(round(_Cost(lambda _oid: 1.0).apply(t, {})))
