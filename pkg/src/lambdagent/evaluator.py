"""Call-by-value small-step evaluation.

:func:`step` performs exactly one reduction.  Applying a function-forming
value (``>>``, ``if``, ``case``, ``guard``, ``mem``, ``fix``) rewrites it
into its one-step successor; ``case``/``if`` pass through an internal
:class:`Dispatch` form so the classifier runs as ordinary reductions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Union

from .actions import next_state, parse_action, summary
from .oracles import OracleProvider, ToolRegistry
from .syntax import fresh, free_vars, substitute
from .terms import (
    Abs, App, Case, Check, Comp, Dispatch, Fix, Guard, If, LabelLit, LamOracle, Mem, Pair,
    Prob, Proj, Scoped, Store, StoreRef, StoreTyping, StrLit, StrV, Term, Tool, Value, Var,
    is_value, to_term, to_value,
)
from .trace import GuardCheck, LlmCall, LoopIter, MemWrite, ProbChoice, ToolCall, Trace
from .typesys import STR, Arrow, Predicate, Variant, show_predicate

# ---------------------------------------------------------------- outcomes


@dataclass(frozen=True)
class Ok:
    value: Value
    final_store: Optional[Store] = None
    ok = True


@dataclass(frozen=True)
class GuardStuck:
    predicate: Predicate
    value: Value
    ok = False


@dataclass(frozen=True)
class RouteError:
    label: str
    ok = False


@dataclass(frozen=True)
class OracleFailure:
    detail: str
    ok = False


Outcome = Union[Ok, GuardStuck, RouteError, OracleFailure]


class EvalStuck(RuntimeError):
    """A stuck state not covered by any outcome (only reachable from ill-typed terms)."""


class _Abort(Exception):
    def __init__(self, outcome: Outcome):
        self.outcome = outcome


# ---------------------------------------------------------------- context


@dataclass
class LogicalClock:
    """Injected, monotone seconds counter."""

    now_seconds: float = 0.0

    def now(self) -> float:
        return self.now_seconds

    def advance(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("clock is monotone")
        self.now_seconds += seconds


@dataclass
class EvalContext:
    oracle: OracleProvider
    tools: ToolRegistry = field(default_factory=ToolRegistry)
    store: Optional[Store] = None
    rng_seed: int = 0
    clock: LogicalClock = field(default_factory=LogicalClock)
    trace: Trace = field(default_factory=Trace)
    stores: dict = field(default_factory=dict)
    iterations: int = 0
    llm_calls: int = 0
    steps: int = 0

    def __post_init__(self):
        self.rng = random.Random(self.rng_seed)

    def live_store(self, ref: StoreRef) -> Store:
        """The live store for ``ref``, created on first entry."""
        live = self.stores.get(ref)
        if live is None:
            live = Store.from_ref(ref, now=self.clock.now())
            self.stores[ref] = live
            if self.store is None:
                self.store = live
        return live

    def store_typing(self) -> StoreTyping:
        out = StoreTyping()
        for s in self.stores.values():
            out = out.merged(s.typing)
        return out


# ---------------------------------------------------------------- builtins


def _text(t: Term) -> str:
    match t:
        case StrLit(s):
            return s
        case LabelLit(l, _):
            return l
    raise EvalStuck(f"expected a string value, got {type(t).__name__}")


def _call_builtin(name: str, v: Term, ctx: EvalContext, store: Optional[Store]) -> Term:
    match name, v:
        case "@action", _:
            return StrLit(parse_action(_text(v))[0])
        case "@args", _:
            return StrLit(parse_action(_text(v))[1])
        case "@observe", Pair(Pair(state, think), out):
            obs = _text(out)
            if store is not None:
                idx = max(ctx.iterations - 1, 0)
                key = f"step_{idx}"
                store.write(key, StrV(summary(_text(think), obs)), step=idx,
                            now=ctx.clock.now())
                ctx.trace.log(MemWrite(key))
            return StrLit(next_state(_text(state), obs))
        case "@concat", Pair(a, b):
            return StrLit(_text(a) + "\n\n" + _text(b))
    raise EvalStuck(f"bad call to builtin {name}")


def _call_tool(tool_id: str, v: Term, ctx: EvalContext, store: Optional[Store]) -> Term:
    if tool_id.startswith("@"):
        return _call_builtin(tool_id, v, ctx, store)
    if tool_id not in ctx.tools:
        raise _Abort(OracleFailure(f"tool {tool_id!r} is not registered"))
    entry = ctx.tools.get(tool_id)
    args = _text(v)
    try:
        out = entry.fn(args)
    except Exception as exc:  # external functions: surface, never swallow
        raise _Abort(OracleFailure(f"tool {tool_id} raised {type(exc).__name__}: {exc}"))
    if not isinstance(out, str):
        raise _Abort(OracleFailure(f"tool {tool_id} returned {type(out).__name__}"))
    ctx.trace.log(ToolCall(tool_id, args, out))
    if isinstance(entry.cod, Variant):
        if out not in entry.cod.labels:
            raise _Abort(OracleFailure(f"tool {tool_id} returned unknown label {out!r}"))
        return LabelLit(out, entry.cod)
    return StrLit(out)


def _call_oracle(t: LamOracle, v: Term, ctx: EvalContext) -> Term:
    text = _text(v)
    try:
        out = ctx.oracle.complete(t.prompt, t.params, text)
    except Exception as exc:
        raise _Abort(OracleFailure(f"{type(exc).__name__}: {exc}"))
    if not isinstance(out, str):
        raise _Abort(OracleFailure(f"oracle returned {type(out).__name__}"))
    ctx.trace.log(LlmCall(t.prompt, text, out, ctx.llm_calls))
    ctx.llm_calls += 1
    return StrLit(out)


# ---------------------------------------------------------------- reduction


def _apply(f: Term, v: Term, ctx: EvalContext, store: Optional[Store]) -> Term:
    match f:
        case Abs(x, _, body):
            return substitute(body, x, v)
        case Tool(tool_id):
            return _call_tool(tool_id, v, ctx, store)
        case LamOracle():
            return _call_oracle(f, v, ctx)
        case Comp(a, b):
            return App(b, App(a, v))
        case If(c, a, b):
            return Dispatch(App(c, v), (("true", a),), b, v)
        case Case(c, branches, d):
            return Dispatch(App(c, v), branches, d, v)
        case Guard(e, p):
            return Check(App(e, v), p)
        case Mem(e, ref):
            return Scoped(App(e, v), ref)
        case Fix(0, _):
            return v
        case Fix(n, body):
            ctx.iterations += 1
            ctx.trace.log(LoopIter(n))
            tau = STR
            if isinstance(body, Abs) and isinstance(body.param_type, Arrow):
                tau = body.param_type.dom
            y = fresh("x", free_vars(body))
            self_ref = Abs(y, tau, App(Fix(n - 1, body), Var(y)))
            return App(App(body, self_ref), v)
    raise EvalStuck(f"cannot apply {type(f).__name__}")


def _step(t: Term, ctx: EvalContext, store: Optional[Store]) -> Term:
    match t:
        case App(f, a):
            if not is_value(f):
                return App(_step(f, ctx, store), a)
            if not is_value(a):
                return App(f, _step(a, ctx, store))
            return _apply(f, a, ctx, store)
        case Comp(a, b):
            if not is_value(a):
                return Comp(_step(a, ctx, store), b)
            return Comp(a, _step(b, ctx, store))
        case Pair(a, b):
            if not is_value(a):
                return Pair(_step(a, ctx, store), b)
            return Pair(a, _step(b, ctx, store))
        case Proj(i, e):
            if not is_value(e):
                return Proj(i, _step(e, ctx, store))
            if isinstance(e, Pair):
                return e.left if i == 1 else e.right
            raise EvalStuck("projection from a non-pair")
        case Prob(a, b, p):
            u = ctx.rng.random()
            side = "L" if u < p else "R"
            ctx.trace.log(ProbChoice(side, p, ctx.rng_seed))
            return a if side == "L" else b
        case Fix(n, e):
            return Fix(n, _step(e, ctx, store))
        case If(c, a, b):
            if not is_value(c):
                return If(_step(c, ctx, store), a, b)
            if not is_value(a):
                return If(c, _step(a, ctx, store), b)
            return If(c, a, _step(b, ctx, store))
        case Case(c, branches, d):
            if not is_value(c):
                return Case(_step(c, ctx, store), branches, d)
            for i, (l, e) in enumerate(branches):
                if not is_value(e):
                    bs = list(branches)
                    bs[i] = (l, _step(e, ctx, store))
                    return Case(c, tuple(bs), d)
            return Case(c, branches, _step(d, ctx, store))
        case Guard(e, p):
            return Guard(_step(e, ctx, store), p)
        case Mem(e, ref):
            return Mem(_step(e, ctx, store), ref)
        case Dispatch(s, branches, d, a):
            if not is_value(s):
                return Dispatch(_step(s, ctx, store), branches, d, a)
            if not is_value(a):
                return Dispatch(s, branches, d, _step(a, ctx, store))
            label = _text(s)
            for l, e in branches:
                if l == label:
                    return App(e, a)
            if d is not None:
                return App(d, a)
            raise _Abort(RouteError(label))
        case Check(e, p):
            if not is_value(e):
                return Check(_step(e, ctx, store), p)
            passed = p.holds(_text(e))
            ctx.trace.log(GuardCheck(show_predicate(p), passed))
            if not passed:
                raise _Abort(GuardStuck(p, to_value(e)))
            return e
        case Scoped(e, ref):
            if is_value(e):
                return e
            return Scoped(_step(e, ctx, ctx.live_store(ref)), ref)
        case Var(x):
            raise EvalStuck(f"free variable {x}")
    raise EvalStuck(f"no rule for {type(t).__name__}")


def step(t: Term, ctx: EvalContext) -> Union[Term, Outcome]:
    """One reduction step, or the error outcome that aborts evaluation."""
    if is_value(t):
        raise ValueError("cannot step a value")
    ctx.steps += 1
    try:
        return _step(t, ctx, None)
    except _Abort as abort:
        return abort.outcome


DEFAULT_STEP_LIMIT = 1_000_000


def evaluate(t: Term, ctx: EvalContext, limit: int = DEFAULT_STEP_LIMIT) -> Outcome:
    """Reduce a closed term to a value."""
    for _ in range(limit):
        if is_value(t):
            return Ok(to_value(t), ctx.store)
        r = step(t, ctx)
        if not isinstance(r, (Ok, GuardStuck, RouteError, OracleFailure)):
            t = r
            continue
        return r
    raise RuntimeError(f"evaluation exceeded {limit} steps")


def reduce(t: Term, input: Union[Value, str], ctx: EvalContext,
           limit: int = DEFAULT_STEP_LIMIT) -> Outcome:
    """Apply ``t`` to ``input`` and reduce to an outcome."""
    arg = StrLit(input) if isinstance(input, str) else to_term(input)
    return evaluate(App(t, arg), ctx, limit)
