"""Big-step ReAct engine.

Each iteration runs the phases Think, Parse, Route, Invoke, Observe,
Update, Check.  It agrees event-for-event (ignoring ``Phase`` markers)
with small-step evaluation of the compiled ``fix_n`` loop.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .actions import next_state, parse_action, summary
from .evaluator import EvalContext, OracleFailure, Ok, Outcome, RouteError
from .terms import ModelParams, Store, StoreRef, StrV
from .trace import LlmCall, LoopIter, MemWrite, Phase, ToolCall

__all__ = ["parse_action", "run_react"]


def run_react(prompt: str, params: ModelParams, tools: Sequence[str], max_steps: int,
              memory: Optional[Store | StoreRef], input: str, ctx: EvalContext) -> Outcome:
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    if not tools:
        raise ValueError("a ReAct agent needs at least one tool")
    store = ctx.live_store(memory) if isinstance(memory, StoreRef) else memory
    if store is not None and ctx.store is None:
        ctx.store = store
    log = ctx.trace.log
    state = input
    for i in range(max_steps):
        ctx.iterations += 1
        log(LoopIter(max_steps - i))

        log(Phase("Think"))
        try:
            think = ctx.oracle.complete(prompt, params, state)
        except Exception as exc:
            return OracleFailure(f"{type(exc).__name__}: {exc}")
        log(LlmCall(prompt, state, think, ctx.llm_calls))
        ctx.llm_calls += 1

        log(Phase("Parse"))
        action, args = parse_action(think)

        log(Phase("Route"))
        if action != "terminate" and action not in tools:
            return RouteError(action)
        if action not in ctx.tools:
            return OracleFailure(f"tool {action!r} is not registered")

        log(Phase("Invoke"))
        try:
            output = ctx.tools.call(action, args)
        except Exception as exc:
            return OracleFailure(f"tool {action} raised {type(exc).__name__}: {exc}")
        log(ToolCall(action, args, output))

        log(Phase("Observe"))
        if action == "terminate":
            log(Phase("Check"))
            return Ok(StrV(output), store)

        log(Phase("Update"))
        if store is not None:
            key = f"step_{i}"
            store.write(key, StrV(summary(think, output)), step=i, now=ctx.clock.now())
            log(MemWrite(key))

        log(Phase("Check"))
        state = next_state(state, output)
    return Ok(StrV(state), store)
