"""One-stop execution: configuration file in, result and statistics out."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import CanonicalConfig, compile_config, load_config, type_context
from .evaluator import EvalContext, Ok, Outcome, reduce
from .oracles import HttpOracle, OracleProvider, ToolRegistry, load_script
from .pretty import pretty
from .terms import ClosureV, LabelV, PairV, StrV, Term, Value
from .trace import LlmCall, LoopIter, ToolCall, Trace
from .typecheck import infer
from .typesys import Type


class NoOracleConfigured(RuntimeError):
    pass


@dataclass
class RunStats:
    steps: int
    tokens: int
    llm_calls: int
    tool_calls: int
    reductions: int

    def __str__(self):
        return f"{self.steps} steps, {self.tokens} tokens"


@dataclass
class RunResult:
    outcome: Outcome
    trace: Trace
    stats: RunStats
    term: Optional[Term] = None

    @property
    def ok(self) -> bool:
        return isinstance(self.outcome, Ok)

    @property
    def result(self) -> Optional[str]:
        return render_value(self.outcome.value) if isinstance(self.outcome, Ok) else None


def render_value(v: Value) -> str:
    match v:
        case StrV(s):
            return s
        case LabelV(l):
            return l
        case PairV(a, b):
            return render_value(a) + "\n\n" + render_value(b)
        case ClosureV():
            return "<function>"
    return repr(v)


def _stats(ctx: EvalContext, trace_start: int) -> RunStats:
    recent = Trace(ctx.trace.events[trace_start:])
    llm = recent.count(LlmCall)
    tools = recent.count(ToolCall)
    loops = recent.count(LoopIter)
    return RunStats(steps=loops if loops else llm + tools, tokens=recent.tokens(),
                    llm_calls=llm, tool_calls=tools, reductions=ctx.steps)


@dataclass
class Runtime:
    """Holds an oracle, a tool registry and (optionally) a persistent context."""

    oracle: Optional[OracleProvider] = None
    tools: ToolRegistry = field(default_factory=ToolRegistry.with_library)
    seed: int = 0
    persistent: bool = False
    _ctx: Optional[EvalContext] = None

    @classmethod
    def from_script(cls, script: Optional[str | Path], seed: int = 0, persistent: bool = False):
        tools = ToolRegistry.with_library()
        if script is not None:
            oracle, scripted = load_script(script)
            for name, fn in scripted.items():
                tools.entries.pop(name, None)
                tools.register(name, fn, description="scripted")
        else:
            oracle = HttpOracle.from_env()
        return cls(oracle=oracle, tools=tools, seed=seed, persistent=persistent)

    def compile(self, path: str | Path, framework: Optional[str] = None,
                force: bool = False) -> tuple[CanonicalConfig, Term, Type]:
        c = load_config(path, framework)
        term = compile_config(c, force=force)
        ty = infer(type_context(c, self.tools.names()), term)
        return c, term, ty

    def context(self) -> EvalContext:
        if self.oracle is None:
            raise NoOracleConfigured(
                "no oracle configured: pass an oracle script or set LAMBDAGENT_ORACLE_URL")
        if self.persistent:
            if self._ctx is None:
                self._ctx = EvalContext(self.oracle, self.tools, rng_seed=self.seed)
            return self._ctx
        return EvalContext(self.oracle, self.tools, rng_seed=self.seed)

    def run(self, term: Term, input: str) -> RunResult:
        ctx = self.context()
        start = len(ctx.trace)
        ctx.steps = 0
        outcome = reduce(term, input, ctx)
        return RunResult(outcome, Trace(ctx.trace.events[start:]), _stats(ctx, start), term)

    @classmethod
    def execute(cls, path: str | Path, input: str, *, script: Optional[str | Path] = None,
                oracle: Optional[OracleProvider] = None, seed: int = 0) -> RunResult:
        rt = cls.from_script(script, seed) if oracle is None else cls(oracle=oracle, seed=seed)
        _, term, _ = rt.compile(path)
        return rt.run(term, input)


def export(path: str | Path, framework: Optional[str] = None, force: bool = False) -> str:
    return pretty(compile_config(load_config(path, framework), force=force))
