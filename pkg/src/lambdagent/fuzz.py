"""Seeded generator of well-typed closed terms, for property testing.

The generator is type-directed: ``TermGen.term(ty)`` returns a closed
term whose inferred type is a subtype of ``ty``.  Generated programs
respect the same discipline the compiler does:

* every ``fix_n`` body uses its self reference at most once per path;
* a ``case`` over a variant classifier is exhaustive or has a default,
  and a ``case`` over a free-text classifier always has a default;
* ``mem`` wrappers are never nested.

So the only way a generated program can get stuck is a failing guard.
:func:`fuzz_world` supplies a matching deterministic oracle and tool set.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

from .actions import format_action
from .config.compiler import react_body
from .oracles import FunctionOracle, ToolRegistry
from .syntax import compose, fresh
from .terms import (
    Abs, App, Case, Comp, Fix, Guard, If, LamOracle, Mem, ModelParams, Pair, Prob, Proj,
    StoreRef, StrLit, Term, Tool, Var,
)
from .typecheck import TypeContext
from .typesys import (
    BOOL, STR, STR_TO_STR, Arrow, MaxWords, MinWords, NonEmpty, Product, Type, variant,
)

WORDS = ("alpha", "beta", "gamma", "delta", "omega", "red", "green", "blue", "one", "two",
         "three", "report", "plan", "draft", "final")
TOPIC = variant("code", "math", "chat")
PAIR = Product(STR, STR)
STR_TO_PAIR = Arrow(STR, PAIR)
PAIR_TO_STR = Arrow(PAIR, STR)
MODELS = ("m-small", "m-large")
PLAIN_TOOLS = ("echo", "upper", "lower", "reverse", "word_count")


def _digest(*parts: str) -> int:
    h = hashlib.sha256("\x00".join(parts).encode()).digest()
    return int.from_bytes(h[:8], "big")


REACT_PROMPT = "react over: "


def hash_oracle_reply(prompt: str, input: str) -> str:
    """A short reply that depends only on ``(prompt, input)``.

    Prompts naming a tool list (see :meth:`TermGen._react_like`) get an
    action line choosing one of those tools.
    """
    d = _digest(prompt, input)
    n = 1 + d % 4
    words = " ".join(WORDS[(d >> (8 * i)) % len(WORDS)] for i in range(n))
    if prompt.startswith(REACT_PROMPT):
        tools = prompt[len(REACT_PROMPT):].split(",")
        return format_action(tools[(d >> 40) % len(tools)], words)
    return words


def _topic(text: str) -> str:
    return TOPIC.labels[_digest("topic", text) % len(TOPIC.labels)]


def _is_long(text: str) -> str:
    return "true" if len(text.split()) > 2 else "false"


def _clip(text: str) -> str:
    return " ".join(text.split()[:CLIP_WORDS])


CLIP_WORDS = 8


def fuzz_tools() -> ToolRegistry:
    reg = ToolRegistry.with_library()
    reg.register("clip", _clip, description=f"first {CLIP_WORDS} words")
    reg.register("topic", _topic, cod=TOPIC, description="hash-based topic label")
    reg.register("is_long", _is_long, cod=BOOL, description="more than two words?")
    return reg


def fuzz_world() -> tuple[FunctionOracle, ToolRegistry, TypeContext]:
    """Oracle, tool registry and typing context matching generated terms."""
    tools = fuzz_tools()
    ctx = TypeContext(tool_signatures=tools.signatures())
    return FunctionOracle(hash_oracle_reply), tools, ctx


@dataclass
class TermGen:
    """Random well-typed terms.  ``max_depth`` bounds nesting of formers."""

    seed: int = 0
    max_depth: int = 5
    max_bound: int = 6
    guard_rate: float = 0.15
    nested_loops: bool = True
    rng: random.Random = field(init=False)

    def __post_init__(self):
        self.rng = random.Random(self.seed)

    # --- entry points

    def agent(self) -> Term:
        """A closed term of type ``Str → Str`` (up to refinement)."""
        return self.term(STR_TO_STR)

    def program(self) -> tuple[Term, str]:
        return self.agent(), self.word_string()

    def loop(self, bound: int | None = None) -> Fix:
        """A ``fix_n`` agent whose body may recurse but contains no other loop.

        Every ``LoopIter`` event of a run therefore belongs to this loop.
        """
        n = self.rng.randint(0, self.max_bound) if bound is None else bound
        saved, self.nested_loops = self.nested_loops, False
        try:
            return self._fix(n, {}, self.max_depth, in_mem=False)
        finally:
            self.nested_loops = saved

    def word_string(self) -> str:
        return " ".join(self.rng.choice(WORDS) for _ in range(self.rng.randint(1, 5)))

    # --- generation

    def term(self, ty: Type, env: dict | None = None, depth: int | None = None,
             in_mem: bool = False) -> Term:
        env = {} if env is None else env
        depth = self.max_depth if depth is None else depth
        if ty == STR:
            return self._str(env, depth, in_mem)
        if ty == STR_TO_STR:
            return self._agent(env, depth, in_mem)
        if ty == PAIR:
            return Pair(self._str(env, depth - 1, in_mem), self._str(env, depth - 1, in_mem))
        if ty == STR_TO_PAIR:
            x = fresh("x", set(env))
            inner = {**env, x: STR}
            return Abs(x, STR, Pair(self._str(inner, depth - 1, in_mem),
                                    self._str(inner, depth - 1, in_mem)))
        if ty == PAIR_TO_STR:
            if depth <= 0 or self.rng.random() < 0.5:
                return Tool("@concat")
            p = fresh("p", set(env))
            pick = Proj(self.rng.choice((1, 2)), Var(p))
            return Abs(p, PAIR, App(self._agent(env, depth - 1, in_mem), pick))
        raise ValueError(f"no generator for type {ty}")

    def _vars(self, env: dict, ty: Type) -> list[str]:
        return [x for x, t in env.items() if t == ty]

    def _str(self, env: dict, depth: int, in_mem: bool) -> Term:
        leaves = [StrLit(self.word_string())] + [Var(x) for x in self._vars(env, STR)]
        if depth <= 0:
            return self.rng.choice(leaves)
        k = self.rng.randrange(6)
        if k == 0:
            return self.rng.choice(leaves)
        if k <= 2:
            return App(self._agent(env, depth - 1, in_mem), self._str(env, depth - 1, in_mem))
        if k == 3:
            return Proj(self.rng.choice((1, 2)), self.term(PAIR, env, depth - 1, in_mem))
        if k == 4:
            return App(self.term(PAIR_TO_STR, env, depth - 1, in_mem),
                       App(self.term(STR_TO_PAIR, env, depth - 1, in_mem),
                           self._str(env, depth - 1, in_mem)))
        return App(Tool("@concat"), self.term(PAIR, env, depth - 1, in_mem))

    def _leaf_agent(self, env: dict) -> Term:
        r = self.rng.random()
        fn_vars = self._vars(env, STR_TO_STR)
        if fn_vars and r < 0.2:
            return Var(self.rng.choice(fn_vars))
        if r < 0.55:
            return Tool(self.rng.choice(PLAIN_TOOLS))
        if r < 0.75:
            x = fresh("x", set(env))
            return Abs(x, STR, Var(x))
        return LamOracle(f"prompt {self.rng.randrange(100)}",
                         ModelParams(self.rng.choice(MODELS), 0.0))

    def _agent(self, env: dict, depth: int, in_mem: bool) -> Term:
        if depth <= 0:
            return self._leaf_agent(env)
        sub = lambda: self._agent(env, depth - 1, in_mem)  # noqa: E731
        k = self.rng.randrange(11)
        if k in (8, 10) and not self.nested_loops:
            k = 9
        if k == 0:
            return self._leaf_agent(env)
        if k == 1:
            x = fresh("x", set(env))
            return Abs(x, STR, self._str({**env, x: STR}, depth - 1, in_mem))
        if k == 2:
            return Comp(sub(), sub())
        if k == 3:
            cond = Tool("is_long") if self.rng.random() < 0.5 else sub()
            return If(cond, sub(), sub())
        if k == 4:
            return self._case(env, depth, in_mem)
        if k == 5:
            if self.rng.random() < self.guard_rate * 4:
                # the identity stage keeps the overall type exactly Str → Str
                return Comp(Guard(sub(), self._predicate()), Tool("echo"))
            return sub()
        if k == 6 and not in_mem:
            ref = StoreRef(capacity=self.rng.choice((None, 2, 8)),
                           strategy=self.rng.choice(("local", "redis")))
            return Mem(self._agent(env, depth - 1, True), ref)
        if k == 7:
            return Prob(sub(), sub(), self.rng.choice((0.0, 0.25, 0.5, 1.0)))
        if k == 8:
            return self._fix(self.rng.randint(0, self.max_bound), env, depth, in_mem)
        if k == 9:
            return compose(sub(), sub(), sub())
        return self._react_like(env, depth, in_mem)

    def _predicate(self):
        return self.rng.choice((NonEmpty(), MaxWords(self.rng.randint(1, 6)),
                                MinWords(self.rng.randint(1, 3))))

    def _case(self, env: dict, depth: int, in_mem: bool) -> Case:
        sub = lambda: self._agent(env, depth - 1, in_mem)  # noqa: E731
        if self.rng.random() < 0.6:
            labels = list(TOPIC.labels)
            self.rng.shuffle(labels)
            keep = labels[:self.rng.randint(1, len(labels))]
            default = sub() if len(keep) < len(labels) or self.rng.random() < 0.3 else None
            return Case(Tool("topic"), tuple((l, sub()) for l in keep), default)
        labels = self.rng.sample(WORDS, self.rng.randint(0, 2))
        return Case(sub(), tuple((l, sub()) for l in labels), sub())

    def _fix(self, n: int, env: dict, depth: int, in_mem: bool) -> Fix:
        """``fix_n (λs. λx. E)`` with ``s`` used at most once on any path."""
        s = fresh("s", set(env))
        x = fresh("x", set(env) | {s})
        inner = {**env, x: STR}  # ``s`` deliberately not in scope for subterms
        # clipping the state keeps strings bounded when ``x`` is duplicated
        arg = App(Tool("clip"), self._str(inner, depth - 2, in_mem))
        recurse = Abs("y", STR, App(Var(s), Var("y")))
        k = self.rng.randrange(3)
        if k == 0:
            e: Term = App(Var(s), arg)
        elif k == 1:
            e = arg
        else:
            stop = self._agent(inner, depth - 2, in_mem)
            e = App(If(Tool("is_long"), stop, recurse) if self.rng.random() < 0.5
                    else Case(Tool("topic"), (("code", recurse), ("math", stop)), recurse), arg)
        return Fix(n, Abs(s, STR_TO_STR, Abs(x, STR, e)))

    def _react_like(self, env: dict, depth: int, in_mem: bool) -> Fix:
        """A compiled-ReAct-shaped loop over the library tools."""
        tools = self.rng.sample(PLAIN_TOOLS, self.rng.randint(0, 2)) + ["terminate"]
        prompt = REACT_PROMPT + ",".join(tools)
        return Fix(self.rng.randint(0, self.max_bound),
                   react_body(prompt, ModelParams(self.rng.choice(MODELS)), tools))


def random_pipeline_stage(rng: random.Random, prompts: int = 5) -> Term:
    """One oracle stage for pipeline-algebra tests."""
    return LamOracle(f"stage {rng.randrange(prompts)}", ModelParams("m-small"))
