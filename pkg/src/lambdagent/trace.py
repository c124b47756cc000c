"""Evaluation trace: an ordered log of observable events.

Traces serialize to JSON lines, one event per line, with the event kind
first and the remaining fields in declaration order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Iterable, Iterator, Union

PHASES = ("Think", "Parse", "Route", "Invoke", "Observe", "Update", "Check")


@dataclass(frozen=True)
class LlmCall:
    prompt: str
    input: str
    output: str
    step_index: int


@dataclass(frozen=True)
class ToolCall:
    tool_id: str
    args: str
    output: str


@dataclass(frozen=True)
class LoopIter:
    remaining_bound: int


@dataclass(frozen=True)
class GuardCheck:
    predicate: str
    passed: bool


@dataclass(frozen=True)
class MemWrite:
    key: str


@dataclass(frozen=True)
class ProbChoice:
    side: str  # "L" or "R"
    p: float
    seed: int


@dataclass(frozen=True)
class Phase:
    name: str

    def __post_init__(self):
        if self.name not in PHASES:
            raise ValueError(f"unknown phase {self.name!r}")


Event = Union[LlmCall, ToolCall, LoopIter, GuardCheck, MemWrite, ProbChoice, Phase]
EVENT_TYPES = {cls.__name__: cls for cls in
               (LlmCall, ToolCall, LoopIter, GuardCheck, MemWrite, ProbChoice, Phase)}


def event_to_dict(ev: Event) -> dict:
    out = {"event": type(ev).__name__}
    for f in fields(ev):
        out[f.name] = getattr(ev, f.name)
    return out


def event_from_dict(d: dict) -> Event:
    d = dict(d)
    cls = EVENT_TYPES[d.pop("event")]
    return cls(**d)


class Trace:
    def __init__(self, events: Iterable[Event] = ()):
        self.events: list[Event] = list(events)

    def log(self, ev: Event) -> None:
        self.events.append(ev)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __eq__(self, other):
        return isinstance(other, Trace) and self.events == other.events

    def of(self, kind: type) -> list:
        return [e for e in self.events if isinstance(e, kind)]

    def count(self, kind: type) -> int:
        return sum(1 for e in self.events if isinstance(e, kind))

    def without_phases(self) -> "Trace":
        return Trace(e for e in self.events if not isinstance(e, Phase))

    def oracle_calls(self) -> int:
        """LLM calls plus external tool calls (``terminate`` is free)."""
        return self.count(LlmCall) + sum(
            1 for e in self.of(ToolCall) if e.tool_id != "terminate")

    def tokens(self) -> int:
        """Whitespace tokens across all LLM inputs and outputs."""
        return sum(len(e.input.split()) + len(e.output.split()) for e in self.of(LlmCall))

    def dumps(self) -> str:
        return "".join(json.dumps(event_to_dict(e), ensure_ascii=False) + "\n"
                       for e in self.events)

    @classmethod
    def loads(cls, text: str) -> "Trace":
        return cls(event_from_dict(json.loads(line)) for line in text.splitlines()
                   if line.strip())


def _clip(s: str, n: int = 60) -> str:
    s = s.replace("\n", "\\n")
    return s if len(s) <= n else s[: n - 1] + "…"


def render_event(ev: Event) -> str:
    match ev:
        case LlmCall(prompt, inp, out, i):
            return f"llm   #{i}  {_clip(inp)!s} → {_clip(out)}   [prompt: {_clip(prompt, 30)}]"
        case ToolCall(tool, args, out):
            return f"tool  {tool}({_clip(args)}) → {_clip(out)}"
        case LoopIter(n):
            return f"loop  remaining={n}"
        case GuardCheck(p, ok):
            return f"guard {p}: {'pass' if ok else 'FAIL'}"
        case MemWrite(key):
            return f"mem   write {key}"
        case ProbChoice(side, p, seed):
            return f"prob  {side} (p={p}, seed={seed})"
        case Phase(name):
            return f"  · {name}"
    raise TypeError(ev)


def render(trace: Trace) -> str:
    return "\n".join(render_event(e) for e in trace)
