"""Framework-neutral agent configuration.

Every supported input format is normalized to :class:`CanonicalConfig`.
:func:`to_document` writes a config back out in the native format, and
normalizing that document gives back an equal config.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from ..typesys import Predicate

AGENT_TYPES = ("simple", "react", "chain", "router", "parallel", "group", "tool", "loop")


class Framework:
    CREWAI = "CrewAI"
    LANGCHAIN = "LangChain"
    AUTOGEN = "AutoGen"
    DIFY = "Dify"
    MULTIAGENT = "MultiAgent"
    GENERIC = "Generic"
    LAMBDAGENT = "Lambdagent"

    ALL = (CREWAI, LANGCHAIN, AUTOGEN, DIFY, MULTIAGENT, GENERIC, LAMBDAGENT)


@dataclass(frozen=True)
class Hint:
    """A termination mechanism other than an explicit ``terminate`` tool."""

    kind: str  # maxIter | isTerminationMsg | maxRounds | frameworkInternal | dagEndNode | noDelegation
    n: Optional[int] = None

    KINDS = ("maxIter", "isTerminationMsg", "maxRounds", "frameworkInternal", "dagEndNode",
             "noDelegation")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown termination hint {self.kind!r}")

    def __str__(self):
        return f"{self.kind}({self.n})" if self.n is not None else self.kind

    @classmethod
    def parse(cls, text: str) -> "Hint":
        if text.endswith(")") and "(" in text:
            kind, n = text[:-1].split("(", 1)
            return cls(kind, int(n))
        return cls(text)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    temperature: float = 0.0


@dataclass(frozen=True)
class MemorySpec:
    strategy: str = "local"
    size: Optional[int] = None
    ttl: Optional[int] = None


@dataclass
class CanonicalConfig:
    agent_id: str = "agent"
    agent_type: str = "simple"
    model: Optional[ModelSpec] = None
    system_prompt: Optional[str] = None
    max_steps: Optional[int] = None
    tools: list = field(default_factory=list)
    online_tools: list = field(default_factory=list)  # [(server, [tool ids])]
    routes: Optional[list] = None  # [(label, CanonicalConfig)]
    default_route: Optional["CanonicalConfig"] = None
    stages: Optional[list] = None
    branches: Optional[list] = None
    participants: Optional[list] = None
    memory: Optional[MemorySpec] = None
    guard: Optional[Predicate] = None
    termination_hints: frozenset = frozenset()
    termination_msg: Optional[str] = None
    framework: str = Framework.LAMBDAGENT
    source_path: str = ""
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.agent_type not in AGENT_TYPES:
            raise ValueError(f"unknown agent type {self.agent_type!r}")

    def all_tools(self) -> list[str]:
        """Online tools first (in server order), then local tools."""
        out: list[str] = []
        for _, ids in self.online_tools:
            out.extend(i for i in ids if i not in out)
        out.extend(t for t in self.tools if t not in out)
        return out

    def hint_kinds(self) -> set[str]:
        return {h.kind for h in self.termination_hints}

    def hint(self, kind: str) -> Optional[Hint]:
        return next((h for h in sorted(self.termination_hints, key=str) if h.kind == kind), None)

    def children(self) -> Iterator[tuple[str, "CanonicalConfig"]]:
        """Sub-configurations with their path prefixes."""
        for label, sub in self.routes or []:
            yield f"routes.{label}", sub
        if self.default_route is not None:
            yield "routes.default", self.default_route
        for i, sub in enumerate(self.stages or []):
            yield f"stages[{i}]", sub
        for i, sub in enumerate(self.branches or []):
            yield f"branches[{i}]", sub
        for i, sub in enumerate(self.participants or []):
            yield f"participants[{i}]", sub

    def walk(self, prefix: str = "") -> Iterator[tuple[str, "CanonicalConfig"]]:
        """Pre-order traversal yielding ``(path, node)``."""
        yield prefix, self
        for seg, sub in self.children():
            yield from sub.walk(f"{prefix}.{seg}" if prefix else seg)

    def copy(self) -> "CanonicalConfig":
        """Deep copy of the mutable structure."""
        return replace(
            self,
            tools=list(self.tools),
            online_tools=[(s, list(ids)) for s, ids in self.online_tools],
            routes=None if self.routes is None else [(l, c.copy()) for l, c in self.routes],
            default_route=None if self.default_route is None else self.default_route.copy(),
            stages=None if self.stages is None else [c.copy() for c in self.stages],
            branches=None if self.branches is None else [c.copy() for c in self.branches],
            participants=None if self.participants is None else [c.copy() for c in self.participants],
            extras=dict(self.extras),
        )


def join_path(prefix: str, field_name: str) -> str:
    return f"{prefix}.{field_name}" if prefix else field_name


# ---------------------------------------------------------------- export

def _predicate_doc(p) -> object:
    from ..typesys import Conj, MatchesRegex, MaxWords, MinWords, Neg, NonEmpty, ValidJson

    match p:
        case NonEmpty():
            return {"nonempty": True}
        case MaxWords(n):
            return {"max_words": n}
        case MinWords(n):
            return {"min_words": n}
        case MatchesRegex(pat):
            return {"regex": pat}
        case ValidJson():
            return {"valid_json": True}
        case Neg(inner):
            return {"not": _predicate_doc(inner)}
        case Conj(a, b):
            left = _predicate_doc(a)
            right = _predicate_doc(b)
            return (left if isinstance(left, list) else [left]) + (
                right if isinstance(right, list) else [right])
    raise TypeError(p)


def to_document(c: CanonicalConfig) -> dict:
    """Serialize to the native (``agentId`` + ``type``) document format."""
    doc: dict = {"agentId": c.agent_id, "type": c.agent_type}
    if c.model is not None:
        doc["model"] = {"name": c.model.name, "temperature": c.model.temperature}
    if c.system_prompt is not None:
        doc["systemPrompt"] = c.system_prompt
    if c.max_steps is not None:
        doc["react"] = {"maxSteps": c.max_steps}
    if c.tools or c.online_tools:
        mcp: dict = {}
        if c.online_tools:
            mcp["onlineTool"] = {s: list(ids) for s, ids in c.online_tools}
        mcp["localTools"] = list(c.tools)
        doc["mcp"] = mcp
    if c.routes is not None or c.default_route is not None:
        routes = {l: to_document(sub) for l, sub in c.routes or []}
        if c.default_route is not None:
            routes["default"] = to_document(c.default_route)
        doc["routes"] = routes
    for key in ("stages", "branches", "participants"):
        subs = getattr(c, key)
        if subs is not None:
            doc[key] = [to_document(s) for s in subs]
    if c.memory is not None:
        mem = {"strategy": c.memory.strategy}
        if c.memory.size is not None:
            mem["size"] = c.memory.size
        if c.memory.ttl is not None:
            mem["ttl"] = c.memory.ttl
        doc["memory"] = mem
    if c.guard is not None:
        doc["guard"] = _predicate_doc(c.guard)
    if c.termination_msg is not None:
        doc["terminationMsg"] = c.termination_msg
    if c.framework != Framework.LAMBDAGENT:
        doc["framework"] = c.framework
    if c.termination_hints:
        doc["terminationHints"] = sorted(str(h) for h in c.termination_hints)
    if c.source_path:
        doc["sourcePath"] = c.source_path
    if c.extras:
        doc["extras"] = dict(c.extras)
    return doc
