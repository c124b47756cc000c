"""Oracle providers and the tool registry.

An oracle maps ``(prompt, params, input)`` to text.  Tests and offline
runs use :class:`ScriptedOracle`; a live endpoint can be configured via
``LAMBDAGENT_ORACLE_URL`` / ``LAMBDAGENT_ORACLE_KEY``.
"""

from __future__ import annotations

import ast
import json
import operator
import os
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import yaml

from .terms import ModelParams
from .typesys import STR, Type

ENV_URL = "LAMBDAGENT_ORACLE_URL"
ENV_KEY = "LAMBDAGENT_ORACLE_KEY"
WILDCARD = "*"


class OracleProvider(Protocol):
    def complete(self, prompt: str, params: ModelParams, input: str) -> str: ...


class ScriptMiss(LookupError):
    """No scripted response matches the request."""


class ScriptedOracle:
    """Replays canned responses.

    Lookup order: exact ``(prompt, input)``; entries whose prompt key is
    a substring of the prompt (file order); ``*`` wildcards; ``default``.
    An entry's output may be a list, consumed one item per matching call
    (the last item repeats).
    """

    def __init__(self, entries=(), default: str | None = None):
        self._entries: list[tuple[str, str, object]] = [tuple(e) for e in entries]
        self._cursor: dict[int, int] = {}
        self.default = default

    def _emit(self, idx: int) -> str:
        out = self._entries[idx][2]
        if isinstance(out, list):
            i = self._cursor.get(idx, 0)
            self._cursor[idx] = i + 1
            return str(out[min(i, len(out) - 1)])
        return str(out)

    def _find(self, prompt: str, input: str) -> int | None:
        def first(pred):
            return next((i for i, e in enumerate(self._entries) if pred(e)), None)

        for pred in (
            lambda e: e[0] == prompt and e[1] == input,
            lambda e: e[0] not in (WILDCARD, "") and e[0] in prompt and e[1] == input,
            lambda e: e[0] == prompt and e[1] == WILDCARD,
            lambda e: e[0] not in (WILDCARD, "") and e[0] in prompt and e[1] == WILDCARD,
            lambda e: e[0] == WILDCARD and e[1] == input,
            lambda e: e[0] == WILDCARD and e[1] == WILDCARD,
        ):
            idx = first(pred)
            if idx is not None:
                return idx
        return None

    def complete(self, prompt: str, params: ModelParams, input: str) -> str:
        idx = self._find(prompt, input)
        if idx is not None:
            return self._emit(idx)
        if self.default is not None:
            return self.default
        raise ScriptMiss(f"no scripted output for input {input[:60]!r}")

    @classmethod
    def from_mapping(cls, doc: dict) -> "ScriptedOracle":
        entries = []
        for item in doc.get("oracle", []) or []:
            entries.append((str(item.get("prompt", WILDCARD)), str(item.get("input", WILDCARD)),
                            item["output"]))
        return cls(entries, doc.get("default"))


@dataclass
class FunctionOracle:
    """Wraps a plain function ``(prompt, input) -> text``."""

    fn: Callable[[str, str], str]

    def complete(self, prompt: str, params: ModelParams, input: str) -> str:
        return self.fn(prompt, input)


@dataclass
class HttpOracle:
    """POSTs ``{prompt, input, model, temperature}`` and reads ``output``."""

    url: str
    api_key: str | None = None
    timeout: float = 60.0

    @classmethod
    def from_env(cls) -> "HttpOracle | None":
        url = os.environ.get(ENV_URL)
        return cls(url, os.environ.get(ENV_KEY)) if url else None

    def complete(self, prompt: str, params: ModelParams, input: str) -> str:
        body = json.dumps({"prompt": prompt, "input": input, "model": params.model_name,
                           "temperature": params.temperature}).encode()
        req = urllib.request.Request(self.url, data=body, method="POST",
                                     headers={"Content-Type": "application/json"})
        if self.api_key:
            req.add_header("Authorization", f"Bearer {self.api_key}")
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            payload = json.loads(resp.read().decode())
        out = payload.get("output") if isinstance(payload, dict) else None
        if not isinstance(out, str):
            raise ValueError("oracle endpoint returned no 'output' string")
        return out


# ---------------------------------------------------------------- tools

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.FloorDiv: operator.floordiv, ast.Mod: operator.mod,
           ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _arith(node):
    match node:
        case ast.Expression(body):
            return _arith(body)
        case ast.Constant(value) if isinstance(value, (int, float)):
            return value
        case ast.BinOp(l, op, r) if type(op) in _BINOPS:
            return _BINOPS[type(op)](_arith(l), _arith(r))
        case ast.UnaryOp(op, x) if type(op) in _UNOPS:
            return _UNOPS[type(op)](_arith(x))
    raise ValueError("unsupported expression")


def calc(text: str) -> str:
    """Evaluate an arithmetic expression; errors are reported as text."""
    try:
        val = _arith(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        return f"error: {exc}"
    if isinstance(val, float) and val.is_integer():
        val = int(val)
    return str(val)


LIBRARY_TOOLS: dict[str, Callable[[str], str]] = {
    "calc": calc,
    "echo": lambda s: s,
    "upper": str.upper,
    "lower": str.lower,
    "reverse": lambda s: s[::-1],
    "word_count": lambda s: str(len(s.split())),
}


def scripted_tool(table: dict, tool_id: str = "tool") -> Callable[[str], str]:
    """A tool answering from ``{input: output}`` with an optional ``*`` fallback."""

    def run(text: str) -> str:
        if text in table:
            return str(table[text])
        if WILDCARD in table:
            return str(table[WILDCARD])
        return f"{tool_id}: no scripted result for {text!r}"

    return run


@dataclass
class ToolEntry:
    fn: Callable[[str], str]
    dom: Type = STR
    cod: Type = STR
    description: str = ""


@dataclass
class ToolRegistry:
    """Named total functions available to ``tool[...]`` terms."""

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries.setdefault("terminate", ToolEntry(lambda s: s, description="halt with input"))

    def register(self, name: str, fn: Callable[[str], str], dom: Type = STR, cod: Type = STR,
                 description: str = "") -> None:
        if name.startswith("@"):
            raise ValueError("tool ids starting with '@' are reserved")
        if name == "terminate":
            raise ValueError("terminate is built in and always the identity")
        self.entries[name] = ToolEntry(fn, dom, cod, description)

    def __contains__(self, name):
        return name in self.entries

    def get(self, name: str) -> ToolEntry:
        return self.entries[name]

    def names(self) -> list[str]:
        return sorted(self.entries)

    def signatures(self) -> dict:
        return {n: (e.dom, e.cod) for n, e in self.entries.items()}

    def call(self, name: str, text: str) -> str:
        return self.entries[name].fn(text)

    @classmethod
    def with_library(cls) -> "ToolRegistry":
        reg = cls()
        for name, fn in LIBRARY_TOOLS.items():
            reg.register(name, fn, description=(fn.__doc__ or "").strip().split("\n")[0])
        return reg


def load_script(path: str | Path) -> tuple[ScriptedOracle, dict[str, Callable[[str], str]]]:
    """Read an oracle script (YAML or JSON).

    Format::

        oracle:
          - {prompt: "*", input: "q", output: "ACTION: calc\\nARGS: 1+2"}
        tools:
          search: {"*": "result text"}
        default: "fallback output"
    """
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(doc, dict):
        raise ValueError("oracle script must be a mapping")
    tools = {name: scripted_tool(table or {}, name)
             for name, table in (doc.get("tools") or {}).items()}
    return ScriptedOracle.from_mapping(doc), tools
