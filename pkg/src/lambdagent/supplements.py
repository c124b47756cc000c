"""Joint config + code analysis.

Lint findings about missing fields are often false alarms: the field is
supplied by the project's own source code rather than by the YAML.  The
scanner here lexically indexes a repository's source files and
:func:`reconcile` downgrades findings whose field has a code-side
definition.

Extraction is line-oriented on purpose.  It needs no parser for the host
language, at the price of missing multi-line constructs such as a
parenthesized string spanning several lines.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .lint import LintFinding, Severity

SOURCE_EXTENSIONS = frozenset({".py", ".js", ".mjs", ".cjs", ".ts", ".tsx", ".jsx", ".go",
                               ".java", ".rb", ".kt"})
SKIP_DIRS = frozenset({".git", "node_modules", "__pycache__", ".venv", "venv", "dist", "build"})

# Framework-specific patterns.  Extend by adding (name, regex) pairs.
CHAT_MODEL_CONSTRUCTORS = (
    "ChatOpenAI", "AzureChatOpenAI", "ChatAnthropic", "ChatOllama", "ChatGoogleGenerativeAI",
    "ChatVertexAI", "ChatMistralAI", "ChatGroq", "ChatBedrock", "ChatCohere",
    "OpenAIChatCompletionClient", "init_chat_model", "LLM",
)
FRAMEWORK_PATTERNS: dict[str, re.Pattern] = {
    "chatModelConstructor": re.compile(
        r"\b(?:new\s+)?(?:%s)\s*\(" % "|".join(CHAT_MODEL_CONSTRUCTORS)),
    "terminationMsgArg": re.compile(r"\bis_termination_msg\s*[=:]"),
    "toolDecorator": re.compile(r"^\s*@(?:tool|function_tool|kernel_function)\b"),
}

_STRING_START = r"(?:[rRbBuUfF]{0,2})?(?:\"|'|`)"
_CONSTANT_RE = re.compile(
    r"^\s*(?:export\s+)?(?:const\s+|let\s+|var\s+|final\s+|static\s+)*"
    r"([A-Za-z_$][\w$]*)\s*(?::\s*[\w\[\]., |]+)?\s*=\s*" + _STRING_START)
_ASSIGN_RE = re.compile(r"^\s*([A-Za-z_][\w]*)\s*(?::\s*[\w\[\]., |]+)?\s*=(?!=)\s*(.+)$")
_CLASS_RE = re.compile(r"^(\s*)class\s+\w+")
_KWARG_RE = re.compile(r"\b([A-Za-z_]\w*)\s*=(?!=)\s*([^,)]*)")
_STRING_LIT_RE = re.compile(r"\"(?:\\.|[^\"\\])*\"|'(?:\\.|[^'\\])*'|`(?:\\.|[^`\\])*`")


@dataclass(frozen=True, order=True)
class Site:
    file: str
    line: int
    snippet: str = ""

    def __str__(self):
        return f"{self.file}:{self.line}"


def _norm(name: str) -> str:
    return name.replace("_", "").replace("-", "").lower()


def _add(table: dict, key: str, site: Site) -> None:
    table.setdefault(key, []).append(site)


@dataclass
class SupplementIndex:
    constant_assignments: dict = field(default_factory=dict)
    call_keyword_args: dict = field(default_factory=dict)
    class_attributes: dict = field(default_factory=dict)
    framework_patterns: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.constant_assignments or self.call_keyword_args
                    or self.class_attributes or self.framework_patterns)

    def merge(self, other: "SupplementIndex") -> "SupplementIndex":
        out = SupplementIndex()
        for name in ("constant_assignments", "call_keyword_args", "class_attributes",
                     "framework_patterns"):
            merged: dict = {}
            for src in (getattr(self, name), getattr(other, name)):
                for k, sites in src.items():
                    merged.setdefault(k, []).extend(sites)
            setattr(out, name, {k: sorted(set(v)) for k, v in sorted(merged.items())})
        out.errors = sorted(self.errors + other.errors)
        return out

    def names(self) -> dict[str, list[Site]]:
        """Normalized identifier -> sites across the three name-keyed tables."""
        out: dict[str, list[Site]] = {}
        for table in (self.constant_assignments, self.call_keyword_args, self.class_attributes):
            for k, sites in table.items():
                out.setdefault(_norm(k), []).extend(sites)
        return {k: sorted(v) for k, v in out.items()}


def scan_text(text: str, file: str) -> SupplementIndex:
    idx = SupplementIndex()
    depth = 0
    class_indent: int | None = None
    body_indent: int | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", "//")):
            continue
        site = Site(file, lineno, stripped[:120])
        indent = len(line) - len(line.lstrip())

        for name, pat in FRAMEWORK_PATTERNS.items():
            if pat.search(line):
                _add(idx.framework_patterns, name, site)

        # class bodies: first indented line fixes the attribute indentation
        if class_indent is not None and indent <= class_indent and depth == 0:
            class_indent = body_indent = None
        m = _CLASS_RE.match(line)
        if m and depth == 0:
            class_indent, body_indent = len(m.group(1)), None
        elif class_indent is not None and depth == 0:
            if body_indent is None:
                body_indent = indent
            if indent == body_indent:
                a = _ASSIGN_RE.match(line)
                if a:
                    _add(idx.class_attributes, a.group(1), site)

        in_class_body = class_indent is not None and indent == body_indent
        if depth == 0 and not in_class_body:
            c = _CONSTANT_RE.match(line)
            if c:
                _add(idx.constant_assignments, c.group(1), site)

        # keyword arguments inside call parentheses (strings blanked out first)
        bare = _STRING_LIT_RE.sub('""', line)
        pos = 0
        for i, ch in enumerate(bare):
            if ch == "(":
                if depth > 0:
                    _scan_kwargs(bare[pos:i], idx, site)
                depth += 1
                pos = i + 1
            elif ch == ")":
                if depth > 0:
                    _scan_kwargs(bare[pos:i], idx, site)
                depth = max(depth - 1, 0)
                pos = i + 1
        if depth > 0:
            _scan_kwargs(bare[pos:], idx, site)
    return idx


def _scan_kwargs(segment: str, idx: SupplementIndex, site: Site) -> None:
    for m in _KWARG_RE.finditer(segment):
        _add(idx.call_keyword_args, m.group(1), site)


def _source_files(root: Path) -> list[Path]:
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in SKIP_DIRS)
        for f in sorted(filenames):
            if Path(f).suffix in SOURCE_EXTENSIONS:
                out.append(Path(dirpath) / f)
    return out


def scan_repo(root: str | Path) -> SupplementIndex:
    root = Path(root)
    idx = SupplementIndex()
    for path in _source_files(root):
        rel = path.relative_to(root).as_posix()
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            idx.errors.append(f"{rel}: {exc}")
            continue
        idx = idx.merge(scan_text(text, rel))
    return idx


# ---------------------------------------------------------------- reconciliation

PROMPT_NAMES = frozenset(map(_norm, (
    "system_prompt", "prompt", "system_message", "instructions", "instruction", "backstory",
    "prompt_template", "template", "sys_prompt", "system", "preamble")))
MODEL_NAMES = frozenset(map(_norm, (
    "model", "model_name", "llm", "llm_model", "model_id", "engine", "deployment",
    "deployment_name", "chat_model")))
MAX_ITER_NAMES = frozenset(map(_norm, (
    "max_iter", "max_iterations", "max_steps", "max_turns", "max_rounds", "max_round",
    "recursion_limit", "max_consecutive_auto_reply")))


def _first(names: dict, wanted: Iterable[str], suffix: str | None = None) -> Site | None:
    sites = [s for n, ss in names.items() if n in wanted or (suffix and n.endswith(suffix))
             for s in ss]
    return min(sites) if sites else None


def _supplement_for(rule_id: str, index: SupplementIndex,
                    names: dict) -> tuple[str, Site] | None:
    fp = index.framework_patterns
    if rule_id == "L001":
        s = _first(names, PROMPT_NAMES, suffix="prompt")
        return ("prompt", s) if s else None
    if rule_id == "L002":
        s = _first(names, MODEL_NAMES, suffix="model")
        if s:
            return ("model", s)
        if fp.get("chatModelConstructor"):
            return ("chat model constructor", min(fp["chatModelConstructor"]))
        return None
    if rule_id == "L004a":
        for pat in ("terminationMsgArg", "toolDecorator"):
            if fp.get(pat):
                return ({"terminationMsgArg": "termination message check",
                         "toolDecorator": "tool decorator"}[pat], min(fp[pat]))
        return None
    if rule_id == "L017":
        s = _first(names, MAX_ITER_NAMES)
        return ("iteration limit", s) if s else None
    return None


def reconcile(findings: list[LintFinding], index: SupplementIndex) -> list[LintFinding]:
    """Downgrade findings whose field is supplied by code; never upgrades."""
    names = index.names()
    out = []
    for f in findings:
        sup = None if f.severity == Severity.INFO else _supplement_for(f.rule_id, index, names)
        if sup is None:
            out.append(f)
            continue
        what, site = sup
        note = f"{what} supplied by code at {site}"
        out.append(LintFinding(f.rule_id, Severity.INFO, f.path, f.message, note))
    return sorted(out, key=LintFinding.sort_key)
