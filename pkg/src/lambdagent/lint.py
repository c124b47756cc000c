"""Structural lint rules over canonical configurations.

Each rule flags a configuration whose compiled term is degenerate:
an oracle with no prompt or model, a loop with bound zero, a loop with
no base case, a dispatch with no branches, and so on.  Missing-base-case
findings are stratified by whatever other termination mechanism the
configuration declares.
"""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional

from .config.canonical import CanonicalConfig, Framework, join_path


class Severity:
    ERROR = "ERROR"
    WARN = "WARN"
    INFO = "INFO"

    ORDER = {ERROR: 0, WARN: 1, INFO: 2}


@dataclass(frozen=True)
class LintFinding:
    rule_id: str
    severity: str
    path: str
    message: str
    mitigation: Optional[str] = None

    def sort_key(self):
        return (Severity.ORDER[self.severity], self.rule_id, self.path)

    def to_dict(self) -> dict:
        return asdict(self)


Check = Callable[[str, CanonicalConfig], Iterator[LintFinding]]


@dataclass(frozen=True)
class RuleDescriptor:
    rule_id: str
    level: str
    summary: str
    check: Optional[Check] = field(default=None, compare=False)  # None: emitted by a sibling
    reserved: bool = False

    @property
    def implemented(self) -> bool:
        return not self.reserved


# ---------------------------------------------------------------- predicates

FRAMEWORK_LOOPS = (Framework.CREWAI, Framework.LANGCHAIN, Framework.AUTOGEN)
ORACLE_NODES = ("simple", "react")
LOOP_NODES = ("react", "loop", "group")


def is_react_like(c: CanonicalConfig) -> bool:
    """A tool-using loop, either declared or implied by the framework."""
    return c.agent_type == "react" or (
        c.framework in FRAMEWORK_LOOPS and c.agent_type in ("simple", "react"))


def _has_bound_hint(c: CanonicalConfig) -> bool:
    return bool(c.hint_kinds() & {"maxIter", "maxRounds"})


# ---------------------------------------------------------------- rules

def _l001(path, c):
    if c.agent_type in ORACLE_NODES and not (c.system_prompt or "").strip():
        yield LintFinding("L001", Severity.ERROR, join_path(path, "systemPrompt"),
                          "empty system prompt")


def _l002(path, c):
    if c.framework == Framework.CREWAI:
        return
    if c.agent_type in ORACLE_NODES + ("router",) and c.model is None:
        yield LintFinding("L002", Severity.ERROR, join_path(path, "model"), "no model configured")


def _l003(path, c):
    if c.agent_type in LOOP_NODES and c.max_steps == 0:
        yield LintFinding("L003", Severity.ERROR, join_path(path, "react.maxSteps"),
                          "maxSteps is 0: the loop never runs")


def _l004(path, c):
    if not is_react_like(c) or "terminate" in c.all_tools():
        return
    p = join_path(path, "mcp.localTools")
    msg = "no terminate tool"
    kinds = c.hint_kinds()
    if kinds & {"frameworkInternal", "dagEndNode", "noDelegation"}:
        if "frameworkInternal" in kinds:
            note = f"{c.framework}: handled by framework"
        elif "dagEndNode" in kinds:
            note = "workflow end node"
        else:
            note = "delegation disabled"
        yield LintFinding("L004c", Severity.INFO, p, msg, note)
    elif "isTerminationMsg" in kinds:
        yield LintFinding("L004d", Severity.INFO, p, msg, "termination message check")
    elif _has_bound_hint(c):
        bound = c.hint("maxIter") or c.hint("maxRounds")
        yield LintFinding("L004b", Severity.WARN, p, msg, f"bounded by {bound}; forced truncation")
    else:
        yield LintFinding("L004a", Severity.ERROR, p, msg)


def _l005(path, c):
    if c.agent_type == "router" and not c.routes and c.default_route is None:
        yield LintFinding("L005", Severity.ERROR, join_path(path, "routes"),
                          "no routes: every input is unroutable")


def _l013(path, c):
    if c.agent_type == "router" and c.routes and c.default_route is None:
        yield LintFinding("L013", Severity.WARN, join_path(path, "routes.default"),
                          "no default route: unmatched labels raise RouteError")


def _l017(path, c):
    if is_react_like(c) and c.max_steps is None and not _has_bound_hint(c):
        yield LintFinding("L017", Severity.WARN, join_path(path, "react.maxSteps"),
                          "not specified")


def _l021(path, c):
    if c.agent_type != "group":
        return
    if c.max_steps is None and "maxRounds" not in c.hint_kinds() and \
            "isTerminationMsg" not in c.hint_kinds() and c.termination_msg is None:
        yield LintFinding("L021", Severity.ERROR, join_path(path, "maxRounds"),
                          "unbounded multi-agent loop: no round limit and no termination message")


def _reserved(rule_id: str, level: str) -> RuleDescriptor:
    return RuleDescriptor(rule_id, level, "reserved, not implemented", reserved=True)


CATALOG: tuple[RuleDescriptor, ...] = (
    RuleDescriptor("L001", Severity.ERROR, "system prompt empty or missing", _l001),
    RuleDescriptor("L002", Severity.ERROR, "no model configured", _l002),
    RuleDescriptor("L003", Severity.ERROR, "maxSteps is 0", _l003),
    RuleDescriptor("L004a", Severity.ERROR, "no terminate and no alternative mechanism", _l004),
    RuleDescriptor("L004b", Severity.WARN, "no terminate; bounded iteration only"),
    RuleDescriptor("L004c", Severity.INFO, "no terminate; framework handles termination"),
    RuleDescriptor("L004d", Severity.INFO, "no terminate; termination message check"),
    RuleDescriptor("L005", Severity.ERROR, "router with no routes", _l005),
    _reserved("L006", Severity.ERROR),
    *(_reserved(f"L{i:03d}", Severity.WARN) for i in range(7, 13)),
    RuleDescriptor("L013", Severity.WARN, "router without default route", _l013),
    *(_reserved(f"L{i:03d}", Severity.WARN) for i in range(14, 17)),
    RuleDescriptor("L017", Severity.WARN, "loop bound not specified", _l017),
    *(_reserved(f"L{i:03d}", Severity.WARN) for i in range(18, 21)),
    RuleDescriptor("L021", Severity.ERROR, "multi-agent loop without termination", _l021),
    _reserved("L022", Severity.WARN),
    _reserved("L023", Severity.ERROR),
    _reserved("L024", Severity.WARN),
    _reserved("L025", Severity.WARN),
)


def lint(c: CanonicalConfig) -> list[LintFinding]:
    """All findings for ``c`` and its sub-configurations, sorted."""
    checks = [r.check for r in CATALOG if r.check is not None]
    out = [f for path, node in c.walk() for check in checks for f in check(path, node)]
    return sorted(out, key=LintFinding.sort_key)


def lint_many(configs: Iterable[CanonicalConfig], workers: int = 8) -> list[list[LintFinding]]:
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lint, configs))


def exit_code(findings: Iterable[LintFinding]) -> int:
    levels = {f.severity for f in findings}
    if Severity.ERROR in levels:
        return 2
    if Severity.WARN in levels:
        return 1
    return 0


def format_findings(findings: list[LintFinding]) -> str:
    """Aligned ``LEVEL RULEID path: message (mitigation)`` lines."""
    if not findings:
        return ""
    w_sev = max(len(f.severity) for f in findings)
    w_rule = max(len(f.rule_id) for f in findings)
    lines = []
    for f in findings:
        line = f"{f.severity:<{w_sev}} {f.rule_id:<{w_rule}} {f.path}: {f.message}"
        if f.mitigation:
            line += f" ({f.mitigation})"
        lines.append(line)
    return "\n".join(lines)


def format_structured(findings: list[LintFinding]) -> str:
    return "\n".join(json.dumps(f.to_dict(), ensure_ascii=False) for f in findings)


# ---------------------------------------------------------------- corpus summary

@dataclass
class LintReport:
    total: int = 0
    configs_with_error: int = 0
    clean: int = 0
    per_rule: dict = field(default_factory=dict)  # rule id -> number of findings
    configs_per_rule: dict = field(default_factory=dict)  # rule id -> configs flagged

    @staticmethod
    def pct(n: int, total: int) -> str:
        return f"{(100.0 * n / total) if total else 0.0:.1f}%"

    def render(self) -> str:
        lines = [f"configs = {self.total}",
                 f"configs with ≥1 ERROR = {self.configs_with_error} "
                 f"({self.pct(self.configs_with_error, self.total)})",
                 f"clean configs = {self.clean} ({self.pct(self.clean, self.total)})"]
        for rule in sorted(self.per_rule):
            n = self.configs_per_rule[rule]
            lines.append(f"{rule:<6} findings={self.per_rule[rule]:<5} configs={n} "
                         f"({self.pct(n, self.total)})")
        return "\n".join(lines)


def summarize(findings_per_config: Mapping[str, list[LintFinding]] | list) -> LintReport:
    """Aggregate findings over a config set.

    A config is *clean* when it has no ERROR or WARN finding.
    """
    groups = list(findings_per_config.values()) if isinstance(findings_per_config, Mapping) \
        else list(findings_per_config)
    per_rule: Counter = Counter()
    configs_per_rule: Counter = Counter()
    report = LintReport(total=len(groups))
    for findings in groups:
        levels = {f.severity for f in findings}
        if Severity.ERROR in levels:
            report.configs_with_error += 1
        if not levels & {Severity.ERROR, Severity.WARN}:
            report.clean += 1
        for f in findings:
            per_rule[f.rule_id] += 1
        for rule in {f.rule_id for f in findings}:
            configs_per_rule[rule] += 1
    report.per_rule = dict(per_rule)
    report.configs_per_rule = dict(configs_per_rule)
    return report
