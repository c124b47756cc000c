"""Fault injection into known-good configurations, scored against lint.

Each fault kind removes or zeroes one field group and is expected to be
caught by exactly one lint rule.  A fault is *inapplicable* to a config
that lacks the field group altogether (e.g. removing ``terminate`` from
an agent that has no tool loop).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .config import CanonicalConfig, load_config
from .lint import LintFinding, Severity, lint


class FaultKind(enum.Enum):
    REMOVE_TERMINATE = "RemoveTerminate"
    EMPTY_SYSTEM_PROMPT = "EmptySystemPrompt"
    REMOVE_MODEL = "RemoveModel"
    ZERO_MAX_STEPS = "ZeroMaxSteps"
    EMPTY_ROUTES = "EmptyRoutes"


EXPECTED_RULE = {
    FaultKind.REMOVE_TERMINATE: "L004a",
    FaultKind.EMPTY_SYSTEM_PROMPT: "L001",
    FaultKind.REMOVE_MODEL: "L002",
    FaultKind.ZERO_MAX_STEPS: "L003",
    FaultKind.EMPTY_ROUTES: "L005",
}


class Inapplicable:
    """Marker result: the config has no field group for this fault."""

    def __init__(self, kind: FaultKind, reason: str):
        self.kind = kind
        self.reason = reason

    def __repr__(self):
        return f"Inapplicable({self.kind.value}: {self.reason})"


def _target(c: CanonicalConfig, kind: FaultKind) -> Optional[CanonicalConfig]:
    """First node in pre-order that carries the field group for ``kind``."""
    for _, node in c.walk():
        if kind is FaultKind.REMOVE_TERMINATE and "terminate" in node.all_tools() \
                and node.agent_type == "react":
            return node
        if kind is FaultKind.EMPTY_SYSTEM_PROMPT and node.agent_type in ("simple", "react") \
                and node.system_prompt:
            return node
        if kind is FaultKind.REMOVE_MODEL and node.agent_type in ("simple", "react", "router") \
                and node.model is not None:
            return node
        if kind is FaultKind.ZERO_MAX_STEPS and node.agent_type in ("react", "loop", "group") \
                and node.max_steps is not None:
            return node
        if kind is FaultKind.EMPTY_ROUTES and node.agent_type == "router":
            return node
    return None


def inject(c: CanonicalConfig, kind: FaultKind) -> CanonicalConfig | Inapplicable:
    """A copy of ``c`` exhibiting ``kind``; ``c`` itself is not modified."""
    out = c.copy()
    node = _target(out, kind)
    if node is None:
        return Inapplicable(kind, "no node carries the targeted field")
    match kind:
        case FaultKind.REMOVE_TERMINATE:
            node.tools = [t for t in node.tools if t != "terminate"]
            node.online_tools = [(s, [t for t in ids if t != "terminate"])
                                 for s, ids in node.online_tools]
        case FaultKind.EMPTY_SYSTEM_PROMPT:
            node.system_prompt = ""
        case FaultKind.REMOVE_MODEL:
            node.model = None
        case FaultKind.ZERO_MAX_STEPS:
            node.max_steps = 0
        case FaultKind.EMPTY_ROUTES:
            node.routes = []
            node.default_route = None
    return out


@dataclass
class Cell:
    baseline: str
    kind: FaultKind
    status: str  # detected | missed | inapplicable
    expected_rule: str
    new_errors: list = field(default_factory=list)

    def to_line(self) -> str:
        extra = f" other_errors={','.join(self.new_errors)}" if self.new_errors else ""
        return (f"baseline={self.baseline} fault={self.kind.value} "
                f"expect={self.expected_rule} status={self.status}{extra}")


@dataclass
class MatrixReport:
    injected: int = 0
    detected: int = 0
    false_positives_on_baselines: int = 0
    skipped_inapplicable: int = 0
    per_fault: dict = field(default_factory=dict)  # FaultKind -> [applicable, detected]
    cells: list = field(default_factory=list)
    baselines: int = 0

    @property
    def recall(self) -> float:
        return self.detected / self.injected if self.injected else 1.0

    @property
    def precision(self) -> float:
        # detections are true positives by construction; FPs are ERRORs on clean baselines
        tp = self.detected
        return tp / (tp + self.false_positives_on_baselines) if tp else 1.0

    def table(self) -> str:
        rows = [("fault", "expected", "applicable", "detected")]
        for kind in FaultKind:
            a, d = self.per_fault.get(kind, (0, 0))
            rows.append((kind.value, EXPECTED_RULE[kind], str(a), str(d)))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines += [
            f"baselines={self.baselines} injected={self.injected} detected={self.detected} "
            f"skipped={self.skipped_inapplicable} baseline_errors={self.false_positives_on_baselines}",
            f"recall={self.recall:.1%} precision={self.precision:.1%}",
        ]
        return "\n".join(lines)

    def structured(self) -> str:
        return "\n".join(c.to_line() for c in self.cells)


class BaselineNotClean(ValueError):
    pass


def _errors(findings: list[LintFinding]) -> set[str]:
    return {f.rule_id for f in findings if f.severity == Severity.ERROR}


def run_matrix(baselines: Iterable[tuple[str, CanonicalConfig]] | Iterable[CanonicalConfig],
               kinds: Iterable[FaultKind] = tuple(FaultKind), strict: bool = True) -> MatrixReport:
    """Inject every kind into every baseline and lint the result.

    ERROR findings on an unmodified baseline count as false positives; with
    ``strict`` (the default) they are a setup error instead.
    """
    named = [(b if isinstance(b, tuple) else (b.agent_id, b)) for b in baselines]
    kinds = list(kinds)
    report = MatrixReport(per_fault={k: (0, 0) for k in kinds}, baselines=len(named))
    for name, base in named:
        base_errors = _errors(lint(base))
        if base_errors:
            if strict:
                raise BaselineNotClean(f"baseline {name} has ERROR findings: {sorted(base_errors)}")
            report.false_positives_on_baselines += len(base_errors)
        for kind in kinds:
            rule = EXPECTED_RULE[kind]
            mutated = inject(base, kind)
            if isinstance(mutated, Inapplicable):
                report.skipped_inapplicable += 1
                report.cells.append(Cell(name, kind, "inapplicable", rule))
                continue
            errors = _errors(lint(mutated))
            hit = rule in errors
            report.injected += 1
            report.detected += hit
            a, d = report.per_fault[kind]
            report.per_fault[kind] = (a + 1, d + hit)
            report.cells.append(Cell(name, kind, "detected" if hit else "missed", rule,
                                     sorted(errors - {rule})))
    return report


def shipped_baseline_dir() -> Path:
    return Path(str(resources.files("lambdagent") / "data" / "baselines"))


def load_baselines(directory: str | Path | None = None) -> list[tuple[str, CanonicalConfig]]:
    d = Path(directory) if directory is not None else shipped_baseline_dir()
    files = sorted(p for p in d.iterdir() if p.suffix in (".yaml", ".yml", ".json"))
    return [(p.stem, load_config(p)) for p in files]
