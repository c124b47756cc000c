"""Experiment harness: ``lambdagent-harness <subcommand>``.

* ``run-matrix``  fault injection over baseline configs, scored against lint
* ``cost-table``  predicted vs. observed oracle calls for fixed programs
* ``joint``       YAML-only vs. YAML+code lint precision on a labelled fixture set
* ``summarize``   corpus-level lint statistics for a directory of configs
* ``bench``       per-operation dispatch timings
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

from .config import compile_config, load_config
from .config.compiler import react_body
from .evaluator import EvalContext, Outcome, reduce
from .actions import format_action
from .cost import predicted_calls
from .faults import load_baselines, run_matrix, shipped_baseline_dir
from .lint import LintFinding, Severity, lint, lint_many, summarize
from .oracles import ScriptedOracle, ToolRegistry
from .syntax import compose, let
from .supplements import reconcile, scan_repo
from .terms import (
    Abs, App, Fix, Guard, If, LamOracle, Mem, ModelParams, Pair, StoreRef, StrLit, Term, Tool,
    Var,
)
from .trace import LoopIter
from .typesys import STR, STR_TO_STR, NonEmpty

# ---------------------------------------------------------------- cost programs

MODEL = ModelParams("scripted", 0.0)


@dataclass
class CostCase:
    name: str
    bound: int
    term: Term
    oracle: ScriptedOracle
    tools: ToolRegistry
    input: str


@dataclass
class CostRow:
    name: str
    bound: int
    predicted: int
    actual: int
    outcome: Outcome

    @property
    def tightness(self) -> float:
        return self.predicted / self.actual if self.actual else float("inf")

    @property
    def sound(self) -> bool:
        return self.actual <= self.predicted


def church_factorial(k: int) -> CostCase:
    """``fix_{k+1} (λs. λx. s (step x))`` where ``step`` maps ``"i acc"`` to
    ``"i-1 acc·i"``; one oracle call per unfolding, fixed iteration count."""
    entries, i, acc = [], k, 1
    while True:
        nxt = (max(i - 1, 0), acc * i if i > 0 else acc)
        entries.append(("factorial step", f"{i} {acc}", f"{nxt[0]} {nxt[1]}"))
        if i == 0:
            break
        i, acc = nxt
    body = Abs("s", STR_TO_STR, Abs("x", STR,
                                    App(Var("s"), App(LamOracle("factorial step", MODEL),
                                                      Var("x")))))
    return CostCase(f"Church factorial ({k}!)", k + 1, Fix(k + 1, body),
                    ScriptedOracle(entries), ToolRegistry(), f"{k} 1")


def _react_case(name: str, n: int, tool: str, tool_steps: Optional[int]) -> CostCase:
    """A ReAct loop that calls ``tool`` ``tool_steps`` times then terminates
    (never terminates when ``tool_steps`` is None)."""
    if tool_steps is None:
        script = [format_action(tool, "more")]
    else:
        script = [format_action(tool, f"q{i}") for i in range(tool_steps)]
        script.append(format_action("terminate", "done"))
    tools = ToolRegistry()
    tools.register(tool, lambda a: f"{tool} result for {a}")
    term = Fix(n, react_body(name, MODEL, [tool, "terminate"]))
    return CostCase(name, n, term, ScriptedOracle([("*", "*", script)]), tools, "task")


def self_learning(n: int = 10, rounds: int = 4) -> CostCase:
    """``fix_n (λs. λx. let t = lam x in (if check then id else s) t)``:
    a think call and a check call on every unfolding."""
    verdicts = iter(["false"] * (rounds - 1) + ["true"] * 1000)
    tools = ToolRegistry()
    tools.register("check", lambda _t: next(verdicts))
    y = "y"
    body = Abs("s", STR_TO_STR, Abs("x", STR, let(
        "t", STR, App(LamOracle("learn", MODEL), Var("x")),
        App(If(Tool("check"), Abs(y, STR, Var(y)), Abs(y, STR, App(Var("s"), Var(y)))),
            Var("t")))))
    oracle = ScriptedOracle([("*", "*", [f"lesson {i}" for i in range(1, rounds + 1)])])
    return CostCase("Self-learning", n, Fix(n, body), oracle, tools, "task")


def cost_cases() -> list[CostCase]:
    return [
        church_factorial(3),
        church_factorial(5),
        _react_case("ReAct research", 20, "search", 7),
        self_learning(10, 4),
        _react_case("Refine loop", 5, "critique", 1),
        _react_case("ReAct never terminating", 20, "search", None),
    ]


def run_cost_case(case: CostCase) -> CostRow:
    ctx = EvalContext(case.oracle, case.tools)
    outcome = reduce(case.term, case.input, ctx)
    return CostRow(case.name, case.bound, predicted_calls(case.term),
                   ctx.trace.oracle_calls(), outcome)


def cost_table(rows: Sequence[CostRow]) -> str:
    header = ("program", "n", "predicted", "actual", "tightness", "bound holds")
    body = [(r.name, str(r.bound), str(r.predicted), str(r.actual), f"{r.tightness:.1f}x",
             "yes" if r.sound else "NO") for r in rows]
    widths = [max(len(x[i]) for x in [header, *body]) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
                     for row in [header, *body])


# ---------------------------------------------------------------- joint analysis


@dataclass
class JointReport:
    findings: int  # findings of the labelled rules, YAML only
    true_positives: int
    downgraded_fp: int
    downgraded_tp: int
    planted: int  # labelled false positives (the supplied fields)

    @property
    def yaml_precision(self) -> float:
        return self.true_positives / self.findings if self.findings else 1.0

    @property
    def joint_reported(self) -> int:
        return self.findings - self.downgraded_fp - self.downgraded_tp

    @property
    def joint_precision(self) -> float:
        tp = self.true_positives - self.downgraded_tp
        return tp / self.joint_reported if self.joint_reported else 1.0

    def render(self) -> str:
        return "\n".join([
            f"findings = {self.findings} (true {self.true_positives}, "
            f"false {self.findings - self.true_positives})",
            f"YAML-only precision = {self.yaml_precision:.1%}",
            f"downgraded = {self.downgraded_fp} of {self.planted} false positives "
            f"({self.downgraded_tp} true positives downgraded)",
            f"joint precision = {self.joint_precision:.1%} "
            f"({self.true_positives - self.downgraded_tp}/{self.joint_reported})",
        ])


def _reported(findings: list[LintFinding], rule: str) -> bool:
    return any(f.rule_id == rule and f.severity != Severity.INFO for f in findings)


def joint_analysis(root: str | Path) -> JointReport:
    """Score lint with and without code on ``root/ground_truth.json``.

    The ground truth maps a project directory to ``{"rule": id, "label":
    "TP" | "FP"}``; each project holds one ``agent.yaml`` plus any source.
    """
    root = Path(root)
    truth = json.loads((root / "ground_truth.json").read_text(encoding="utf-8"))
    report = JointReport(0, 0, 0, 0, 0)
    for project, label in sorted(truth.items()):
        d = root / project
        findings = lint(load_config(d / "agent.yaml"))
        rule = label["rule"]
        if not _reported(findings, rule):
            raise ValueError(f"{project}: expected a {rule} finding from YAML alone")
        tp = label["label"] == "TP"
        report.findings += 1
        report.true_positives += tp
        report.planted += not tp
        if not _reported(reconcile(findings, scan_repo(d)), rule):
            if tp:
                report.downgraded_tp += 1
            else:
                report.downgraded_fp += 1
    return report


# ---------------------------------------------------------------- micro-benchmarks


def _median_us(fn: Callable[[], object], reps: int) -> float:
    fn()  # warm-up
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return statistics.median(samples) / 1000.0


def bench(reps: int = 300, config: Optional[str | Path] = None) -> dict[str, float]:
    """Median microseconds per operation (and per compile, if ``config``)."""
    tools = ToolRegistry.with_library()
    oracle = ScriptedOracle(default="ok")
    ctx = EvalContext(oracle, tools)

    def run(term: Term) -> Callable[[], object]:
        return lambda: reduce(term, "some input text", EvalContext(oracle, tools))

    observe = Abs("x", STR, App(Tool("@observe"), Pair(Pair(Var("x"), Var("x")), Var("x"))))
    out = {
        "tool call": _median_us(run(Tool("echo")), reps),
        "3-stage compose": _median_us(run(compose(Tool("echo"), Tool("upper"), Tool("lower"))),
                                      reps),
        "if branch": _median_us(run(If(Tool("echo"), Tool("upper"), Tool("lower"))), reps),
        "guard": _median_us(run(Guard(Tool("echo"), NonEmpty())), reps),
        "memory write": _median_us(run(Mem(observe, StoreRef(capacity=8))), reps),
        "trace log": _median_us(lambda: ctx.trace.log(LoopIter(1)), reps),
    }
    if config is not None:
        out["compile"] = _median_us(lambda: compile_config(load_config(config)),
                                    max(reps // 10, 5))
    return out


# ---------------------------------------------------------------- CLI


def _cmd_run_matrix(args) -> int:
    t0 = time.perf_counter()
    report = run_matrix(load_baselines(args.baselines))
    elapsed = time.perf_counter() - t0
    print(report.table())
    if args.cells:
        print(report.structured())
    print(f"elapsed={elapsed:.3f}s")
    return 0 if report.detected == report.injected and not report.false_positives_on_baselines \
        else 1


def _cmd_cost_table(args) -> int:
    rows = [run_cost_case(c) for c in cost_cases()]
    print(cost_table(rows))
    return 0 if all(r.sound for r in rows) else 1


def _cmd_joint(args) -> int:
    print(joint_analysis(args.fixtures).render())
    return 0


def _cmd_summarize(args) -> int:
    root = Path(args.corpus)
    files = sorted(p for p in root.rglob("*") if p.suffix in (".yaml", ".yml", ".json"))
    configs, skipped = [], 0
    for p in files:
        try:
            configs.append(load_config(p))
        except Exception as exc:  # a corpus contains arbitrary files
            skipped += 1
            print(f"skip {p}: {exc}", file=sys.stderr)
    print(summarize(lint_many(configs)).render())
    if skipped:
        print(f"unreadable files skipped = {skipped}")
    return 0


def _cmd_bench(args) -> int:
    for op, us in bench(args.reps, args.compile_config).items():
        print(f"{op:<16} {us:9.1f} µs")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    p = argparse.ArgumentParser(prog="lambdagent-harness")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("run-matrix", help="fault injection over baseline configs")
    s.add_argument("--baselines", default=str(shipped_baseline_dir()))
    s.add_argument("--cells", action="store_true", help="also print one line per cell")
    s.set_defaults(fn=_cmd_run_matrix)
    s = sub.add_parser("cost-table", help="predicted vs. observed oracle calls")
    s.set_defaults(fn=_cmd_cost_table)
    s = sub.add_parser("joint", help="YAML-only vs. joint YAML+code lint precision")
    s.add_argument("fixtures", help="directory containing ground_truth.json")
    s.set_defaults(fn=_cmd_joint)
    s = sub.add_parser("summarize", help="lint statistics over a config corpus")
    s.add_argument("corpus")
    s.set_defaults(fn=_cmd_summarize)
    s = sub.add_parser("bench", help="per-operation dispatch timings")
    s.add_argument("--reps", type=int, default=300)
    s.add_argument("--compile-config", metavar="CONFIG", help="also time compiling this config")
    s.set_defaults(fn=_cmd_bench)
    args = p.parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
