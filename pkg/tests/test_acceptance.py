"""End-to-end acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL verdict; the lines are printed in
the terminal summary (see ``conftest.py``) and immediately with ``-s``.
Criterion 10 needs an external config corpus: point ``LAMBDAGENT_CORPUS``
at a directory of agent configurations to run it.
"""

from __future__ import annotations

import os
import random
import time
from pathlib import Path

import pytest

from conftest import FIXTURES, GOLDEN, record_verdict
from properties import check_safety
from lambdagent.config import (
    CanonicalConfig, ModelSpec, compile_config, load_config, normalize, to_document,
    type_context,
)
from lambdagent.evaluator import EvalContext, GuardStuck, Ok, RouteError, reduce
from lambdagent.faults import load_baselines, run_matrix
from lambdagent.fuzz import TermGen, fuzz_world, random_pipeline_stage
from lambdagent.harness import bench, cost_cases, joint_analysis, run_cost_case
from lambdagent.lint import Severity, lint, lint_many, summarize
from lambdagent.pretty import pretty
from lambdagent.syntax import compose
from lambdagent.terms import Case, Fix, LamOracle, Mem, identity
from lambdagent.trace import LoopIter
from lambdagent.typecheck import infer
from lambdagent.typesys import STR_TO_STR

CODING = FIXTURES / "coding_assistant.yaml"
ANALYST = FIXTURES / "research_analyst.yaml"


def verdict(number: int, ok: bool, detail: str) -> None:
    record_verdict(number, ok, detail)
    assert ok, detail


def test_criterion_01_fault_matrix():
    t0 = time.perf_counter()
    r = run_matrix(load_baselines())
    elapsed = time.perf_counter() - t0
    counts = (r.baselines, r.injected, r.detected, r.false_positives_on_baselines,
              r.skipped_inapplicable)
    verdict(1, counts == (10, 42, 42, 0, 8) and elapsed < 5.0,
            f"fault matrix baselines={counts[0]} injected={counts[1]} detected={counts[2]} "
            f"baseline_errors={counts[3]} skipped={counts[4]} in {elapsed:.2f}s")


def test_criterion_02_termination():
    t0 = time.perf_counter()
    violations = 0
    for seed in range(1000):
        gen = TermGen(seed, max_bound=32)
        n = gen.rng.randint(0, 32)
        term, text = gen.loop(n), gen.word_string()
        oracle, tools, _ = fuzz_world()
        ctx = EvalContext(oracle, tools, rng_seed=seed)
        reduce(term, text, ctx)
        violations += ctx.trace.count(LoopIter) > n
    elapsed = time.perf_counter() - t0
    verdict(2, violations == 0 and elapsed < 30.0,
            f"termination: 1000 loops (n ≤ 32), {violations} over-unfoldings, {elapsed:.1f}s")


def test_criterion_03_cost_bound():
    rows = {r.name: r for r in map(run_cost_case, cost_cases())}
    f3, f5 = rows["Church factorial (3!)"], rows["Church factorial (5!)"]
    never = rows["ReAct never terminating"]
    ok = ((f3.predicted, f3.actual) == (4, 4) and (f5.predicted, f5.actual) == (6, 6)
          and never.predicted == 40 and never.actual <= 40)
    verdict(3, ok, f"cost: 3! {f3.actual}/{f3.predicted}, 5! {f5.actual}/{f5.predicted}, "
                   f"non-terminating ReAct {never.actual} ≤ {never.predicted}")


def test_criterion_04_monoid_laws():
    rng = random.Random(2024)
    oracle, tools, _ = fuzz_world()
    failures = 0

    def out(term, text):
        r = reduce(term, text, EvalContext(oracle, tools))
        assert isinstance(r, Ok)
        return r.value.text

    for _ in range(200):
        a, b, c = (random_pipeline_stage(rng) for _ in range(3))
        text = f"input {rng.randrange(10**6)}"
        left = out(compose(compose(a, b), c), text)
        right = out(compose(a, compose(b, c)), text)
        plain = out(a, text)
        failures += not (left == right and out(compose(identity(), a), text) == plain
                         and out(compose(a, identity()), text) == plain)
    verdict(4, failures == 0, f"monoid laws: 200 pipelines, {failures} counterexamples")


def test_criterion_05_progress_and_preservation():
    t0 = time.perf_counter()
    violations, guard_failures = [], 0
    for seed in range(10_000):
        term, text = TermGen(seed).program()
        try:
            r = check_safety(term, text, seed=seed)
        except AssertionError as exc:
            violations.append((seed, str(exc)))
            continue
        guard_failures += isinstance(r.outcome, GuardStuck)
    elapsed = time.perf_counter() - t0
    verdict(5, not violations,
            f"safety: 10000 terms, {len(violations)} violations "
            f"({guard_failures} guard failures, the only stuck state), {elapsed:.1f}s"
            + (f"; first: seed {violations[0][0]}: {violations[0][1]}" if violations else ""))


def test_criterion_06_compilation_goldens():
    c1, c2 = load_config(CODING), load_config(ANALYST)
    t1, t2 = compile_config(c1), compile_config(c2)
    text1, text2 = pretty(t1), pretty(t2)
    case = t1.inner.body.body.body.fn.body.fn if isinstance(t1, Mem) else None
    ok = (text1.startswith("mem (fix_20") and isinstance(t1.inner, Fix)
          and isinstance(case, Case) and set(case.labels) == {"sum", "improve", "terminate"}
          and len(case.labels) == 3
          and text1 == (GOLDEN / "coding_assistant.lambda").read_text(encoding="utf-8").rstrip("\n")
          and isinstance(t2, LamOracle) and infer(type_context(c2), t2) == STR_TO_STR
          and text2 == (GOLDEN / "research_analyst.lambda").read_text(encoding="utf-8").rstrip("\n"))
    verdict(6, ok, "compilation goldens: coding assistant mem (fix_20 … "
                   "{sum, improve, terminate}), research analyst one oracle call : Str → Str")


def _rules(c):
    return {(f.rule_id, f.severity) for f in lint(c)}


def test_criterion_07_lint_goldens():
    checks = {}
    checks["research_analyst"] = _rules(load_config(ANALYST)) == {("L004c", Severity.INFO),
                                                           ("L017", Severity.WARN)}
    doc = to_document(load_config(CODING))
    doc["mcp"]["localTools"] = []
    checks["no terminate"] = ("L004a", Severity.ERROR) in _rules(normalize(doc))
    doc = to_document(load_config(CODING))
    doc["react"]["maxSteps"] = 0
    checks["maxSteps=0"] = ("L003", Severity.ERROR) in _rules(normalize(doc))
    base = dict(agent_id="r", agent_type="router", model=ModelSpec("m"), system_prompt="route")
    empty = CanonicalConfig(**base, routes=[])
    checks["empty routes"] = ("L005", Severity.ERROR) in _rules(empty)
    leaf = CanonicalConfig(agent_id="a", model=ModelSpec("m"), system_prompt="p")
    checks["no default"] = ("L013", Severity.WARN) in _rules(
        CanonicalConfig(**base, routes=[("a", leaf)]))
    # the L005 program really is unroutable
    checks["L005 semantics"] = isinstance(
        reduce(compile_config(empty, force=True), "x", EvalContext(*fuzz_world()[:2])),
        RouteError)
    failed = [k for k, v in checks.items() if not v]
    verdict(7, not failed, f"lint goldens: {len(checks) - len(failed)}/{len(checks)} "
                           f"({', '.join(failed) or 'all match'})")


def test_criterion_08_joint_analysis():
    r = joint_analysis(FIXTURES / "entangled")
    ok = r.planted == 23 and r.downgraded_fp == 22 and r.joint_precision >= 0.96
    verdict(8, ok, f"supplements: downgraded {r.downgraded_fp}/{r.planted}, "
                   f"joint precision {r.joint_precision:.1%}")


def test_criterion_09_overhead():
    timings = bench(reps=300, config=CODING)
    compile_us = timings.pop("compile")
    worst = max(timings, key=timings.get)
    ok = all(v < 100.0 for v in timings.values()) and compile_us < 50_000
    verdict(9, ok, f"overhead: slowest op {worst} {timings[worst]:.1f} µs, "
                   f"compile {compile_us / 1000:.2f} ms")


def test_criterion_10_corpus():
    corpus = os.environ.get("LAMBDAGENT_CORPUS")
    if not corpus:
        record_verdict(10, None, "corpus: skipped, LAMBDAGENT_CORPUS not set")
        pytest.skip("set LAMBDAGENT_CORPUS to a config corpus directory")
    configs = []
    for p in sorted(q for q in Path(corpus).rglob("*") if q.suffix in (".yaml", ".yml", ".json")):
        try:
            configs.append(load_config(p))
        except Exception:  # a corpus contains arbitrary files
            continue
    r = summarize(lint_many(configs))
    verdict(10, (r.configs_with_error, r.clean) == (786, 46),
            f"corpus: {r.total} configs, {r.configs_with_error} with ERROR, {r.clean} clean")
