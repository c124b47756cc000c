from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, GOLDEN
from lambdagent.actions import format_action
from lambdagent.config import (
    CanonicalConfig, Framework, Hint, ModelSpec, compile_config, load_config, normalize,
    to_document,
)
from lambdagent.evaluator import EvalContext, Ok, RouteError, reduce
from lambdagent.lint import (
    CATALOG, LintFinding, Severity, exit_code, format_findings, format_structured, lint,
    lint_many, summarize,
)
from lambdagent.oracles import ScriptedOracle, ToolRegistry
from lambdagent.trace import LoopIter

CODING = FIXTURES / "coding_assistant.yaml"
ANALYST = FIXTURES / "research_analyst.yaml"


def ids(findings):
    return {(f.rule_id, f.severity) for f in findings}


def coding_doc():
    return to_document(load_config(CODING))


def react(**kw):
    base = dict(agent_id="r", agent_type="react", model=ModelSpec("m"), system_prompt="p",
                max_steps=5, tools=["search", "terminate"])
    base.update(kw)
    return CanonicalConfig(**base)


def router(**kw):
    base = dict(agent_id="rt", agent_type="router", model=ModelSpec("m"), system_prompt="route")
    base.update(kw)
    return CanonicalConfig(**base)


def simple(name="s"):
    return CanonicalConfig(agent_id=name, model=ModelSpec("m"), system_prompt="p")


# ---------------------------------------------------------------- goldens


def test_research_analyst_findings():
    findings = lint(load_config(ANALYST))
    assert ids(findings) == {("L004c", Severity.INFO), ("L017", Severity.WARN)}
    assert format_findings(findings) == \
        (GOLDEN / "research_analyst.lint").read_text(encoding="utf-8").rstrip("\n")


def test_coding_assistant_is_clean():
    assert lint(load_config(CODING)) == []


def test_coding_assistant_without_terminate():
    doc = coding_doc()
    doc["mcp"]["localTools"] = []
    findings = lint(normalize(doc))
    assert ("L004a", Severity.ERROR) in ids(findings)
    assert next(f for f in findings if f.rule_id == "L004a").path == "mcp.localTools"


def test_zero_max_steps():
    assert ("L003", Severity.ERROR) in ids(lint(react(max_steps=0)))


def test_empty_routes():
    assert ids(lint(router(routes=[]))) == {("L005", Severity.ERROR)}


def test_router_without_default():
    f = lint(router(routes=[("a", simple())]))
    assert ids(f) == {("L013", Severity.WARN)} and f[0].path == "routes.default"


@pytest.mark.parametrize("prompt", [None, "", "   "])
def test_empty_or_missing_prompt(prompt):
    c = simple()
    c.system_prompt = prompt
    assert ids(lint(c)) == {("L001", Severity.ERROR)}


def test_missing_model():
    c = simple()
    c.model = None
    assert ids(lint(c)) == {("L002", Severity.ERROR)}


def test_unbounded_group():
    c = CanonicalConfig(agent_id="g", agent_type="group", participants=[simple("a"), simple("b")])
    assert ids(lint(c)) == {("L021", Severity.ERROR)}
    c.termination_hints = frozenset({Hint("maxRounds", 4)})
    assert lint(c) == []


def test_nested_paths():
    c = CanonicalConfig(agent_id="c", agent_type="chain", stages=[simple("a"), react(tools=[])])
    f = lint(c)
    assert [x.path for x in f if x.rule_id == "L004a"] == ["stages[1].mcp.localTools"]


@pytest.mark.parametrize("hints,rule,sev", [
    ({Hint("maxIter", 5)}, "L004b", Severity.WARN),
    ({Hint("maxRounds", 3)}, "L004b", Severity.WARN),
    ({Hint("frameworkInternal")}, "L004c", Severity.INFO),
    ({Hint("dagEndNode")}, "L004c", Severity.INFO),
    ({Hint("isTerminationMsg")}, "L004d", Severity.INFO),
    (set(), "L004a", Severity.ERROR),
])
def test_termination_stratification(hints, rule, sev):
    f = [x for x in lint(react(tools=["search"], termination_hints=frozenset(hints)))
         if x.rule_id.startswith("L004")]
    assert [(x.rule_id, x.severity) for x in f] == [(rule, sev)]


def test_findings_sorted_by_severity_rule_path():
    c = CanonicalConfig(agent_id="c", agent_type="chain", stages=[
        react(tools=[], max_steps=None, system_prompt=""), router(routes=[("a", simple())])])
    f = lint(c)
    assert f == sorted(f, key=LintFinding.sort_key)
    assert [x.severity for x in f][0] == Severity.ERROR


# ---------------------------------------------------------------- semantic soundness


def test_l003_configs_are_the_identity():
    c = react(max_steps=0)
    t = compile_config(c, force=True)
    ctx = EvalContext(ScriptedOracle(), ToolRegistry.with_library())
    assert reduce(t, "anything", ctx).value.text == "anything"
    assert ctx.trace.oracle_calls() == 0


def test_l004a_configs_exhaust_the_bound():
    c = react(tools=["echo"], max_steps=7)
    assert ("L004a", Severity.ERROR) in ids(lint(c))
    t = compile_config(c, force=True)
    ctx = EvalContext(ScriptedOracle(default=format_action("echo", "more")),
                      ToolRegistry.with_library())
    out = reduce(t, "go", ctx)
    assert isinstance(out, Ok) and ctx.trace.count(LoopIter) == 7


@settings(max_examples=50, deadline=None)
@given(st.text(max_size=30), st.text(max_size=10))
def test_l005_configs_never_route(text, reply):
    t = compile_config(router(routes=[]), force=True)
    ctx = EvalContext(ScriptedOracle(default=reply), ToolRegistry())
    assert reduce(t, text, ctx) == RouteError(reply)


hint_sets = st.sets(st.sampled_from([Hint("maxIter", 3), Hint("maxRounds", 2),
                                     Hint("frameworkInternal"), Hint("isTerminationMsg"),
                                     Hint("dagEndNode"), Hint("noDelegation")]))


def _l004_level(c):
    levels = [Severity.ORDER[f.severity] for f in lint(c) if f.rule_id.startswith("L004")]
    return min(levels, default=3)  # smaller is more severe


@settings(max_examples=200, deadline=None)
@given(hint_sets, hint_sets, st.sampled_from(Framework.ALL))
def test_adding_a_hint_never_increases_severity(base, extra, fw):
    c = react(tools=["search"], termination_hints=frozenset(base), framework=fw)
    more = react(tools=["search"], termination_hints=frozenset(base | extra), framework=fw)
    assert _l004_level(more) >= _l004_level(c)


@settings(max_examples=50, deadline=None)
@given(hint_sets)
def test_lint_is_deterministic(hints):
    c = react(tools=[], termination_hints=frozenset(hints), max_steps=None)
    assert lint(c) == lint(c.copy())
    assert format_structured(lint(c)) == format_structured(lint(c.copy()))


# ---------------------------------------------------------------- catalog and output


def test_catalog_ids_unique_and_named_rules_implemented():
    rule_ids = [r.rule_id for r in CATALOG]
    assert len(rule_ids) == len(set(rule_ids))
    implemented = {r.rule_id for r in CATALOG if r.implemented}
    assert {"L001", "L002", "L003", "L004a", "L004b", "L004c", "L004d", "L005", "L013", "L017",
            "L021"} <= implemented
    for rid in ("L006", "L023"):
        assert next(r for r in CATALOG if r.rule_id == rid).summary == "reserved, not implemented"


def test_exit_codes():
    err = LintFinding("L001", Severity.ERROR, "p", "m")
    warn = LintFinding("L017", Severity.WARN, "p", "m")
    info = LintFinding("L004c", Severity.INFO, "p", "m")
    assert exit_code([]) == 0 and exit_code([info]) == 0
    assert exit_code([warn, info]) == 1 and exit_code([warn, err]) == 2


def test_structured_output_field_order():
    f = LintFinding("L017", Severity.WARN, "react.maxSteps", "not specified")
    assert format_structured([f]) == ('{"rule_id": "L017", "severity": "WARN", "path": '
                                      '"react.maxSteps", "message": "not specified", '
                                      '"mitigation": null}')
    assert json.loads(format_structured([f]))["rule_id"] == "L017"


def test_summarize_empty():
    r = summarize([])
    assert (r.total, r.configs_with_error, r.clean, r.per_rule) == (0, 0, 0, {})


def test_summarize_half_with_errors():
    bad = simple()
    bad.system_prompt = ""
    report = summarize(dict(zip(["a", "b"], lint_many([bad, simple()]))))
    assert "configs with ≥1 ERROR = 1 (50.0%)" in report.render()
    assert report.clean == 1 and report.per_rule == {"L001": 1}
