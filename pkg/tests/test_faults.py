from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambdagent.config import CanonicalConfig, ModelSpec
from lambdagent.faults import (
    EXPECTED_RULE, BaselineNotClean, FaultKind, Inapplicable, inject, load_baselines, run_matrix,
)
from lambdagent.lint import Severity, lint


def react(**kw):
    base = dict(agent_id="r", agent_type="react", model=ModelSpec("m"), system_prompt="p",
                max_steps=5, tools=["search", "terminate"])
    base.update(kw)
    return CanonicalConfig(**base)


def simple(name="s"):
    return CanonicalConfig(agent_id=name, model=ModelSpec("m"), system_prompt="p")


def test_no_baselines_gives_empty_report():
    r = run_matrix([])
    assert (r.baselines, r.injected, r.detected, r.skipped_inapplicable,
            r.false_positives_on_baselines) == (0, 0, 0, 0, 0)
    assert r.recall == 1.0 and r.precision == 1.0


def test_single_react_zero_max_steps():
    r = run_matrix([react()], kinds=[FaultKind.ZERO_MAX_STEPS])
    assert (r.injected, r.detected) == (1, 1)
    assert r.structured() == "baseline=r fault=ZeroMaxSteps expect=L003 status=detected"


def test_injection_does_not_modify_input():
    c = react()
    before = c.copy()
    for kind in FaultKind:
        inject(c, kind)
    assert c == before


@pytest.mark.parametrize("kind", [FaultKind.REMOVE_TERMINATE, FaultKind.ZERO_MAX_STEPS,
                                  FaultKind.EMPTY_ROUTES])
def test_inapplicable_to_simple_agents(kind):
    assert isinstance(inject(simple(), kind), Inapplicable)


def test_inapplicable_cells_are_skipped_not_missed():
    r = run_matrix([simple()])
    assert r.skipped_inapplicable == 3 and r.injected == r.detected == 2
    statuses = {c.kind: c.status for c in r.cells}
    assert statuses[FaultKind.EMPTY_ROUTES] == "inapplicable"


def test_strict_mode_rejects_dirty_baseline():
    dirty = simple()
    dirty.system_prompt = ""
    with pytest.raises(BaselineNotClean):
        run_matrix([dirty])
    r = run_matrix([dirty], strict=False)
    assert r.false_positives_on_baselines == 1


def test_fault_targets_nested_node():
    c = CanonicalConfig(agent_id="c", agent_type="chain", stages=[simple("a"), react()])
    out = inject(c, FaultKind.REMOVE_TERMINATE)
    assert out.stages[1].tools == ["search"]
    assert any(f.rule_id == "L004a" and f.path == "stages[1].mcp.localTools"
               for f in lint(out))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(list(FaultKind)), st.integers(0, 9))
def test_each_applicable_fault_raises_its_rule(kind, idx):
    name, base = load_baselines()[idx]
    mutated = inject(base, kind)
    if isinstance(mutated, Inapplicable):
        return
    errors = {f.rule_id for f in lint(mutated) if f.severity == Severity.ERROR}
    assert EXPECTED_RULE[kind] in errors, name


def test_shipped_matrix_detects_everything():
    r = run_matrix(load_baselines())
    assert r.baselines == 10
    assert r.injected == r.detected > 0 and r.false_positives_on_baselines == 0
    assert "recall=100.0% precision=100.0%" in r.table()
    assert len(r.cells) == 10 * len(FaultKind)
