from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambdagent.config.compiler import react_body
from lambdagent.cost import cost_estimate, oracles, predicted_calls
from lambdagent.evaluator import EvalContext, reduce
from lambdagent.fuzz import TermGen, fuzz_world
from lambdagent.syntax import compose
from lambdagent.terms import (
    Abs, App, Comp, Fix, If, LamOracle, ModelParams, Prob, Tool, Var, identity,
)
from lambdagent.typesys import STR, STR_TO_STR

M = ModelParams("m", 0.0)


def loop(n, inner):
    return Fix(n, Abs("s", STR_TO_STR, Abs("x", STR, App(Var("s"), App(inner, Var("x"))))))


def test_twenty_iterations_at_one_cent():
    assert cost_estimate(loop(20, LamOracle("p", M)), {"llm:m": 0.01}) == pytest.approx(0.20)


def test_zero_bound_costs_nothing():
    assert cost_estimate(loop(0, LamOracle("p", M)), {"llm:m": 0.01}) == 0


def test_react_twenty_predicts_forty_calls():
    t = Fix(20, react_body("p", M, ["search", "terminate"]))
    assert predicted_calls(t) == 40


def test_react_with_several_tools_still_one_tool_per_step():
    t = Fix(20, react_body("p", M, ["search", "calc", "browse", "terminate"]))
    assert predicted_calls(t) == 40


def test_pipeline_costs_add():
    t = compose(loop(3, LamOracle("a", M)), loop(2, LamOracle("b", ModelParams("n"))))
    assert cost_estimate(t, {"llm:m": 1.0, "llm:n": 10.0}) == pytest.approx(23.0)


def test_loop_takes_most_expensive_branch():
    body = If(Tool("flag"), LamOracle("cheap", M), LamOracle("dear", ModelParams("big")))
    t = loop(4, body)
    assert cost_estimate(t, {"llm:m": 1.0, "llm:big": 5.0, "flag": 0.5}) == pytest.approx(22.0)


def test_prob_takes_max():
    t = Prob(LamOracle("a", M), Comp(LamOracle("a", M), LamOracle("b", M)), 0.5)
    assert predicted_calls(t) == 2


def test_terminate_and_builtins_are_free():
    assert predicted_calls(compose(Tool("terminate"), Tool("@action"), identity())) == 0


def test_oracle_ids():
    t = compose(LamOracle("a", M), Tool("search"), Tool("terminate"))
    assert oracles(t) == {"llm:m", "search"}


def test_unknown_oracle_id_rejected():
    with pytest.raises(KeyError):
        cost_estimate(LamOracle("a", M), {})


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        cost_estimate(LamOracle("a", M), {"llm:m": -1})


def test_nonlinear_self_use_rejected():
    twice = Fix(3, Abs("s", STR_TO_STR, Abs("x", STR, App(Var("s"), App(Var("s"), Var("x"))))))
    with pytest.raises(ValueError):
        predicted_calls(twice)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**7))
def test_cost_bound_is_sound_on_generated_programs(seed):
    oracle, tools, _ = fuzz_world()
    term, text = TermGen(seed).program()
    predicted = predicted_calls(term)
    ctx = EvalContext(oracle, tools, rng_seed=seed)
    reduce(term, text, ctx)
    assert ctx.trace.oracle_calls() <= predicted


@pytest.mark.parametrize("n", [0, 1, 5, 12])
def test_fixed_iteration_loops_are_tight(n):
    oracle, tools, _ = fuzz_world()
    t = loop(n, LamOracle("p", M))
    ctx = EvalContext(oracle, tools)
    reduce(t, "go", ctx)
    assert ctx.trace.oracle_calls() == predicted_calls(t) == n
