from __future__ import annotations

import json

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, GOLDEN, echo_oracle, make_ctx
from lambdagent.config import (
    CanonicalConfig, CompileError, ConfigError, Framework, Hint, MemorySpec, ModelSpec,
    compile_config, detect_framework, load_config, normalize, to_document, type_context,
)
from lambdagent.config.compiler import DEFAULT_MAX_STEPS
from lambdagent.evaluator import reduce
from lambdagent.faults import load_baselines, shipped_baseline_dir
from lambdagent.pretty import pretty
from lambdagent.terms import Case, Comp, Fix, LamOracle, Mem, StoreRef, Tool
from lambdagent.typecheck import infer
from lambdagent.typesys import STR, STR_TO_STR, Arrow, MaxWords, NonEmpty, Product, is_subtype

CODING = FIXTURES / "coding_assistant.yaml"
ANALYST = FIXTURES / "research_analyst.yaml"


def raw(path):
    return yaml.safe_load(path.read_text(encoding="utf-8"))


def simple(name, prompt="Do the thing.", model="m"):
    return CanonicalConfig(agent_id=name, agent_type="simple", model=ModelSpec(model),
                           system_prompt=prompt)


# ---------------------------------------------------------------- detection


@pytest.mark.parametrize("doc,kind", [
    ({"role": "r", "goal": "g", "backstory": "b"}, Framework.CREWAI),
    ({"name": "a", "llm_config": {"model": "gpt-4"}}, Framework.AUTOGEN),
    ({"name": "a", "is_termination_msg": "DONE"}, Framework.AUTOGEN),
    ({"nodes": [{"id": "n1", "data": {"type": "llm"}}]}, Framework.DIFY),
    ({"agents": [{"agentId": "a", "type": "simple"}], "max_turns": 3}, Framework.MULTIAGENT),
    ({"_type": "agent_executor", "tools": []}, Framework.LANGCHAIN),
    ({"agentId": "x", "type": "react"}, Framework.LAMBDAGENT),
    ({}, Framework.GENERIC),
    ({"agents": [], "prompt": "x"}, Framework.GENERIC),
])
def test_detection(doc, kind):
    assert detect_framework(doc) == kind


def test_reference_config_detection():
    assert detect_framework(raw(ANALYST)) == Framework.CREWAI
    assert detect_framework(raw(CODING)) == Framework.LAMBDAGENT


def test_detection_order_crewai_wins_over_autogen():
    doc = {"role": "r", "goal": "g", "backstory": "b", "llm_config": {}}
    assert detect_framework(doc) == Framework.CREWAI


def test_non_mapping_root_rejected():
    with pytest.raises(ConfigError):
        normalize(["a", "b"])


def test_unparseable_file(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("a: [unclosed", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(p)


# ---------------------------------------------------------------- normalization


def test_research_analyst_normalization():
    c = load_config(ANALYST)
    assert c.system_prompt == ("Senior Research Analyst\nProduce comprehensive research reports\n"
                               "Expert in data analysis and synthesis")
    assert c.tools == [] and c.framework == Framework.CREWAI
    assert c.termination_hints == frozenset({Hint("frameworkInternal")})
    assert c.agent_type == "simple"


def test_coding_assistant_normalization():
    c = load_config(CODING)
    assert (c.agent_id, c.agent_type, c.max_steps) == ("seeCoderManus", "react", 20)
    assert c.model == ModelSpec("qwen3-max", 0.7)
    assert c.all_tools() == ["sum", "improve", "terminate"]
    assert c.memory == MemorySpec("redis", 20, 7200)


def test_autogen_termination_message():
    c = normalize({"name": "a", "llm_config": {"model": "gpt-4"},
                   "is_termination_msg": "lambda m: 'TERMINATE' in m"})
    assert "isTerminationMsg" in c.hint_kinds()
    assert c.model == ModelSpec("gpt-4")


def test_max_iter_hint():
    c = normalize({"role": "r", "goal": "g", "backstory": "b", "max_iter": 5})
    assert Hint("maxIter", 5) in c.termination_hints


def test_langchain_normalization():
    c = normalize({"_type": "agent", "llm": {"model_name": "gpt-4"}, "tools": ["search"],
                   "prompt": {"template": "Answer: {input}"}, "max_iterations": 4})
    assert c.framework == Framework.LANGCHAIN and c.agent_type == "react"
    assert c.system_prompt == "Answer: {input}"
    assert c.hint_kinds() == {"frameworkInternal", "maxIter"}


def test_dify_graph_follows_edges():
    doc = {"nodes": [
        {"id": "end", "data": {"type": "end"}},
        {"id": "b", "data": {"type": "tool", "tool": "search"}},
        {"id": "s", "data": {"type": "start"}},
        {"id": "a", "data": {"type": "llm", "model": {"name": "m"}, "prompt": "Plan."}},
    ], "edges": [{"source": "s", "target": "a"}, {"source": "a", "target": "b"},
                 {"source": "b", "target": "end"}]}
    c = normalize(doc)
    assert c.agent_type == "chain"
    assert [s.agent_type for s in c.stages] == ["simple", "tool"]
    assert "dagEndNode" in c.hint_kinds()


def test_dify_unknown_node_type():
    with pytest.raises(ConfigError):
        normalize({"nodes": [{"id": "x", "data": {"type": "http-request"}}]})


def test_unmapped_fields_kept_as_extras():
    c = normalize({"role": "r", "goal": "g", "backstory": "b", "verbose": True})
    assert c.extras == {"verbose": True}


def test_framework_override():
    c = normalize({"agentId": "x", "type": "simple", "systemPrompt": "p"}, Framework.GENERIC)
    assert c.framework == Framework.GENERIC


# ---------------------------------------------------------------- compilation


def test_coding_assistant_compiles_to_memory_wrapped_loop():
    t = compile_config(load_config(CODING))
    assert isinstance(t, Mem) and t.store == StoreRef(capacity=20, ttl=7200, strategy="redis")
    loop = t.inner
    assert isinstance(loop, Fix) and loop.bound == 20
    case = loop.body.body.body.fn.body  # let t = … in (case …) t
    assert isinstance(case.fn, Case)
    assert set(case.fn.labels) == {"sum", "improve", "terminate"}


def test_coding_assistant_golden():
    text = pretty(compile_config(load_config(CODING)))
    assert text.startswith("mem (fix_20")
    assert text == (GOLDEN / "coding_assistant.lambda").read_text(encoding="utf-8").rstrip("\n")


def test_research_analyst_is_single_oracle_call():
    c = load_config(ANALYST)
    t = compile_config(c)
    assert isinstance(t, LamOracle)
    assert infer(type_context(c), t) == STR_TO_STR
    assert pretty(t) == (GOLDEN / "research_analyst.lambda").read_text(encoding="utf-8").rstrip("\n")


def test_chain_of_two_simple_agents():
    c = CanonicalConfig(agent_id="c", agent_type="chain", stages=[simple("a"), simple("b")])
    t = compile_config(c)
    assert isinstance(t, Comp) and isinstance(t.first, LamOracle) and isinstance(t.second,
                                                                                    LamOracle)
    assert infer(type_context(c), t) == STR_TO_STR


def test_parallel_inside_chain_is_joined():
    par = CanonicalConfig(agent_id="p", agent_type="parallel", branches=[simple("a"), simple("b")])
    c = CanonicalConfig(agent_id="c", agent_type="chain", stages=[par, simple("z")])
    t = compile_config(c)
    assert infer(type_context(c), t) == STR_TO_STR
    out = reduce(t, "in", make_ctx(echo_oracle()))
    assert out.value.text == "Do the thing.(Do the thing.(in)\n\nDo the thing.(in))"


def test_top_level_parallel_is_a_pair():
    c = CanonicalConfig(agent_id="p", agent_type="parallel", branches=[simple("a"), simple("b")])
    assert infer(type_context(c), compile_config(c)) == Arrow(STR, Product(STR, STR))


def test_router_compiles_to_case_with_default():
    c = CanonicalConfig(agent_id="r", agent_type="router", model=ModelSpec("m"),
                        routes=[("billing", simple("b"))], default_route=simple("d"))
    t = compile_config(c)
    assert isinstance(t, Case) and t.labels == ("billing",) and t.default is not None
    assert "billing" in t.classifier.prompt


def test_guard_inside_memory():
    c = simple("a")
    c.guard = NonEmpty()
    c.memory = MemorySpec()
    t = compile_config(c)
    assert pretty(t).startswith("mem (guard (lam")


def test_crewai_with_tools_gets_framework_base_case():
    c = normalize({"role": "r", "goal": "g", "backstory": "b", "tools": ["search"]})
    t = compile_config(c)
    assert isinstance(t, Fix) and t.bound == DEFAULT_MAX_STEPS
    assert "terminate ⇒" in pretty(t)


def test_lint_errors_block_compilation_unless_forced():
    c = CanonicalConfig(agent_id="x", agent_type="simple", model=ModelSpec("m"))
    with pytest.raises(CompileError) as e:
        compile_config(c)
    assert "L001" in str(e.value) and e.value.path == "systemPrompt"
    assert isinstance(compile_config(c, force=True), LamOracle)


def test_nested_memory_rejected():
    inner = simple("a")
    inner.memory = MemorySpec()
    c = CanonicalConfig(agent_id="c", agent_type="chain", stages=[inner, simple("b")],
                        memory=MemorySpec())
    with pytest.raises(CompileError):
        compile_config(c)


def test_react_without_tools_rejected():
    c = CanonicalConfig(agent_id="r", agent_type="react", model=ModelSpec("m"),
                        system_prompt="p", max_steps=3)
    with pytest.raises(CompileError):
        compile_config(c, force=True)


def test_group_chat_compiles_to_bounded_loop():
    c = load_config(shipped_baseline_dir() / "b09_group_chat.yaml")
    t = compile_config(c)
    assert isinstance(t, Fix) and t.bound == 6
    assert is_subtype(infer(type_context(c), t), STR_TO_STR)


# ---------------------------------------------------------------- properties over configs


@st.composite
def configs(draw, depth=2, top=True):
    kinds = ["simple", "react"] + (["chain", "router", "parallel"] if depth > 0 else [])
    kind = draw(st.sampled_from(kinds))
    name = draw(st.sampled_from(["a", "b", "c", "d"]))
    model = ModelSpec(draw(st.sampled_from(["m1", "m2"])), 0.0)
    prompt = draw(st.sampled_from(["Summarize.", "Plan the work.", "Answer briefly."]))
    c = CanonicalConfig(agent_id=name, agent_type=kind)
    if kind in ("simple", "react", "router"):
        c.model, c.system_prompt = model, prompt
    if kind == "react":
        c.tools = draw(st.lists(st.sampled_from(["upper", "echo", "reverse"]), max_size=2,
                                unique=True)) + ["terminate"]
        c.max_steps = draw(st.integers(1, 4))
    sub = lambda: configs(depth - 1, False)  # noqa: E731
    if kind == "chain":
        c.stages = draw(st.lists(sub(), min_size=1, max_size=3))
    if kind == "router":
        labels = draw(st.lists(st.sampled_from(["x", "y", "z"]), min_size=1, max_size=2,
                               unique=True))
        c.routes = [(l, draw(sub())) for l in labels]
        c.default_route = draw(sub())
    if kind == "parallel":
        c.branches = draw(st.lists(sub(), min_size=2, max_size=3))
    if draw(st.booleans()) and kind in ("simple", "react"):
        c.guard = draw(st.sampled_from([NonEmpty(), MaxWords(50)]))
    if top and draw(st.booleans()):
        c.memory = MemorySpec(size=draw(st.sampled_from([None, 4])))
    return c


@settings(max_examples=150, deadline=None)
@given(configs())
def test_compiled_configs_typecheck(c):
    t = compile_config(c)
    ty = infer(type_context(c), t)
    assert isinstance(ty, Arrow) and ty.dom == STR


@settings(max_examples=150, deadline=None)
@given(configs())
def test_normalization_is_idempotent(c):
    once = normalize(to_document(c))
    assert once == c
    assert normalize(json.loads(json.dumps(to_document(once)))) == once


@settings(max_examples=100, deadline=None)
@given(configs(depth=1, top=False), configs(depth=1, top=False), st.text(max_size=20))
def test_chain_is_composition(c1, c2, text):
    chain = CanonicalConfig(agent_id="ch", agent_type="chain", stages=[c1, c2])
    if c1.agent_type == "parallel":
        return  # a parallel stage inside a chain gets a join stage by design
    lhs = reduce(compile_config(chain), text, make_ctx(echo_oracle()))
    rhs = reduce(Comp(compile_config(c1), compile_config(c2)), text, make_ctx(echo_oracle()))
    assert type(lhs) is type(rhs) and getattr(lhs, "value", None) == getattr(rhs, "value", None)


@settings(max_examples=50, deadline=None)
@given(configs())
def test_compilation_is_bit_stable(c):
    assert pretty(compile_config(c)) == pretty(compile_config(c.copy()))


@pytest.mark.parametrize("name,c", load_baselines(shipped_baseline_dir()))
def test_baselines_compile_typecheck_and_round_trip(name, c):
    ty = infer(type_context(c), compile_config(c))
    assert isinstance(ty, Arrow) and ty.dom == STR
    assert normalize(to_document(c)) == c
