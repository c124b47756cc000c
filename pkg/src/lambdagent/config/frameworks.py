"""Framework detection and normalization to :class:`CanonicalConfig`.

Detection rules are tried in a fixed order; the first match wins:

1. CrewAI      -- ``role``, ``goal`` and ``backstory`` keys
2. AutoGen     -- ``is_termination_msg`` or ``llm_config``
3. Dify        -- a node graph whose nodes carry a ``type``
4. MultiAgent  -- an ``agents`` list plus a turn-taking key
5. LangChain   -- a serialized ``_type`` marker
6. Lambdagent  -- ``agentId`` and ``type``
7. Generic     -- anything else
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

import yaml

from ..typesys import predicate_from_config
from .canonical import CanonicalConfig, Framework, Hint, MemorySpec, ModelSpec

TURN_KEYS = ("max_turns", "max_rounds", "max_round", "speaker_selection",
             "speaker_selection_method", "turn_order", "round_robin")


class ConfigError(ValueError):
    """The document cannot be read as an agent configuration."""


def load_document(path: str | Path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        if str(path).endswith(".json"):
            return json.loads(text)
        return yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: unparseable document: {exc}") from exc


def _dify_nodes(raw: dict) -> Optional[list]:
    for candidate in (raw.get("nodes"), (raw.get("graph") or {}).get("nodes")
                      if isinstance(raw.get("graph"), dict) else None,
                      ((raw.get("workflow") or {}).get("graph") or {}).get("nodes")
                      if isinstance(raw.get("workflow"), dict) else None):
        if isinstance(candidate, list) and candidate and all(
                isinstance(n, dict) and "type" in _node_data(n) for n in candidate):
            return candidate
    return None


def _node_data(n: dict) -> dict:
    # Dify exports nest node fields under ``data``.
    return n["data"] if isinstance(n.get("data"), dict) else n


def detect_framework(raw: Any) -> str:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    keys = set(raw)
    if {"role", "goal", "backstory"} <= keys:
        return Framework.CREWAI
    if "is_termination_msg" in keys or "llm_config" in keys:
        return Framework.AUTOGEN
    if _dify_nodes(raw) is not None:
        return Framework.DIFY
    if isinstance(raw.get("agents"), list) and keys & set(TURN_KEYS):
        return Framework.MULTIAGENT
    if "_type" in keys:
        return Framework.LANGCHAIN
    if "agentId" in keys and "type" in keys:
        return Framework.LAMBDAGENT
    return Framework.GENERIC


# ---------------------------------------------------------------- helpers

def _int(v) -> Optional[int]:
    if v is None or isinstance(v, bool):
        return None
    try:
        return int(v)
    except (TypeError, ValueError):
        return None


def _model(v, temperature=None) -> Optional[ModelSpec]:
    if v is None or v == "":
        return None
    if isinstance(v, str):
        return ModelSpec(v, float(temperature or 0.0))
    if isinstance(v, dict):
        name = v.get("name") or v.get("model") or v.get("model_name")
        if not name and isinstance(v.get("config_list"), list) and v["config_list"]:
            name = (v["config_list"][0] or {}).get("model")
        if not name:
            return None
        temp = v.get("temperature")
        if temp is None:
            temp = (v.get("completion_params") or {}).get("temperature", temperature)
        return ModelSpec(str(name), float(temp or 0.0))
    return None


def _tool_names(v) -> list[str]:
    out = []
    for t in v or []:
        if isinstance(t, str):
            out.append(t)
        elif isinstance(t, dict):
            name = t.get("name") or t.get("tool") or t.get("id")
            if name:
                out.append(str(name))
    return out


def _memory(v) -> Optional[MemorySpec]:
    if not v:
        return None
    if isinstance(v, dict):
        return MemorySpec(str(v.get("strategy", "local")), _int(v.get("size")), _int(v.get("ttl")))
    return MemorySpec()


def _prompt_text(v) -> Optional[str]:
    if v is None:
        return None
    if isinstance(v, str):
        return v
    if isinstance(v, dict):
        for k in ("template", "text", "content"):
            if isinstance(v.get(k), str):
                return v[k]
    if isinstance(v, list):
        parts = [_prompt_text(x) for x in v]
        return "\n".join(p for p in parts if p)
    return None


def _extras(raw: dict, used: set) -> dict:
    return {k: raw[k] for k in raw if k not in used}


# ---------------------------------------------------------------- formats

def _normalize_lambdagent(raw: dict, path: str) -> CanonicalConfig:
    used = {"agentId", "type", "model", "systemPrompt", "react", "mcp", "memory", "guard",
            "routes", "stages", "branches", "participants", "terminationMsg", "framework",
            "terminationHints", "sourcePath", "extras", "default", "maxRounds"}
    react = raw.get("react") or {}
    mcp = raw.get("mcp") or {}
    online = mcp.get("onlineTool") or mcp.get("onlineTools") or {}
    routes = raw.get("routes")
    route_list, default = None, None
    if routes is not None:
        route_list = []
        for label, sub in (routes or {}).items():
            if label == "default":
                default = normalize(sub, path=path)
            else:
                route_list.append((str(label), normalize(sub, path=path)))
    if "default" in raw and raw["default"] is not None:
        default = normalize(raw["default"], path=path)
    hints = {Hint.parse(h) for h in raw.get("terminationHints") or []}
    if _int(raw.get("maxRounds")) is not None:
        hints.add(Hint("maxRounds", _int(raw["maxRounds"])))
    subs = {k: [normalize(s, path=path) for s in raw[k]] if raw.get(k) is not None else None
            for k in ("stages", "branches", "participants")}
    extras = dict(raw.get("extras") or {})
    extras.update(_extras(raw, used))
    return CanonicalConfig(
        agent_id=str(raw.get("agentId", "agent")),
        agent_type=str(raw.get("type", "simple")),
        model=_model(raw.get("model")),
        system_prompt=raw.get("systemPrompt"),
        max_steps=_int(react.get("maxSteps")) if isinstance(react, dict) else None,
        tools=_tool_names(mcp.get("localTools")),
        online_tools=[(str(s), _tool_names(ids)) for s, ids in online.items()],
        routes=route_list,
        default_route=default,
        stages=subs["stages"],
        branches=subs["branches"],
        participants=subs["participants"],
        memory=_memory(raw.get("memory")),
        guard=predicate_from_config(raw["guard"]) if raw.get("guard") else None,
        termination_hints=frozenset(hints),
        termination_msg=raw.get("terminationMsg"),
        framework=str(raw.get("framework", Framework.LAMBDAGENT)),
        source_path=str(raw.get("sourcePath", path)),
        extras=extras,
    )


def _normalize_crewai(raw: dict, path: str) -> CanonicalConfig:
    parts = [str(raw[k]).strip() for k in ("role", "goal", "backstory") if raw.get(k)]
    tools = _tool_names(raw.get("tools"))
    hints = {Hint("frameworkInternal")}
    if _int(raw.get("max_iter")) is not None:
        hints.add(Hint("maxIter", _int(raw["max_iter"])))
    if raw.get("allow_delegation") is False:
        hints.add(Hint("noDelegation"))
    used = {"role", "goal", "backstory", "tools", "max_iter", "allow_delegation", "llm", "name"}
    return CanonicalConfig(
        agent_id=str(raw.get("name") or raw.get("role") or "agent"),
        agent_type="react" if tools else "simple",
        model=_model(raw.get("llm")),
        system_prompt="\n".join(parts) if parts else None,
        tools=tools,
        termination_hints=frozenset(hints),
        framework=Framework.CREWAI,
        source_path=path,
        extras=_extras(raw, used),
    )


def _normalize_autogen(raw: dict, path: str) -> CanonicalConfig:
    if isinstance(raw.get("agents"), list):
        return _normalize_group(raw, path, Framework.AUTOGEN)
    hints = set()
    if raw.get("is_termination_msg"):
        hints.add(Hint("isTerminationMsg"))
    n = _int(raw.get("max_consecutive_auto_reply"))
    if n is not None:
        hints.add(Hint("maxIter", n))
    tools = _tool_names(raw.get("tools")) or sorted((raw.get("function_map") or {}).keys())
    llm = raw.get("llm_config")
    used = {"name", "system_message", "llm_config", "is_termination_msg",
            "max_consecutive_auto_reply", "tools", "function_map"}
    return CanonicalConfig(
        agent_id=str(raw.get("name", "agent")),
        agent_type="react" if tools else "simple",
        model=_model(llm) if llm is not False else None,
        system_prompt=raw.get("system_message"),
        tools=tools,
        termination_hints=frozenset(hints),
        termination_msg=raw["is_termination_msg"] if isinstance(raw.get("is_termination_msg"), str)
        else ("TERMINATE" if raw.get("is_termination_msg") else None),
        framework=Framework.AUTOGEN,
        source_path=path,
        extras=_extras(raw, used),
    )


def _normalize_group(raw: dict, path: str, framework: str) -> CanonicalConfig:
    bound = None
    for k in ("max_rounds", "max_round", "max_turns"):
        if _int(raw.get(k)) is not None:
            bound = _int(raw[k])
            break
    hints = set()
    if bound is not None:
        hints.add(Hint("maxRounds", bound))
    term = raw.get("is_termination_msg") or raw.get("termination_msg")
    if term:
        hints.add(Hint("isTerminationMsg"))
    participants = []
    for sub in raw["agents"]:
        c = normalize(sub, path=path)
        if term:
            # a termination message ends the conversation from inside any participant
            c.termination_hints = frozenset(c.termination_hints | {Hint("isTerminationMsg")})
        participants.append(c)
    used = {"agents", "name", "model", "llm_config", "system_message", "systemPrompt",
            "is_termination_msg", "termination_msg", *TURN_KEYS}
    return CanonicalConfig(
        agent_id=str(raw.get("name", "group")),
        agent_type="group",
        model=_model(raw.get("model") or raw.get("llm_config")),
        system_prompt=raw.get("system_message") or raw.get("systemPrompt"),
        participants=participants,
        termination_hints=frozenset(hints),
        termination_msg=(term if isinstance(term, str) else "TERMINATE") if term else None,
        framework=framework,
        source_path=path,
        extras=_extras(raw, used),
    )


def _normalize_langchain(raw: dict, path: str) -> CanonicalConfig:
    tools = _tool_names(raw.get("tools"))
    hints = {Hint("frameworkInternal")}
    n = _int(raw.get("max_iterations"))
    if n is not None:
        hints.add(Hint("maxIter", n))
    llm = raw.get("llm") or {}
    used = {"_type", "llm", "prompt", "tools", "max_iterations", "name"}
    return CanonicalConfig(
        agent_id=str(raw.get("name", raw.get("_type", "agent"))),
        agent_type="react" if tools else "simple",
        model=_model(llm),
        system_prompt=_prompt_text(raw.get("prompt")),
        tools=tools,
        termination_hints=frozenset(hints),
        framework=Framework.LANGCHAIN,
        source_path=path,
        extras=_extras(raw, used),
    )


def _dify_node(n: dict, path: str, idx: int) -> Optional[CanonicalConfig]:
    d = _node_data(n)
    kind = d["type"]
    nid = str(n.get("id", f"node{idx}"))
    if kind == "start":
        return None
    if kind == "llm":
        return CanonicalConfig(agent_id=nid, agent_type="simple", model=_model(d.get("model")),
                               system_prompt=_prompt_text(d.get("prompt") or d.get("prompt_template")),
                               framework=Framework.DIFY, source_path=path)
    if kind == "tool":
        name = d.get("tool") or d.get("tool_name") or nid
        return CanonicalConfig(agent_id=nid, agent_type="tool", tools=[str(name)],
                               framework=Framework.DIFY, source_path=path)
    if kind == "if-else":
        cls = d.get("classifier") or {}
        then_ = _dify_chain(d.get("then") or [], path, nid + ".then")
        else_ = _dify_chain(d.get("else") or [], path, nid + ".else")
        return CanonicalConfig(agent_id=nid, agent_type="router", model=_model(cls.get("model")),
                               system_prompt=_prompt_text(cls.get("prompt")),
                               routes=[("true", then_)], default_route=else_,
                               framework=Framework.DIFY, source_path=path)
    if kind == "iteration":
        body = _dify_chain(d.get("body") or [], path, nid + ".body")
        return CanonicalConfig(agent_id=nid, agent_type="loop",
                               max_steps=_int(d.get("max_iterations")), stages=[body],
                               framework=Framework.DIFY, source_path=path)
    if kind == "end":
        return None
    raise ConfigError(f"unsupported Dify node type {kind!r}")


def _dify_chain(nodes: list, path: str, name: str) -> CanonicalConfig:
    stages = [c for i, n in enumerate(nodes) if (c := _dify_node(n, path, i)) is not None]
    if len(stages) == 1:
        return stages[0]
    if not stages:
        return CanonicalConfig(agent_id=name, agent_type="tool", tools=["terminate"],
                               framework=Framework.DIFY, source_path=path)
    return CanonicalConfig(agent_id=name, agent_type="chain", stages=stages,
                           framework=Framework.DIFY, source_path=path)


def _dify_order(raw: dict, nodes: list) -> list:
    graph = raw.get("graph") if isinstance(raw.get("graph"), dict) else {}
    edges = raw.get("edges") or graph.get("edges")
    if not edges:
        return nodes
    by_id = {str(n.get("id")): n for n in nodes}
    succ = {}
    for e in edges:
        succ.setdefault(str(e.get("source")), []).append(str(e.get("target")))
    start = next((str(n.get("id")) for n in nodes if _node_data(n)["type"] == "start"),
                 str(nodes[0].get("id")))
    order, seen, cur = [], set(), start
    while cur in by_id and cur not in seen:
        seen.add(cur)
        order.append(by_id[cur])
        nxt = succ.get(cur) or []
        cur = nxt[0] if nxt else None
    return order


def _normalize_dify(raw: dict, path: str) -> CanonicalConfig:
    nodes = _dify_order(raw, _dify_nodes(raw))
    app = raw.get("app") if isinstance(raw.get("app"), dict) else {}
    c = _dify_chain(nodes, path, str(raw.get("name") or app.get("name") or "workflow"))
    if any(_node_data(n)["type"] == "end" for n in nodes):
        c.termination_hints = frozenset(c.termination_hints | {Hint("dagEndNode")})
    c.extras = _extras(raw, {"nodes", "graph", "workflow", "edges", "name", "app"})
    return c


_PROMPT_KEYS = ("systemPrompt", "system_prompt", "prompt", "instructions", "system_message")
_STEP_KEYS = ("maxSteps", "max_steps", "max_iterations", "max_iter")


def _normalize_generic(raw: dict, path: str) -> CanonicalConfig:
    prompt = next((_prompt_text(raw[k]) for k in _PROMPT_KEYS if k in raw), None)
    model = next((_model(raw[k], raw.get("temperature")) for k in ("model", "model_name", "llm")
                  if raw.get(k)), None)
    steps = next((_int(raw[k]) for k in _STEP_KEYS if k in raw), None)
    tools = _tool_names(raw.get("tools"))
    kind = raw.get("type") if raw.get("type") in ("simple", "react") else (
        "react" if tools else "simple")
    used = {*_PROMPT_KEYS, *_STEP_KEYS, "model", "model_name", "llm", "temperature", "tools",
            "type", "name", "id"}
    return CanonicalConfig(
        agent_id=str(raw.get("name") or raw.get("id") or "agent"),
        agent_type=kind, model=model, system_prompt=prompt, max_steps=steps, tools=tools,
        framework=Framework.GENERIC, source_path=path, extras=_extras(raw, used),
    )


_NORMALIZERS = {
    Framework.LAMBDAGENT: _normalize_lambdagent,
    Framework.CREWAI: _normalize_crewai,
    Framework.AUTOGEN: _normalize_autogen,
    Framework.DIFY: _normalize_dify,
    Framework.MULTIAGENT: lambda raw, path: _normalize_group(raw, path, Framework.MULTIAGENT),
    Framework.LANGCHAIN: _normalize_langchain,
    Framework.GENERIC: _normalize_generic,
}


def normalize(raw: Any, kind: Optional[str] = None, path: str = "") -> CanonicalConfig:
    """Map a parsed document onto the canonical fields.

    A :class:`CanonicalConfig` passes through unchanged.
    """
    if isinstance(raw, CanonicalConfig):
        return raw
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    kind = kind or detect_framework(raw)
    if kind not in _NORMALIZERS:
        raise ConfigError(f"unknown framework {kind!r}")
    try:
        return _NORMALIZERS[kind](raw, path)
    except (TypeError, AttributeError, KeyError) as exc:
        raise ConfigError(f"{path or '<config>'}: malformed {kind} document: {exc}") from exc


def load_config(path: str | Path, framework: Optional[str] = None) -> CanonicalConfig:
    return normalize(load_document(path), framework, str(path))
