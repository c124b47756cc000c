"""Compilation of canonical configurations to terms.

=========  ===========================================================
simple     ``lam p θ``
react      ``fix_n (λs. λx. let t = lam p θ x in (case @action of …) t)``
chain      right-nested ``>>`` (a join stage follows any parallel stage)
router     ``case`` over an oracle classifier, one branch per route
parallel   ``λx. ⟨b1 x, ⟨b2 x, …⟩⟩``
group      ``fix_n`` over a speaker-selection ``case``
tool       ``tool[f]``
loop       ``fix_n (λs. λx. s (body x))``
=========  ===========================================================

Guard and memory wrappers are applied last, memory outermost.
"""

from __future__ import annotations

from typing import Callable, Optional

from ..syntax import compose, let, parallel
from ..terms import (
    Abs, App, Case, Comp, Fix, Guard, LamOracle, Mem, ModelParams, Pair, Proj, StoreRef, Term, Tool,
    Var,
)
from ..typecheck import TypeContext
from ..typesys import STR, STR_TO_STR, Product, Type
from .canonical import CanonicalConfig, MemorySpec

DEFAULT_MAX_STEPS = 10
PLACEHOLDER_MODEL = ModelParams("unspecified", 0.0)
# Frameworks whose runtime picks a model when the document names none.
FRAMEWORK_DEFAULT_MODEL = {"CrewAI": ModelParams("framework-default", 0.0)}
GROUP_STOP_LABEL = "TERMINATE"


class CompileError(ValueError):
    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _params(c: CanonicalConfig, path: str, force: bool) -> ModelParams:
    if c.model is None:
        if c.framework in FRAMEWORK_DEFAULT_MODEL:
            return FRAMEWORK_DEFAULT_MODEL[c.framework]
        if force:
            return PLACEHOLDER_MODEL
        raise CompileError("no model configured", _p(path, "model"))
    return ModelParams(c.model.name, c.model.temperature)


def _p(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


def _prompt(c: CanonicalConfig, path: str, force: bool) -> str:
    if not c.system_prompt:
        if force:
            return c.system_prompt or ""
        raise CompileError("empty system prompt", _p(path, "systemPrompt"))
    return c.system_prompt


def router_prompt(base: str, labels: list[str]) -> str:
    head = f"{base}\n\n" if base else ""
    return (f"{head}Classify the input into exactly one of the following labels: "
            f"{', '.join(labels)}.\nReply with the label only.")


def group_prompt(base: str, names: list[str], stop: Optional[str]) -> str:
    choices = names + ([stop] if stop else [])
    head = f"{base}\n\n" if base else ""
    return (f"{head}Choose who speaks next: {', '.join(choices)}.\n"
            f"Reply with the name only.")


def react_body(prompt: str, params: ModelParams, tools: list[str]) -> Abs:
    """``λs. λx. let t = lam p θ x in (case @action of {f ⇒ …}) t``."""
    branches = []
    for f in tools:
        if f == "terminate":
            branch = Abs("a", STR, App(Tool("terminate"), App(Tool("@args"), Var("a"))))
        else:
            observed = App(Tool("@observe"), Pair(Pair(Var("x"), Var("a")),
                                                   App(Tool(f), App(Tool("@args"), Var("a")))))
            branch = Abs("a", STR, App(Var("s"), observed))
        branches.append((f, branch))
    dispatch = App(Case(Tool("@action"), tuple(branches)), Var("t"))
    return Abs("s", STR_TO_STR, Abs("x", STR, let("t", STR, App(LamOracle(prompt, params),
                                                                   Var("x")), dispatch)))


def _join_stage(shape: Type) -> Optional[Term]:
    """A stage flattening a nested pair of strings into one string."""
    if not isinstance(shape, Product):
        return None

    def flatten(t: Term, ty: Type) -> Term:
        if isinstance(ty, Product):
            return App(Tool("@concat"), Pair(flatten(Proj(1, t), ty.left),
                                            flatten(Proj(2, t), ty.right)))
        return t

    return Abs("p", shape, flatten(Var("p"), shape))


def output_shape(c: CanonicalConfig) -> Type:
    """The output type of ``c``'s compiled term: ``Str`` or nested pairs of it."""
    if c.agent_type == "parallel" and c.branches:
        shapes = [output_shape(b) for b in c.branches]
        ty = shapes[-1]
        for s in reversed(shapes[:-1]):
            ty = Product(s, ty)
        return ty
    if c.agent_type == "chain" and c.stages:
        return output_shape(c.stages[-1])
    return STR


def _joined(term: Term, c: CanonicalConfig) -> Term:
    """``term``, followed by a flattening stage if its output is a pair."""
    join = _join_stage(output_shape(c))
    return term if join is None else Comp(term, join)


def _react_bound(c: CanonicalConfig) -> int:
    if c.max_steps is not None:
        return c.max_steps
    for kind in ("maxIter", "maxRounds"):
        h = c.hint(kind)
        if h is not None and h.n is not None:
            return h.n
    return DEFAULT_MAX_STEPS


def _compile_node(c: CanonicalConfig, path: str, force: bool, in_mem: bool) -> Term:
    if c.memory is not None and in_mem:
        raise CompileError("nested memory wrappers are not supported", _p(path, "memory"))
    inner_mem = in_mem or c.memory is not None
    sub = lambda node, seg: _compile_node(node, _p(path, seg), force, inner_mem)  # noqa: E731

    match c.agent_type:
        case "simple":
            term: Term = LamOracle(_prompt(c, path, force), _params(c, path, force))
        case "react":
            tools = c.all_tools()
            if c.hint_kinds() & {"frameworkInternal", "isTerminationMsg"} and "terminate" not in tools:
                # the host framework supplies the base case
                tools = tools + ["terminate"]
            if not tools:
                raise CompileError("react agent without tools", _p(path, "mcp.localTools"))
            term = Fix(_react_bound(c), react_body(_prompt(c, path, force),
                                                   _params(c, path, force), tools))
        case "chain":
            if not c.stages:
                raise CompileError("chain without stages", _p(path, "stages"))
            last = len(c.stages) - 1
            term = compose(*(sub(s, f"stages[{i}]") if i == last
                             else _joined(sub(s, f"stages[{i}]"), s)
                             for i, s in enumerate(c.stages)))
        case "router":
            routes = c.routes or []
            if not routes and c.default_route is None and not force:
                raise CompileError("router without routes", _p(path, "routes"))
            labels = [l for l, _ in routes]
            classifier = LamOracle(router_prompt(c.system_prompt or "", labels),
                                   _params(c, path, force))
            # routes must agree on their output, so pair-valued routes are flattened
            branches = tuple((l, _joined(sub(r, f"routes.{l}"), r)) for l, r in routes)
            default = None if c.default_route is None else _joined(
                sub(c.default_route, "routes.default"), c.default_route)
            term = Case(classifier, branches, default)
        case "parallel":
            if not c.branches:
                raise CompileError("parallel without branches", _p(path, "branches"))
            compiled = [sub(b, f"branches[{i}]") for i, b in enumerate(c.branches)]
            term = compiled[0] if len(compiled) == 1 else parallel(*compiled)
        case "group":
            term = _compile_group(c, path, force, sub)
        case "tool":
            if len(c.tools) != 1:
                raise CompileError("tool node must name exactly one tool", _p(path, "mcp.localTools"))
            term = Tool(c.tools[0])
        case "loop":
            if not c.stages:
                raise CompileError("loop without body", _p(path, "stages"))
            body = sub(c.stages[0], "stages[0]")
            term = Fix(_react_bound(c),
                       Abs("s", STR_TO_STR, Abs("x", STR, App(Var("s"), App(body, Var("x"))))))
        case other:
            raise CompileError(f"unknown agent type {other!r}", _p(path, "type"))

    if c.guard is not None:
        term = Guard(term, c.guard)
    if c.memory is not None:
        term = Mem(term, store_ref(c.memory))
    return term


def _compile_group(c: CanonicalConfig, path: str, force: bool,
                   sub: Callable[[CanonicalConfig, str], Term]) -> Term:
    if not c.participants:
        raise CompileError("group chat without participants", _p(path, "participants"))
    bound_hint = c.hint("maxRounds")
    stop = c.termination_msg or (GROUP_STOP_LABEL if "isTerminationMsg" in c.hint_kinds() else None)
    if c.max_steps is not None:
        bound = c.max_steps
    elif bound_hint is not None and bound_hint.n is not None:
        bound = bound_hint.n
    elif stop is not None:
        bound = DEFAULT_MAX_STEPS
    else:
        raise CompileError("unbounded group chat", _p(path, "maxRounds"))
    names = []
    branches = []
    for i, p in enumerate(c.participants):
        name = p.agent_id if p.agent_id not in names else f"{p.agent_id}_{i}"
        names.append(name)
        reply = App(sub(p, f"participants[{i}]"), Var("x"))
        observed = App(Tool("@observe"), Pair(Pair(Var("x"), Var("a")), reply))
        branches.append((name, Abs("a", STR, App(Var("s"), observed))))
    if stop is not None and stop not in names:
        branches.append((stop, Abs("a", STR, App(Tool("terminate"), Var("x")))))
    # the speaker selector uses the group's model, else the first participant's
    chooser = c if c.model is not None else next(
        (p for p in c.participants if p.model is not None), c)
    params = _params(chooser, path, True)
    selector = LamOracle(group_prompt(c.system_prompt or "", names, stop), params)
    body = Abs("s", STR_TO_STR, Abs("x", STR, let("t", STR, App(selector, Var("x")),
                                                   App(Case(Tool("@action"), tuple(branches)),
                                                       Var("t")))))
    return Fix(bound, body)


def store_ref(m: MemorySpec) -> StoreRef:
    return StoreRef(capacity=m.size, ttl=m.ttl, strategy=m.strategy)


def compile_config(c: CanonicalConfig, force: bool = False) -> Term:
    """Compile ``c``; refuses configs with lint errors unless ``force``."""
    if not force:
        from ..lint import Severity, lint  # local: lint depends on this package

        errors = [f for f in lint(c) if f.severity == Severity.ERROR]
        if errors:
            first = errors[0]
            raise CompileError(f"{first.rule_id} {first.message}"
                               + (f" (+{len(errors) - 1} more)" if len(errors) > 1 else ""),
                               first.path)
    return _compile_node(c, "", force, False)


def tool_ids(c: CanonicalConfig) -> list[str]:
    out: list[str] = []
    for _, node in c.walk():
        for t in node.all_tools():
            if t not in out:
                out.append(t)
    return out


def type_context(c: CanonicalConfig, extra_tools=()) -> TypeContext:
    return TypeContext().with_tools(*tool_ids(c), *extra_tools)
