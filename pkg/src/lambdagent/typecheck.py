"""Type inference for terms.

Abstractions carry their parameter type, so inference is a single
bottom-up pass with no unification.  Every failure is reported as a
:class:`LambdaTypeError` whose ``location`` is the dotted path to the
offending subterm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    Abs, App, Case, Check, Comp, Dispatch, Fix, Guard, If, LabelLit, LamOracle, Mem, Pair,
    Prob, Proj, Scoped, Store, StoreRef, StoreTyping, StrLit, Term, Tool, Var, value_type,
)
from .typesys import (
    BOOL, STR, Arrow, LambdaTypeError, Product, Refinement, StrT, Type, TypeErrorKind,
    Variant, erase, is_subtype, join,
)

# Builtins used by compiled configurations.  The ``@`` prefix is reserved.
BUILTIN_SIGNATURES: dict[str, tuple[Type, Type]] = {
    "terminate": (STR, STR),
    "@action": (STR, STR),
    "@args": (STR, STR),
    "@observe": (Product(Product(STR, STR), STR), STR),
    "@concat": (Product(STR, STR), STR),
}


@dataclass(frozen=True)
class TypeContext:
    var_bindings: dict = field(default_factory=dict)
    store_typing: StoreTyping = field(default_factory=StoreTyping)
    tool_signatures: dict = field(default_factory=lambda: dict(BUILTIN_SIGNATURES))

    def __post_init__(self):
        for name, sig in BUILTIN_SIGNATURES.items():
            self.tool_signatures.setdefault(name, sig)

    def bind(self, name: str, ty: Type) -> "TypeContext":
        return TypeContext({**self.var_bindings, name: ty}, self.store_typing,
                           self.tool_signatures)

    def with_tools(self, *names: str, signature: tuple[Type, Type] = (STR, STR)) -> "TypeContext":
        sigs = dict(self.tool_signatures)
        for n in names:
            sigs.setdefault(n, signature)
        return TypeContext(dict(self.var_bindings), self.store_typing, sigs)

    def with_store_typing(self, sigma: StoreTyping) -> "TypeContext":
        return TypeContext(dict(self.var_bindings), sigma, self.tool_signatures)


def _sub(path: str, seg: str) -> str:
    return f"{path}.{seg}" if path else seg


def _arrow(ty: Type, path: str) -> Arrow:
    if isinstance(ty, Arrow):
        return ty
    raise LambdaTypeError(TypeErrorKind.MISMATCH, path, found=ty, detail="expected a function")


def _mismatch(path, expected, found, detail=""):
    return LambdaTypeError(TypeErrorKind.MISMATCH, path, expected=expected, found=found,
                           detail=detail)


def _is_str(ty: Type) -> bool:
    return isinstance(erase(ty), StrT)


def case_exhaustive(classifier_type: Type, branches, has_default: bool) -> bool:
    """Whether a case over ``classifier_type`` covers every label.

    ``branches`` may be labels or ``(label, term)`` pairs.  A free-text
    (``Str``) classifier is only exhaustive with a default.
    """
    if not isinstance(classifier_type, Arrow):
        raise TypeError("classifier type must be a function type")
    cod = classifier_type.cod
    labels = {b[0] if isinstance(b, tuple) else b for b in branches}
    if isinstance(cod, Variant):
        return has_default or set(cod.labels) <= labels
    if _is_str(cod):
        return has_default
    raise TypeError("classifier must return a variant")


def check_store_compat(store: Store | StoreRef, sigma: StoreTyping) -> None:
    """Raise ``StoreTypeConflict`` on the first key whose value disagrees with Σ."""
    if isinstance(store, StoreRef):
        items = [(k, v, value_type(v)) for k, v in store.initial]
    else:
        items = [(k, e.value, store.typing.get(k) or value_type(e.value))
                 for k, e in store.entries.items()]
    for key, _value, ty in items:
        if key not in sigma:
            continue
        if ty is None or ty != sigma[key]:
            raise LambdaTypeError(TypeErrorKind.STORE_TYPE_CONFLICT, key,
                                  expected=sigma[key], found=ty,
                                  detail="" if ty is not None else "untypable value")


def _branch_items(branches, default) -> list:
    items = [(f"branches[{l}]", e) for l, e in branches]
    if default is not None:
        items.append(("default", default))
    return items


def _branch_cod(ctx, dom: Type, items, path: str) -> Type:
    cod = None
    for seg, e in items:
        p = _sub(path, seg)
        tb = _arrow(_infer(ctx, e, p), p)
        if not is_subtype(dom, tb.dom):
            raise _mismatch(p, Arrow(dom, tb.cod), tb, "branch domain")
        if cod is None:
            cod = tb.cod
        else:
            j = join(cod, tb.cod)
            if j is None:
                raise _mismatch(p, cod, tb.cod, "branches disagree")
            cod = j
    return STR if cod is None else cod


def _check_labels(vt: Type, branches, default, path: str) -> None:
    if isinstance(vt, Variant):
        for l, _ in branches:
            if l not in vt.labels:
                raise _mismatch(_sub(path, f"branches[{l}]"), vt, None,
                                f"label {l!r} not in classifier variant")
        if default is None and not set(vt.labels) <= {l for l, _ in branches}:
            missing = [l for l in vt.labels if l not in {b for b, _ in branches}]
            raise LambdaTypeError(TypeErrorKind.NON_EXHAUSTIVE_CASE, path, found=vt,
                                  detail=f"missing {', '.join(missing)}")
    elif not _is_str(vt):
        # A free-text classifier (an oracle or the action parser) is accepted
        # without a default; unmatched replies surface as RouteError at run time.
        raise _mismatch(path, Variant((("…", STR),)), vt, "classifier must return a variant")


def _infer(ctx: TypeContext, t: Term, path: str) -> Type:
    match t:
        case Var(x):
            if x not in ctx.var_bindings:
                raise LambdaTypeError(TypeErrorKind.UNBOUND_VAR, path, detail=x)
            return ctx.var_bindings[x]
        case StrLit():
            return STR
        case LabelLit(_, vt):
            return vt
        case LamOracle():
            return Arrow(STR, STR)
        case Tool(f):
            if f not in ctx.tool_signatures:
                raise LambdaTypeError(TypeErrorKind.UNKNOWN_TOOL, path, detail=f)
            dom, cod = ctx.tool_signatures[f]
            return Arrow(dom, cod)
        case Abs(x, ty, body):
            return Arrow(ty, _infer(ctx.bind(x, ty), body, _sub(path, "body")))
        case App(f, a):
            tf = _arrow(_infer(ctx, f, _sub(path, "fn")), _sub(path, "fn"))
            ta = _infer(ctx, a, _sub(path, "arg"))
            if not is_subtype(ta, tf.dom):
                raise _mismatch(_sub(path, "arg"), tf.dom, ta)
            return tf.cod
        case Comp(a, b):
            t1 = _arrow(_infer(ctx, a, _sub(path, "first")), _sub(path, "first"))
            t2 = _arrow(_infer(ctx, b, _sub(path, "second")), _sub(path, "second"))
            if not is_subtype(t1.cod, t2.dom):
                raise _mismatch(_sub(path, "second"), Arrow(t1.cod, t2.cod), t2)
            return Arrow(t1.dom, t2.cod)
        case If(c, a, b):
            tc = _arrow(_infer(ctx, c, _sub(path, "cond")), _sub(path, "cond"))
            if erase(tc.cod) != BOOL and not _is_str(tc.cod):
                raise _mismatch(_sub(path, "cond"), Arrow(tc.dom, BOOL), tc)
            cod = _branch_cod(ctx, tc.dom, [("then", a), ("orelse", b)], path)
            return Arrow(tc.dom, cod)
        case Fix(_, body):
            tb = _infer(ctx, body, _sub(path, "body"))
            ok = (isinstance(tb, Arrow) and isinstance(tb.dom, Arrow)
                  and tb.dom.dom == tb.dom.cod and isinstance(tb.cod, Arrow)
                  and is_subtype(tb.cod, tb.dom))
            if not ok:
                raise LambdaTypeError(TypeErrorKind.BAD_FIX_SHAPE, path, found=tb,
                                      detail="body must have type (τ → τ) → (τ → τ)")
            return tb.dom
        case Pair(a, b):
            return Product(_infer(ctx, a, _sub(path, "left")), _infer(ctx, b, _sub(path, "right")))
        case Proj(i, e):
            te = erase(_infer(ctx, e, _sub(path, "inner")))
            if not isinstance(te, Product):
                raise _mismatch(_sub(path, "inner"), None, te, "expected a pair")
            return te.left if i == 1 else te.right
        case Case(c, branches, d):
            tc = _arrow(_infer(ctx, c, _sub(path, "classifier")), _sub(path, "classifier"))
            _check_labels(tc.cod if not isinstance(tc.cod, Refinement) else erase(tc.cod),
                          branches, d, path)
            return Arrow(tc.dom, _branch_cod(ctx, tc.dom, _branch_items(branches, d), path))
        case Guard(e, p):
            te = _arrow(_infer(ctx, e, _sub(path, "inner")), _sub(path, "inner"))
            if not _is_str(te.cod):
                raise _mismatch(_sub(path, "inner"), Arrow(te.dom, STR), te)
            return Arrow(te.dom, Refinement(te.cod, p))
        case Mem(e, ref):
            check_store_compat(ref, ctx.store_typing)
            return _arrow(_infer(ctx, e, _sub(path, "inner")), _sub(path, "inner"))
        case Prob(a, b, _):
            ta = _infer(ctx, a, _sub(path, "left"))
            tb = _infer(ctx, b, _sub(path, "right"))
            if ta != tb:
                raise _mismatch(_sub(path, "right"), ta, tb, "probabilistic branches differ")
            return ta
        case Dispatch(s, branches, d, a):
            ts = _infer(ctx, s, _sub(path, "scrutinee"))
            ta = _infer(ctx, a, _sub(path, "arg"))
            _check_labels(erase(ts), branches, d, path)
            return _branch_cod(ctx, ta, _branch_items(branches, d), path)
        case Check(e, p):
            te = _infer(ctx, e, _sub(path, "inner"))
            if not _is_str(te):
                raise _mismatch(_sub(path, "inner"), STR, te)
            return Refinement(te, p)
        case Scoped(e, _):
            return _infer(ctx, e, _sub(path, "inner"))
    raise TypeError(f"not a term: {t!r}")


def infer(ctx: TypeContext | None, t: Term) -> Type:
    """Infer the type of ``t``; raises :class:`LambdaTypeError`."""
    return _infer(ctx if ctx is not None else TypeContext(), t, "")


def typechecks(ctx: TypeContext | None, t: Term) -> bool:
    try:
        infer(ctx, t)
    except LambdaTypeError:
        return False
    return True
