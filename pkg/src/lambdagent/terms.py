"""Abstract syntax of the agent calculus, its values, and memory stores.

Terms are immutable and built programmatically (or by the config
compiler).  There is deliberately no parser.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .typesys import (
    STR,
    LambdaTypeError,
    Predicate,
    Product,
    Type,
    TypeErrorKind,
    Variant,
    show_type,
)

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")
_RESERVED = frozenset({"let", "in", "case", "of", "if", "then", "else", "mem", "guard",
                       "lam", "tool", "Str", "_", "nonempty", "valid_json", "max_words",
                       "min_words", "matches"})


def _check_ident(name: str) -> None:
    if not isinstance(name, str) or not _IDENT_RE.match(name) or name in _RESERVED \
            or re.match(r"^fix_\d", name) or name.startswith("π"):
        raise ValueError(f"invalid variable name: {name!r}")


@dataclass(frozen=True)
class ModelParams:
    model_name: str
    temperature: float = 0.0

    def __post_init__(self):
        if not (self.temperature >= 0) or math.isinf(self.temperature):
            raise ValueError(f"temperature must be a finite value >= 0, got {self.temperature}")


@dataclass(frozen=True)
class StoreRef:
    """Static description of a store as it appears inside ``Mem``.

    The live, mutable :class:`Store` is created from it when evaluation
    enters the ``Mem`` wrapper.
    """

    name: str = "σ"
    capacity: Optional[int] = None
    ttl: Optional[int] = None
    strategy: str = "local"
    initial: tuple = ()  # ((key, Value), ...)

    def __post_init__(self):
        if self.capacity is not None and self.capacity < 0:
            raise ValueError("store capacity must be >= 0")
        if self.ttl is not None and self.ttl < 0:
            raise ValueError("store ttl must be >= 0")


# ---------------------------------------------------------------- terms

@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        _check_ident(self.name)


@dataclass(frozen=True)
class Abs:
    param: str
    param_type: Type
    body: "Term"

    def __post_init__(self):
        _check_ident(self.param)


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Comp:
    first: "Term"
    second: "Term"


@dataclass(frozen=True)
class If:
    cond: "Term"
    then: "Term"
    orelse: "Term"


@dataclass(frozen=True)
class Fix:
    bound: int
    body: "Term"

    def __post_init__(self):
        if not isinstance(self.bound, int) or isinstance(self.bound, bool) or self.bound < 0:
            raise ValueError(f"fix bound must be a natural number, got {self.bound!r}")


@dataclass(frozen=True)
class Pair:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Proj:
    index: int
    inner: "Term"

    def __post_init__(self):
        if self.index not in (1, 2):
            raise ValueError("projection index must be 1 or 2")


@dataclass(frozen=True)
class Tool:
    tool_id: str


@dataclass(frozen=True)
class Case:
    classifier: "Term"
    branches: tuple  # ((label, Term), ...)
    default: Optional["Term"] = None

    def __post_init__(self):
        labels = [l for l, _ in self.branches]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate case labels: {labels}")

    @property
    def labels(self) -> tuple:
        return tuple(l for l, _ in self.branches)


@dataclass(frozen=True)
class Guard:
    inner: "Term"
    predicate: Predicate


@dataclass(frozen=True)
class Mem:
    inner: "Term"
    store: StoreRef


@dataclass(frozen=True)
class Prob:
    left: "Term"
    right: "Term"
    p: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class LamOracle:
    prompt: str
    params: ModelParams


@dataclass(frozen=True)
class StrLit:
    text: str


@dataclass(frozen=True)
class LabelLit:
    label: str
    vtype: Variant

    def __post_init__(self):
        if self.label not in self.vtype.labels:
            raise ValueError(f"label {self.label!r} not in {show_type(self.vtype)}")


# Evaluation-only forms.  They never appear in source terms; the small-step
# machine introduces them so that every rule takes exactly one step.

@dataclass(frozen=True)
class Dispatch:
    """``case`` after its classifier has been applied to the input."""
    scrutinee: "Term"
    branches: tuple
    default: Optional["Term"]
    arg: "Term"


@dataclass(frozen=True)
class Check:
    """``guard`` after the inner agent has been applied."""
    inner: "Term"
    predicate: Predicate


@dataclass(frozen=True)
class Scoped:
    """Body of a ``mem`` wrapper running against its live store."""
    inner: "Term"
    store: StoreRef


Term = Union[Var, Abs, App, Comp, If, Fix, Pair, Proj, Tool, Case, Guard, Mem, Prob,
             LamOracle, StrLit, LabelLit, Dispatch, Check, Scoped]

SOURCE_FORMERS = (Var, Abs, App, Comp, If, Fix, Pair, Proj, Tool, Case, Guard, Mem, Prob,
                  LamOracle)


def is_value(t: Term) -> bool:
    match t:
        case StrLit() | LabelLit() | Abs() | Tool() | LamOracle():
            return True
        case Pair(a, b) | Comp(a, b):
            return is_value(a) and is_value(b)
        case Fix(_, e) | Guard(e, _) | Mem(e, _):
            return is_value(e)
        case If(c, a, b):
            return is_value(c) and is_value(a) and is_value(b)
        case Case(c, branches, d):
            return is_value(c) and all(is_value(e) for _, e in branches) and (
                d is None or is_value(d))
    return False


def identity(param_type: Type = STR) -> Abs:
    return Abs("x", param_type, Var("x"))


# ---------------------------------------------------------------- values

@dataclass(frozen=True)
class StrV:
    text: str


@dataclass(frozen=True)
class ClosureV:
    param: str
    body: Term
    env: tuple = ()


@dataclass(frozen=True)
class PairV:
    left: "Value"
    right: "Value"


@dataclass(frozen=True)
class ToolV:
    tool_id: str


@dataclass(frozen=True)
class OracleV:
    prompt: str
    params: ModelParams


@dataclass(frozen=True)
class LabelV:
    label: str


Value = Union[StrV, ClosureV, PairV, ToolV, OracleV, LabelV]


def to_value(t: Term) -> Value:
    """Read a value term back as a runtime value."""
    match t:
        case StrLit(s):
            return StrV(s)
        case LabelLit(l, _):
            return LabelV(l)
        case Pair(a, b):
            return PairV(to_value(a), to_value(b))
        case Tool(f):
            return ToolV(f)
        case LamOracle(p, th):
            return OracleV(p, th)
        case Abs(x, _, body):
            return ClosureV(x, body)
    if is_value(t):
        # function-forming values (>>, fix_n, case, guard, mem, if) are eta-expanded
        return ClosureV("x", App(t, Var("x")))
    raise ValueError(f"not a value: {type(t).__name__}")


def to_term(v: Value) -> Term:
    match v:
        case StrV(s):
            return StrLit(s)
        case PairV(a, b):
            return Pair(to_term(a), to_term(b))
        case ToolV(f):
            return Tool(f)
        case OracleV(p, th):
            return LamOracle(p, th)
        case ClosureV(x, body, ()):
            return Abs(x, STR, body)
    if isinstance(v, str):
        return StrLit(v)
    raise ValueError(f"cannot embed value {v!r} as a term")


def value_type(v: Value) -> Type | None:
    """Type of a first-order value, or None when it cannot be read off."""
    match v:
        case StrV():
            return STR
        case PairV(a, b):
            ta, tb = value_type(a), value_type(b)
            if ta is None or tb is None:
                return None
            return Product(ta, tb)
    return None


# ---------------------------------------------------------------- stores

class StoreTyping:
    """Append-only map from store keys to types."""

    def __init__(self, entries: dict | None = None):
        self._types: dict[str, Type] = dict(entries or {})

    def __contains__(self, key):
        return key in self._types

    def __getitem__(self, key):
        return self._types[key]

    def __len__(self):
        return len(self._types)

    def items(self):
        return self._types.items()

    def get(self, key, default=None):
        return self._types.get(key, default)

    def extend(self, key: str, ty: Type) -> None:
        old = self._types.get(key)
        if old is not None and old != ty:
            raise LambdaTypeError(TypeErrorKind.STORE_TYPE_CONFLICT, key, expected=old, found=ty)
        self._types[key] = ty

    def includes(self, other: "StoreTyping") -> bool:
        """``self ⊇ other``."""
        return all(k in self._types and self._types[k] == t for k, t in other.items())

    def copy(self) -> "StoreTyping":
        return StoreTyping(self._types)

    def merged(self, other: "StoreTyping") -> "StoreTyping":
        out = self.copy()
        for k, t in other.items():
            out.extend(k, t)
        return out

    def __eq__(self, other):
        return isinstance(other, StoreTyping) and self._types == other._types

    def __repr__(self):
        return f"StoreTyping({self._types!r})"


@dataclass
class StoreEntry:
    value: Value
    inserted_at_step: int
    inserted_at_time: float


@dataclass(eq=False)
class Store:
    capacity: Optional[int] = None
    ttl_seconds: Optional[int] = None
    name: str = "σ"
    entries: dict = field(default_factory=dict)
    typing: StoreTyping = field(default_factory=StoreTyping)

    @classmethod
    def from_ref(cls, ref: StoreRef, now: float = 0.0) -> "Store":
        store = cls(capacity=ref.capacity, ttl_seconds=ref.ttl, name=ref.name)
        for key, val in ref.initial:
            store.write(key, val, step=0, now=now)
        return store

    def write(self, key: str, value: Value, *, step: int, now: float,
              type_: Type | None = None) -> None:
        ty = type_ if type_ is not None else value_type(value)
        if ty is None:
            raise ValueError(f"cannot infer a store type for {value!r}; pass type_")
        # raises before any mutation
        self.typing.extend(key, ty)
        self.entries.pop(key, None)
        self.entries[key] = StoreEntry(value, step, now)
        if self.capacity is not None:
            while len(self.entries) > self.capacity:
                oldest = min(self.entries, key=lambda k: self.entries[k].inserted_at_step)
                del self.entries[oldest]

    def _alive(self, entry: StoreEntry, now: float) -> bool:
        return self.ttl_seconds is None or now - entry.inserted_at_time < self.ttl_seconds

    def read(self, key: str, now: float) -> Value | None:
        entry = self.entries.get(key)
        if entry is None or not self._alive(entry, now):
            return None
        return entry.value

    def visible(self, now: float) -> dict:
        return {k: e.value for k, e in self.entries.items() if self._alive(e, now)}

    def __len__(self):
        return len(self.entries)
