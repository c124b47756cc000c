"""Types and refinement predicates of the calculus."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Union


# ---------------------------------------------------------------- predicates

@dataclass(frozen=True)
class NonEmpty:
    def holds(self, text: str) -> bool:
        return bool(text.strip())


@dataclass(frozen=True)
class MaxWords:
    n: int

    def holds(self, text: str) -> bool:
        return len(text.split()) <= self.n


@dataclass(frozen=True)
class MinWords:
    n: int

    def holds(self, text: str) -> bool:
        return len(text.split()) >= self.n


@dataclass(frozen=True)
class MatchesRegex:
    pattern: str

    def __post_init__(self):
        re.compile(self.pattern)

    def holds(self, text: str) -> bool:
        return re.search(self.pattern, text) is not None


@dataclass(frozen=True)
class ValidJson:
    def holds(self, text: str) -> bool:
        try:
            json.loads(text)
        except ValueError:
            return False
        return True


@dataclass(frozen=True)
class Conj:
    left: "Predicate"
    right: "Predicate"

    def holds(self, text: str) -> bool:
        return self.left.holds(text) and self.right.holds(text)


@dataclass(frozen=True)
class Neg:
    inner: "Predicate"

    def holds(self, text: str) -> bool:
        return not self.inner.holds(text)


Predicate = Union[NonEmpty, MaxWords, MinWords, MatchesRegex, ValidJson, Conj, Neg]
PREDICATE_TYPES = (NonEmpty, MaxWords, MinWords, MatchesRegex, ValidJson, Conj, Neg)


def predicate_from_config(spec) -> Predicate:
    """Build a predicate from a config fragment.

    Accepts a mapping such as ``{max_words: 3}``, ``{regex: "^ok"}``,
    ``{not: {...}}`` or a list of such mappings (conjunction).
    """
    if isinstance(spec, list):
        if not spec:
            raise ValueError("empty guard list")
        return _conj_all([predicate_from_config(s) for s in spec])
    if isinstance(spec, str):
        spec = {spec: True}
    if not isinstance(spec, dict) or not spec:
        raise ValueError(f"bad guard spec: {spec!r}")
    preds = []
    for key, val in spec.items():
        k = key.replace("-", "_").lower()
        if k in ("nonempty", "non_empty"):
            preds.append(NonEmpty())
        elif k in ("max_words", "maxwords"):
            preds.append(MaxWords(int(val)))
        elif k in ("min_words", "minwords"):
            preds.append(MinWords(int(val)))
        elif k in ("regex", "matches", "pattern"):
            preds.append(MatchesRegex(str(val)))
        elif k in ("json", "valid_json"):
            preds.append(ValidJson())
        elif k == "not":
            preds.append(Neg(predicate_from_config(val)))
        else:
            raise ValueError(f"unknown guard predicate: {key}")
    return _conj_all(preds)


def _conj_all(preds):
    out = preds[-1]
    for p in reversed(preds[:-1]):
        out = Conj(p, out)
    return out


def show_predicate(p: Predicate) -> str:
    match p:
        case NonEmpty():
            return "nonempty"
        case MaxWords(n):
            return f"max_words({n})"
        case MinWords(n):
            return f"min_words({n})"
        case MatchesRegex(pat):
            return f"matches({json.dumps(pat, ensure_ascii=False)})"
        case ValidJson():
            return "valid_json"
        case Conj(a, b):
            return f"({show_predicate(a)} ∧ {show_predicate(b)})"
        case Neg(a):
            return f"¬{show_predicate(a)}"
    raise TypeError(f"not a predicate: {p!r}")


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class StrT:
    def __str__(self):
        return show_type(self)


@dataclass(frozen=True)
class Arrow:
    dom: "Type"
    cod: "Type"

    def __str__(self):
        return show_type(self)


@dataclass(frozen=True)
class Product:
    left: "Type"
    right: "Type"

    def __str__(self):
        return show_type(self)


@dataclass(frozen=True)
class Variant:
    cases: tuple  # ((label, Type), ...)

    def __post_init__(self):
        labels = [l for l, _ in self.cases]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate variant labels: {labels}")

    @property
    def labels(self) -> tuple:
        return tuple(l for l, _ in self.cases)

    def __str__(self):
        return show_type(self)


@dataclass(frozen=True)
class Refinement:
    base: "Type"
    predicate: Predicate

    def __str__(self):
        return show_type(self)


Type = Union[StrT, Arrow, Product, Variant, Refinement]

STR = StrT()
STR_TO_STR = Arrow(STR, STR)
BOOL = Variant((("true", STR), ("false", STR)))


def variant(*labels: str) -> Variant:
    return Variant(tuple((l, STR) for l in labels))


def erase(t: Type) -> Type:
    """Strip refinements everywhere."""
    match t:
        case Refinement(base, _):
            return erase(base)
        case Arrow(d, c):
            return Arrow(erase(d), erase(c))
        case Product(a, b):
            return Product(erase(a), erase(b))
        case Variant(cases):
            return Variant(tuple((l, erase(x)) for l, x in cases))
    return t


def is_subtype(found: Type, expected: Type) -> bool:
    """Refinement-to-base subsumption, lifted structurally.

    This is the only relation weaker than equality: a refined value may
    flow wherever its base type is expected.
    """
    if found == expected:
        return True
    match found, expected:
        case Refinement(base, _), _:
            return is_subtype(base, expected)
        case Arrow(d1, c1), Arrow(d2, c2):
            return is_subtype(d2, d1) and is_subtype(c1, c2)
        case Product(a1, b1), Product(a2, b2):
            return is_subtype(a1, a2) and is_subtype(b1, b2)
        case Variant(c1), Variant(c2):
            return [l for l, _ in c1] == [l for l, _ in c2] and all(
                is_subtype(x, y) for (_, x), (_, y) in zip(c1, c2)
            )
    return False


def join(a: Type, b: Type) -> Type | None:
    if a == b:
        return a
    if is_subtype(a, b):
        return b
    if is_subtype(b, a):
        return a
    if erase(a) == erase(b):
        return erase(a)
    return None


_LABEL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")
KEYWORDS = frozenset({"let", "in", "case", "of", "if", "then", "else", "mem", "guard",
                      "lam", "tool", "Str", "_", "nonempty", "valid_json"})


def show_label(label: str) -> str:
    if _LABEL_RE.match(label) and label not in KEYWORDS and not label.startswith("fix_"):
        return label
    return json.dumps(label, ensure_ascii=False)


def show_type(t: Type) -> str:
    match t:
        case StrT():
            return "Str"
        case Arrow(d, c):
            left = show_type(d)
            if isinstance(d, Arrow):
                left = f"({left})"
            return f"{left} → {show_type(c)}"
        case Product(a, b):
            parts = []
            for x in (a, b):
                s = show_type(x)
                parts.append(f"({s})" if isinstance(x, (Arrow, Product)) else s)
            return f"{parts[0]} × {parts[1]}"
        case Variant(cases):
            inner = " | ".join(f"{show_label(l)}: {show_type(x)}" for l, x in cases)
            return f"⟨{inner}⟩"
        case Refinement(base, p):
            return f"{{x: {show_type(base)} | {show_predicate(p)}}}"
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------- errors

class TypeErrorKind:
    MISMATCH = "Mismatch"
    UNBOUND_VAR = "UnboundVar"
    UNKNOWN_TOOL = "UnknownTool"
    NON_EXHAUSTIVE_CASE = "NonExhaustiveCase"
    BAD_FIX_SHAPE = "BadFixShape"
    STORE_TYPE_CONFLICT = "StoreTypeConflict"


class LambdaTypeError(Exception):
    """A violated typing-rule premise.

    ``location`` is a dotted path from the root term to the offending
    subterm (``""`` for the root).
    """

    def __init__(self, kind: str, location: str = "", expected: Type | None = None,
                 found: Type | None = None, detail: str = ""):
        self.kind = kind
        self.location = location
        self.expected = expected
        self.found = found
        self.detail = detail
        super().__init__(self.render())

    def render(self) -> str:
        parts = [self.kind, self.location or "<root>"]
        if self.expected is not None:
            parts.append(f"expected {show_type(self.expected)}")
        if self.found is not None:
            parts.append(f"found {show_type(self.found)}")
        if self.detail:
            parts.append(self.detail)
        return ": ".join(parts[:2]) + ("; " + ", ".join(parts[2:]) if parts[2:] else "")
