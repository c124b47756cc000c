from __future__ import annotations

import sys
from pathlib import Path

import pytest

from lambdagent.evaluator import EvalContext
from lambdagent.oracles import FunctionOracle, ScriptedOracle, ToolRegistry

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"

sys.path.insert(0, str(TESTS))  # term_reader


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def golden() -> Path:
    return GOLDEN


def echo_oracle() -> FunctionOracle:
    """Replies ``<prompt>(<input>)`` so every call is visible in the output."""
    return FunctionOracle(lambda prompt, text: f"{prompt}({text})")


def make_ctx(oracle=None, tools=None, seed: int = 0) -> EvalContext:
    return EvalContext(oracle if oracle is not None else echo_oracle(),
                       tools if tools is not None else ToolRegistry.with_library(),
                       rng_seed=seed)


def scripted(*entries, default=None) -> ScriptedOracle:
    return ScriptedOracle(list(entries), default)


# ---------------------------------------------------------------- acceptance verdicts

_VERDICTS: dict[int, tuple[bool | None, str]] = {}


def record_verdict(number: int, ok: bool | None, detail: str) -> None:
    """Remember (and print) one acceptance line; ``ok=None`` marks a skip."""
    _VERDICTS[number] = (ok, detail)
    print(_verdict_line(number, ok, detail))


def _verdict_line(number: int, ok: bool | None, detail: str) -> str:
    status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
    return f"criterion {number:>2}: {status}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        terminalreporter.write_line(_verdict_line(number, *_VERDICTS[number]))
