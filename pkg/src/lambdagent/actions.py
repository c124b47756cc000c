"""The action line format shared by compiled ReAct loops and the big-step engine.

An oracle reply selects a tool with::

    ACTION: <name>
    ARGS: <text, possibly spanning the remaining lines>

A reply with no ``ACTION:`` line is a final answer: it is read as
``terminate`` with the whole reply as its argument.
"""

from __future__ import annotations

import re

_ACTION_RE = re.compile(r"^[ \t]*ACTION:[ \t]*(.*?)[ \t]*$", re.MULTILINE)
_ARGS_RE = re.compile(r"^[ \t]*ARGS:[ \t]?", re.MULTILINE)

SUMMARY_LIMIT = 512
OBSERVATION_SEP = "\nObservation: "


def parse_action(output: str) -> tuple[str, str]:
    m = _ACTION_RE.search(output)
    if m is None:
        return "terminate", output
    action = m.group(1)
    rest = output[m.end():]
    a = _ARGS_RE.search(rest)
    if a is None:
        return action, ""
    return action, rest[a.end():].rstrip("\n")


def format_action(action: str, args: str = "") -> str:
    return f"ACTION: {action}\nARGS: {args}" if args else f"ACTION: {action}"


def next_state(state: str, observation: str) -> str:
    return state + OBSERVATION_SEP + observation


def summary(think: str, observation: str) -> str:
    return (think + " | " + observation)[:SUMMARY_LIMIT]
