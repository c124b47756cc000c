"""Command-line interface: ``lambdagent <subcommand> ...``.

Exit codes: 0 success (or a clean lint), 1 lint warnings, 2 errors or
failed runs.  Errors are reported as one ``error:`` line; no traceback.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import CompileError, ConfigError, Framework, compile_config, load_config
from .evaluator import GuardStuck, Ok, OracleFailure, Outcome, RouteError
from .lint import exit_code, format_findings, lint, lint_many, summarize
from .oracles import ScriptMiss
from .pretty import pretty
from .runtime import NoOracleConfigured, RunResult, Runtime
from .supplements import reconcile, scan_repo
from .trace import Trace, render
from .typesys import LambdaTypeError, show_predicate, show_type

CONFIG_SUFFIXES = (".yaml", ".yml", ".json")
EXIT_OK, EXIT_WARN, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    """A user-facing failure with a one-line message."""


def _emit(args, human: str, structured: dict) -> None:
    if args.format == "structured":
        print(json.dumps(structured, ensure_ascii=False, sort_keys=True))
    elif human:
        print(human)


# ---------------------------------------------------------------- helpers


def _runtime(args, persistent: bool = False) -> Runtime:
    return Runtime.from_script(args.oracle_script, seed=args.seed, persistent=persistent)


def _describe(outcome: Outcome) -> str:
    match outcome:
        case GuardStuck(p, v):
            return f"guard failed: {show_predicate(p)} on {v!r}"
        case RouteError(label):
            return f"route error: no branch for {label!r}"
        case OracleFailure(detail):
            return f"oracle failure: {detail}"
    return "ok"


def _outcome_kind(outcome: Outcome) -> str:
    return type(outcome).__name__


def _report_run(args, r: RunResult) -> int:
    if args.format == "structured":
        doc = {"outcome": _outcome_kind(r.outcome), "result": r.result,
               "steps": r.stats.steps, "tokens": r.stats.tokens,
               "llm_calls": r.stats.llm_calls, "tool_calls": r.stats.tool_calls}
        if not r.ok:
            doc["detail"] = _describe(r.outcome)
        print(json.dumps(doc, ensure_ascii=False, sort_keys=True))
    else:
        if r.ok:
            print(r.result)
        else:
            print(f"error: {_describe(r.outcome)}", file=sys.stderr)
        print(str(r.stats))
    return EXIT_OK if isinstance(r.outcome, Ok) else EXIT_ERROR


def _findings_for(path: Path, args):
    c = load_config(path, args.framework)
    findings = lint(c)
    if args.with_code:
        findings = reconcile(findings, scan_repo(args.with_code))
    return findings


def _config_files(paths: Sequence[str]) -> list[Path]:
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.rglob("*") if q.suffix in CONFIG_SUFFIXES))
        elif p.exists():
            out.append(p)
        else:
            raise CliError(f"no such file or directory: {p}")
    return out


# ---------------------------------------------------------------- subcommands


def cmd_compile(args) -> int:
    rt = _runtime(args) if args.oracle_script else Runtime()
    c, term, ty = rt.compile(args.config, args.framework, args.force)
    findings = lint(c)
    if args.with_code:
        findings = reconcile(findings, scan_repo(args.with_code))
    if args.format == "structured":
        print(json.dumps({"lambda": pretty(term), "type": show_type(ty),
                          "findings": [f.to_dict() for f in findings]},
                         ensure_ascii=False, sort_keys=True))
    else:
        print(pretty(term))
        print(f"type: {show_type(ty)}")
        if findings:
            print(format_findings(findings))
    return EXIT_OK


def cmd_lambda(args) -> int:
    term = compile_config(load_config(args.config, args.framework), force=args.force)
    _emit(args, pretty(term), {"lambda": pretty(term)})
    return EXIT_OK


def cmd_run(args) -> int:
    text = args.input if args.input is not None else sys.stdin.read().rstrip("\n")
    rt = _runtime(args)
    _, term, _ = rt.compile(args.config, args.framework, args.force)
    result = rt.run(term, text)
    if args.trace_out:
        Path(args.trace_out).write_text(result.trace.dumps(), encoding="utf-8")
    return _report_run(args, result)


def cmd_repl(args) -> int:
    rt = _runtime(args, persistent=True)
    _, term, ty = rt.compile(args.config, args.framework, args.force)
    interactive = sys.stdin.isatty()
    if interactive:
        print(f"{args.config}: {show_type(ty)}  (empty line or :quit to exit)")
    status = EXIT_OK
    while True:
        if interactive:
            print("> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            break
        line = line.rstrip("\n")
        if line.strip() in ("", ":quit", ":q"):
            if interactive or line.strip():
                break
            continue
        status = max(status, _report_run(args, rt.run(term, line)))
    return status


def cmd_lint(args) -> int:
    files = _config_files(args.paths)
    if not files:
        raise CliError("no configuration files found")
    results: dict[str, list] = {}
    failures: dict[str, str] = {}
    if len(files) == 1:
        results[str(files[0])] = _findings_for(files[0], args)
    else:
        loaded = []
        for f in files:
            try:
                loaded.append((str(f), load_config(f, args.framework)))
            except (ConfigError, OSError) as exc:
                failures[str(f)] = str(exc)
        index = scan_repo(args.with_code) if args.with_code else None
        for (name, _), findings in zip(loaded, lint_many([c for _, c in loaded])):
            results[name] = reconcile(findings, index) if index is not None else findings

    multi = len(files) > 1
    for name, findings in results.items():
        if args.format == "structured":
            for f in findings:
                d = f.to_dict()
                if multi:
                    d["file"] = name
                print(json.dumps(d, ensure_ascii=False, sort_keys=True))
        elif findings:
            if multi:
                print(f"{name}:")
                print("\n".join("  " + line for line in format_findings(findings).splitlines()))
            else:
                print(format_findings(findings))
    for name, msg in failures.items():
        print(f"error: {msg}", file=sys.stderr)
    if args.summary:
        report = summarize(results)
        if args.format == "structured":
            print(json.dumps({"summary": {"configs": report.total,
                                          "with_error": report.configs_with_error,
                                          "clean": report.clean,
                                          "per_rule": report.per_rule}}, sort_keys=True))
        else:
            print(report.render())
    code = exit_code(f for fs in results.values() for f in fs)
    return EXIT_ERROR if failures else code


def cmd_trace(args) -> int:
    trace = Trace.loads(Path(args.file).read_text(encoding="utf-8"))
    if args.no_phases:
        trace = trace.without_phases()
    if args.format == "structured":
        print(trace.dumps(), end="")
    else:
        print(render(trace))
        print(f"{len(trace)} events, {trace.oracle_calls()} oracle calls, "
              f"{trace.tokens()} tokens")
    return EXIT_OK


def cmd_tools(args) -> int:
    rt = _runtime(args) if args.oracle_script else Runtime()
    reg = rt.tools
    if args.name is None:
        for name in reg.names():
            e = reg.get(name)
            _emit(args, f"{name:<12} {show_type(e.dom)} → {show_type(e.cod)}  {e.description}",
                  {"tool": name, "dom": show_type(e.dom), "cod": show_type(e.cod),
                   "description": e.description})
        return EXIT_OK
    if args.name not in reg:
        raise CliError(f"unknown tool {args.name!r}")
    text = args.input if args.input is not None else ""
    out = reg.call(args.name, text)
    _emit(args, out, {"tool": args.name, "input": text, "output": out})
    return EXIT_OK


def cmd_version(args) -> int:
    _emit(args, __version__, {"version": __version__})
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "structured"), default="human",
                        help="output mode (structured = one JSON object per line)")
    config_opts = argparse.ArgumentParser(add_help=False)
    config_opts.add_argument("--framework", choices=Framework.ALL, default=None,
                             help="override framework detection")
    config_opts.add_argument("--force", action="store_true",
                             help="compile even when lint reports errors")
    oracle_opts = argparse.ArgumentParser(add_help=False)
    oracle_opts.add_argument("--oracle-script", metavar="FILE",
                             help="scripted oracle (YAML/JSON); default: HTTP endpoint from env")
    oracle_opts.add_argument("--seed", type=int, default=0, help="seed for probabilistic choice")
    code_opts = argparse.ArgumentParser(add_help=False)
    code_opts.add_argument("--with-code", metavar="DIR",
                           help="scan source code in DIR for externally supplied fields")

    p = argparse.ArgumentParser(prog="lambdagent",
                                description="Typed agent configurations: compile, check, run.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    s = sub.add_parser("compile", parents=[common, config_opts, code_opts],
                       help="typecheck a config and print its term and diagnostics")
    s.add_argument("config")
    s.set_defaults(fn=cmd_compile, oracle_script=None, seed=0)

    s = sub.add_parser("run", parents=[common, config_opts, oracle_opts],
                       help="compile and execute a config on one input")
    s.add_argument("config")
    s.add_argument("input", nargs="?", help="input text (default: stdin)")
    s.add_argument("--trace-out", metavar="FILE", help="save the execution trace (JSON lines)")
    s.set_defaults(fn=cmd_run)

    s = sub.add_parser("repl", parents=[common, config_opts, oracle_opts],
                       help="feed input lines to a compiled config; memory persists")
    s.add_argument("config")
    s.set_defaults(fn=cmd_repl)

    s = sub.add_parser("lint", parents=[common, code_opts],
                       help="lint config files or directories")
    s.add_argument("paths", nargs="+")
    s.add_argument("--framework", choices=Framework.ALL, default=None)
    s.add_argument("--summary", action="store_true", help="print an aggregate report")
    s.set_defaults(fn=cmd_lint)

    s = sub.add_parser("trace", parents=[common], help="render a saved trace file")
    s.add_argument("file")
    s.add_argument("--no-phases", action="store_true", help="hide ReAct phase markers")
    s.set_defaults(fn=cmd_trace)

    s = sub.add_parser("lambda", parents=[common, config_opts], help="print the term only")
    s.add_argument("config")
    s.set_defaults(fn=cmd_lambda)

    s = sub.add_parser("tools", parents=[common, oracle_opts],
                       help="list registered tools, or call one")
    s.add_argument("name", nargs="?")
    s.add_argument("input", nargs="?")
    s.set_defaults(fn=cmd_tools)

    s = sub.add_parser("version", parents=[common], help="print the version")
    s.set_defaults(fn=cmd_version)
    return p


USER_ERRORS = (CliError, ConfigError, CompileError, LambdaTypeError, NoOracleConfigured,
               ScriptMiss, OSError, ValueError, KeyError)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except USER_ERRORS as exc:
        msg = exc.render() if isinstance(exc, LambdaTypeError) else str(exc)
        if isinstance(exc, KeyError):
            msg = str(exc.args[0]) if exc.args else "missing key"
        if args.format == "structured":
            print(json.dumps({"error": msg, "kind": type(exc).__name__}, ensure_ascii=False))
        else:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
