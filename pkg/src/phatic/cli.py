"""Command-line entry point.

    phatic [generate] [--seed N] [--count K] [--format transcript|trace-json|table|stats]
    phatic replay TRACE.jsonl [--format transcript|table] [--surface-seed N]
    phatic stats --count 1000 [--seed N] [--format stats|trace-json]
    phatic check [--rules FILE] [--depth D]

Exit status: 0 ok, 1 usage/parse/check failure, 2 I/O failure, 3 replay mismatch.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import secrets
import sys
from dataclasses import dataclass
from typing import Optional

from . import __version__
from .conversation import batch_stats, build_ruleset, classify
from .dsl import Program, ProgramError, check_reachability, parse_program
from .engine import Trace, TraceMismatch, run, validate
from .scenario import Scenario, ScenarioError, default_scenario, load_scenario
from .surface import BankError, UnknownRule, coverage_check, load_bank, realize_trace
from .surface import render_table, render_transcript

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_REPLAY = 0, 1, 2, 3
FORMATS = ("transcript", "trace-json", "table", "stats")
MIN_STATS_COUNT = 100
U64 = (1 << 64) - 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2, which we reserve for I/O
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    seed: int
    count: int = 1
    format: str = "transcript"
    scenario: Optional[str] = None
    rules: Optional[str] = None
    bank: Optional[str] = None
    step_cap: int = 200
    turn_budget: Optional[int] = None
    out: Optional[str] = None

    def header(self, command: str, sc: Scenario) -> str:
        return (f"# phatic {command} seed={self.seed} count={self.count} format={self.format}"
                f" scenario={self.scenario or 'builtin:' + sc.name} rules={self.rules or 'builtin'}"
                f" bank={self.bank or 'builtin'} step_cap={self.step_cap}"
                f" turn_budget={sc.turn_budget}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="scenario JSON file (default: built-in)")
    p.add_argument("--rules", help="ruleset .phatic file (default: $PHATIC_RULES, else built-in)")
    p.add_argument("--bank", help="utterance/guideline bank JSON (default: built-in)")
    p.add_argument("--out", help="write output here instead of stdout")


def _run_options(p: argparse.ArgumentParser, count_default: int) -> None:
    p.add_argument("--seed", type=_u64, help="first seed (default: random, always echoed)")
    p.add_argument("--count", type=_positive, default=count_default)
    p.add_argument("--step-cap", type=_positive, default=200)
    p.add_argument("--turn-budget", type=_positive)


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= U64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="phatic", description="Generate and analyse small-talk conversations.")
    ap.add_argument("--version", action="version", version=f"phatic {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="generate conversations (default command)")
    _run_options(g, 1)
    g.add_argument("--format", choices=FORMATS, default="transcript")
    _common(g)

    r = sub.add_parser("replay", help="validate recorded traces and render them")
    r.add_argument("trace", help="trace-v1 JSON lines file ('-' for stdin)")
    r.add_argument("--format", choices=("transcript", "table"), default="transcript")
    r.add_argument("--surface-seed", type=_u64,
                   help="pick random wording variants (default: first variant)")
    _common(r)

    s = sub.add_parser("stats", help=f"batch statistics (count >= {MIN_STATS_COUNT})")
    _run_options(s, 1000)
    s.add_argument("--format", choices=("stats", "trace-json"), default="stats",
                   help="trace-json prints the summary as one JSON object")
    _common(s)

    c = sub.add_parser("check", help="check a ruleset: diagnostics, bank coverage, reachability")
    c.add_argument("--depth", type=int, default=4, help="reachability search depth (0-12)")
    _common(c)
    return ap


# -- loading --


def _load_program(path: Optional[str]) -> tuple[Program, str]:
    path = path or os.environ.get("PHATIC_RULES") or None
    if path is None:
        return build_ruleset(), "builtin"
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    try:
        program = parse_program(source)
    except ProgramError as e:
        e.filename = path
        raise
    for d in program.diagnostics:
        print(d.format(path), file=sys.stderr)
    return program, path


def _load_scenario(path: Optional[str], budget: Optional[int]) -> Scenario:
    sc = load_scenario(path) if path else default_scenario()
    return sc.with_budget(budget) if budget else sc


def _open_out(path: Optional[str]):
    return open(path, "w", encoding="utf-8") if path else contextlib.nullcontext(sys.stdout)


# -- commands --


def cmd_generate(args, command: str = "generate") -> int:
    if args.format == "stats" or command == "stats":
        if args.count < MIN_STATS_COUNT:
            raise UsageError(f"statistics need --count >= {MIN_STATS_COUNT}")
    program, rules_path = _load_program(args.rules)
    sc = _load_scenario(args.scenario, args.turn_budget)
    bank = load_bank(args.bank)
    seed = args.seed if args.seed is not None else secrets.randbits(64)
    cfg = RunConfig(seed, args.count, args.format, args.scenario, rules_path if rules_path != "builtin" else None,
                    args.bank, args.step_cap, args.turn_budget)
    header = cfg.header(command, sc)
    machine = args.format == "trace-json"

    traces = (run(sc, program, (seed + i) & U64, args.step_cap) for i in range(args.count))
    with _open_out(args.out) as out:
        # trace-json output stays one record per line; the header goes to stderr
        print(header, file=sys.stderr if machine else out)
        if command == "stats" or args.format == "stats":
            summary = batch_stats(list(traces))
            if machine:
                out.write(json.dumps(summary.to_json(), sort_keys=True) + "\n")
            else:
                out.write(_stats_text(summary, sc))
            return EXIT_OK
        for tr in traces:
            if machine:
                out.write(tr.dumps() + "\n")
                continue
            lines = realize_trace(tr, bank, tr.seed)
            report = classify(tr)
            verdict = "adherent" if report.adherent else ", ".join(report.violations)
            out.write(f"\n## seed {tr.seed}: {verdict}\n")
            out.write(render_table(lines) if args.format == "table" else render_transcript(lines))
    return EXIT_OK


def _stats_text(summary, sc: Scenario) -> str:
    out = [
        f"conversations: {summary.n}",
        f"adherent fraction: {float(summary.adherent_fraction):.4f}",
        "violations:",
        *(f"  {k}: {float(v):.4f}" for k, v in summary.violation_rates.items()),
        f"mean length (utterances): {float(summary.mean_length):.2f}",
        f"mean steps (all rules): {float(summary.mean_steps):.2f}",
        f"turn budget: {sc.turn_budget}",
        "final feelings:",
        *(f"  {k}: {float(v):.4f}" for k, v in summary.final_feelings.items()),
        "rule frequencies (mean firings per conversation):",
    ]
    freq = sorted(summary.rule_frequencies.items(), key=lambda kv: (-kv[1], kv[0]))
    out += [f"  {float(v):8.4f}  {k}" for k, v in freq]
    return "\n".join(out) + "\n"


def cmd_replay(args) -> int:
    program, _ = _load_program(args.rules)
    bank = load_bank(args.bank)
    if args.trace == "-":
        text = sys.stdin.read()
    else:
        with open(args.trace, encoding="utf-8") as fh:
            text = fh.read()
    records = [ln for ln in text.splitlines() if ln.strip()]
    traces = []
    for n, ln in enumerate(records, 1):
        try:
            traces.append(Trace.loads(ln))
        except (ValueError, KeyError, TypeError) as e:
            raise UsageError(f"{args.trace}:{n}: not a trace-v1 record: {e}") from None
    print(f"# phatic replay {args.trace} records={len(traces)}", file=sys.stderr)
    with _open_out(args.out) as out:
        for k, tr in enumerate(traces):
            try:
                validate(tr, program)
            except TraceMismatch as e:
                print(f"replay mismatch in record {k + 1} at step {e.index}: {e.reason}", file=sys.stderr)
                return EXIT_REPLAY
            lines = realize_trace(tr, bank, args.surface_seed)
            if len(traces) > 1:
                out.write(f"## seed {tr.seed}\n")
            out.write(render_table(lines) if args.format == "table" else render_transcript(lines))
    return EXIT_OK


def cmd_check(args) -> int:
    program, path = _load_program(args.rules)
    sc = _load_scenario(args.scenario, None)
    bank = load_bank(args.bank)
    status = EXIT_OK
    missing = coverage_check(bank, program)
    for name in missing:
        print(f"{path}: error: rule {name} has no bank entry", file=sys.stderr)
        status = EXIT_USAGE
    if not 0 <= args.depth <= 12:
        raise UsageError("--depth must lie in 0..12")
    reach = check_reachability(program, sc.initial_state(), args.depth)
    with _open_out(args.out) as out:
        out.write(f"{len(program)} rules, {len(missing)} uncovered, "
                  f"{sum(reach.values())} reachable within {args.depth} steps\n")
    return status


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    commands = ("generate", "replay", "stats", "check")
    if not argv or (argv[0] not in commands and argv[0] not in ("-h", "--help", "--version")):
        argv.insert(0, "generate")
    try:
        args = build_parser().parse_args(argv)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_generate(args, args.command)
    except UsageError as e:
        print(f"phatic: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ProgramError as e:
        for d in e.diagnostics:
            print(d.format(getattr(e, "filename", "<rules>")), file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, BankError, UnknownRule) as e:
        print(f"phatic: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"phatic: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
