"""Command line: ``ircdesync run|list|attempts``.

Exit status is 0 when every assertion passes, 1 when one fails and 2 on
a malformed scenario or any other error.
"""

from __future__ import annotations

import argparse
import statistics
import sys
from collections import Counter
from pathlib import Path

from .corpus import builtin_summary, list_builtins, load_builtin
from .errors import DesyncError, MaxAttemptsExceeded, ScenarioError
from .scenario import attempt_until_desynced, parse_scenario, run_scenario


def _load(args):
    if args.builtin:
        return load_builtin(args.builtin)
    if not args.file:
        raise ScenarioError("give a scenario file or --builtin NAME")
    path = Path(args.file)
    return parse_scenario(path.read_text(encoding="utf-8"), name=path.stem)


def _scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("file", nargs="?", help="scenario script")
    p.add_argument("--builtin", metavar="NAME", help="run a shipped scenario instead of a file")
    p.add_argument("--seed", type=int, help="override the script's seed")
    p.add_argument("--jitter", type=int, help="override the script's latency jitter")


def cmd_run(args) -> int:
    report = run_scenario(_load(args), seed=args.seed, jitter=args.jitter)
    if args.json:
        print(report.to_json())
    else:
        print(report.summary())
    if args.trace:
        Path(args.trace).write_text(report.trace_jsonl(), encoding="utf-8")
    if args.dump:
        Path(args.dump).write_text(report.dump_json() + "\n", encoding="utf-8")
    return 0 if report.passed else 1


def cmd_list(args) -> int:
    names = list_builtins()
    width = max(map(len, names), default=0)
    for name in names:
        print(f"{name:<{width}}  {builtin_summary(name)}")
    return 0


def cmd_attempts(args) -> int:
    scenario = _load(args)
    base = scenario.seed if args.seed is None else args.seed
    counts = []
    for trial in range(args.trials):
        try:
            n = attempt_until_desynced(scenario, args.max, seed=base + trial * args.max,
                                       jitter=args.jitter, on_target=args.on_target)
        except MaxAttemptsExceeded:
            n = None
        counts.append(n)
    hist = Counter(counts)
    ok = [n for n in counts if n is not None]
    for k in sorted((k for k in hist if k is not None)):
        print(f"{k} attempts: {hist[k]}")
    if None in hist:
        print(f"gave up after {args.max}: {hist[None]}")
    if not ok:
        return 1
    med = statistics.median([n if n is not None else args.max + 1 for n in counts])
    print(f"median {med:g} over {len(counts)} trials")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ircdesync", description="IRC channel desync simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and check its assertions")
    _scenario_args(run)
    run.add_argument("--trace", metavar="PATH", help="write client traces as JSON lines")
    run.add_argument("--dump", metavar="PATH", help="write the final channel views as JSON")
    run.add_argument("--json", action="store_true", help="print the report as JSON")
    run.set_defaults(fn=cmd_run)

    ls = sub.add_parser("list", help="list the shipped scenarios")
    ls.set_defaults(fn=cmd_list)

    att = sub.add_parser("attempts", help="count reruns until a desync lands")
    _scenario_args(att)
    att.add_argument("--max", type=int, default=10, help="attempts per trial before giving up")
    att.add_argument("--trials", type=int, default=1, help="independent trials to run")
    att.add_argument("--on-target", action="store_true", help="only count runs whose boundary is the aimed-at edge")
    att.set_defaults(fn=cmd_attempts)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DesyncError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
