"""Command-line interface.

Exit codes: 0 no leakage detected (or command succeeded), 1 operational
error, 2 leakage alarm raised by ``analyze``.

Examples::

    leakscope simulate --profile builtin:leaky-4cat --runs 100 --out t.csv
    leakscope analyze t.csv --out report.json
    leakscope report report.json --format markdown
    sudo leakscope collect --events cache-misses,branches --mode spawn \\
        --runs 100 --label 3 --out t.csv -- ./classify img3.png
"""

import argparse
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .collector import MODES, TargetSpec, collect, open_session
from .errors import LeakscopeError, PermissionDenied, TooManyEvents
from .evaluator import CORRECTIONS, DEFAULT_BINS, evaluate
from .events import DEFAULT_CATALOG, DEFAULT_MAX_PARALLEL, build_event_set
from .report import FORMATS, alarm_line, render_report, report_from_json
from .store import dumps_trace, loads_trace
from .workload import load_profile, simulate_trace

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ALARM = 2

BUILTIN_PREFIX = "builtin:"
PROFILE_DIR = Path(__file__).parent / "data" / "profiles"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as an alarm
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")

    def exit(self, status=0, message=None):
        if status:
            raise UsageError(message.strip() if message else f"{self.prog}: error")
        if message:
            sys.stderr.write(message)
        raise SystemExit(0)


def bundled_profiles() -> list:
    return sorted(p.stem for p in PROFILE_DIR.glob("*.json"))


def resolve_profile_path(ref: str) -> Path:
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX):]
        path = PROFILE_DIR / f"{name}.json"
        if not path.is_file():
            raise UsageError(f"no bundled profile {name!r}; available: {', '.join(bundled_profiles())}")
        return path
    return Path(ref)


def _read_input(ref: str) -> bytes:
    if ref == "-":
        return sys.stdin.buffer.read()
    return Path(ref).read_bytes()


def _write_output(ref: str, data: bytes) -> None:
    if ref == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    target = Path(ref)
    fd, tmp = tempfile.mkstemp(prefix=".leakscope-", dir=target.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _catalog(args):
    if getattr(args, "catalog", None):
        return DEFAULT_CATALOG.extended_from_file(args.catalog)
    return DEFAULT_CATALOG


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _alpha(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {value}")
    return value


def _labels(values):
    labels = []
    for value in values or []:
        labels.extend(part.strip() for part in value.split(",") if part.strip())
    return labels


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leakscope", description="Hardware-counter leakage evaluator.")
    parser.add_argument("--version", action="version", version=f"leakscope {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("collect", help="measure event counts per category and write a trace")
    p.add_argument("--events", required=True, help="comma-separated event names")
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--runs", type=_positive_int, default=1000, help="runs per category (default 1000)")
    p.add_argument("--label", action="append", help="category label; repeat or comma-separate")
    p.add_argument("--pid", type=_positive_int, help="process to attach to (attach mode)")
    p.add_argument("--duration-ms", type=_positive_int, help="attach window length (attach mode)")
    p.add_argument("--profile", help="workload profile JSON or builtin:NAME (synthetic mode)")
    p.add_argument("--seed", type=_seed, help="override the profile seed (synthetic mode)")
    p.add_argument("--trace", help="recorded trace to replay (replay mode)")
    p.add_argument("--max-parallel", type=_positive_int, default=DEFAULT_MAX_PARALLEL)
    p.add_argument("--catalog", help="file extending the event catalog")
    p.add_argument("--out", default="-", help="trace destination ('-' = stdout)")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("simulate", help="write a synthetic trace from a workload profile")
    p.add_argument("--profile", required=True, help="workload profile JSON or builtin:NAME")
    p.add_argument("--runs", type=int, default=1000, help="runs per category (default 1000)")
    p.add_argument("--seed", type=_seed, help="override the profile seed")
    p.add_argument("--catalog", help="file extending the event catalog")
    p.add_argument("--out", default="-", help="trace destination ('-' = stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="run pairwise t-tests on a trace; exit 2 on leakage")
    p.add_argument("trace", nargs="?", default="-", help="trace file ('-' = stdin)")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--correction", choices=CORRECTIONS, default="none")
    p.add_argument("--bins", type=_positive_int, default=DEFAULT_BINS)
    p.add_argument("--catalog", help="file extending the event catalog")
    p.add_argument("--out", default="-", help="JSON report destination ('-' = stdout)")
    p.add_argument("--quiet", action="store_true", help="no summary on stderr")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render a JSON report as text, markdown or json")
    p.add_argument("report", nargs="?", default="-", help="JSON report ('-' = stdin)")
    p.add_argument("--format", default="text", help=f"one of: {', '.join(FORMATS)}")
    p.add_argument("--out", default="-", help="destination ('-' = stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def _split_command(argv):
    """Separate the target command following ``--``.

    A trailing ``--out PATH`` after the command is taken as leakscope's own
    flag when ``--out`` was not given before ``--``.
    """
    if "--" not in argv:
        return list(argv), []
    i = argv.index("--")
    head, tail = list(argv[:i]), list(argv[i + 1:])
    if "--out" not in head and len(tail) >= 3 and tail[-2] == "--out":
        head += ["--out", tail[-1]]
        tail = tail[:-2]
    return head, tail


def cmd_collect(args, command) -> int:
    catalog = _catalog(args)
    names = [n for n in args.events.split(",") if n.strip()]
    events = build_event_set(names, args.max_parallel, catalog)
    labels = _labels(args.label)

    if args.mode == "spawn":
        if not command:
            raise UsageError("spawn mode needs a target command after '--'")
        target = TargetSpec("spawn", command=command)
    elif args.mode == "attach":
        if args.pid is None or args.duration_ms is None:
            raise UsageError("attach mode needs --pid and --duration-ms")
        target = TargetSpec("attach", pid=args.pid, duration_ms=args.duration_ms)
    elif args.mode == "synthetic":
        if not args.profile:
            raise UsageError("synthetic mode needs --profile")
        profile = load_profile(resolve_profile_path(args.profile), catalog)
        if args.seed is not None:
            profile = profile.with_seed(args.seed)
        target = TargetSpec("synthetic", profile_ref=profile)
        labels = labels or profile.labels
    else:
        if not args.trace:
            raise UsageError("replay mode needs --trace")
        recorded = loads_trace(_read_input(args.trace).decode("utf-8"), catalog, source=args.trace)
        target = TargetSpec("replay", trace_ref=recorded)
        labels = labels or sorted(recorded.categories)
    if args.mode != "synthetic" and args.seed is not None:
        raise UsageError("--seed only applies to synthetic mode")
    if command and args.mode != "spawn":
        raise UsageError(f"a target command is only accepted in spawn mode, not {args.mode}")
    if not labels:
        raise UsageError(f"{args.mode} mode needs at least one --label")

    session = open_session(target, events)
    ms = collect(session, [(label, args.runs) for label in labels])
    _write_output(args.out, dumps_trace(ms).encode("utf-8"))
    return EXIT_OK


def cmd_simulate(args, command) -> int:
    if command:
        raise UsageError("simulate takes no target command")
    if args.runs < 1:
        raise UsageError(f"--runs must be >= 1, got {args.runs}")
    catalog = _catalog(args)
    profile = load_profile(resolve_profile_path(args.profile), catalog)
    if args.seed is not None:
        profile = profile.with_seed(args.seed)
    ms = simulate_trace(profile, args.runs, catalog)
    _write_output(args.out, dumps_trace(ms).encode("utf-8"))
    return EXIT_OK


def cmd_analyze(args, command) -> int:
    if command:
        raise UsageError("analyze takes no target command")
    catalog = _catalog(args)
    source = "-" if args.trace == "-" else args.trace
    ms = loads_trace(_read_input(args.trace).decode("utf-8"), catalog, source=source)
    report = evaluate(ms, args.alpha, args.correction, args.bins)
    _write_output(args.out, render_report(report, "json"))
    if not args.quiet:
        for event, alarmed in report.event_alarms.items():
            verdict = "LEAKS" if alarmed else "no leakage detected"
            print(f"{event}: {verdict}", file=sys.stderr)
        print(alarm_line(report), file=sys.stderr)
    return EXIT_ALARM if report.alarm else EXIT_OK


def cmd_report(args, command) -> int:
    if command:
        raise UsageError("report takes no target command")
    if args.format not in FORMATS:
        raise UsageError(f"unknown format {args.format!r}; valid formats: {', '.join(FORMATS)}")
    report = report_from_json(_read_input(args.report))
    _write_output(args.out, render_report(report, args.format))
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    head, command = _split_command(argv)
    try:
        args = build_parser().parse_args(head)
        return args.func(args, command)
    except UsageError as exc:
        print(f"leakscope: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except PermissionDenied as exc:
        print(f"leakscope: permission denied: {exc}", file=sys.stderr)
        print("hint: re-run with administrative privilege (e.g. sudo)", file=sys.stderr)
        return EXIT_ERROR
    except TooManyEvents as exc:
        print(f"leakscope: too many events: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except LeakscopeError as exc:
        print(f"leakscope: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, UnicodeDecodeError) as exc:
        print(f"leakscope: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
