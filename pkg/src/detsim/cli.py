"""Command-line frontend: run batches of jobs, write traces, compare them.

Exit codes are part of the interface and scripts may rely on them:

* 0: success (and, for ``run`` batches, all traces identical)
* 1: I/O failure (unreadable config, unwritable trace directory)
* 2: configuration error (syntax, shape, or semantic validation)
* 3: livelock detected while running
* 4: starved clock (job can never finish) while running
* 5: traces diverged (``run`` batch or ``compare``)
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path

from . import trace as trace_mod
from ._version import __version__
from .benchmark import final_states
from .config import load_config
from .errors import DetsimError
from .executor import Kernel, LivelockDetected, StarvedClock

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_LIVELOCK = 3
EXIT_STARVED = 4
EXIT_DIVERGENCE = 5


@dataclass
class RunOutcome:
    """What one run produced, successful or not."""

    index: int
    exit_code: int
    error: str | None
    wall_s: float
    executed_events: int
    final_states: dict
    trace_data: bytes


def _execute_run(config_path: str, jitter_max_ms: float | None, index: int) -> RunOutcome:
    """Run the configured job once in a fresh kernel.

    Top-level so ProcessPoolExecutor workers can call it; each worker parses
    the config itself rather than inheriting parent state.
    """
    job = load_config(config_path)
    if jitter_max_ms is not None:
        job = replace(job, jitter_max_s=jitter_max_ms / 1000.0)
    kernel = Kernel(job)
    exit_code = EXIT_OK
    error = None
    start = time.perf_counter()
    try:
        kernel.run()
    except LivelockDetected as exc:
        exit_code, error = EXIT_LIVELOCK, str(exc)
    except StarvedClock as exc:
        exit_code, error = EXIT_STARVED, str(exc)
    wall_s = time.perf_counter() - start
    return RunOutcome(
        index=index,
        exit_code=exit_code,
        error=error,
        wall_s=wall_s,
        executed_events=kernel.executed_events,
        final_states=final_states(kernel) if kernel.finished else {},
        trace_data=trace_mod.serialize(kernel.trace),
    )


@dataclass
class RunReport:
    """Batch summary written next to the traces as report.txt."""

    runs: int
    sim_duration_ns: int
    jitter_max_ms: float
    all_identical: bool
    trace_digest: str | None
    exit_code: int
    overall_speedup: float
    outcomes: list

    def to_text(self) -> str:
        lines = [
            f"runs: {self.runs}",
            f"sim_duration_ns: {self.sim_duration_ns}",
            f"jitter_max_ms: {self.jitter_max_ms:g}",
            f"all_identical: {'true' if self.all_identical else 'false'}",
            f"trace_digest: {self.trace_digest or 'n/a'}",
            f"exit_code: {self.exit_code}",
            f"overall_speedup: {self.overall_speedup:.1f}",
        ]
        for outcome in self.outcomes:
            speedup = _speedup(self.sim_duration_ns, outcome.wall_s)
            lines.append(
                f"run {outcome.index:03d}: exit_code={outcome.exit_code} "
                f"events={outcome.executed_events} wall_s={outcome.wall_s:.6f} "
                f"speedup={speedup:.1f}"
            )
            if outcome.error:
                lines.append(f"run {outcome.index:03d} error: {outcome.error}")
            if outcome.final_states:
                states = " ".join(
                    f"{name}={value:016x}" for name, value in outcome.final_states.items()
                )
                lines.append(f"run {outcome.index:03d} states: {states}")
        lines.append("")
        return "\n".join(lines)


def _speedup(sim_duration_ns: int, wall_s: float) -> float:
    return (sim_duration_ns / 1e9) / max(wall_s, 1e-9)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        job = load_config(args.config)
        if args.jitter_max_ms is not None:
            job = replace(job, jitter_max_s=args.jitter_max_ms / 1000.0)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except DetsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sim_duration_ns = job.duration.ns if job.duration is not None else 0

    worker = partial(_execute_run, str(args.config), args.jitter_max_ms)
    wall_start = time.perf_counter()
    if args.parallel > 1 and args.runs > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            outcomes = list(pool.map(worker, range(args.runs)))
    else:
        outcomes = [worker(index) for index in range(args.runs)]
    total_wall_s = time.perf_counter() - wall_start

    try:
        trace_dir = Path(args.trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for outcome in outcomes:
            (trace_dir / f"run_{outcome.index:03d}.trace").write_bytes(outcome.trace_data)
    except OSError as exc:
        print(f"error: cannot write traces: {exc}", file=sys.stderr)
        return EXIT_IO

    all_ok = all(outcome.exit_code == EXIT_OK for outcome in outcomes)
    all_identical = all_ok
    divergence = None
    if all_ok:
        for outcome in outcomes[1:]:
            div = trace_mod.compare(outcomes[0].trace_data, outcome.trace_data)
            if div is not None:
                all_identical = False
                divergence = (outcome.index, div)
                break

    if not all_ok:
        exit_code = next(o.exit_code for o in outcomes if o.exit_code != EXIT_OK)
    elif not all_identical:
        exit_code = EXIT_DIVERGENCE
    else:
        exit_code = EXIT_OK

    report = RunReport(
        runs=args.runs,
        sim_duration_ns=sim_duration_ns,
        jitter_max_ms=args.jitter_max_ms if args.jitter_max_ms is not None else job.jitter_max_s * 1000.0,
        all_identical=all_identical,
        trace_digest=trace_mod.digest(outcomes[0].trace_data) if all_identical else None,
        exit_code=exit_code,
        overall_speedup=_speedup(sim_duration_ns * args.runs, total_wall_s),
        outcomes=outcomes,
    )
    report_path = trace_dir / "report.txt"
    report_path.write_text(report.to_text(), encoding="ascii")

    for outcome in outcomes:
        line = (
            f"run {outcome.index:03d}: exit_code={outcome.exit_code} "
            f"events={outcome.executed_events} wall_s={outcome.wall_s:.6f} "
            f"speedup={_speedup(sim_duration_ns, outcome.wall_s):.1f}"
        )
        print(line)
        if outcome.error:
            print(f"run {outcome.index:03d} error: {outcome.error}")
    if divergence is not None:
        index, div = divergence
        print(f"divergence: run 000 vs run {index:03d} at line {div.line}")
    print(
        f"runs: {args.runs}  all_identical: {'true' if all_identical else 'false'}  "
        f"overall_speedup: {report.overall_speedup:.1f}x"
    )
    print(f"report: {report_path}")
    return exit_code


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        left = Path(args.a).read_bytes()
        right = Path(args.b).read_bytes()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    div = trace_mod.compare(left, right, strict_header=args.strict_header)
    if div is None:
        print("identical")
        return EXIT_OK
    print(f"divergence at line {div.line}")
    print(f"  left:  {div.left if div.left is not None else '<end of trace>'}")
    print(f"  right: {div.right if div.right is not None else '<end of trace>'}")
    return EXIT_DIVERGENCE


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detsim",
        description="Deterministic discrete-event simulation of callback node graphs.",
    )
    parser.add_argument("--version", action="version", version=f"detsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured job one or more times")
    run.add_argument("--config", required=True, help="YAML job configuration")
    run.add_argument("--runs", type=_positive_int, default=1, help="number of repeat runs")
    run.add_argument("--trace-dir", required=True, help="directory for traces and report.txt")
    run.add_argument(
        "--jitter-max-ms",
        type=float,
        default=None,
        help="override the config's wall-clock callback jitter bound",
    )
    run.add_argument(
        "--parallel",
        type=_positive_int,
        default=1,
        help="run up to this many jobs in parallel processes",
    )
    run.set_defaults(func=cmd_run)

    compare = sub.add_parser("compare", help="byte-compare two trace files")
    compare.add_argument("a")
    compare.add_argument("b")
    compare.add_argument(
        "--strict-header",
        action="store_true",
        help="also require identical header lines",
    )
    compare.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
