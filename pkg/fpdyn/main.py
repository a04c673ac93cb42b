#!/usr/bin/env python3
"""
fpdyn - fictitious-play dynamics on zero-sum matrix games

Build certified slow schedules for identity games, simulate fictitious play
with a chosen tie-breaking rule, validate trace files and fit convergence
exponents.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from pydantic import ValidationError

from .analysis import (
    fit_exponent,
    gap_series,
    rate_envelope,
    read_gap_csv,
    write_gap_csv,
    write_plot_data,
)
from .config import Config
from .constructions import (
    ORIENTATIONS,
    V1_LOW,
    construct_main,
    epoch_series,
    padding_i2,
    padding_in,
    part2,
)
from .data_types import (
    EpochRecord,
    ExperimentConfig,
    GameKind,
    GameSpec,
    GapSeries,
    PayoffMatrix,
    PolicyKind,
    PolicySpec,
    SampleGrid,
    SampleMode,
    Schedule,
    Trace,
)
from .engine import replay_steps
from .exceptions import ConstructionError, FPDynError, InsufficientSamplesError, TraceParseError
from .experiment import run_batch
from .tie_breaking import get_supported_policies
from .trace_io import read_trace, write_trace
from .validator import validate_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _format_vector(values: tuple[object, ...] | list[object]) -> str:
    return "[" + ", ".join(str(v) for v in values) + "]"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpdyn",
        description="fpdyn - fictitious-play dynamics, slow schedules and convergence rates",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  fpdyn construct --n 2 --variant main --k 3 --out output/i2.trace
  fpdyn construct --n 4 --variant main --epochs 30
  fpdyn simulate --game uniform --m 5 --n 5 --game-seed 7 --steps 10000
  fpdyn simulate --n 3 --policy random --seed 42 --runs 4 --jobs 4
  fpdyn validate output/i2.trace
  fpdyn analyze output/main-3.trace --plot-prefix output/main-3
        """,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")
    subparsers = parser.add_subparsers(dest="command", required=True)

    construct = subparsers.add_parser("construct", help="Write a certified schedule for I_n")
    construct.add_argument("--n", type=int, required=True, help="Dimension of the identity game")
    construct.add_argument("--variant", choices=["main", "padding", "part2"], default="main")
    construct.add_argument("--k", type=int, help="Level K of the I_2 main dynamic, or k of a padding dynamic")
    construct.add_argument("--epochs", type=int, help="Number of epochs of the main dynamic (n >= 3)")
    construct.add_argument("--T", dest="T", type=int, help="Target T of a part-2 dynamic")
    construct.add_argument("--orientation", choices=ORIENTATIONS, default=V1_LOW, help="I_2 padding orientation")
    construct.add_argument("--raw", action="store_true", help="Keep the unrelabelled column order of padding dynamics")
    construct.add_argument("--out", help="Trace file path (default: output/<variant>-<n>.trace)")

    simulate = subparsers.add_parser("simulate", help="Run fictitious play with a tie-breaking policy")
    simulate.add_argument("--config", help="ExperimentConfig JSON file (flags below are then ignored)")
    simulate.add_argument("--game", choices=[kind.value for kind in GameKind], default=GameKind.IDENTITY.value)
    simulate.add_argument("--m", type=int, help="Rows of a uniform game (default: 5)")
    simulate.add_argument("--n", type=int, help="Columns, or the identity size (default: 3 / 5)")
    simulate.add_argument("--game-seed", type=int, help="Seed of the uniform[0,1] entries")
    simulate.add_argument("--policy", choices=get_supported_policies(), default=PolicyKind.LEXICOGRAPHIC.value)
    simulate.add_argument("--seed", type=int, help="Seed of the random policy, or master seed with --runs")
    simulate.add_argument("--steps", type=int, default=Config.DEFAULT_STEPS)
    simulate.add_argument("--grid-ratio", type=float, default=Config.DEFAULT_GRID_RATIO)
    simulate.add_argument("--runs", type=int, default=1, help="Number of seed-split runs")
    simulate.add_argument("--jobs", type=int, default=1, help=f"Worker processes (max {Config.MAX_JOBS})")
    simulate.add_argument("--trace-out", help="Trace file path")
    simulate.add_argument("--csv-out", help="Gap CSV path")

    validate = subparsers.add_parser("validate", help="Certify a trace file step by step")
    validate.add_argument("trace_file")
    validate.add_argument("--json", action="store_true", help="Print the report as JSON")

    analyze = subparsers.add_parser("analyze", help="Fit the decay exponent of a trace or gap CSV")
    analyze.add_argument("input", help="Trace file, or a CSV written by 'simulate --csv-out'")
    analyze.add_argument("--sample", choices=[mode.value for mode in SampleMode], help="Sampling of a trace")
    analyze.add_argument("--ratio", type=float, default=Config.DEFAULT_GRID_RATIO, help="Geometric grid ratio")
    analyze.add_argument("--t-min", type=int, help="Smallest t in the fit")
    analyze.add_argument("--t-max", type=int, help="Largest t in the fit")
    analyze.add_argument("--n", type=int, help="Dimension for the rate envelope (default: identity size)")
    analyze.add_argument("--csv-out", help="Also write the sampled series as CSV")
    analyze.add_argument("--plot-prefix", help="Write <prefix>.dat and <prefix>.gp")
    return parser


def _built_epochs(n: int, count: int, schedule: Schedule, records: list[EpochRecord] | None) -> list[tuple[int, int]]:
    """(T_i, G_i) measured on the built schedule; must agree with the recurrence."""
    if records is not None:
        built = [(record.T, record.G) for record in records]
    else:
        grid = SampleGrid(mode=SampleMode.EPOCHS)
        samples = gap_series(PayoffMatrix.identity(n), schedule.to_trace(), grid).samples
        built = [(sample.t // n, int(sample.gap)) for sample in samples]
    expected = epoch_series(n, count)
    if built != expected:
        raise FPDynError(f"Epochs of the built schedule {built} differ from the recurrence {expected}")
    return built


def _construct_schedule(parser: argparse.ArgumentParser, args: argparse.Namespace) -> tuple[Schedule, list[tuple[int, int]] | None]:
    if args.n < 2:
        parser.error("--n must be at least 2")
    if args.variant == "main":
        count = args.k if args.n == 2 else args.epochs
        if count is None:
            parser.error("--variant main needs --k for n = 2 and --epochs for n >= 3")
        schedule, records = construct_main(args.n, count)
        return schedule, _built_epochs(args.n, count, schedule, records)
    if args.variant == "padding":
        if args.k is None:
            parser.error("--variant padding needs --k")
        if args.n == 2:
            return padding_i2(args.k, args.orientation), None
        return padding_in(args.n, args.k, canonical=not args.raw), None
    if args.T is None:
        parser.error("--variant part2 needs --T")
    return part2(args.n, args.T), None


def cmd_construct(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    schedule, epochs = _construct_schedule(parser, args)
    out = args.out or os.path.join(Config.OUTPUT_DIR, f"{args.variant}-{args.n}.trace")
    trace = schedule.to_trace()
    write_trace(trace, out)

    final = replay_steps(PayoffMatrix.identity(args.n), schedule.steps)
    print(f"steps={final.t}")
    print(f"U={_format_vector(final.u)}")
    print(f"V={_format_vector(final.v)}")
    print(f"gap={max(final.v) - min(final.u)}")
    if epochs is not None:
        print("epoch t T G")
        for index, (t_i, g_i) in enumerate(epochs, start=1):
            print(f"{index} {args.n * t_i} {t_i} {g_i}")
    print(f"trace={out}")
    return EXIT_OK


def _experiment_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            return ExperimentConfig.model_validate_json(handle.read())
    if args.game == GameKind.UNIFORM.value:
        m, n = args.m or Config.DEFAULT_RANDOM_SHAPE[0], args.n or Config.DEFAULT_RANDOM_SHAPE[1]
    else:
        m = n = args.n or 3
    policy_seed = args.seed if args.policy == PolicyKind.SEEDED_RANDOM.value else None
    return ExperimentConfig(
        game=GameSpec(kind=args.game, m=m, n=n, seed=args.game_seed),
        policy=PolicySpec(kind=args.policy, seed=policy_seed),
        steps=args.steps,
        grid_ratio=args.grid_ratio,
        trace_out=args.trace_out,
        csv_out=args.csv_out,
    )


def cmd_simulate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    if args.runs < 1:
        parser.error("--runs must be at least 1")
    if not 1 <= args.jobs <= Config.MAX_JOBS:
        parser.error(f"--jobs must be between 1 and {Config.MAX_JOBS}")
    try:
        config = _experiment_config(parser, args)
    except (ValidationError, OSError) as exc:
        parser.error(f"invalid simulation config: {exc}")

    master = args.seed if args.runs > 1 else None
    if config.game.kind == GameKind.UNIFORM and config.game.seed is None and Config.resolve_seed(master) is None:
        parser.error("--game uniform needs --game-seed, a master seed (--runs > 1 with --seed) or FPDYN_SEED")
    results = run_batch(config, args.runs, jobs=args.jobs, master_seed=master)
    for result in results:
        last = result.series.samples[-1] if result.series.samples else None
        line = f"run={result.config.run_index} policy={result.config.policy.kind.value} steps={result.final_state.t}"
        if last is not None:
            line += f" normalized_gap={last.normalized_float:.{Config.FLOAT_PRECISION}e}"
        print(line)
    return EXIT_OK


def cmd_validate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    trace = read_trace(args.trace_file)
    report = validate_trace(None, trace, progress=args.verbose)
    print(report.model_dump_json() if args.json else report.summary())
    return EXIT_OK if report.ok else EXIT_FAILURE


def _load_series(args: argparse.Namespace) -> tuple[GapSeries, Trace | None]:
    if args.input.lower().endswith(".csv"):
        return read_gap_csv(args.input), None
    trace = read_trace(args.input)
    if args.sample:
        mode = SampleMode(args.sample)
    elif any(a.text.startswith("epoch ") for a in trace.annotations):
        mode = SampleMode.EPOCHS
    else:
        mode = SampleMode.GEOMETRIC
    grid = SampleGrid(mode=mode, ratio=args.ratio if mode == SampleMode.GEOMETRIC else None)
    return gap_series(trace.header.to_matrix(), trace, grid, progress=args.verbose), trace


def cmd_analyze(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    if args.ratio <= 1.0:
        parser.error("--ratio must be greater than 1")
    series, trace = _load_series(args)
    if args.csv_out:
        write_gap_csv(series, args.csv_out)

    fit = fit_exponent(series, args.t_min, args.t_max)
    for line in fit.summary_lines(Config.FLOAT_PRECISION):
        print(line)

    n = args.n
    if n is None and trace is not None and trace.header.matrix.startswith("identity:"):
        n = trace.header.n
    if n is not None:
        low, high = rate_envelope(n, series)
        print(f"c_low={low:.{Config.FLOAT_PRECISION}f}")
        print(f"c_high={high:.{Config.FLOAT_PRECISION}f}")

    if args.plot_prefix:
        dat_path, gp_path = write_plot_data(series, args.plot_prefix, fit)
        print(f"plot_data={dat_path}")
        print(f"plot_script={gp_path}")
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "analyze": cmd_analyze,
}


def main(argv: list[str] | None = None) -> None:
    parser = _build_parser()
    args = parser.parse_args(argv)

    log_level = logging.DEBUG if args.verbose else logging.INFO
    try:
        Config.initialize(configure_logging=True, log_level=log_level)
    except FPDynError as exc:
        parser.error(str(exc))

    try:
        code = COMMANDS[args.command](parser, args)
    except TraceParseError as exc:
        logger.error("Parse error: %s", exc.message)
        sys.exit(EXIT_USAGE)
    except ConstructionError as exc:
        logger.error("Invalid arguments: %s", exc.message)
        sys.exit(EXIT_USAGE)
    except InsufficientSamplesError as exc:
        logger.error("Not enough samples: %s", exc.message)
        sys.exit(EXIT_FAILURE)
    except FPDynError as exc:
        logger.error("fpdyn error: %s", exc)
        sys.exit(EXIT_FAILURE)
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        sys.exit(EXIT_FAILURE)
    except KeyboardInterrupt:
        logger.warning("Interrupted by user.")
        sys.exit(130)
    if code != EXIT_OK:
        sys.exit(code)


if __name__ == "__main__":
    main()
