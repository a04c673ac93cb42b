"""
Convergence measurements on traces: gap series, exponent fits, the all-t rate
envelope and a weak decay check, plus CSV and gnuplot data files.

Gaps stay exact for rational games; logarithms and the least-squares fit are
the only floating-point stages.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import re
from collections.abc import Sequence
from fractions import Fraction

import numpy as np
from tqdm import tqdm

from .config import Config
from .data_types import (
    EpochRecord,
    ExponentFit,
    GapSample,
    GapSeries,
    PayoffMatrix,
    SampleGrid,
    SampleMode,
    Trace,
)
from .engine import Replay, exact_ratio
from .exceptions import InsufficientSamplesError, TraceParseError
from .trace_io import read_text

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "gap_num", "gap_den", "normalized_gap_float")
_EPOCH_MARKER = re.compile(r"^epoch\s+\d+\b")


def geometric_times(horizon: int, ratio: float) -> list[int]:
    """Distinct times ceil(ratio^k) in [1, horizon], always ending at ``horizon``."""
    if horizon < 1:
        return []
    count = int(math.floor(math.log(horizon) / math.log(ratio))) + 2
    grid = np.unique(np.ceil(ratio ** np.arange(count, dtype=float)).astype(np.int64))
    times = [int(t) for t in grid if 1 <= t <= horizon]
    if not times or times[-1] != horizon:
        times.append(horizon)
    return times


def epoch_times(trace: Trace) -> list[int]:
    """Step counts of every 'epoch ...' annotation with t >= 1."""
    times = sorted({a.t for a in trace.annotations if a.t >= 1 and _EPOCH_MARKER.match(a.text)})
    return [t for t in times if t <= len(trace.steps)]


def sample_times(trace: Trace, grid: SampleGrid) -> list[int]:
    horizon = len(trace.steps)
    if grid.mode == SampleMode.EVERY:
        return list(range(1, horizon + 1))
    if grid.mode == SampleMode.EPOCHS:
        times = epoch_times(trace)
        if not times:
            logger.warning("Trace has no epoch annotations; the epoch series is empty")
        return times
    assert grid.ratio is not None
    return geometric_times(horizon, grid.ratio)


def gap_series(
    matrix: PayoffMatrix,
    trace: Trace,
    grid: SampleGrid | None = None,
    progress: bool = False,
) -> GapSeries:
    """Replay a (valid) trace and sample max V(t) - min U(t) at the requested times."""
    grid = grid or SampleGrid()
    wanted = sample_times(trace, grid)
    replay = Replay(matrix, tolerance=trace.header.tolerance)
    samples: list[GapSample] = []
    cursor = 0
    with tqdm(total=len(trace.steps), desc="Sampling", unit="step", disable=not progress) as pbar:
        for i, j in trace.steps:
            if cursor >= len(wanted):
                break
            replay.apply(i, j)
            pbar.update(1)
            if replay.t == wanted[cursor]:
                gap = replay.gap()
                samples.append(GapSample(t=replay.t, gap=gap, normalized_gap=exact_ratio(gap, replay.t)))
                cursor += 1
    return GapSeries(samples=samples)


def gap_series_from_epochs(n: int, epochs: Sequence[tuple[int, int]]) -> GapSeries:
    """Epoch-start samples t = n*T_i with gap G_i, straight from (T_i, G_i) pairs."""
    samples = [GapSample(t=n * t_i, gap=g_i, normalized_gap=Fraction(g_i, n * t_i)) for t_i, g_i in epochs]
    return GapSeries(samples=samples)


def gap_series_from_records(n: int, records: Sequence[EpochRecord]) -> GapSeries:
    return gap_series_from_epochs(n, [(record.T, record.G) for record in records])


def _usable(series: GapSeries, t_min: int | None, t_max: int | None) -> list[GapSample]:
    return [s for s in series.within(t_min, t_max) if s.normalized_gap > 0]


def fit_exponent(series: GapSeries, t_min: int | None = None, t_max: int | None = None) -> ExponentFit:
    """Least squares of log(normalized gap) on log(t) over samples in [t_min, t_max] with a positive gap."""
    samples = _usable(series, t_min, t_max)
    if len(samples) < 3:
        raise InsufficientSamplesError("fit_exponent", 3, len(samples))

    x = np.log(np.array([s.t for s in samples], dtype=float))
    y = np.array([math.log(s.normalized_gap) for s in samples], dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    sxx = float(np.sum((x - x.mean()) ** 2))
    dof = len(samples) - 2
    stderr = math.sqrt(float(np.sum(residuals**2)) / dof / sxx) if sxx > 0 else float("inf")
    fit = ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        stderr=stderr,
        t_min=samples[0].t,
        t_max=samples[-1].t,
        sample_count=len(samples),
    )
    logger.debug("Fitted slope %.6f over %s samples in [%s, %s]", fit.slope, fit.sample_count, fit.t_min, fit.t_max)
    return fit


def rate_envelope(n: int, series: GapSeries) -> tuple[float, float]:
    """(min, max) of gap(t) / t^((n-1)/n) over samples with t >= n and a positive gap."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    candidates = [s for s in series.samples if s.t >= n]
    positive = [s for s in candidates if s.gap > 0]
    dropped = len(candidates) - len(positive)
    if dropped:
        logger.warning("Dropped %s zero-gap sample(s) from the rate envelope", dropped)
    if not positive:
        raise InsufficientSamplesError("rate_envelope", 1, 0)
    exponent = (n - 1) / n
    ratios = [float(s.gap) / s.t**exponent for s in positive]
    return min(ratios), max(ratios)


def _geometric_mean(values: list[float]) -> float:
    return float(np.exp(np.mean(np.log(values))))


def robinson_sanity(matrix: PayoffMatrix | None, series: GapSeries) -> bool:
    """True iff the normalized gap over the last decade is below the first decade's (geometric means).

    The series must span at least two decades of t. Known upper bounds decay
    like t^(-1/(m+n-2)) with unknown constants, so only the trend is tested.
    """
    samples = series.samples
    if not samples:
        raise InsufficientSamplesError("robinson_sanity", 2, 0)
    first_t, last_t = samples[0].t, samples[-1].t
    decades = math.log10(last_t / first_t)
    if decades < 2:
        raise InsufficientSamplesError("robinson_sanity (decades spanned)", 2, int(decades))
    if matrix is not None:
        logger.debug("Robinson exponent for %sx%s: -1/%s", matrix.rows, matrix.cols, max(matrix.rows + matrix.cols - 2, 1))

    first = [s.normalized_float for s in samples if s.t < first_t * 10]
    last = [s.normalized_float for s in samples if s.t * 10 > last_t]
    first_pos = [value for value in first if value > 0]
    last_pos = [value for value in last if value > 0]
    if len(last_pos) < len(last):
        # some sample in the last decade reached a zero gap
        return bool(first_pos)
    if not first_pos:
        return False
    return _geometric_mean(last_pos) < _geometric_mean(first_pos)


def _format_float(value: float, precision: int | None = None) -> str:
    precision = Config.FLOAT_PRECISION if precision is None else precision
    return f"{value:.{precision}e}"


def write_gap_csv(series: GapSeries, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for sample in series.samples:
            gap = Fraction(sample.gap)
            writer.writerow([sample.t, gap.numerator, gap.denominator, _format_float(sample.normalized_float)])
    logger.info("Wrote %s gap samples to %s", len(series), path)
    return path


def read_gap_csv(path: str) -> GapSeries:
    """Read a gap CSV; normalized gaps are recomputed exactly from the gap columns."""
    samples: list[GapSample] = []
    with io.StringIO(read_text(path), newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise TraceParseError(1, f"expected CSV header '{','.join(CSV_COLUMNS)}'")
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise TraceParseError(line_number, f"expected {len(CSV_COLUMNS)} columns, got {len(row)}")
            try:
                t = int(row[0])
                gap = Fraction(int(row[1]), int(row[2]))
            except (ValueError, ZeroDivisionError) as exc:
                raise TraceParseError(line_number, str(exc)) from None
            if t < 1:
                raise TraceParseError(line_number, f"t must be positive, got {t}")
            samples.append(GapSample(t=t, gap=gap, normalized_gap=gap / t))
    try:
        return GapSeries(samples=samples)
    except ValueError as exc:
        raise TraceParseError(len(samples) + 1, f"invalid series: {exc}") from None


def write_plot_data(series: GapSeries, prefix: str, fit: ExponentFit | None = None) -> tuple[str, str]:
    """Write ``<prefix>.dat`` (t, normalized gap) and a gnuplot script ``<prefix>.gp`` that plots it log-log."""
    dat_path = f"{prefix}.dat"
    gp_path = f"{prefix}.gp"
    directory = os.path.dirname(dat_path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(dat_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("# t normalized_gap\n")
        for sample in series.samples:
            handle.write(f"{sample.t} {_format_float(sample.normalized_float)}\n")

    data_name = os.path.basename(dat_path)
    lines = [
        "set logscale xy",
        "set xlabel 't'",
        "set ylabel '(max V - min U) / t'",
        "set key top right",
    ]
    plot = f"plot '{data_name}' using 1:2 with points title 'normalized gap'"
    if fit is not None:
        lines.append(f"f(x) = exp({fit.intercept!r}) * x**({fit.slope!r})")
        plot += f", f(x) with lines title 'slope {fit.slope:.4f}'"
    lines.append(plot)
    with open(gp_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    logger.info("Wrote plot data to %s and %s", dat_path, gp_path)
    return dat_path, gp_path
