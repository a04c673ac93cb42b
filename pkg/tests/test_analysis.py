import math
import os
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpdyn.analysis import (
    epoch_times,
    fit_exponent,
    gap_series,
    gap_series_from_epochs,
    gap_series_from_records,
    geometric_times,
    rate_envelope,
    read_gap_csv,
    robinson_sanity,
    write_gap_csv,
    write_plot_data,
)
from fpdyn.constructions import epoch_series, main_dynamic, main_i2
from fpdyn.data_types import GapSample, GapSeries, PayoffMatrix, SampleGrid, SampleMode
from fpdyn.engine import run
from fpdyn.exceptions import InsufficientSamplesError, TraceParseError
from fpdyn.tie_breaking import get_policy


def _power_law(exponent, times):
    return GapSeries(samples=[GapSample(t=t, gap=t ** (1 + exponent), normalized_gap=t**exponent) for t in times])


class TestSampling:
    def test_geometric_times(self):
        times = geometric_times(1000, 2.0)
        assert times[0] == 1
        assert times[-1] == 1000
        assert times == sorted(set(times))
        assert 512 in times

    def test_geometric_times_empty(self):
        assert geometric_times(0, 1.5) == []

    def test_main_i2_epoch_starts(self, i2):
        trace = main_i2(3).to_trace()
        assert epoch_times(trace) == [2, 12, 30]
        series = gap_series(i2, trace, SampleGrid(mode=SampleMode.EPOCHS))
        assert [s.t for s in series.samples] == [2, 12, 30]
        assert [s.normalized_gap for s in series.samples] == [1, Fraction(1, 4), Fraction(1, 6)]

    def test_every_step(self, i3):
        trace, _ = run(i3, get_policy("lexicographic"), 10)
        series = gap_series(i3, trace)
        assert [s.t for s in series.samples] == list(range(1, 11))
        assert series.samples[0].normalized_gap == 1

    def test_geometric_grid(self, i3):
        trace, _ = run(i3, get_policy("random", seed=1), 100)
        series = gap_series(i3, trace, SampleGrid(mode=SampleMode.GEOMETRIC, ratio=1.5))
        assert [s.t for s in series.samples] == geometric_times(100, 1.5)

    def test_epochs_without_annotations_is_empty(self, i3):
        trace, _ = run(i3, get_policy("lexicographic"), 10)
        assert len(gap_series(i3, trace, SampleGrid(mode=SampleMode.EPOCHS))) == 0

    def test_epoch_samples_match_records(self):
        schedule, records = main_dynamic(3, 10)
        replayed = gap_series(PayoffMatrix.identity(3), schedule.to_trace(), SampleGrid(mode=SampleMode.EPOCHS))
        from_records = gap_series_from_records(3, records)
        assert replayed == from_records
        for sample, record in zip(replayed.samples, records):
            assert sample.gap == record.G
            assert sample.normalized_gap == Fraction(record.G, 3 * record.T)

    def test_float_game_gaps_are_floats(self):
        matrix = PayoffMatrix(entries=((0.25, 0.75), (0.5, 0.125)))
        trace, _ = run(matrix, get_policy("lexicographic"), 20)
        series = gap_series(matrix, trace)
        assert all(isinstance(s.gap, float) for s in series.samples)


class TestFitExponent:
    def test_synthetic_power_law(self):
        fit = fit_exponent(_power_law(-0.5, geometric_times(10**6, 1.25)))
        assert fit.slope == pytest.approx(-0.5, abs=1e-9)
        assert fit.stderr < 1e-9

    @settings(max_examples=25, deadline=None)
    @given(exponent=st.floats(min_value=-1.5, max_value=-0.05))
    def test_recovers_any_exponent(self, exponent):
        fit = fit_exponent(_power_law(exponent, geometric_times(10**5, 1.5)))
        assert abs(fit.slope - exponent) <= 1e-6 * abs(exponent)

    def test_range_and_count(self):
        series = _power_law(-0.5, range(1, 101))
        fit = fit_exponent(series, 10, 50)
        assert (fit.t_min, fit.t_max, fit.sample_count) == (10, 50, 41)

    def test_needs_three_samples(self):
        with pytest.raises(InsufficientSamplesError):
            fit_exponent(_power_law(-0.5, [1, 2]))

    def test_zero_gaps_skipped(self):
        samples = [GapSample(t=t, gap=0, normalized_gap=0) for t in (1, 2, 3)]
        with pytest.raises(InsufficientSamplesError):
            fit_exponent(GapSeries(samples=samples))

    def test_main_i2_slope(self):
        series = gap_series_from_epochs(2, epoch_series(2, 600))
        fit = fit_exponent(series, 10**3, 10**6)
        assert -0.55 <= fit.slope <= -0.45

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_epoch_start_slope_is_minus_one_over_n(self, n):
        series = gap_series_from_epochs(n, epoch_series(n, 40))
        t_min = series.samples[4].t
        fit = fit_exponent(series, t_min)
        assert fit.sample_count == 36
        assert abs(fit.slope + 1 / n) <= 0.05

    def test_replayed_main_dynamic_slope(self):
        schedule, _ = main_dynamic(3, 20)
        series = gap_series(PayoffMatrix.identity(3), schedule.to_trace(), SampleGrid(mode=SampleMode.EPOCHS))
        fit = fit_exponent(series, series.samples[4].t)
        assert abs(fit.slope + 1 / 3) <= 0.05

    def test_summary_lines(self):
        fit = fit_exponent(_power_law(-0.5, [1, 4, 16, 64]))
        lines = fit.summary_lines(3)
        assert lines[0] == "slope=-0.500"
        assert lines[-1] == "sample_count=4"


class TestRateEnvelope:
    def test_main_i2_levels(self):
        low, high = rate_envelope(2, gap_series_from_epochs(2, epoch_series(2, 50)))
        assert 0.70 < low <= high < 1

    def test_main_dynamic_all_t(self):
        schedule, _ = main_dynamic(3, 12)
        series = gap_series(PayoffMatrix.identity(3), schedule.to_trace())
        low, high = rate_envelope(3, series)
        assert 0 < low <= high
        assert high / low < 10

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [2, 4])
    def test_every_step_stays_in_band(self, n):
        schedule = main_i2(60) if n == 2 else main_dynamic(4, 12)[0]
        series = gap_series(PayoffMatrix.identity(n), schedule.to_trace())
        assert len(series) == len(schedule)
        low, high = rate_envelope(n, series)
        assert 0 < low <= high
        assert high / low < 10

    def test_zero_gaps_dropped_with_warning(self, caplog):
        samples = [
            GapSample(t=3, gap=0, normalized_gap=0),
            GapSample(t=4, gap=2, normalized_gap=Fraction(1, 2)),
        ]
        low, high = rate_envelope(2, GapSeries(samples=samples))
        assert low == high == pytest.approx(1.0)
        assert "zero-gap" in caplog.text

    def test_empty_series(self):
        with pytest.raises(InsufficientSamplesError):
            rate_envelope(3, GapSeries())


class TestRobinsonSanity:
    def test_main_i2_decays(self):
        series = gap_series_from_epochs(2, epoch_series(2, 500))
        assert robinson_sanity(PayoffMatrix.identity(2), series.model_copy(update={"samples": series.within(100, 10**6)}))

    def test_constant_gap_is_false(self):
        series = GapSeries(samples=[GapSample(t=t, gap=t, normalized_gap=1) for t in geometric_times(10**4, 1.5)])
        assert not robinson_sanity(None, series)

    def test_needs_two_decades(self):
        with pytest.raises(InsufficientSamplesError):
            robinson_sanity(None, _power_law(-0.5, range(1, 50)))

    def test_random_ties_on_i3(self, i3):
        trace, _ = run(i3, get_policy("random", seed=11), 10**4)
        series = gap_series(i3, trace, SampleGrid(mode=SampleMode.GEOMETRIC, ratio=1.25))
        assert robinson_sanity(i3, series)


class TestFiles:
    def test_csv_round_trip(self, temp_dir):
        series = gap_series(PayoffMatrix.identity(2), main_i2(4).to_trace())
        path = write_gap_csv(series, os.path.join(temp_dir, "gaps.csv"))
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        assert lines[0] == "t,gap_num,gap_den,normalized_gap_float"
        assert lines[1] == "1,1,1,1.000000000000e+00"
        assert read_gap_csv(path) == series

    def test_empty_csv_has_header_only(self, temp_dir):
        path = write_gap_csv(GapSeries(), os.path.join(temp_dir, "empty.csv"))
        with open(path, encoding="utf-8") as handle:
            assert handle.read() == "t,gap_num,gap_den,normalized_gap_float\n"

    def test_bad_csv_header(self, temp_dir):
        path = os.path.join(temp_dir, "bad.csv")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("t,gap\n1,1\n")
        with pytest.raises(TraceParseError):
            read_gap_csv(path)

    def test_bad_csv_row(self, temp_dir):
        path = os.path.join(temp_dir, "bad.csv")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("t,gap_num,gap_den,normalized_gap_float\n1,1,0,0.5\n")
        with pytest.raises(TraceParseError) as exc_info:
            read_gap_csv(path)
        assert exc_info.value.line_number == 2

    def test_invalid_utf8_csv(self, temp_dir):
        path = os.path.join(temp_dir, "binary.csv")
        with open(path, "wb") as handle:
            handle.write(b"t,gap_num,gap_den,normalized_gap_float\n1,1,1,1.0\n2,\xff,1,0.5\n")
        with pytest.raises(TraceParseError) as exc_info:
            read_gap_csv(path)
        assert exc_info.value.line_number == 3

    def test_plot_files(self, temp_dir):
        series = _power_law(-0.5, [1, 4, 16, 64])
        fit = fit_exponent(series)
        dat, gp = write_plot_data(series, os.path.join(temp_dir, "plots", "fig"), fit)
        with open(dat, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        assert lines[0] == "# t normalized_gap"
        assert lines[2].startswith("4 5.0")
        with open(gp, encoding="utf-8") as handle:
            script = handle.read()
        assert "set logscale xy" in script
        assert "plot 'fig.dat'" in script
        assert math.isfinite(fit.slope)
