import threading

import pytest

from fpdyn.constructions import (
    V1_HIGH,
    V1_LOW,
    canonical_order,
    construct_main,
    epoch_series,
    main_dynamic,
    main_i2,
    padding_i2,
    padding_in,
    part2,
    part2_gap,
)
from fpdyn.data_types import PayoffMatrix
from fpdyn.engine import Replay, replay_steps
from fpdyn.exceptions import ConstructionError


def _final(schedule):
    return replay_steps(PayoffMatrix.identity(schedule.n), schedule.steps)


def _states(schedule):
    replay = Replay(PayoffMatrix.identity(schedule.n))
    states = {0: (tuple(replay.u), tuple(replay.v))}
    for i, j in schedule.steps:
        replay.play(i, j)
        states[replay.t] = (tuple(replay.u), tuple(replay.v))
    return states


class TestPaddingI2:
    def test_left_padding_dynamic(self):
        schedule = padding_i2(3, V1_HIGH)
        assert schedule.steps == [(1, 2), (2, 2), (2, 1), (2, 1), (1, 1), (1, 1)]
        final = _final(schedule)
        assert final.u == (3, 3)
        assert final.v == (4, 2)

    def test_right_padding_dynamic(self):
        schedule = padding_i2(2, V1_LOW)
        assert schedule.steps == [(1, 1), (1, 2), (2, 2), (2, 2)]
        final = _final(schedule)
        assert final.u == (2, 2)
        assert final.v == (1, 3)

    def test_k5(self):
        final = _final(padding_i2(5))
        assert final.u == (5, 5)
        assert sorted(final.v) == [4, 6]

    @pytest.mark.parametrize("k", range(1, 16))
    @pytest.mark.parametrize("orientation", [V1_LOW, V1_HIGH])
    def test_terminal_state(self, k, orientation):
        schedule = padding_i2(k, orientation)
        assert len(schedule) == 2 * k
        final = _final(schedule)
        assert final.u == (k, k)
        expected = (k - 1, k + 1) if orientation == V1_LOW else (k + 1, k - 1)
        assert final.v == expected

    @pytest.mark.parametrize("k,orientation", [(0, V1_LOW), (1, "sideways")])
    def test_bad_arguments(self, k, orientation):
        with pytest.raises(ConstructionError):
            padding_i2(k, orientation)


class TestMainI2:
    def test_matches_reference_steps(self, main_i2_steps):
        assert main_i2(3).steps == main_i2_steps

    @pytest.mark.parametrize(
        "t,u,v",
        [(2, (1, 1), (0, 2)), (12, (6, 6), (9, 3)), (30, (15, 15), (10, 20))],
    )
    def test_known_states(self, t, u, v):
        assert _states(main_i2(3))[t] == (u, v)

    def test_level_states(self):
        target = 12
        schedule = main_i2(target)
        assert len(schedule) == 2 * target * (2 * target - 1)
        states = _states(schedule)
        for k in range(1, target + 1):
            t = 2 * k * (2 * k - 1)
            u, v = states[t]
            half = k * (2 * k - 1)
            assert u == (half, half)
            high, low = (k + 1) * (2 * k - 1), (k - 1) * (2 * k - 1)
            assert v == ((low, high) if k % 2 == 1 else (high, low))

    @pytest.mark.slow
    def test_level_states_up_to_500(self):
        target = 500
        levels = {2 * k * (2 * k - 1): k for k in range(1, target + 1)}
        replay = Replay(PayoffMatrix.identity(2))
        seen = []
        for i, j in main_i2(target).steps:
            replay.play(i, j)
            k = levels.get(replay.t)
            if k is None:
                continue
            half, gap = k * (2 * k - 1), 2 * k - 1
            assert replay.u == [half, half]
            assert replay.v == ([half - gap, half + gap] if k % 2 == 1 else [half + gap, half - gap])
            seen.append(k)
        assert seen == list(range(1, target + 1))
        assert replay.v == [500499, 498501]

    def test_epoch_annotations(self):
        texts = [a.text for a in main_i2(3).annotations]
        assert texts == ["epoch 1 t=2 T=1 G=1", "epoch 2 t=12 T=6 G=3", "epoch 3 t=30 T=15 G=5"]

    def test_bad_target(self):
        with pytest.raises(ConstructionError):
            main_i2(0)


class TestPaddingIn:
    def test_first_padding_dynamic_n3(self):
        schedule = padding_in(3, 3, canonical=False)
        assert schedule.steps == [(1, 2), (2, 3), (3, 3), (3, 1), (3, 1), (1, 2), (2, 2), (2, 1), (1, 1)]
        final = _final(schedule)
        assert final.u == (3, 3, 3)
        assert final.v == (4, 3, 2)

    def test_second_padding_dynamic_n4(self):
        schedule = padding_in(4, 2, canonical=False)
        assert schedule.steps == [(1, 1), (1, 2), (2, 3), (3, 4), (4, 4), (4, 2), (2, 3), (3, 3)]
        assert _final(schedule).v == (1, 2, 3, 2)

    def test_first_padding_dynamic_n5_after_one_block(self):
        final = _final(padding_in(5, 3, canonical=False))
        assert final.u == (3, 3, 3, 3, 3)
        assert final.v == (3, 3, 4, 3, 2)

    @pytest.mark.parametrize("k,v", [(1, (0, 1, 2)), (2, (1, 2, 3)), (3, (2, 3, 4))])
    def test_small_n3_examples(self, k, v):
        final = _final(padding_in(3, k))
        assert final.u == (k, k, k)
        assert final.v == v

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    @pytest.mark.parametrize("k", range(1, 12))
    def test_canonical_terminal_state(self, n, k):
        schedule = padding_in(n, k)
        assert len(schedule) == n * k
        final = _final(schedule)
        assert final.u == (k,) * n
        assert final.v == (k - 1,) + (k,) * (n - 2) + (k + 1,)

    @pytest.mark.parametrize("n", [3, 4, 5])
    @pytest.mark.parametrize("k", range(1, 8))
    def test_raw_is_a_relabeling(self, n, k):
        raw = _final(padding_in(n, k, canonical=False))
        assert sorted(raw.v) == [k - 1] + [k] * (n - 2) + [k + 1]

    @pytest.mark.parametrize("n,k", [(2, 1), (3, 0)])
    def test_bad_arguments(self, n, k):
        with pytest.raises(ConstructionError):
            padding_in(n, k)


class TestCanonicalOrder:
    def test_stable_ascending(self):
        assert canonical_order([3, 3, 4, 3, 2]) == (5, 1, 2, 4, 3)


class TestPart2:
    def test_n2_t3(self):
        schedule = part2(2, 3)
        assert len(schedule) == 6
        final = _final(schedule)
        assert final.u == (3, 3)
        assert final.v == (2, 4)
        assert part2_gap(2, 3) == 1

    def test_n2_t6(self):
        final = _final(part2(2, 6))
        assert final.u == (6, 6)
        assert max(final.v) - min(final.u) == 3 == part2_gap(2, 6)

    def test_n2_t1(self):
        final = _final(part2(2, 1))
        assert final.u == (1, 1)
        assert max(final.v) - 1 == 1

    def test_n3_t1_is_three_steps(self):
        schedule = part2(3, 1)
        assert len(schedule) == 3
        assert _final(schedule).u == (1, 1, 1)

    @pytest.mark.parametrize("n,t_max", [(2, 60), (3, 45), (4, 25)])
    def test_terminal_gap_and_box(self, n, t_max):
        for t in range(1, t_max + 1):
            schedule = part2(n, t)
            assert len(schedule) == n * t
            replay = Replay(PayoffMatrix.identity(n))
            for i, j in schedule.steps:
                replay.play(i, j)
                assert max(replay.u) <= t
            assert replay.u == [t] * n
            assert replay.gap() == part2_gap(n, t)

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_targets_up_to_ten_thousand(self, n):
        for t in range(200, 10_001, 200):
            schedule = part2(n, t)
            assert len(schedule) == n * t
            replay = Replay(PayoffMatrix.identity(n))
            for i, j in schedule.steps:
                replay.play(i, j)
            assert replay.u == [t] * n
            assert replay.gap() == part2_gap(n, t)

    @pytest.mark.parametrize("n,t", [(1, 3), (2, 0)])
    def test_bad_arguments(self, n, t):
        with pytest.raises(ConstructionError):
            part2(n, t)
        with pytest.raises(ConstructionError):
            part2_gap(n, t)


class TestMainDynamic:
    def test_single_epoch_is_padding(self):
        for n in (3, 4, 5):
            schedule, records = main_dynamic(n, 1)
            assert schedule.steps == padding_in(n, 1).steps
            assert len(records) == 1
            assert records[0].G == 1
            assert records[0].S is None

    def test_first_epoch_transition_n3(self):
        schedule, records = main_dynamic(3, 2)
        first = records[0]
        assert (first.P, first.Q, first.R) == (1, (0, 1, 2), 3)
        assert first.S == (2, 4)

        states = _states(schedule)
        u, v = states[6]
        sigma = first.sigma
        assert tuple(u[p - 1] for p in sigma) == (1, 1, 4)
        assert tuple(v[p - 1] for p in sigma) == (2, 2, 2)

        u, v = states[12]
        assert u == (4, 4, 4)
        assert sorted(v) == [2, 4, 6]
        assert (records[1].T, records[1].G, records[1].t_start) == (4, 2, 12)

    def test_annotations(self):
        schedule, _ = main_dynamic(3, 3)
        assert [(a.t, a.text) for a in schedule.annotations] == [
            (3, "epoch 1 t=3 T=1 G=1"),
            (3, "phase A t=3"),
            (6, "phase B t=6"),
            (12, "epoch 2 t=12 T=4 G=2"),
            (12, "phase A t=12"),
            (18, "phase B t=18"),
            (30, "epoch 3 t=30 T=10 G=5"),
        ]

    @pytest.mark.parametrize("n,epochs", [(3, 12), (4, 8), (5, 6)])
    def test_records_match_series_and_replay(self, n, epochs):
        schedule, records = main_dynamic(n, epochs)
        assert [(r.T, r.G) for r in records] == epoch_series(n, epochs)
        assert len(schedule) == n * records[-1].T

        states = _states(schedule)
        for record in records:
            u, v = states[record.t_start]
            assert u == (record.P,) * n
            assert sum(v) == sum(u) == record.t_start
            assert max(v) - min(u) == record.G
            assert tuple(v[p - 1] for p in record.sigma) == record.Q

    def test_bad_arguments(self):
        with pytest.raises(ConstructionError):
            main_dynamic(2, 3)
        with pytest.raises(ConstructionError):
            main_dynamic(3, 0)

    def test_construct_main_dispatch(self, main_i2_steps):
        schedule, records = construct_main(2, 3)
        assert schedule.steps == main_i2_steps
        assert records is None
        schedule, records = construct_main(3, 2)
        assert len(records) == 2


class TestEpochSeries:
    def test_known_values(self):
        assert epoch_series(3, 12) == [
            (1, 1), (4, 2), (10, 5), (25, 10), (55, 17), (106, 26),
            (184, 37), (295, 50), (445, 65), (640, 84), (892, 105), (1207, 128),
        ]
        assert epoch_series(4, 10) == [
            (1, 1), (5, 3), (17, 8), (49, 18), (121, 35), (261, 61), (505, 98), (897, 148), (1489, 213), (2341, 297),
        ]
        assert epoch_series(5, 8) == [(1, 1), (6, 4), (26, 12), (86, 30), (236, 65), (561, 126), (1191, 224), (2311, 372)]

    def test_i2_levels(self):
        assert epoch_series(2, 3) == [(1, 1), (6, 3), (15, 5)]

    def test_recurrence(self):
        series = epoch_series(4, 30)
        for (t_i, g_i), (t_next, g_next) in zip(series, series[1:]):
            assert t_next == t_i + 4 * g_i
            assert g_next == g_i + part2_gap(3, 4 * g_i)

    def test_monotone(self):
        series = epoch_series(3, 30)
        assert all(b[0] > a[0] and b[1] > a[1] for a, b in zip(series, series[1:]))

    @pytest.mark.parametrize("n", [3, 4])
    def test_growth_is_polynomial(self, n):
        series = epoch_series(n, 50)
        g_ratios = [series[i - 1][1] / i ** (n - 1) for i in range(5, 51)]
        t_ratios = [series[i - 1][0] / i**n for i in range(5, 51)]
        for ratios in (g_ratios, t_ratios):
            assert min(ratios) > 0
            assert max(ratios) / min(ratios) < 4

    def test_prefix_consistency(self):
        assert epoch_series(3, 40)[:10] == epoch_series(3, 10)

    def test_concurrent_calls_agree(self):
        results = []

        def worker():
            results.append(epoch_series(4, 25))

        threads = [threading.Thread(target=worker) for _ in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(result == results[0] for result in results)

    def test_bad_arguments(self):
        with pytest.raises(ConstructionError):
            epoch_series(3, 0)
