"""
Exact slow schedules for identity games I_n.

Every schedule here is replayed through ``Replay.play`` while it is built, so
a schedule that comes back at all is a certified dynamic. Dimensions are the
actual sizes of the identity game; blocks of the padding dynamics are written
in a canonical frame where V = [k-1, k, ..., k, k+1] and are mapped to
physical indices through a stable ascending sort of V.
"""
from __future__ import annotations

import bisect
import logging
import math
import threading
from collections.abc import Sequence

from .data_types import Annotation, EpochRecord, PayoffMatrix, Schedule
from .engine import Replay
from .exceptions import ConstructionError

logger = logging.getLogger(__name__)

Steps = list[tuple[int, int]]

V1_LOW = "v1-low"
V1_HIGH = "v1-high"
ORIENTATIONS = (V1_LOW, V1_HIGH)

# I_2 padding: odd k starts from the first two steps of the left dynamic,
# even k from the first four of the right one. Both advance k by 2 per block.
I2_ODD_SEED: tuple[tuple[int, int], ...] = ((1, 2), (2, 2))
I2_EVEN_SEED: tuple[tuple[int, int], ...] = ((1, 1), (1, 2), (2, 2), (2, 2))
I2_BLOCK: tuple[tuple[int, int], ...] = ((2, 1), (2, 1), (1, 1), (1, 1))


def _odd_seed(n: int) -> Steps:
    """U(n) = [1, ..., 1], V(n) = [0, 1, ..., 1, 2]."""
    return [(t, t + 1) for t in range(1, n)] + [(n, n)]


def _odd_block(n: int) -> Steps:
    """k -> k+2 in 2n steps, starting and ending in the canonical pattern (up to relabeling)."""
    return (
        [(n, 1), (n, 1)]
        + [(s, s + 1) for s in range(1, n - 1)]
        + [(n - 1, n - 1), (n - 1, 1)]
        + [(s, s + 1) for s in range(1, n - 2)]
        + [(n - 2, n - 2)]
    )


def _even_seed(n: int) -> Steps:
    """U(2n) = [2, ..., 2], V(2n) = [1, 2, ..., 2, 3, 2]."""
    return (
        [(1, 1), (1, 2)]
        + [(t - 1, t) for t in range(3, n + 1)]
        + [(n, n), (n, 2)]
        + [(s + 1, s + 2) for s in range(1, n - 2)]
        + [(n - 1, n - 1)]
    )


def _even_block(n: int) -> Steps:
    """Second padding dynamic's k -> k+2 block, with n-1 and n swapped into the canonical frame. Needs n >= 4."""
    return (
        [(n, 1), (n, n - 1), (n - 1, 1)]
        + [(s, s + 1) for s in range(1, n - 2)]
        + [(n - 2, n - 2), (n - 2, n - 1), (n - 1, 1)]
        + [(s, s + 1) for s in range(1, n - 3)]
        + [(n - 3, n - 3)]
    )


def canonical_order(v: Sequence[int]) -> tuple[int, ...]:
    """Physical indices sorted by ascending V (stable): entry c-1 is canonical coordinate c."""
    return tuple(sorted(range(1, len(v) + 1), key=lambda p: v[p - 1]))


def _relabel(steps: Steps, order: Sequence[int]) -> Steps:
    """Rename physical index order[c-1] to c in every step."""
    position = {p: c for c, p in enumerate(order, start=1)}
    return [(position[i], position[j]) for i, j in steps]


def _padding_raw(n: int, k: int) -> tuple[Steps, Replay]:
    """Padding dynamic for I_n up to t = n*k, in its unrelabelled column order."""
    odd = k % 2 == 1
    if n == 2:
        seed: Steps = list(I2_ODD_SEED if odd else I2_EVEN_SEED)
        block: Steps = list(I2_BLOCK)
    elif odd:
        seed, block = _odd_seed(n), _odd_block(n)
    else:
        seed = _even_seed(n)
        block = _even_block(n) if n >= 4 else _odd_block(n)

    replay = Replay(PayoffMatrix.identity(n))
    steps: Steps = []
    for i, j in seed:
        replay.play(i, j)
        steps.append((i, j))
    for _ in range((k - (1 if odd else 2)) // 2):
        sigma = canonical_order(replay.v)
        for ci, cj in block:
            i, j = sigma[ci - 1], sigma[cj - 1]
            replay.play(i, j)
            steps.append((i, j))
    return steps, replay


def _padding_i2_steps(k: int, orientation: str) -> Steps:
    steps, replay = _padding_raw(2, k)
    low_first = replay.v[0] < replay.v[1]
    if low_first != (orientation == V1_LOW):
        steps = [(3 - i, 3 - j) for i, j in steps]
    return steps


def padding_i2(k: int, orientation: str = V1_LOW) -> Schedule:
    """2k steps ending at U = [k, k] and V = [k-1, k+1] (v1-low) or [k+1, k-1] (v1-high)."""
    if k < 1:
        raise ConstructionError("padding_i2", f"k must be at least 1, got {k}")
    if orientation not in ORIENTATIONS:
        raise ConstructionError("padding_i2", f"orientation must be one of {', '.join(ORIENTATIONS)}")
    return Schedule(n=2, steps=_padding_i2_steps(k, orientation))


def _padding_in_steps(n: int, k: int, canonical: bool = True) -> Steps:
    steps, replay = _padding_raw(n, k)
    if canonical:
        steps = _relabel(steps, canonical_order(replay.v))
    return steps


def padding_in(n: int, k: int, canonical: bool = True) -> Schedule:
    """n*k steps ending at U = [k, ..., k] and V = [k-1, k, ..., k, k+1].

    With ``canonical=False`` the schedule keeps the unrelabelled column order of the
    padding dynamics, and V ends in a permutation of that pattern.
    """
    if n < 3:
        raise ConstructionError("padding_in", f"n must be at least 3, got {n}")
    if k < 1:
        raise ConstructionError("padding_in", f"k must be at least 1, got {k}")
    return Schedule(n=n, steps=_padding_in_steps(n, k, canonical=canonical))


def _main_i2_steps(target_k: int, annotations: list[Annotation] | None = None) -> Steps:
    steps: Steps = list(I2_ODD_SEED)
    if annotations is not None:
        annotations.append(Annotation(t=2, text="epoch 1 t=2 T=1 G=1"))
    for k in range(1, target_k):
        # V's larger component is 2 at odd levels and 1 at even ones.
        a, b = (2, 1) if k % 2 == 1 else (1, 2)
        steps.append((a, a))
        steps.extend([(a, b)] * (4 * k))
        steps.extend([(b, b)] * (4 * k + 1))
        if annotations is not None:
            level = k + 1
            t = 2 * level * (2 * level - 1)
            annotations.append(
                Annotation(t=t, text=f"epoch {level} t={t} T={level * (2 * level - 1)} G={2 * level - 1}")
            )
    return steps


def main_i2(target_k: int) -> Schedule:
    """Main dynamic for I_2 through t = 2K(2K-1), with epoch markers at every t = 2k(2k-1)."""
    if target_k < 1:
        raise ConstructionError("main_i2", f"target_k must be at least 1, got {target_k}")
    annotations: list[Annotation] = []
    steps = _main_i2_steps(target_k, annotations)
    return Schedule(n=2, steps=steps, annotations=annotations)


_series_lock = threading.Lock()
_series_cache: dict[int, list[tuple[int, int]]] = {}


def _i2_level(t: int) -> int:
    """Largest k with k(2k-1) <= t."""
    k = (1 + math.isqrt(1 + 8 * t)) // 4
    while k * (2 * k - 1) > t:
        k -= 1
    while (k + 1) * (2 * k + 1) <= t:
        k += 1
    return k


def _extend_series(n: int, count: int | None = None, t_limit: int | None = None) -> list[tuple[int, int]]:
    """Grow the cached (T_i, G_i) list for I_n until it has ``count`` entries or passes ``t_limit``."""
    series = _series_cache.setdefault(n, [(1, 1)])

    def needs_more() -> bool:
        if count is not None and len(series) < count:
            return True
        return t_limit is not None and series[-1][0] <= t_limit

    while needs_more():
        t_i, g_i = series[-1]
        r = n * g_i
        series.append((t_i + r, g_i + _part2_gap_locked(n - 1, r)))
    return series


def _largest_epoch(n: int, t: int) -> int:
    """Largest epoch index k with T_k <= t for the main dynamic of I_n (n >= 3)."""
    series = _extend_series(n, t_limit=t)
    times = [entry[0] for entry in series]
    return bisect.bisect_right(times, t)


def _part2_gap_locked(n: int, t: int) -> int:
    if n == 2:
        return 2 * _i2_level(t) - 1
    k = _largest_epoch(n, t)
    return _series_cache[n][k - 1][1]


def part2_gap(n: int, t: int) -> int:
    """Exact final gap max V - min U of ``part2(n, t)``, without building the schedule."""
    if n < 2 or t < 1:
        raise ConstructionError("part2_gap", f"need n >= 2 and T >= 1, got n={n}, T={t}")
    with _series_lock:
        return _part2_gap_locked(n, t)


def epoch_series(n: int, count: int) -> list[tuple[int, int]]:
    """(T_i, G_i) for the first ``count`` epochs of the main dynamic for I_n, from the recurrence alone.

    For n = 2 the epochs are the levels t = 2k(2k-1) of the main dynamic for I_2.
    """
    if n < 2 or count < 1:
        raise ConstructionError("epoch_series", f"need n >= 2 and count >= 1, got n={n}, count={count}")
    if n == 2:
        return [(k * (2 * k - 1), 2 * k - 1) for k in range(1, count + 1)]
    with _series_lock:
        return list(_extend_series(n, count=count)[:count])


def _part2_steps(n: int, t: int) -> Steps:
    if n == 2:
        k = _i2_level(t)
        l = t - k * (2 * k - 1) + 1
        return _padding_i2_steps(l, V1_LOW) + _main_i2_steps(k)[2:]
    with _series_lock:
        k = _largest_epoch(n, t)
        t_k = _series_cache[n][k - 1][0]
    l = t - t_k + 1
    main_steps, _, _ = _main_dynamic_raw(n, k)
    return _padding_in_steps(n, l) + main_steps[n:]


def part2(n: int, t: int) -> Schedule:
    """n*T steps ending at U = [T, ..., T] with gap ``part2_gap(n, T)``."""
    if n < 2:
        raise ConstructionError("part2", f"n must be at least 2, got {n}")
    if t < 1:
        raise ConstructionError("part2", f"T must be at least 1, got {t}")
    return Schedule(n=n, steps=_part2_steps(n, t))


def _main_dynamic_raw(n: int, epochs: int) -> tuple[Steps, list[Annotation], list[EpochRecord]]:
    replay = Replay(PayoffMatrix.identity(n))
    steps: Steps = []
    annotations: list[Annotation] = []
    records: list[EpochRecord] = []

    def emit(i: int, j: int) -> None:
        replay.play(i, j)
        steps.append((i, j))

    for i, j in _odd_seed(n):
        emit(i, j)

    for index in range(1, epochs + 1):
        p = replay.u[0]
        sigma = canonical_order(replay.v)
        q = tuple(int(replay.v[c - 1]) for c in sigma)
        g = q[-1] - p
        r = n * g
        t_start = replay.t
        annotations.append(Annotation(t=t_start, text=f"epoch {index} t={t_start} T={p} G={g}"))
        logger.debug("I_%s epoch %s: t=%s P=%s Q=%s G=%s", n, index, t_start, p, q, g)
        if index == epochs:
            records.append(EpochRecord(index=index, t_start=t_start, P=p, Q=q, R=r, T=p, G=g, sigma=sigma))
            break

        # Phase A: U grows only at the canonical top, V is flattened up to Q_n.
        annotations.append(Annotation(t=replay.t, text=f"phase A t={replay.t}"))
        top = sigma[-1]
        for c in range(1, n):
            column = sigma[c - 1]
            for _ in range(q[-1] - q[c - 1]):
                emit(top, column)

        # Phase B: a part-2 dynamic for I_{n-1} on the first n-1 canonical coordinates.
        annotations.append(Annotation(t=replay.t, text=f"phase B t={replay.t}"))
        for ci, cj in _part2_steps(n - 1, r):
            emit(sigma[ci - 1], sigma[cj - 1])

        s = tuple(int(replay.v[sigma[c - 1] - 1]) - q[-1] for c in range(1, n))
        records.append(EpochRecord(index=index, t_start=t_start, P=p, Q=q, R=r, S=s, T=p, G=g, sigma=sigma))

    return steps, annotations, records


def main_dynamic(n: int, epochs: int) -> tuple[Schedule, list[EpochRecord]]:
    """Main dynamic for I_n (n >= 3) from t = 0 to the start of epoch ``epochs``."""
    if n < 3:
        raise ConstructionError("main_dynamic", f"n must be at least 3, got {n}")
    if epochs < 1:
        raise ConstructionError("main_dynamic", f"epochs must be at least 1, got {epochs}")
    steps, annotations, records = _main_dynamic_raw(n, epochs)
    logger.info("Built main dynamic for I_%s: %s epochs, %s steps", n, epochs, len(steps))
    return Schedule(n=n, steps=steps, annotations=annotations), records


def construct_main(n: int, count: int) -> tuple[Schedule, list[EpochRecord] | None]:
    """Main dynamic for any n >= 2: ``count`` is K for I_2 and the epoch count otherwise."""
    if n == 2:
        return main_i2(count), None
    return main_dynamic(n, count)
