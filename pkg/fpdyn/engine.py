"""
Fictitious play as the vector system (U, V) over an arbitrary payoff matrix.

At step t+1 the row player picks i with V_i(t) = max V(t) and the column
player picks j with U_j(t) = min U(t); then U += row i of A and V += column j
of A. Both players respond to the same pre-step state. Indices are 1-based.
"""
from __future__ import annotations

import logging
from collections.abc import Iterable
from fractions import Fraction

from tqdm import tqdm

from .config import Config
from .data_types import DynamicState, PayoffMatrix, Scalar, Side, Trace, TraceHeader
from .exceptions import DimensionMismatchError, InvalidChoiceError, PolicyContractError
from .tie_breaking import TieBreakPolicy

logger = logging.getLogger(__name__)


def _argmax_set(values: list[Scalar], tolerance: float | None) -> tuple[int, ...]:
    top = max(values)
    if tolerance is None:
        return tuple(k + 1 for k, value in enumerate(values) if value == top)
    return tuple(k + 1 for k, value in enumerate(values) if value >= top - tolerance)


def _argmin_set(values: list[Scalar], tolerance: float | None) -> tuple[int, ...]:
    bottom = min(values)
    if tolerance is None:
        return tuple(k + 1 for k, value in enumerate(values) if value == bottom)
    return tuple(k + 1 for k, value in enumerate(values) if value <= bottom + tolerance)


def exact_ratio(numerator: Scalar, denominator: int) -> Scalar:
    if isinstance(numerator, float):
        return numerator / denominator
    return Fraction(numerator) / denominator


class Replay:
    """Mutable accumulator for U, V and play counts; the fast path behind every replay.

    ``play`` certifies a choice against the current tie sets before applying it,
    ``apply`` trusts the caller.
    """

    def __init__(self, matrix: PayoffMatrix, tolerance: float | None = None):
        self.matrix = matrix
        self.m = matrix.rows
        self.n = matrix.cols
        self.tolerance: float | None = None
        if matrix.is_float:
            self.tolerance = Config.tie_tolerance() if tolerance is None else tolerance
        zero: Scalar = 0.0 if matrix.is_float else 0
        self.t = 0
        self.u: list[Scalar] = [zero] * self.n
        self.v: list[Scalar] = [zero] * self.m
        self.row_counts = [0] * self.m
        self.col_counts = [0] * self.n
        self._identity = matrix.is_identity
        self._rows = [list(row) for row in matrix.entries]
        self._cols = [list(matrix.column(j)) for j in range(1, self.n + 1)]

    @classmethod
    def from_state(cls, state: DynamicState, matrix: PayoffMatrix, tolerance: float | None = None) -> Replay:
        check_dimensions(state, matrix)
        replay = cls(matrix, tolerance=tolerance)
        replay.t = state.t
        replay.u = list(state.u)
        replay.v = list(state.v)
        replay.row_counts = list(state.row_counts)
        replay.col_counts = list(state.col_counts)
        return replay

    def tie_sets(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return _argmax_set(self.v, self.tolerance), _argmin_set(self.u, self.tolerance)

    def row_is_best(self, i: int) -> bool:
        if self.tolerance is None:
            return self.v[i - 1] == max(self.v)
        return self.v[i - 1] >= max(self.v) - self.tolerance

    def col_is_best(self, j: int) -> bool:
        if self.tolerance is None:
            return self.u[j - 1] == min(self.u)
        return self.u[j - 1] <= min(self.u) + self.tolerance

    def apply(self, i: int, j: int) -> None:
        if self._identity:
            self.u[i - 1] += 1
            self.v[j - 1] += 1
        else:
            u, v = self.u, self.v
            for k, a in enumerate(self._rows[i - 1]):
                u[k] += a
            for k, a in enumerate(self._cols[j - 1]):
                v[k] += a
        self.row_counts[i - 1] += 1
        self.col_counts[j - 1] += 1
        self.t += 1

    def play(self, i: int, j: int) -> None:
        if not 1 <= i <= self.m:
            raise DimensionMismatchError("row index", f"1..{self.m}", i)
        if not 1 <= j <= self.n:
            raise DimensionMismatchError("column index", f"1..{self.n}", j)
        if not self.row_is_best(i):
            raise InvalidChoiceError(self.t + 1, Side.ROW.value, i, self.tie_sets()[0])
        if not self.col_is_best(j):
            raise InvalidChoiceError(self.t + 1, Side.COL.value, j, self.tie_sets()[1])
        self.apply(i, j)

    def gap(self) -> Scalar:
        return max(self.v) - min(self.u)

    def snapshot(self) -> DynamicState:
        return DynamicState(
            t=self.t,
            u=tuple(self.u),
            v=tuple(self.v),
            row_counts=tuple(self.row_counts),
            col_counts=tuple(self.col_counts),
        )


def check_dimensions(state: DynamicState, matrix: PayoffMatrix) -> None:
    if len(state.u) != matrix.cols:
        raise DimensionMismatchError("U", matrix.cols, len(state.u))
    if len(state.v) != matrix.rows:
        raise DimensionMismatchError("V", matrix.rows, len(state.v))


def best_response_sets(
    state: DynamicState,
    matrix: PayoffMatrix,
    tolerance: float | None = None,
) -> tuple[frozenset[int], frozenset[int]]:
    """Rows attaining max V and columns attaining min U (within ε for float games)."""
    check_dimensions(state, matrix)
    if matrix.is_float and tolerance is None:
        tolerance = Config.tie_tolerance()
    elif not matrix.is_float:
        tolerance = None
    rows = _argmax_set(list(state.v), tolerance)
    cols = _argmin_set(list(state.u), tolerance)
    return frozenset(rows), frozenset(cols)


def _choose(replay: Replay, policy: TieBreakPolicy) -> tuple[int, int]:
    row_ties, col_ties = replay.tie_sets()
    i, j = policy.choose(replay.u, replay.v, replay.matrix, row_ties, col_ties)
    if i not in row_ties:
        raise PolicyContractError(policy.name, Side.ROW.value, i, row_ties)
    if j not in col_ties:
        raise PolicyContractError(policy.name, Side.COL.value, j, col_ties)
    return i, j


def step(state: DynamicState, matrix: PayoffMatrix, policy: TieBreakPolicy) -> DynamicState:
    replay = Replay.from_state(state, matrix)
    i, j = _choose(replay, policy)
    replay.apply(i, j)
    return replay.snapshot()


def step_scripted(state: DynamicState, matrix: PayoffMatrix, i: int, j: int) -> DynamicState:
    """Advance by the given choice, or raise InvalidChoiceError if it is not a best response."""
    replay = Replay.from_state(state, matrix)
    replay.play(i, j)
    return replay.snapshot()


def run(
    matrix: PayoffMatrix,
    policy: TieBreakPolicy,
    steps: int,
    progress: bool = False,
) -> tuple[Trace, DynamicState]:
    if steps < 0:
        raise ValueError("steps must be non-negative")
    replay = Replay(matrix)
    choices: list[tuple[int, int]] = []
    with tqdm(total=steps, desc="Simulating", unit="step", disable=not progress) as pbar:
        for _ in range(steps):
            i, j = _choose(replay, policy)
            replay.apply(i, j)
            choices.append((i, j))
            pbar.update(1)
    header = TraceHeader.for_matrix(matrix, policy=policy.name, seed=policy.seed, tolerance=replay.tolerance)
    logger.debug("Ran %s steps of %s on a %sx%s game", steps, policy.name, matrix.rows, matrix.cols)
    return Trace(header=header, steps=choices), replay.snapshot()


def replay_steps(matrix: PayoffMatrix, steps: Iterable[tuple[int, int]], certify: bool = True) -> DynamicState:
    """Replay choices from the zero state, certifying each one unless ``certify`` is off."""
    replay = Replay(matrix)
    advance = replay.play if certify else replay.apply
    for i, j in steps:
        advance(i, j)
    return replay.snapshot()


def normalized_gap(state: DynamicState, matrix: PayoffMatrix) -> Scalar:
    """(max V - min U) / t, i.e. the duality gap of the empirical strategies."""
    check_dimensions(state, matrix)
    if state.t == 0:
        raise ValueError("the normalized gap is undefined at t = 0")
    return exact_ratio(max(state.v) - min(state.u), state.t)


def payoff_bounds(state: DynamicState, matrix: PayoffMatrix) -> tuple[Scalar, Scalar, Scalar]:
    """(min_j x^T A e_j, x^T A y, max_i e_i^T A y) for the empirical strategies at t >= 1."""
    check_dimensions(state, matrix)
    if state.t == 0:
        raise ValueError("empirical strategies are undefined at t = 0")
    t = state.t
    total: Scalar = sum(
        state.row_counts[i] * a * state.col_counts[j]
        for i, row in enumerate(matrix.entries)
        for j, a in enumerate(row)
    )
    lower = exact_ratio(min(state.u), t)
    upper = exact_ratio(max(state.v), t)
    value = total / (t * t) if isinstance(total, float) else Fraction(total) / (t * t)
    return lower, value, upper
