from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence

import numpy as np

from .data_types import PayoffMatrix, PolicyKind, PolicySpec, Scalar
from .exceptions import FPDynError

logger = logging.getLogger(__name__)


def get_supported_policies() -> list[str]:
    return [kind.value for kind in PolicyKind]


class TieBreakPolicy(ABC):
    """Resolves the best-response tie sets of one step into a single (i, j) choice.

    Tie sets are sorted tuples of 1-based indices; the returned pair must be a
    member of ``row_ties x col_ties`` or the engine rejects the step.
    """

    kind: PolicyKind

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def seed(self) -> int | None:
        return None

    def spec(self) -> PolicySpec:
        return PolicySpec(kind=self.kind, seed=self.seed)

    @abstractmethod
    def choose(
        self,
        u: Sequence[Scalar],
        v: Sequence[Scalar],
        matrix: PayoffMatrix,
        row_ties: tuple[int, ...],
        col_ties: tuple[int, ...],
    ) -> tuple[int, int]:
        pass


class LexicographicPolicy(TieBreakPolicy):
    kind = PolicyKind.LEXICOGRAPHIC

    def choose(
        self,
        u: Sequence[Scalar],
        v: Sequence[Scalar],
        matrix: PayoffMatrix,
        row_ties: tuple[int, ...],
        col_ties: tuple[int, ...],
    ) -> tuple[int, int]:
        return row_ties[0], col_ties[0]


class SeededRandomPolicy(TieBreakPolicy):
    """Uniform choice inside each tie set; singleton sets consume no randomness."""

    kind = PolicyKind.SEEDED_RANDOM

    def __init__(self, seed: int):
        self._seed = seed
        self._rng = np.random.default_rng(seed)

    @property
    def seed(self) -> int | None:
        return self._seed

    def _pick(self, ties: tuple[int, ...]) -> int:
        if len(ties) == 1:
            return ties[0]
        return ties[int(self._rng.integers(len(ties)))]

    def choose(
        self,
        u: Sequence[Scalar],
        v: Sequence[Scalar],
        matrix: PayoffMatrix,
        row_ties: tuple[int, ...],
        col_ties: tuple[int, ...],
    ) -> tuple[int, int]:
        return self._pick(row_ties), self._pick(col_ties)


class GreedyGapPolicy(TieBreakPolicy):
    """Pick the pair maximizing max V(t+1) - min U(t+1); residual ties go lexicographic."""

    kind = PolicyKind.GREEDY_GAP

    def choose(
        self,
        u: Sequence[Scalar],
        v: Sequence[Scalar],
        matrix: PayoffMatrix,
        row_ties: tuple[int, ...],
        col_ties: tuple[int, ...],
    ) -> tuple[int, int]:
        best: tuple[int, int] | None = None
        best_gap: Scalar | None = None
        columns = {j: matrix.column(j) for j in col_ties}
        for i in row_ties:
            row = matrix.row(i)
            low = min(a + b for a, b in zip(u, row))
            for j in col_ties:
                high = max(a + b for a, b in zip(v, columns[j]))
                gap = high - low
                if best_gap is None or gap > best_gap:
                    best, best_gap = (i, j), gap
        assert best is not None
        return best


class ScriptedPolicy(TieBreakPolicy):
    """Replays a fixed list of (i, j) choices; the engine checks each against the tie sets."""

    kind = PolicyKind.SCRIPTED

    def __init__(self, steps: Iterable[tuple[int, int]]):
        self._steps = list(steps)
        self._position = 0

    @property
    def remaining(self) -> int:
        return len(self._steps) - self._position

    def choose(
        self,
        u: Sequence[Scalar],
        v: Sequence[Scalar],
        matrix: PayoffMatrix,
        row_ties: tuple[int, ...],
        col_ties: tuple[int, ...],
    ) -> tuple[int, int]:
        if self._position >= len(self._steps):
            raise FPDynError(f"Scripted policy exhausted after {len(self._steps)} steps")
        choice = self._steps[self._position]
        self._position += 1
        return choice


def get_policy(
    kind: str | PolicyKind,
    seed: int | None = None,
    script: Iterable[tuple[int, int]] | None = None,
) -> TieBreakPolicy:
    try:
        policy_kind = PolicyKind(kind.lower() if isinstance(kind, str) else kind)
    except ValueError:
        raise ValueError(f"Unknown policy: {kind}. Supported: {', '.join(get_supported_policies())}") from None

    if policy_kind == PolicyKind.SEEDED_RANDOM:
        if seed is None:
            raise ValueError("The random policy needs a seed")
        return SeededRandomPolicy(seed)
    if policy_kind == PolicyKind.GREEDY_GAP:
        return GreedyGapPolicy()
    if policy_kind == PolicyKind.SCRIPTED:
        if script is None:
            raise ValueError("The scripted policy needs a list of steps")
        return ScriptedPolicy(script)
    return LexicographicPolicy()


def policy_from_spec(spec: PolicySpec, script: Iterable[tuple[int, int]] | None = None) -> TieBreakPolicy:
    return get_policy(spec.kind, seed=spec.seed, script=script)
