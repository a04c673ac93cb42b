"""
Step-by-step certification of traces, plus the permutation closure and an
exhaustive reachability oracle for identity games.

Validation always replays from the zero vectors. Annotations are never read.
"""
from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Any

from tqdm import tqdm

from .config import Config
from .data_types import PayoffMatrix, Side, StepViolation, Trace, ValidationReport
from .engine import Replay
from .exceptions import DimensionMismatchError, FPDynError, InvalidChoiceError, NonIdentityMatrixError

logger = logging.getLogger(__name__)

IdentityState = tuple[tuple[int, ...], tuple[int, ...]]

SUM_CHECK = "sum_identity"
COUNT_CHECK = "count_reconstruction"


def _check_header(matrix: PayoffMatrix, trace: Trace) -> None:
    header = trace.header
    if (header.m, header.n) != (matrix.rows, matrix.cols):
        raise DimensionMismatchError("trace header", f"{matrix.rows}x{matrix.cols}", f"{header.m}x{header.n}")
    if header.to_matrix().entries != matrix.entries:
        raise FPDynError(f"Trace header matrix '{header.matrix}' does not match the given payoff matrix")


def reconstruct_payoffs(
    matrix: PayoffMatrix,
    row_counts: Sequence[int],
    col_counts: Sequence[int],
) -> tuple[list[Any], list[Any]]:
    """U = row_countsᵀ·A and V = A·col_counts, straight from the matrix entries."""
    entries = matrix.entries
    u = [sum(row_counts[i] * entries[i][j] for i in range(matrix.rows)) for j in range(matrix.cols)]
    v = [sum(entries[i][j] * col_counts[j] for j in range(matrix.cols)) for i in range(matrix.rows)]
    return u, v


def validate_trace(
    matrix: PayoffMatrix | None,
    trace: Trace,
    progress: bool = False,
) -> ValidationReport:
    """Replay ``trace`` against ``matrix`` (or the header's matrix) and report the first invalid step.

    ``steps_checked`` counts every step examined, including a failing one.
    """
    if matrix is None:
        matrix = trace.header.to_matrix()
    else:
        _check_header(matrix, trace)

    tolerance = trace.header.tolerance if matrix.is_float else None
    replay = Replay(matrix, tolerance=tolerance)
    identity = matrix.is_identity
    checks = {SUM_CHECK: True, COUNT_CHECK: True} if identity else {}
    row_counts = [0] * matrix.rows
    col_counts = [0] * matrix.cols
    violation: StepViolation | None = None

    checked = 0
    for i, j in tqdm(trace.steps, desc="Validating", unit="step", disable=not progress):
        checked += 1
        try:
            replay.play(i, j)
        except InvalidChoiceError as exc:
            violation = StepViolation(
                t=exc.t,
                side=Side(exc.side),
                chosen_index=exc.index,
                tie_set=tuple(sorted(exc.tie_set)),
            )
            break
        row_counts[i - 1] += 1
        col_counts[j - 1] += 1
        if identity and (sum(replay.u) != checked or sum(replay.v) != checked):
            checks[SUM_CHECK] = False

    if identity:
        u, v = reconstruct_payoffs(matrix, row_counts, col_counts)
        if u != replay.u or v != replay.v:
            checks[COUNT_CHECK] = False

    ok = violation is None and all(checks.values())
    if violation is not None:
        logger.info("Trace rejected at step %s (%s index %s)", violation.t, violation.side.value, violation.chosen_index)
    else:
        logger.debug("Validated %s steps", checked)
    return ValidationReport(ok=ok, steps_checked=checked, first_violation=violation, structural_checks=checks)


def _check_permutation(sigma: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(sigma)
    if len(perm) != n:
        raise DimensionMismatchError("permutation", n, len(perm))
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError(f"sigma must be a permutation of 1..{n}, got {perm}")
    return perm


def permute_trace(trace: Trace, sigma: Sequence[int]) -> Trace:
    """Relabel every choice (i, j) as (sigma(i), sigma(j)); only defined on identity games."""
    header = trace.header
    if not header.matrix.startswith("identity:"):
        raise NonIdentityMatrixError("permute_trace")
    perm = _check_permutation(sigma, header.n)
    steps = [(perm[i - 1], perm[j - 1]) for i, j in trace.steps]
    return Trace(header=header, steps=steps, annotations=list(trace.annotations))


def _successors(state: IdentityState) -> set[IdentityState]:
    u, v = state
    top = max(v)
    bottom = min(u)
    rows = [i for i, value in enumerate(v) if value == top]
    cols = [j for j, value in enumerate(u) if value == bottom]
    result: set[IdentityState] = set()
    for i in rows:
        new_u = list(u)
        new_u[i] += 1
        for j in cols:
            new_v = list(v)
            new_v[j] += 1
            result.add((tuple(new_u), tuple(new_v)))
    return result


def enumerate_reachable(n: int, horizon: int) -> list[frozenset[IdentityState]]:
    """Every (U, V) reachable on I_n, layered by t = 0..horizon (breadth-first).

    Raises FPDynError when the total number of states passes
    ``Config.EXHAUSTIVE_MAX_STATES``.
    """
    if n < 1 or horizon < 0:
        raise ValueError(f"need n >= 1 and horizon >= 0, got n={n}, horizon={horizon}")
    layer: set[IdentityState] = {((0,) * n, (0,) * n)}
    layers = [frozenset(layer)]
    total = 1
    for t in range(1, horizon + 1):
        layer = set().union(*(_successors(state) for state in layer))
        total += len(layer)
        if total > Config.EXHAUSTIVE_MAX_STATES:
            raise FPDynError(
                f"Reachable state space of I_{n} exceeds {Config.EXHAUSTIVE_MAX_STATES} states by t={t}"
            )
        layers.append(frozenset(layer))
    logger.debug("I_%s: %s reachable states up to t=%s", n, total, horizon)
    return layers


def max_gap_by_t(layers: Sequence[frozenset[IdentityState]]) -> list[int]:
    """Largest max V - min U over each layer of ``enumerate_reachable``."""
    return [max(max(v) - min(u) for u, v in layer) for layer in layers]
