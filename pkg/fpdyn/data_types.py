from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import Any, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import MAX_U64

Scalar = Union[int, Fraction, float]


def as_scalar(value: Any) -> Scalar:
    """Normalize a payoff-like value to int, Fraction or float (strings like '3/4' allowed)."""
    if isinstance(value, bool):
        raise ValueError("booleans are not payoff values")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("payoff values must be finite")
        return value
    if isinstance(value, str):
        text = value.strip()
        try:
            parsed = Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a rational number: {value!r}") from None
        return parsed.numerator if parsed.denominator == 1 else parsed
    raise ValueError(f"unsupported payoff value type: {type(value).__name__}")


class Side(str, Enum):
    """Which player a choice belongs to."""
    ROW = "row"
    COL = "col"


class PayoffMatrix(BaseModel):
    """m x n payoff matrix of the row player; exact unless some entry is a float."""
    model_config = ConfigDict(frozen=True)

    entries: tuple[tuple[Any, ...], ...] = Field(description="Row-major payoff entries a_ij")

    @field_validator("entries", mode="before")
    @classmethod
    def _normalize_entries(cls, value: Any) -> tuple[tuple[Scalar, ...], ...]:
        rows = tuple(tuple(as_scalar(entry) for entry in row) for row in value)
        if not rows:
            raise ValueError("matrix must have at least one row")
        width = len(rows[0])
        if width == 0:
            raise ValueError("matrix must have at least one column")
        if any(len(row) != width for row in rows):
            raise ValueError("all matrix rows must have the same length")
        return rows

    @classmethod
    def identity(cls, n: int) -> PayoffMatrix:
        if n < 1:
            raise ValueError("identity size must be at least 1")
        return cls(entries=tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def from_flat(cls, m: int, n: int, values: list[Any]) -> PayoffMatrix:
        if m < 1 or n < 1:
            raise ValueError("matrix dimensions must be positive")
        if len(values) != m * n:
            raise ValueError(f"expected {m * n} entries for a {m}x{n} matrix, got {len(values)}")
        return cls(entries=tuple(tuple(values[i * n:(i + 1) * n]) for i in range(m)))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def is_float(self) -> bool:
        return any(isinstance(entry, float) for row in self.entries for entry in row)

    @property
    def is_identity(self) -> bool:
        if self.rows != self.cols:
            return False
        return all(
            entry == (1 if i == j else 0) and not isinstance(entry, float)
            for i, row in enumerate(self.entries)
            for j, entry in enumerate(row)
        )

    def descriptor(self) -> str:
        return f"identity:{self.rows}" if self.is_identity else "inline"

    def row(self, i: int) -> tuple[Scalar, ...]:
        """Row ``i`` (1-based)."""
        return self.entries[i - 1]

    def column(self, j: int) -> tuple[Scalar, ...]:
        """Column ``j`` (1-based)."""
        return tuple(row[j - 1] for row in self.entries)


class DynamicState(BaseModel):
    """Vectors U (length n) and V (length m) after t steps, plus the play counts behind them."""
    model_config = ConfigDict(frozen=True)

    t: int = Field(ge=0, description="Number of steps played")
    u: tuple[Any, ...] = Field(description="Accumulated row-player payoff per column, t * x(t)^T A")
    v: tuple[Any, ...] = Field(description="Accumulated column-player loss per row, t * A y(t)")
    row_counts: tuple[int, ...] = Field(description="How often each row was played")
    col_counts: tuple[int, ...] = Field(description="How often each column was played")

    @model_validator(mode="after")
    def _check_counts(self) -> DynamicState:
        if len(self.row_counts) != len(self.v):
            raise ValueError("row_counts must have one entry per component of V")
        if len(self.col_counts) != len(self.u):
            raise ValueError("col_counts must have one entry per component of U")
        if any(c < 0 for c in self.row_counts) or any(c < 0 for c in self.col_counts):
            raise ValueError("play counts must be non-negative")
        if sum(self.row_counts) != self.t or sum(self.col_counts) != self.t:
            raise ValueError("play counts must each sum to t")
        return self

    @classmethod
    def zero(cls, matrix: PayoffMatrix) -> DynamicState:
        zero: Scalar = 0.0 if matrix.is_float else 0
        return cls(
            t=0,
            u=(zero,) * matrix.cols,
            v=(zero,) * matrix.rows,
            row_counts=(0,) * matrix.rows,
            col_counts=(0,) * matrix.cols,
        )


class PolicyKind(str, Enum):
    """Supported tie-breaking rules."""
    LEXICOGRAPHIC = "lexicographic"
    SEEDED_RANDOM = "random"
    GREEDY_GAP = "greedy-gap"
    SCRIPTED = "scripted"


class PolicySpec(BaseModel):
    """Serializable description of a tie-breaking policy."""
    kind: PolicyKind = Field(default=PolicyKind.LEXICOGRAPHIC, description="Tie-breaking rule")
    seed: int | None = Field(None, ge=0, le=MAX_U64, description="64-bit seed for the random rule")

    @model_validator(mode="after")
    def _check_seed(self) -> PolicySpec:
        if self.kind == PolicyKind.SEEDED_RANDOM and self.seed is None:
            raise ValueError("the random policy needs a seed")
        return self


class Annotation(BaseModel):
    """Comment attached to a trace after ``t`` steps (e.g. an epoch or phase boundary)."""
    t: int = Field(ge=0)
    text: str

    def render(self) -> str:
        return f"# {self.text}"


class TraceHeader(BaseModel):
    m: int = Field(ge=1, description="Number of rows")
    n: int = Field(ge=1, description="Number of columns")
    matrix: str = Field(description="'identity:<n>' or 'inline'")
    policy: str = Field(default=PolicyKind.SCRIPTED.value, description="Policy name that produced the trace")
    seed: int | None = Field(None, ge=0, le=MAX_U64)
    entries: tuple[Any, ...] | None = Field(None, description="Row-major entries for inline matrices")
    tolerance: float | None = Field(None, ge=0.0, description="Tie tolerance used by float-mode matrices")
    master_seed: int | None = Field(None, ge=0, le=MAX_U64, description="Master seed the run's streams were split from")
    run_index: int | None = Field(None, ge=0, description="Spawn index of the run under master_seed")

    @model_validator(mode="after")
    def _check_matrix(self) -> TraceHeader:
        if (self.master_seed is None) != (self.run_index is None):
            raise ValueError("master seed and run index are recorded together")
        if self.matrix.startswith("identity:"):
            try:
                size = int(self.matrix.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad identity descriptor: {self.matrix}") from None
            if size != self.m or size != self.n:
                raise ValueError("identity size must match m and n")
            if self.entries is not None:
                raise ValueError("identity matrices carry no inline entries")
        elif self.matrix == "inline":
            if self.entries is None or len(self.entries) != self.m * self.n:
                raise ValueError("inline matrices need exactly m*n entries")
        else:
            raise ValueError(f"unknown matrix descriptor: {self.matrix}")
        return self

    @classmethod
    def for_matrix(
        cls,
        matrix: PayoffMatrix,
        policy: str = PolicyKind.SCRIPTED.value,
        seed: int | None = None,
        tolerance: float | None = None,
    ) -> TraceHeader:
        descriptor = matrix.descriptor()
        entries = None
        if descriptor == "inline":
            entries = tuple(entry for row in matrix.entries for entry in row)
        return cls(
            m=matrix.rows,
            n=matrix.cols,
            matrix=descriptor,
            policy=policy,
            seed=seed,
            entries=entries,
            tolerance=tolerance if matrix.is_float else None,
        )

    def to_matrix(self) -> PayoffMatrix:
        if self.matrix == "inline":
            assert self.entries is not None
            return PayoffMatrix.from_flat(self.m, self.n, list(self.entries))
        return PayoffMatrix.identity(self.n)


class Trace(BaseModel):
    """Ordered (i_t, j_t) choices (1-based) sufficient to replay a dynamic."""
    header: TraceHeader
    steps: list[tuple[int, int]] = Field(default_factory=list)
    annotations: list[Annotation] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_steps(self) -> Trace:
        m, n = self.header.m, self.header.n
        for t, (i, j) in enumerate(self.steps, start=1):
            if not 1 <= i <= m or not 1 <= j <= n:
                raise ValueError(f"step {t} choice ({i}, {j}) is outside a {m}x{n} game")
        return self

    def __len__(self) -> int:
        return len(self.steps)


class Schedule(BaseModel):
    """A certified trace on the identity game I_n, with optional boundary markers."""
    n: int = Field(ge=2, description="Dimension of the identity game")
    steps: list[tuple[int, int]] = Field(default_factory=list)
    annotations: list[Annotation] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def to_trace(self, policy: str = PolicyKind.SCRIPTED.value) -> Trace:
        header = TraceHeader(m=self.n, n=self.n, matrix=f"identity:{self.n}", policy=policy)
        return Trace(header=header, steps=list(self.steps), annotations=list(self.annotations))


class EpochRecord(BaseModel):
    """Bookkeeping at the start of one epoch of the main dynamic for I_n."""
    index: int = Field(ge=1, description="Epoch number i")
    t_start: int = Field(description="Step count n*T_i at the start of the epoch")
    P: int = Field(description="Common value of every U component at the epoch start")
    Q: tuple[int, ...] = Field(description="V at the epoch start, sorted ascending")
    R: int = Field(description="Phase A length n*(Q_n - P)")
    S: tuple[int, ...] | None = Field(None, description="Final V of the embedded part-2 dynamic (absent for the last epoch)")
    T: int = Field(description="T_i = t_start / n")
    G: int = Field(description="Gap max V - min U at the epoch start")
    sigma: tuple[int, ...] = Field(description="sigma[c-1] is the physical index of canonical coordinate c")

    @model_validator(mode="after")
    def _check_identities(self) -> EpochRecord:
        n = len(self.Q)
        if list(self.Q) != sorted(self.Q):
            raise ValueError("Q must be sorted ascending")
        if n * self.P != sum(self.Q):
            raise ValueError("n*P must equal the sum of Q")
        if self.G != self.Q[-1] - self.P or self.R != n * self.G:
            raise ValueError("G must equal Q_n - P and R must equal n*G")
        if self.t_start != n * self.T or self.T != self.P:
            raise ValueError("t_start must equal n*T and T must equal P")
        if self.S is not None and (len(self.S) != n - 1 or sum(self.S) != (n - 1) * self.R):
            raise ValueError("S must have n-1 components summing to (n-1)*R")
        if sorted(self.sigma) != list(range(1, n + 1)):
            raise ValueError("sigma must be a permutation of 1..n")
        return self


class StepViolation(BaseModel):
    t: int = Field(ge=1, description="1-based step whose choice is invalid")
    side: Side
    chosen_index: int
    tie_set: tuple[int, ...]


class ValidationReport(BaseModel):
    ok: bool
    steps_checked: int = Field(ge=0)
    first_violation: StepViolation | None = None
    structural_checks: dict[str, bool] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_ok(self) -> ValidationReport:
        expected = self.first_violation is None and all(self.structural_checks.values())
        if self.ok != expected:
            raise ValueError("ok must hold exactly when there is no violation and every structural check passes")
        return self

    def summary(self) -> str:
        lines = [
            f"ok={'true' if self.ok else 'false'}",
            f"steps_checked={self.steps_checked}",
        ]
        if self.first_violation is not None:
            violation = self.first_violation
            ties = ",".join(str(i) for i in violation.tie_set)
            lines.append(
                f"first_violation=t:{violation.t} side:{violation.side.value} "
                f"index:{violation.chosen_index} tie_set:{{{ties}}}"
            )
        for name, passed in sorted(self.structural_checks.items()):
            lines.append(f"check.{name}={'pass' if passed else 'fail'}")
        return "\n".join(lines)


class GapSample(BaseModel):
    t: int = Field(ge=1)
    gap: Any = Field(description="max V(t) - min U(t), exact for rational games")
    normalized_gap: Any = Field(description="gap / t")

    @field_validator("gap", "normalized_gap", mode="before")
    @classmethod
    def _scalar(cls, value: Any) -> Scalar:
        return as_scalar(value)

    @property
    def normalized_float(self) -> float:
        return float(self.normalized_gap)


class GapSeries(BaseModel):
    samples: list[GapSample] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_increasing(self) -> GapSeries:
        for previous, current in zip(self.samples, self.samples[1:]):
            if current.t <= previous.t:
                raise ValueError("sample times must be strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.samples)

    def within(self, t_min: int | None = None, t_max: int | None = None) -> list[GapSample]:
        return [
            s for s in self.samples
            if (t_min is None or s.t >= t_min) and (t_max is None or s.t <= t_max)
        ]


class SampleMode(str, Enum):
    EVERY = "every"
    EPOCHS = "epochs"
    GEOMETRIC = "geometric"


class SampleGrid(BaseModel):
    mode: SampleMode = SampleMode.EVERY
    ratio: float | None = Field(None, gt=1.0, description="Growth factor of the geometric grid")

    @model_validator(mode="after")
    def _check_ratio(self) -> SampleGrid:
        if self.mode == SampleMode.GEOMETRIC and self.ratio is None:
            raise ValueError("a geometric grid needs a ratio > 1")
        return self


class ExponentFit(BaseModel):
    slope: float
    intercept: float
    stderr: float
    t_min: int
    t_max: int
    sample_count: int = Field(ge=3)

    def summary_lines(self, precision: int = 12) -> list[str]:
        return [
            f"slope={self.slope:.{precision}f}",
            f"intercept={self.intercept:.{precision}f}",
            f"stderr={self.stderr:.{precision}f}",
            f"t_min={self.t_min}",
            f"t_max={self.t_max}",
            f"sample_count={self.sample_count}",
        ]


class GameKind(str, Enum):
    IDENTITY = "identity"
    UNIFORM = "uniform"


class GameSpec(BaseModel):
    kind: GameKind = GameKind.IDENTITY
    m: int = Field(default=3, ge=1)
    n: int = Field(default=3, ge=1)
    seed: int | None = Field(None, ge=0, le=MAX_U64, description="Seed for uniform[0,1] entries")

    @model_validator(mode="after")
    def _check_game(self) -> GameSpec:
        if self.kind == GameKind.IDENTITY and self.m != self.n:
            raise ValueError("identity games are square")
        return self


class ExperimentConfig(BaseModel):
    """Everything needed to reproduce one simulation run."""
    game: GameSpec = Field(default_factory=GameSpec)
    policy: PolicySpec = Field(default_factory=PolicySpec)
    steps: int = Field(default=100_000, ge=0)
    grid_ratio: float = Field(default=1.25, gt=1.0)
    run_index: int = Field(default=0, ge=0, description="Index used to split the master seed")
    trace_out: str | None = None
    csv_out: str | None = None
