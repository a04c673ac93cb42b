"""
Line-oriented trace files.

    fpdyn v1 m=<m> n=<n> matrix=<identity:n|inline> policy=<name> seed=<u64|none> [entries=...] [tolerance=...] [master=<u64> run=<k>]
    # free-form annotation (ignored by replay)
    <t> <i> <j>

Step numbers start at 1 and must be consecutive. Indices are 1-based.
"""
from __future__ import annotations

import logging
import os
from fractions import Fraction
from typing import Any

from pydantic import ValidationError

from .data_types import Annotation, Trace, TraceHeader
from .exceptions import TraceParseError

logger = logging.getLogger(__name__)

MAGIC = "fpdyn"
FORMAT_VERSION = "v1"
_REQUIRED_KEYS = ("m", "n", "matrix", "policy", "seed")


def _format_entry(value: Any) -> str:
    exact = Fraction(value)
    if exact.denominator == 1:
        return str(exact.numerator)
    return f"{exact.numerator}/{exact.denominator}"


def format_header(header: TraceHeader) -> str:
    seed = "none" if header.seed is None else str(header.seed)
    parts = [
        MAGIC,
        FORMAT_VERSION,
        f"m={header.m}",
        f"n={header.n}",
        f"matrix={header.matrix}",
        f"policy={header.policy}",
        f"seed={seed}",
    ]
    if header.entries is not None:
        parts.append("entries=" + ",".join(_format_entry(e) for e in header.entries))
    if header.tolerance is not None:
        parts.append(f"tolerance={header.tolerance!r}")
    if header.master_seed is not None:
        parts.append(f"master={header.master_seed}")
        parts.append(f"run={header.run_index}")
    return " ".join(parts)


def format_trace(trace: Trace) -> str:
    lines = [format_header(trace.header)]
    pending = sorted(trace.annotations, key=lambda a: a.t)
    cursor = 0
    for t, (i, j) in enumerate(trace.steps, start=1):
        while cursor < len(pending) and pending[cursor].t < t:
            lines.append(pending[cursor].render())
            cursor += 1
        lines.append(f"{t} {i} {j}")
    for annotation in pending[cursor:]:
        lines.append(annotation.render())
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(format_trace(trace))
    logger.info("Wrote %s steps to %s", len(trace.steps), path)
    return path


def parse_header(line: str) -> TraceHeader:
    tokens = line.split()
    if len(tokens) < 2 or tokens[0] != MAGIC:
        raise TraceParseError(1, f"expected header starting with '{MAGIC} {FORMAT_VERSION}'")
    if tokens[1] != FORMAT_VERSION:
        raise TraceParseError(1, f"unsupported format version '{tokens[1]}'")

    fields: dict[str, str] = {}
    for token in tokens[2:]:
        key, sep, value = token.partition("=")
        if not sep or not value:
            raise TraceParseError(1, f"malformed header field '{token}'")
        if key in fields:
            raise TraceParseError(1, f"duplicate header field '{key}'")
        fields[key] = value
    missing = [key for key in _REQUIRED_KEYS if key not in fields]
    if missing:
        raise TraceParseError(1, f"missing header field(s): {', '.join(missing)}")

    try:
        tolerance = float(fields["tolerance"]) if "tolerance" in fields else None
        entries: tuple[Any, ...] | None = None
        if "entries" in fields:
            exact = [Fraction(text) for text in fields["entries"].split(",")]
            if tolerance is not None:
                entries = tuple(float(e) for e in exact)
            else:
                entries = tuple(e.numerator if e.denominator == 1 else e for e in exact)
        seed_text = fields["seed"]
        return TraceHeader(
            m=int(fields["m"]),
            n=int(fields["n"]),
            matrix=fields["matrix"],
            policy=fields["policy"],
            seed=None if seed_text == "none" else int(seed_text),
            entries=entries,
            tolerance=tolerance,
            master_seed=int(fields["master"]) if "master" in fields else None,
            run_index=int(fields["run"]) if "run" in fields else None,
        )
    except (ValueError, ZeroDivisionError, ValidationError) as exc:
        raise TraceParseError(1, f"invalid header: {exc}") from None


def parse_trace(text: str) -> Trace:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TraceParseError(1, "empty trace file")

    header = parse_header(lines[0].rstrip("\r"))
    steps: list[tuple[int, int]] = []
    annotations: list[Annotation] = []
    for line_number, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#"):
            annotations.append(Annotation(t=len(steps), text=line[1:].strip()))
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TraceParseError(line_number, f"expected '<t> <i> <j>', got '{line}'")
        try:
            t, i, j = (int(p) for p in parts)
        except ValueError:
            raise TraceParseError(line_number, f"non-integer field in '{line}'") from None
        if t != len(steps) + 1:
            raise TraceParseError(line_number, f"expected step {len(steps) + 1}, got {t}")
        if not 1 <= i <= header.m or not 1 <= j <= header.n:
            raise TraceParseError(line_number, f"choice ({i}, {j}) is outside a {header.m}x{header.n} game")
        steps.append((i, j))
    return Trace(header=header, steps=steps, annotations=annotations)


def read_text(path: str) -> str:
    """UTF-8 contents of ``path``; undecodable bytes raise TraceParseError on their line."""
    with open(path, "rb") as handle:
        data = handle.read()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line_number = data.count(b"\n", 0, exc.start) + 1
        raise TraceParseError(line_number, f"invalid UTF-8 byte 0x{data[exc.start]:02x}") from None


def read_trace(path: str) -> Trace:
    return parse_trace(read_text(path))
