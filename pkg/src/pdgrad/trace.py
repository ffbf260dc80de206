"""Per-iteration run records and their CSV file form.

Fixed header ``t,grad_evals,wall_ns,dist_P,obj,obj_ergodic,bound_upper,
bound_lower``. Floats are written with 17 significant digits so a
read/write round trip is lossless and a rewrite is byte-stable. Absent
values (e.g. dist_P with no known minimizer) are blank cells, carried
in memory as NaN.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np

HEADER = "t,grad_evals,wall_ns,dist_P,obj,obj_ergodic,bound_upper,bound_lower"
FLOAT_COLUMNS = ("dist_p", "obj", "obj_ergodic", "bound_upper", "bound_lower")


class TraceFormatError(ValueError):
    """Raised on malformed trace files."""


@dataclass
class Trace:
    """Columnar per-iteration record; all arrays share one length."""

    t: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    grad_evals: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    wall_ns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dist_p: np.ndarray = field(default_factory=lambda: np.zeros(0))
    obj: np.ndarray = field(default_factory=lambda: np.zeros(0))
    obj_ergodic: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bound_upper: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bound_lower: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self):
        return int(self.t.shape[0])

    def __post_init__(self):
        k = len(self)
        for name in ("grad_evals", "wall_ns") + FLOAT_COLUMNS:
            if getattr(self, name).shape[0] != k:
                raise ValueError("trace columns must share one length")


def empty_trace():
    return Trace()


def _fmt(x):
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def format_trace(trace):
    """Canonical text form of a trace (header plus one row per iteration)."""
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    for j in range(len(trace)):
        buf.write(
            f"{trace.t[j]},{trace.grad_evals[j]},{trace.wall_ns[j]},"
            f"{_fmt(trace.dist_p[j])},{_fmt(trace.obj[j])},{_fmt(trace.obj_ergodic[j])},"
            f"{_fmt(trace.bound_upper[j])},{_fmt(trace.bound_lower[j])}\n"
        )
    return buf.getvalue()


def write_trace(path, trace):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_trace(trace))


def parse_trace(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise TraceFormatError(
            f"trace header mismatch: expected {HEADER!r}, got {lines[0].strip()!r}"
            if lines
            else "empty trace file"
        )
    rows = [ln for ln in lines[1:] if ln]
    k = len(rows)
    tr = Trace(
        t=np.zeros(k, dtype=np.int64),
        grad_evals=np.zeros(k, dtype=np.int64),
        wall_ns=np.zeros(k, dtype=np.int64),
        dist_p=np.full(k, np.nan),
        obj=np.full(k, np.nan),
        obj_ergodic=np.full(k, np.nan),
        bound_upper=np.full(k, np.nan),
        bound_lower=np.full(k, np.nan),
    )
    for j, ln in enumerate(rows):
        parts = ln.split(",")
        if len(parts) != 8:
            raise TraceFormatError(f"line {j + 2}: expected 8 fields, got {len(parts)}")
        try:
            tr.t[j] = int(parts[0])
            tr.grad_evals[j] = int(parts[1])
            tr.wall_ns[j] = int(parts[2])
            for col, val in zip(FLOAT_COLUMNS, parts[3:]):
                getattr(tr, col)[j] = float(val) if val != "" else np.nan
        except ValueError as exc:
            raise TraceFormatError(f"line {j + 2}: {exc}") from exc
    if k > 1 and np.any(np.diff(tr.t) <= 0):
        raise TraceFormatError("iteration indices must be strictly increasing")
    return tr


def read_trace(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_trace(fh.read())
