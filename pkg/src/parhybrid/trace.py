"""Per-iteration solver records and their CSV form."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from array import array
from pathlib import Path
from typing import NamedTuple

import numpy as np


class TraceRow(NamedTuple):
    n: int
    x_norm: float
    step_residual: float
    eps_n: float
    t_vi_phase_s: float
    t_fp_phase_s: float
    t_ep_phase_s: float
    t_proj_s: float
    n_halfspaces: int


COLUMNS = TraceRow._fields
TIMING_COLUMNS = ("t_vi_phase_s", "t_fp_phase_s", "t_ep_phase_s", "t_proj_s")

CONVERGED = "converged"
MAX_ITER = "max_iter"
STOPPED = "stopped"


class Trace:
    """Rows for ``x_0 .. x_n`` plus the iterates themselves.

    Row 0 describes the starting point (``step_residual`` is NaN). Row ``n``
    holds ``||x_n||``, ``||x_n - x_{n-1}||``, the ``eps`` used to build
    ``C_n``, the wall time of each phase of that step and the number of
    stored half-spaces. Storage is columnar so long runs stay compact;
    ``rows`` and ``iterates`` materialize lists on access.
    """

    def __init__(self, method: str = "", status: str = "", keep_iterates: bool = True):
        self.method = method
        self.status = status
        self.keep_iterates = keep_iterates
        self._cols = {c: array("d") for c in COLUMNS}
        self._x = array("d")
        self._dim = 0

    def append(self, row: TraceRow, x=None) -> None:
        for c, v in zip(COLUMNS, row):
            self._cols[c].append(v)
        if x is not None and self.keep_iterates:
            x = np.asarray(x, dtype=np.float64)
            self._dim = x.size
            self._x.extend(x.tolist())

    def __len__(self):
        return len(self._cols["n"])

    @property
    def rows(self) -> list[TraceRow]:
        cols = [self._cols[c] for c in COLUMNS]
        return [
            TraceRow(int(r[0]), *r[1:-1], int(r[-1]))
            for r in zip(*cols)
        ]

    @property
    def last_row(self) -> TraceRow:
        r = [self._cols[c][-1] for c in COLUMNS]
        return TraceRow(int(r[0]), *r[1:-1], int(r[-1]))

    @property
    def iterates(self) -> list[np.ndarray]:
        if not self._dim:
            return []
        flat = np.frombuffer(self._x, dtype=np.float64).copy()
        return list(flat.reshape(-1, self._dim))

    @property
    def iterations(self) -> int:
        return max(len(self) - 1, 0)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def column(self, name: str) -> np.ndarray:
        return np.frombuffer(self._cols[name], dtype=np.float64).copy()

    def fingerprint(self) -> str:
        """Hash of every non-timing value, iterates included, bit for bit."""
        h = hashlib.sha256()
        for c in COLUMNS:
            if c not in TIMING_COLUMNS:
                h.update(self._cols[c].tobytes())
        h.update(self._x.tobytes())
        h.update(self.status.encode())
        return h.hexdigest()


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(trace: Trace, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trace_to_csv(trace))


def trace_to_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in trace.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_csv(path) -> list[TraceRow]:
    text = Path(path).read_text()
    return rows_from_csv(text)


def rows_from_csv(text: str) -> list[TraceRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected trace header {header}")
    rows = []
    for rec in reader:
        n, *floats, nh = rec
        rows.append(TraceRow(int(n), *(float(v) for v in floats), int(nh)))
    return rows


def rows_equal(a: list[TraceRow], b: list[TraceRow]) -> bool:
    """Exact comparison treating NaN as equal to NaN."""
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        for va, vb in zip(ra, rb):
            if isinstance(va, float) and math.isnan(va):
                if not (isinstance(vb, float) and math.isnan(vb)):
                    return False
            elif va != vb:
                return False
    return True
