import math

import numpy as np
import pytest

from conftest import params_a
from parhybrid.methods import StopRule, solve
from parhybrid.trace import COLUMNS, Trace, TraceRow, read_csv, rows_equal, rows_from_csv, trace_to_csv, write_csv


def _row(n, res=0.5, t=0.0):
    return TraceRow(n, 1.0 / (n + 1), res, 0.0, t, t, t, t, 2 * n)


def test_csv_round_trip_is_exact(tiny, tmp_path):
    _, tr = solve(tiny, params_a(), [1.0], StopRule(1e-9, 100))
    path = tmp_path / "trace.csv"
    write_csv(tr, path)
    back = read_csv(path)
    assert rows_equal(back, tr.rows)
    assert math.isnan(back[0].step_residual)
    assert path.read_text().splitlines()[0] == ",".join(COLUMNS)


def test_rows_equal_nan_and_mismatch():
    a = [_row(0, float("nan")), _row(1)]
    assert rows_equal(a, [_row(0, float("nan")), _row(1)])
    assert not rows_equal(a, [_row(0, 0.0), _row(1)])
    assert not rows_equal(a, a[:1])
    assert not rows_equal([_row(1)], [_row(1, 0.25)])


def test_bad_header_rejected():
    with pytest.raises(ValueError):
        rows_from_csv("n,x\n0,1\n")


def test_fingerprint_ignores_timings_only():
    a, b, c = Trace("A"), Trace("A"), Trace("A")
    for n in range(3):
        a.append(_row(n, t=0.1), np.array([float(n)]))
        b.append(_row(n, t=0.9), np.array([float(n)]))
        c.append(_row(n, t=0.1), np.array([float(n) + 1e-12 * (n == 2)]))
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != c.fingerprint()
    d = Trace("A", status="converged")
    for n in range(3):
        d.append(_row(n, t=0.1), np.array([float(n)]))
    assert d.fingerprint() != a.fingerprint()


def test_columnar_access():
    t = Trace("B")
    for n in range(4):
        t.append(_row(n), np.array([n, -n], dtype=float))
    assert len(t) == 4 and t.iterations == 3
    assert t.last_row == _row(3)
    np.testing.assert_array_equal(t.column("n_halfspaces"), [0, 2, 4, 6])
    np.testing.assert_array_equal(t.iterates[2], [2.0, -2.0])
    assert trace_to_csv(t).count("\n") == 5
