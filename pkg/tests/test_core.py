import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from parhybrid.core import (
    DimensionError,
    FixedPointMap,
    MonotoneOperator,
    NonFiniteError,
    Problem,
    as_vector,
    inner,
    norm,
    phi,
)
from parhybrid.geometry import Interval
from parhybrid.problems import section5_A

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def vec(d=3):
    return arrays(np.float64, d, elements=finite)


def test_phi_examples():
    assert phi([1.0], [0.0]) == 1.0
    assert phi([2.0], [2.0]) == 0.0
    assert phi([1.0], [3.0]) == 4.0
    # three-point identity on the same triple
    assert phi([1.0], [2.0]) + phi([2.0], [3.0]) + 2 * (2 - 1) * (3 - 2) == 4.0


def test_inner_examples():
    assert inner([1, 2], [3, 4]) == 11.0
    assert inner([5.0, -7.0], [0.0, 0.0]) == 0.0


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        inner([1, 2], [1, 2, 3])
    with pytest.raises(DimensionError):
        phi([1.0], [1.0, 2.0])


def test_as_vector_validation():
    assert as_vector(3.0).shape == (1,)
    with pytest.raises(DimensionError):
        as_vector([[1.0, 2.0]])
    with pytest.raises(DimensionError):
        as_vector([1.0, 2.0], dim=3)
    with pytest.raises(NonFiniteError):
        as_vector([np.nan])
    with pytest.raises(DimensionError):
        as_vector([])


@settings(max_examples=200, deadline=None)
@given(vec(), vec())
def test_phi_is_squared_distance_and_bounded(x, y):
    p = phi(x, y)
    expanded = inner(x, x) - 2 * inner(x, y) + inner(y, y)
    scale = max(1.0, inner(x, x) + inner(y, y))
    assert abs(p - expanded) <= 1e-10 * scale
    nx, ny = norm(x), norm(y)
    assert (nx - ny) ** 2 <= p + 1e-10 * scale
    assert p <= (nx + ny) ** 2 + 1e-10 * scale


@settings(max_examples=200, deadline=None)
@given(vec(), vec(), vec())
def test_phi_three_point_identity(x, y, z):
    lhs = phi(x, y)
    rhs = phi(x, z) + phi(z, y) + 2 * inner(z - x, y - z)
    scale = max(1.0, phi(x, z) + phi(z, y))
    assert abs(lhs - rhs) <= 1e-10 * scale


@settings(max_examples=100, deadline=None)
@given(vec(4))
def test_norm_matches_numpy(x):
    assert math.isclose(norm(x), float(np.linalg.norm(x)), rel_tol=1e-12, abs_tol=1e-300)


def test_monotone_operator_needs_positive_modulus():
    with pytest.raises(ValueError):
        MonotoneOperator(lambda x: x, 0.0)


def test_fixed_point_map_power_defaults_to_iteration():
    m = FixedPointMap(lambda x: 0.5 * x)
    np.testing.assert_array_equal(m.power(np.array([8.0]), 3), [1.0])
    assert m.k_sequence(7) == 1.0
    with pytest.raises(ValueError):
        m.power(np.array([1.0]), 0)


def test_problem_aggregates():
    ops = [MonotoneOperator(lambda x: x, 0.5), MonotoneOperator(lambda x: x, 0.25)]
    maps = [
        FixedPointMap(lambda x: x, k_sequence=lambda n: 1 + 1 / n),
        FixedPointMap(lambda x: x, k_sequence=lambda n: 1 + 2 / n),
    ]
    p = Problem(Interval(0, 1), ops, maps)
    assert p.dim == 1
    assert p.ism_modulus == 0.25
    assert p.asymptotic_k(2) == 2.0


@pytest.mark.parametrize("i", [1, 2, 3, 5])
def test_section5_operators_inverse_strongly_monotone(i, rng):
    A = section5_A(i)
    x = rng.uniform(0, 1, 500)
    y = rng.uniform(0, 1, 500)
    dA = A(x) - A(y)
    assert np.all(dA * (x - y) >= 0.5 * dA ** 2 - 1e-15)
