import time

import numpy as np
import pytest

from conftest import TINY
from parhybrid.core import phi
from parhybrid.geometry import Box, HalfSpace, Interval, NestedSet, project_nested
from parhybrid.problems import (
    AffineInteriorProblem,
    Section5Problem,
    brute_force_projection,
    build_affine_interior,
    build_section5,
    closed_form_iteration_oracle,
    section5_A,
    section5_B,
    section5_S,
)


def test_tiny_instance_examples():
    p = build_section5(TINY)
    S = p.maps[0]
    assert S([1.0])[0] - S([0.5])[0] == pytest.approx(1.0)
    assert abs(S([1.0])[0] - S([0.5])[0]) > abs(1.0 - 0.5)  # not nonexpansive
    A2 = section5_A(2)
    assert A2(np.array([0.0]))[0] == 0.0
    assert A2(np.array([0.6]))[0] == pytest.approx(0.6 - 0.216 / 3)
    B = section5_B(0.5, 0.25)
    assert B(np.array([0.5]))[0] == 0.25 and B(np.array([0.8]))[0] == 0.25
    assert p.operators[0].ism_modulus == 0.5
    assert all(f.resolvent_closed_form is not None for f in p.bifunctions)
    np.testing.assert_array_equal(p.solution, [0.0])


def test_default_instance_shape():
    spec = Section5Problem.default()
    assert (spec.M, spec.N, spec.K) == (10, 10, 10)
    assert spec.t[0] == pytest.approx(1 / 11) and spec.xi[-1] == pytest.approx(10 / 11)
    assert spec.eta[3] == pytest.approx(spec.xi[3] / 2)
    p = build_section5(spec)
    assert len(p.operators) == len(p.maps) == len(p.bifunctions) == 10


@pytest.mark.parametrize(
    "kw",
    [
        dict(t=(0.4,), s=(2.0,), xi=(0.5,), eta=(0.25,)),  # s > 1/(1-t)
        dict(t=(0.5,), s=(1.0,), xi=(0.5,), eta=(0.25,)),  # s not > 1
        dict(t=(0.5,), s=(2.0,), xi=(0.5,), eta=(0.6,)),  # eta >= xi
        dict(t=(1.5,), s=(2.0,), xi=(0.5,), eta=(0.25,)),
    ],
)
def test_invalid_parameters_rejected(kw):
    with pytest.raises(ValueError):
        Section5Problem(1, 1, 1, **kw)


def test_random_instances_valid(rng):
    for _ in range(50):
        spec = Section5Problem.random(rng)
        build_section5(spec)


def test_power_matches_repeated_application(rng):
    S, S_pow = section5_S(0.3, 1.2)
    for x in rng.uniform(0, 1, 50):
        v = np.array([x])
        for n in (1, 2, 5, 17):
            w = v
            for _ in range(n):
                w = S(w)
            assert S_pow(v, n)[0] == w[0]


def test_maps_are_quasi_nonexpansive_about_zero(rng):
    for _ in range(20):
        spec = Section5Problem.random(rng)
        p = build_section5(spec)
        xs = rng.uniform(0, 1, 200)
        for S in p.maps:
            assert S(np.zeros(1))[0] == 0.0
            for x in xs:
                assert phi([0.0], S([x])) <= phi([0.0], [x]) + 1e-15


def test_bifunction_conditions_sampled(rng):
    # f(x, x) = 0 and f(x, y) + f(y, x) <= 0 on C; f(0, y) >= 0 for y in C
    for xi, eta in [(0.5, 0.25), (0.1, 0.09), (0.9, 0.3)]:
        p = build_section5(Section5Problem(1, 1, 1, (0.5,), (2.0,), (xi,), (eta,)))
        f = p.bifunctions[0]
        for x, y in rng.uniform(0, 1, (300, 2)):
            assert f([x], [x]) == 0.0
            assert f([x], [y]) + f([y], [x]) <= 1e-15
            assert f([0.0], [y]) >= 0.0


def test_operators_strongly_monotone_cocoercive(rng):
    # each A_i has derivative 1 - x^i in [0, 1] on C, which gives the declared modulus
    for i in range(1, 11):
        A = section5_A(i)
        x, y = rng.uniform(0, 1, (2, 200))
        dA = A(x) - A(y)
        assert np.all(dA * (x - y) >= 0.5 * dA ** 2 - 1e-15)


def test_closed_form_oracle_examples():
    assert closed_form_iteration_oracle(TINY, 0.2, 0.5, 1.0, 1.0) == pytest.approx((0.9, 0.9, 0.65, 0.775))
    assert closed_form_iteration_oracle(TINY, 0.2, 0.5, 1.0, 0.0) == (0.0, 0.0, 0.0, 0.0)
    # y_bar lands at or below t, so every candidate z is alpha * x
    y, z, u, nxt = closed_form_iteration_oracle(TINY, 0.2, 0.5, 1.0, 0.3)
    assert z == pytest.approx(0.15) and u == pytest.approx(0.5 / 0.75 * 0.15)


def test_eval_cost_adds_delay():
    p = build_section5(TINY, eval_cost=0.01)
    t0 = time.perf_counter()
    p.operators[0](np.array([0.5]))
    assert time.perf_counter() - t0 >= 0.009
    with pytest.raises(ValueError):
        build_section5(TINY, eval_cost=0.01, cost_mode="teleport")


def test_affine_interior_problem():
    spec = AffineInteriorProblem()
    p = build_affine_interior(spec)
    w = spec.interior_witness()
    assert p.C.contains(w) and p.meta["ball"].contains(w)
    assert p.dim == 5
    np.testing.assert_array_equal(p.maps[0](w), w)
    with pytest.raises(ValueError):
        AffineInteriorProblem(d=2, center=(1.0, 0.0)).interior_witness()


def test_brute_force_examples():
    S = NestedSet(Interval(0, 1), [HalfSpace.make([1.0], 0.775)])
    assert abs(brute_force_projection([1.0], S, 1e-4)[0] - 0.775) <= 1e-4
    assert abs(brute_force_projection([1.0], S, 1e-4, refine=False)[0] - 0.775) <= 1e-4
    assert abs(brute_force_projection([0.4], S, 1e-4)[0] - 0.4) <= 1e-4
    T = NestedSet(Box([0, 0], [1, 1]), [HalfSpace.make([1.0, 1.0], 1.0)])
    np.testing.assert_allclose(brute_force_projection([2.0, 2.0], T, 1e-3), [0.5, 0.5], atol=2e-3)
    np.testing.assert_allclose(
        brute_force_projection([2.0, 2.0], T, 1e-3, refine=False), [0.5, 0.5], atol=2e-3
    )
    with pytest.raises(ValueError):
        brute_force_projection(np.zeros(3), Box(np.zeros(3), np.ones(3)), 0.1)


def test_brute_force_agrees_with_dykstra_small_sample(rng):
    for _ in range(10):
        anchor = rng.uniform(0.2, 0.8, 2)
        hs = []
        for _ in range(3):
            a = rng.normal(size=2)
            hs.append(HalfSpace.make(a, float(a @ anchor) + rng.uniform(0, 0.3)))
        S = NestedSet(Box([0, 0], [1, 1]), hs)
        x0 = rng.uniform(-1, 2, 2)
        h = 1e-2
        bf = brute_force_projection(x0, S, h)
        assert np.linalg.norm(bf - project_nested(x0, S)) <= 2 * h
