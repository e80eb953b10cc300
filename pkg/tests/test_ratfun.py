import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ps3lab.errors import DegenerateBranching
from ps3lab.ratfun import (CASES, MobiusReal, RationalDeg3, classify, critical_data, fixture,
                           gauge_apply, normalized_covering, point_type, preimages)
from ps3lab.pantsgeom import associate_pants

COVER_BRANCH = (0.0, 1.0, 1.024, math.inf)


def test_construct_rejects_wrong_degree_and_common_root():
    with pytest.raises(ValueError):
        RationalDeg3((1.0, 2.0), (1.0,))
    with pytest.raises(ValueError):
        # (t-2)(t^2+1) / (t-2)
        RationalDeg3((-2.0, 1.0, -2.0, 1.0), (-2.0, 1.0))


def test_json_round_trip(R_A):
    assert RationalDeg3.from_json(R_A.to_json()) == R_A


def test_cube_is_degenerate():
    with pytest.raises(DegenerateBranching):
        critical_data(RationalDeg3((0.0, 0.0, 0.0, 1.0), (1.0,)))
    with pytest.raises(DegenerateBranching):
        RationalDeg3((0.0, 0.0, 0.0, 1.0), (1.0,)).check_nondegenerate()


def test_fixture_A_critical_points(R_A):
    # b-points of the c=0.4 covering are {0, 1, 1.6, inf}; the chart x = 1.3 + 0.2 t
    bd = critical_data(R_A)
    assert np.allclose(bd.b[:3], (-6.5, -1.5, 1.5), atol=1e-10)
    assert math.isinf(bd.b[3])
    for a, b, c in zip(bd.a[:3], bd.b[:3], bd.c[:3]):
        assert abs(R_A(b) - a) < 1e-9 * (1 + abs(a))
        assert abs(R_A.derivative(b)) < 1e-9
        assert abs(R_A(c) - a) < 1e-9 * (1 + abs(a)) and abs(c - b) > 1e-3
    # (a1, a2) is of type (1:2)
    assert point_type(R_A, 0.5 * (bd.a[0] + bd.a[1])) == "1:2"


@pytest.mark.parametrize("case", CASES)
def test_fixture_cases(case):
    R = fixture(case)
    R.check_nondegenerate()
    assert classify(R) == case


def test_point_types_of_normalized_covering():
    R = normalized_covering(0.4)
    assert point_type(R, 0.5, COVER_BRANCH) == "1:2"
    assert point_type(R, 1.012, COVER_BRANCH) == "3:0"
    # locally constant on the (a, inf) interval
    assert {point_type(R, y, COVER_BRANCH) for y in (2.0, 50.0, 1e6)} == {"1:2"}


def test_preimages_at_branch_value(R_A):
    bd = critical_data(R_A)
    z = np.array(preimages(R_A, bd.a[1]))
    b, c = bd.b[1], bd.c[1]
    assert np.sum(np.abs(z - b) < 1e-5) == 2
    assert np.min(np.abs(z - c)) < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_preimages_vieta(yr, yi):
    R = fixture("A")
    y = complex(yr, yi)
    z = np.array(preimages(R, y))
    c = R.level_poly(y)
    assert abs(np.prod(z) + c[0] / c[3]) < 1e-8 * (1 + abs(c[0] / c[3]))
    assert np.max(np.abs(R(z) - y)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 0.9))
def test_real_preimage_contains_source(x0):
    R = fixture("A")
    z = np.array(preimages(R, R(x0)))
    assert np.min(np.abs(z - x0)) < 1e-8


def test_gauge_identity_and_case(R_A, R_B1):
    assert gauge_apply(R_A, MobiusReal(0.0, 1), "pre") == R_A
    for R in (R_A, R_B1):
        for L in (MobiusReal(0.3, 1), MobiusReal(-0.5, -1)):
            assert classify(gauge_apply(R, L, "pre")) == classify(R)


def test_reflection_reflects_critical_points(R_A):
    bd = critical_data(R_A)
    bd2 = critical_data(gauge_apply(R_A, MobiusReal(0.0, -1), "pre"))
    assert sorted(bd.a) == pytest.approx(sorted(bd2.a))
    fin = lambda v: sorted(x for x in v if math.isfinite(x))
    assert fin(bd2.b) == pytest.approx(sorted(-x for x in fin(bd.b)))


def test_post_reflection_swaps_blue_and_green(R_A):
    p = associate_pants(R_A)
    q = associate_pants(gauge_apply(R_A, MobiusReal(0.0, -1), "post"))
    # the slot p puts the blue color on becomes green under y -> -y
    blue = p.by_color("blue")[0]
    green_q = q.by_color("green")[0]
    assert green_q.lo == pytest.approx(-blue.hi) and green_q.hi == pytest.approx(-blue.lo)
