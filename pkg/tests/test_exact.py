"""Exact field arithmetic and the planar predicates built on it."""
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from zeroising.exact import (QSqrt3, Rotation, RotationOrderUnsupported, Vec2,
                             convex_hull, hull_min_edge_distance_at_least,
                             orientation, point_in_convex_hull,
                             point_on_segment, qs, segments_interiors_intersect,
                             vec)

rationals = st.fractions(max_numerator=60, max_denominator=12)
elements = st.builds(qs, rationals, rationals)


@given(elements, elements, elements)
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    assert (a - b) + b == a
    if b != qs(0):
        assert (a / b) * b == a


@given(elements)
def test_sign_matches_float(a):
    f = float(a)
    if abs(f) > 1e-9:
        assert a.sign() == (1 if f > 0 else -1)
    else:
        # tiny float can still be an exact nonzero; only check zero-detection
        assert (a.sign() == 0) == (a.p == 0 and a.q == 0)


@given(elements)
def test_floor_exact(a):
    n = a.floor()
    assert qs(n) <= a < qs(n + 1)


def test_sqrt3_squares_to_three():
    r3 = qs(0, 1)
    assert r3 * r3 == qs(3)
    assert r3 > qs(Fraction(17320508, 10000000))
    assert r3 < qs(Fraction(17320509, 10000000))


def test_rotation_orders():
    v = vec(1, 0)
    assert Rotation(4)(v) == vec(0, 1)
    assert Rotation(2)(v) == vec(-1, 0)
    r6 = Rotation(6)
    assert r6(v) == vec(Fraction(1, 2), qs(0, Fraction(1, 2)))
    # six applications return home, exactly
    w = v
    for _ in range(6):
        w = r6(w)
    assert w == v
    with pytest.raises(RotationOrderUnsupported):
        Rotation(5)
    with pytest.raises(RotationOrderUnsupported):
        Rotation(8)


def test_rotation_preserves_norm_exactly():
    v = vec(Fraction(3, 2), qs(0, Fraction(1, 2)))
    for a in (2, 3, 4, 6, 12):
        assert Rotation(a)(v).norm2() == v.norm2()


def test_orientation_and_segments():
    a, b = vec(0, 0), vec(4, 0)
    assert orientation(a, b, vec(1, 1)) == 1
    assert orientation(a, b, vec(1, -1)) == -1
    assert orientation(a, b, vec(2, 0)) == 0
    assert point_on_segment(vec(2, 0), a, b)
    assert not point_on_segment(vec(0, 0), a, b, closed=False)
    # proper crossing
    assert segments_interiors_intersect(vec(0, 0), vec(2, 2), vec(0, 2), vec(2, 0))
    # shared endpoint only: allowed
    assert not segments_interiors_intersect(vec(0, 0), vec(1, 0), vec(1, 0), vec(1, 1))
    # collinear overlap
    assert segments_interiors_intersect(vec(0, 0), vec(2, 0), vec(1, 0), vec(3, 0))
    # collinear, disjoint
    assert not segments_interiors_intersect(vec(0, 0), vec(1, 0), vec(2, 0), vec(3, 0))
    # T-contact at an interior point
    assert segments_interiors_intersect(vec(0, 0), vec(2, 0), vec(1, 0), vec(1, 1))


def test_convex_hull_basics():
    pts = [vec(0, 0), vec(2, 0), vec(2, 2), vec(0, 2), vec(1, 1), vec(1, 0)]
    hull = convex_hull(pts)
    assert len(hull) == 4
    assert point_in_convex_hull(hull, vec(1, 1))
    assert point_in_convex_hull(hull, vec(2, 1))  # boundary counts
    assert not point_in_convex_hull(hull, vec(3, 1))


def test_collinear_hull_degenerates():
    hull = convex_hull([vec(0, 0), vec(1, 0), vec(2, 0)])
    assert len(hull) == 2
    assert point_in_convex_hull(hull, vec(1, 0))
    assert not point_in_convex_hull(hull, vec(1, 1))


def test_hull_edge_distance():
    square = [vec(1, 1), vec(-1, 1), vec(-1, -1), vec(1, -1)]
    assert hull_min_edge_distance_at_least(square, vec(0, 0), 1)
    assert not hull_min_edge_distance_at_least(square, vec(0, 0), Fraction(101, 100))
