"""Exact arithmetic over the field Q[sqrt(3)] and small planar primitives.

Every coordinate in this package is a number ``p + q*sqrt(3)`` with rational
``p``, ``q``.  This field is closed under rotation by any multiple of pi/6,
which covers every rotation order the lattice builders need (2, 3, 4, 6, 12),
so position equality and all geometric predicates are decided exactly, with
no floating tolerance anywhere.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence, Union

SQRT3_FLOAT = math.sqrt(3.0)

RationalLike = Union[int, Fraction]


class QSqrt3:
    """A number p + q*sqrt(3) with exact rational p and q."""

    __slots__ = ("p", "q")

    def __init__(self, p: RationalLike = 0, q: RationalLike = 0):
        self.p = p if isinstance(p, Fraction) else Fraction(p)
        self.q = q if isinstance(q, Fraction) else Fraction(q)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        return QSqrt3(self.p + other.p, self.q + other.q)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return QSqrt3(self.p - other.p, self.q - other.q)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, (QSqrt3, int, Fraction)):
            return NotImplemented
        other = _coerce(other)
        # (p + q*r3)(p' + q'*r3) = pp' + 3qq' + (pq' + qp')*r3
        return QSqrt3(self.p * other.p + 3 * self.q * other.q,
                      self.p * other.q + self.q * other.p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        den = other.p * other.p - 3 * other.q * other.q
        if den == 0:
            raise ZeroDivisionError("division by zero in Q[sqrt(3)]")
        # multiply by conjugate (p' - q'*r3) / (p'^2 - 3 q'^2)
        num = self * QSqrt3(other.p, -other.q)
        return QSqrt3(num.p / den, num.q / den)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __neg__(self):
        return QSqrt3(-self.p, -self.q)

    def __abs__(self):
        return self if self.sign() >= 0 else -self

    # -- comparisons ------------------------------------------------------

    def sign(self) -> int:
        """Exact sign (-1, 0, +1): uses p^2 vs 3 q^2 when p, q disagree."""
        sp = (self.p > 0) - (self.p < 0)
        sq = (self.q > 0) - (self.q < 0)
        if sq == 0:
            return sp
        if sp == 0:
            return sq
        if sp == sq:
            return sp
        # opposite signs: |p| vs |q|*sqrt(3); sqrt(3) irrational so no tie
        return sp if self.p * self.p > 3 * self.q * self.q else sq

    def __eq__(self, other):
        if not isinstance(other, (QSqrt3, int, Fraction)):
            return NotImplemented
        other = _coerce(other)
        return self.p == other.p and self.q == other.q

    def __hash__(self):
        if self.q == 0:
            return hash(self.p)
        return hash((self.p, self.q))

    def __lt__(self, other):
        return (self - _coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - _coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - _coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - _coerce(other)).sign() >= 0

    # -- conversions ------------------------------------------------------

    def __float__(self):
        return float(self.p) + float(self.q) * SQRT3_FLOAT

    def __repr__(self):
        if self.q == 0:
            return f"QSqrt3({self.p})"
        return f"QSqrt3({self.p}, {self.q})"

    def __str__(self):
        if self.q == 0:
            return str(self.p)
        if self.p == 0:
            return f"{self.q}*sqrt3"
        return f"{self.p}{'+' if self.q > 0 else ''}{self.q}*sqrt3"

    def is_rational(self) -> bool:
        return self.q == 0

    def floor(self) -> int:
        """Exact floor, via integer bracketing of the float estimate."""
        n = math.floor(float(self))
        while self < n:
            n -= 1
        while self >= n + 1:
            n += 1
        return n


def _coerce(x) -> QSqrt3:
    if isinstance(x, QSqrt3):
        return x
    if isinstance(x, (int, Fraction)):
        return QSqrt3(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to QSqrt3")


Q0 = QSqrt3(0)
Q1 = QSqrt3(1)


def qs(p: RationalLike = 0, q: RationalLike = 0) -> QSqrt3:
    return QSqrt3(p, q)


class Vec2:
    """Exact 2-vector over Q[sqrt(3)]."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        self.x = _coerce(x)
        self.y = _coerce(y)

    def __add__(self, other):
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def __mul__(self, s):
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Vec2) and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.x, self.y))

    def __repr__(self):
        return f"Vec2({self.x!r}, {self.y!r})"

    def __iter__(self):
        yield self.x
        yield self.y

    def dot(self, other) -> QSqrt3:
        return self.x * other.x + self.y * other.y

    def cross(self, other) -> QSqrt3:
        return self.x * other.y - self.y * other.x

    def norm2(self) -> QSqrt3:
        return self.x * self.x + self.y * self.y

    def to_float(self):
        return (float(self.x), float(self.y))


def vec(x, y) -> Vec2:
    return Vec2(x, y)


ORIGIN = Vec2(0, 0)

# cos/sin of k*pi/6 for k = 0..11, all exact in Q[sqrt(3)]
_H = Fraction(1, 2)
COS_SIN_PI6 = [
    (qs(1), qs(0)),          # 0
    (qs(0, _H), qs(_H)),     # pi/6
    (qs(_H), qs(0, _H)),     # pi/3
    (qs(0), qs(1)),          # pi/2
    (qs(-_H), qs(0, _H)),    # 2pi/3
    (qs(0, -_H), qs(_H)),    # 5pi/6
    (qs(-1), qs(0)),         # pi
    (qs(0, -_H), qs(-_H)),   # 7pi/6
    (qs(-_H), qs(0, -_H)),   # 4pi/3
    (qs(0), qs(-1)),         # 3pi/2
    (qs(_H), qs(0, -_H)),    # 5pi/3
    (qs(0, _H), qs(-_H)),    # 11pi/6
]

#: rotation orders whose angle 2*pi/a is a multiple of pi/6
REPRESENTABLE_ORDERS = (1, 2, 3, 4, 6, 12)


class RotationOrderUnsupported(ValueError):
    """Rotation by 2*pi/a does not preserve the Q[sqrt(3)] coordinate field.

    Only orders 1, 2, 3, 4, 6 and 12 are exactly representable; any other
    order (for example 5) is incompatible with a discrete translation-
    invariant point set and is rejected rather than approximated.
    """


class Rotation:
    """Exact rotation about a center by k * (2*pi/a)."""

    __slots__ = ("cos", "sin", "center")

    def __init__(self, a: int, k: int = 1, center: Vec2 = ORIGIN):
        if a not in REPRESENTABLE_ORDERS:
            raise RotationOrderUnsupported(
                f"rotation order {a} is not representable in Q[sqrt(3)] "
                f"coordinates; supported orders: {REPRESENTABLE_ORDERS}")
        steps = (12 // a) * k % 12
        self.cos, self.sin = COS_SIN_PI6[steps]
        self.center = center

    def __call__(self, v: Vec2) -> Vec2:
        dx = v.x - self.center.x
        dy = v.y - self.center.y
        return Vec2(self.center.x + self.cos * dx - self.sin * dy,
                    self.center.y + self.sin * dx + self.cos * dy)

    def inverse(self) -> "Rotation":
        r = Rotation.__new__(Rotation)
        r.cos, r.sin, r.center = self.cos, -self.sin, self.center
        return r


class Translation:
    __slots__ = ("shift",)

    def __init__(self, shift: Vec2):
        self.shift = shift

    def __call__(self, v: Vec2) -> Vec2:
        return v + self.shift

    def inverse(self) -> "Translation":
        return Translation(-self.shift)


# ---------------------------------------------------------------------------
# exact planar predicates
# ---------------------------------------------------------------------------

def orientation(a: Vec2, b: Vec2, c: Vec2) -> int:
    """Sign of the signed area of triangle (a, b, c): +1 ccw, -1 cw, 0 flat."""
    return (b - a).cross(c - a).sign()


def point_on_segment(p: Vec2, a: Vec2, b: Vec2, *, closed: bool = True) -> bool:
    """Exact test that p lies on segment ab (open segment if closed=False)."""
    if orientation(a, b, p) != 0:
        return False
    d = b - a
    t = (p - a).dot(d)
    lo_ok = t > 0 or (closed and t == 0)
    hi_ok = t < d.norm2() or (closed and t == d.norm2())
    return lo_ok and hi_ok


def segments_interiors_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool:
    """True iff closed segments ab and cd share a point that is interior to
    at least one of them.  Sharing an endpoint only is allowed."""
    o1 = orientation(a, b, c)
    o2 = orientation(a, b, d)
    o3 = orientation(c, d, a)
    o4 = orientation(c, d, b)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True  # proper crossing
    # collinear / endpoint contact cases
    for p, u, v in ((c, a, b), (d, a, b), (a, c, d), (b, c, d)):
        if point_on_segment(p, u, v, closed=False):
            return True
    if o1 == o2 == o3 == o4 == 0:
        # collinear: overlap of positive length intersects interiors
        d1 = b - a
        ta, tb = QSqrt3(0), d1.norm2()
        tc, td = (c - a).dot(d1), (d - a).dot(d1)
        lo, hi = (tc, td) if tc <= td else (td, tc)
        if max(lo, ta) < min(hi, tb):
            return True
    return False


def convex_hull(points: Sequence[Vec2]) -> list[Vec2]:
    """Andrew monotone chain with exact comparisons; strictly convex output
    (collinear boundary points dropped).  Degenerate inputs give hulls of
    size 1 or 2."""
    uniq = [Vec2(x, y) for x, y in set((p.x, p.y) for p in points)]
    uniq.sort(key=_VecKey)
    if len(uniq) <= 2:
        return uniq
    lower: list[Vec2] = []
    for p in uniq:
        while len(lower) >= 2 and orientation(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Vec2] = []
    for p in reversed(uniq):
        while len(upper) >= 2 and orientation(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # all points collinear
        return [uniq[0], uniq[-1]]
    return hull


class _VecKey:
    """Sort key wrapper giving lexicographic (x, y) order with exact compares."""

    __slots__ = ("v",)

    def __init__(self, v: Vec2):
        self.v = v

    def __lt__(self, other):
        if self.v.x != other.v.x:
            return self.v.x < other.v.x
        return self.v.y < other.v.y


def point_in_convex_hull(hull: Sequence[Vec2], p: Vec2) -> bool:
    """Membership in the closed convex hull (hull as returned by convex_hull)."""
    if len(hull) == 1:
        return p == hull[0]
    if len(hull) == 2:
        return point_on_segment(p, hull[0], hull[1])
    for i in range(len(hull)):
        if orientation(hull[i], hull[(i + 1) % len(hull)], p) < 0:
            return False
    return True


def hull_min_edge_distance_at_least(hull: Sequence[Vec2], center: Vec2,
                                    radius) -> bool:
    """True iff every hull edge line is at distance >= radius from center.

    radius is rational (or QSqrt3).  Decided exactly via squared distances:
    cross(e, c-p)^2 >= radius^2 * |e|^2.
    """
    r = _coerce(radius) if not isinstance(radius, QSqrt3) else radius
    r2 = r * r
    n = len(hull)
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        e = b - a
        c = (center - a).cross(e)
        if (c * c - r2 * e.norm2()).sign() < 0:
            return False
    return True
