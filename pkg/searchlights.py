"""Guards and aim directions.

A guard is an open axis-parallel segment on the boundary. Its searchlight is
a half-plane bounded by the guard's line; the aim is a direction in the plane
orthogonal to the guard axis, written in the right-handed cyclic frame of
that axis (x: (y, z), y: (z, x), z: (x, y)) so that counterclockwise as seen
from the positive axis is the positive sense of rotation.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import FrozenSet, List, Optional, Sequence, Tuple

import sympy

from errors import BlindEndpoint, FormatError, InvalidGuard
from geometry_core import (
    AXIS_NAMES,
    GridComplex,
    Point3,
    Segment3,
    format_rational,
    parse_rational,
    stratum_index,
    to_scalar,
)

logger = logging.getLogger(__name__)

LEFTMOST = 'leftmost'
RIGHTMOST = 'rightmost'


def cyclic_frame(axis: int) -> Tuple[int, int]:
    return (axis + 1) % 3, (axis + 2) % 3


@dataclass(frozen=True)
class AimDirection:
    """Reduced integer direction (u, v), or a symbolic leftmost/rightmost position"""
    u: int = 0
    v: int = 0
    symbol: Optional[str] = None

    def __post_init__(self):
        if self.symbol is not None:
            if self.symbol not in (LEFTMOST, RIGHTMOST):
                raise ValueError(f"Unknown symbolic direction: {self.symbol}")
            return
        u, v = Fraction(self.u), Fraction(self.v)
        if u == 0 and v == 0:
            raise ValueError("Aim direction must be nonzero")
        scale = u.denominator * v.denominator
        iu, iv = int(u * scale), int(v * scale)
        g = gcd(iu, iv)
        object.__setattr__(self, 'u', iu // g)
        object.__setattr__(self, 'v', iv // g)

    @classmethod
    def leftmost(cls) -> 'AimDirection':
        return cls(symbol=LEFTMOST)

    @classmethod
    def rightmost(cls) -> 'AimDirection':
        return cls(symbol=RIGHTMOST)

    @property
    def symbolic(self) -> bool:
        return self.symbol is not None

    def pseudo_angle(self) -> Fraction:
        """Exact monotone stand-in for the ccw angle, in [0, 4)"""
        if self.symbolic:
            raise ValueError("Symbolic direction has no angle until resolved")
        u, v = self.u, self.v
        if u >= 0 and v >= 0:
            return Fraction(v, u + v)
        if u < 0 and v >= 0:
            return 1 + Fraction(-u, -u + v)
        if u <= 0 and v < 0:
            return 2 + Fraction(-v, -u - v)
        return 3 + Fraction(u, u - v)

    def angle(self) -> sympy.Expr:
        """Exact angle in [0, 2*pi)"""
        theta = sympy.atan2(self.v, self.u)
        if self.v < 0:
            theta += 2 * sympy.pi
        return theta

    def negated(self) -> 'AimDirection':
        return AimDirection(-self.u, -self.v)

    def token(self) -> str:
        if self.symbolic:
            return self.symbol
        return f"{self.u}/{self.v}"

    @classmethod
    def parse(cls, token: str) -> 'AimDirection':
        if token in (LEFTMOST, RIGHTMOST):
            return cls(symbol=token)
        try:
            u, v = token.split('/')
            return cls(int(u), int(v))
        except ValueError:
            raise FormatError(f"Bad direction token: {token!r}")

    def __str__(self) -> str:
        return self.token()


def ccw_arc(start: AimDirection, end: AimDirection) -> sympy.Expr:
    """Exact counterclockwise angle from start to end, in [0, 2*pi)"""
    arc = end.angle() - start.angle()
    if end.pseudo_angle() < start.pseudo_angle():
        arc += 2 * sympy.pi
    return arc


def ccw_between(d: AimDirection, start: AimDirection, end: AimDirection) -> bool:
    """Is d on the closed ccw arc from start to end?"""
    p, s, e = d.pseudo_angle(), start.pseudo_angle(), end.pseudo_angle()
    if s <= e:
        return s <= p <= e
    return p >= s or p <= e


# quadrant q covers pseudo-angles [q, q + 1]; q = 0 is (+u, +v)
QUADRANT_SIGNS = ((1, 1), (-1, 1), (-1, -1), (1, -1))
AXIS_AIMS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def quadrants_of(d: AimDirection) -> FrozenSet[int]:
    p = d.pseudo_angle()
    if p.denominator == 1:
        q = int(p)
        return frozenset({q % 4, (q - 1) % 4})
    return frozenset({int(p)})


@dataclass(frozen=True)
class Guard:
    gid: str
    a: Point3
    b: Point3

    def __post_init__(self):
        a = tuple(to_scalar(c) for c in self.a)
        b = tuple(to_scalar(c) for c in self.b)
        moving = [i for i in range(3) if a[i] != b[i]]
        if len(moving) != 1:
            raise InvalidGuard(f"Guard {self.gid} is not a positive-length axis-parallel segment",
                               subject=self.gid)
        axis = moving[0]
        if a[axis] > b[axis]:
            a, b = b, a
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)

    @property
    def axis(self) -> int:
        return next(i for i in range(3) if self.a[i] != self.b[i])

    @property
    def segment(self) -> Segment3:
        return Segment3(self.a, self.b, closed=False)

    @property
    def lo(self) -> Fraction:
        return self.a[self.axis]

    @property
    def hi(self) -> Fraction:
        return self.b[self.axis]

    def point_at(self, t: Fraction) -> Point3:
        p = list(self.a)
        p[self.axis] = t
        return tuple(p)

    def direction_vector(self, d: AimDirection) -> Tuple[int, int, int]:
        cu, cv = cyclic_frame(self.axis)
        out = [0, 0, 0]
        out[cu], out[cv] = d.u, d.v
        return tuple(out)

    def aim_from_vector(self, vector: Sequence) -> AimDirection:
        cu, cv = cyclic_frame(self.axis)
        if vector[self.axis] != 0:
            raise ValueError(f"Vector {vector} is not orthogonal to guard {self.gid}")
        return AimDirection(vector[cu], vector[cv])

    def breakpoints(self, grid: GridComplex) -> List[Fraction]:
        """Grid coordinates strictly inside the open guard"""
        return [c for c in grid.coords[self.axis] if self.lo < c < self.hi]

    def witness_points(self, grid: GridComplex, subdivision: int = 2) -> List[Point3]:
        """Candidate points on the open guard for visibility witnesses"""
        stops = [self.lo] + self.breakpoints(grid) + [self.hi]
        eps = grid.min_gap / 4
        params = set(stops[1:-1])
        for t0, t1 in zip(stops, stops[1:]):
            piece = t1 - t0
            params.add((t0 + t1) / 2)
            for i in range(1, subdivision + 1):
                params.add(t0 + piece * i / (subdivision + 1))
            near = min(eps, piece / 4)
            params.add(t0 + near)
            params.add(t1 - near)
        return [self.point_at(t) for t in sorted(params)]

    def to_line(self) -> str:
        coords = ' '.join(format_rational(c) for c in self.a + self.b)
        return f"guard {self.gid} {coords}"

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> 'Guard':
        if len(tokens) != 7:
            raise FormatError(f"Guard needs an id and six coordinates: {' '.join(tokens)}")
        values = [parse_rational(t) for t in tokens[1:]]
        return cls(tokens[0], tuple(values[:3]), tuple(values[3:]))

    def describe(self) -> str:
        lo, hi = format_rational(self.lo), format_rational(self.hi)
        fixed = ', '.join(f"{AXIS_NAMES[i]}={format_rational(self.a[i])}"
                          for i in range(3) if i != self.axis)
        return f"{self.gid}: {AXIS_NAMES[self.axis]} in ({lo}, {hi}), {fixed}"


def interior_quadrants(grid: GridComplex, guard: Guard) -> FrozenSet[int]:
    """Quadrants (in the guard's cyclic frame) holding interior cells next to the guard"""
    axis = guard.axis
    cu, cv = cyclic_frame(axis)
    iu = stratum_index(grid.coords[cu], guard.a[cu])
    iv = stratum_index(grid.coords[cv], guard.a[cv])
    if iu is None or iv is None:
        return frozenset()
    slabs = [k for k in range(len(grid.coords[axis]) - 1)
             if grid.coords[axis][k] < guard.hi and grid.coords[axis][k + 1] > guard.lo]
    present = set()
    for q, (su, sv) in enumerate(QUADRANT_SIGNS):
        ku = iu // 2 if iu % 2 else (iu // 2 if su > 0 else iu // 2 - 1)
        kv = iv // 2 if iv % 2 else (iv // 2 if sv > 0 else iv // 2 - 1)
        for k in slabs:
            cell = [0, 0, 0]
            cell[axis], cell[cu], cell[cv] = k, ku, kv
            if grid.is_interior(tuple(cell)):
                present.add(q)
                break
    return frozenset(present)


def nonblind_arc(grid: GridComplex, guard: Guard) -> Tuple[AimDirection, AimDirection, int]:
    """Leftmost and rightmost directions and the arc extent in quarter turns"""
    present = interior_quadrants(grid, guard)
    if not present or len(present) == 4:
        raise InvalidGuard(f"Guard {guard.gid} does not lie on the boundary", subject=guard.gid)
    starts = [q for q in present if (q - 1) % 4 not in present]
    if len(starts) != 1:
        raise InvalidGuard(f"Guard {guard.gid} sees two separate wedges", subject=guard.gid)
    first = starts[0]
    extent = len(present)
    left = AimDirection(*AXIS_AIMS[first])
    right = AimDirection(*AXIS_AIMS[(first + extent) % 4])
    return left, right, extent


def is_blind(grid: GridComplex, guard: Guard, d: AimDirection) -> bool:
    return not (quadrants_of(d) & interior_quadrants(grid, guard))


def resolve(grid: GridComplex, guard: Guard, d: AimDirection) -> AimDirection:
    """Concrete direction for a possibly symbolic aim"""
    if not d.symbolic:
        return d
    left, right, _ = nonblind_arc(grid, guard)
    return left if d.symbol == LEFTMOST else right


def require_nonblind(grid: GridComplex, guard: Guard, d: AimDirection) -> AimDirection:
    concrete = resolve(grid, guard, d)
    if is_blind(grid, guard, concrete):
        raise BlindEndpoint(f"Direction {concrete} of guard {guard.gid} is blind", subject=guard.gid)
    return concrete
