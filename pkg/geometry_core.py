"""Exact orthogonal-polyhedron geometry on a rational grid cell complex.

Coordinates are ``fractions.Fraction`` throughout. An instance arrives as a
list of axis-aligned faces (the interchange format) and is validated into an
``OrthoPolyhedron`` whose canonical substrate is a ``GridComplex``: the cuboid
cells cut out by all vertex coordinates, labelled interior or exterior.

Containment questions are answered on the *stratum lattice*: the grid split
into open cells, open facets, open edges and vertices. Each stratum either
lies inside the closed solid (some incident cell is interior) or misses it
entirely, so a convex set is inside the solid iff it meets no bad stratum.
"""
import logging
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from errors import (
    DegenerateFace,
    DegenerateSegment,
    FormatError,
    NotConnected,
    NotManifold,
    NotOrthogonal,
)

logger = logging.getLogger(__name__)

Scalar = Fraction
Point2 = Tuple[Fraction, Fraction]
Point3 = Tuple[Fraction, Fraction, Fraction]
Cell = Tuple[int, int, int]
# (axis, i, j, k): the index along ``axis`` is a plane index, the others are cell indices
Facet = Tuple[int, int, int, int]
Box = Tuple[Point3, Point3]

AXIS_NAMES = 'xyz'
ORTHOPOLY_HEADER = 'orthopoly v1'


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------

def to_scalar(value) -> Fraction:
    """Convert int, Fraction or 'p/q' string to an exact Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"Not an exact rational: {value!r}")


def parse_rational(token: str) -> Fraction:
    try:
        if '/' in token:
            num, den = token.split('/')
            if int(den) <= 0:
                raise ValueError(token)
            return Fraction(int(num), int(den))
        return Fraction(int(token))
    except ValueError:
        raise FormatError(f"Not a rational: {token!r}")


def format_rational(value: Fraction) -> str:
    value = to_scalar(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def point3(x, y, z) -> Point3:
    return (to_scalar(x), to_scalar(y), to_scalar(z))


def plane_axes(axis: int) -> Tuple[int, int]:
    """In-plane axes of a face orthogonal to ``axis``, in increasing order"""
    return tuple(a for a in range(3) if a != axis)


def lift(axis: int, offset: Fraction, p: Point2) -> Point3:
    u, v = plane_axes(axis)
    out = [Fraction(0)] * 3
    out[axis], out[u], out[v] = offset, p[0], p[1]
    return tuple(out)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Face:
    """Axis-aligned planar polygon with holes; rings use ``plane_axes(axis)``"""
    axis: int
    offset: Fraction
    rings: Tuple[Tuple[Point2, ...], ...]

    @property
    def outer(self) -> Tuple[Point2, ...]:
        return self.rings[0]

    @property
    def holes(self) -> Tuple[Tuple[Point2, ...], ...]:
        return self.rings[1:]

    def area(self) -> Fraction:
        return abs(sum(ring_area(r) for r in self.rings))


@dataclass(frozen=True)
class Segment3:
    a: Point3
    b: Point3
    closed: bool = False

    def __post_init__(self):
        if self.a == self.b:
            raise DegenerateSegment(f"Segment endpoints coincide at {self.a}", subject=self.a)

    @property
    def axis(self) -> Optional[int]:
        """Axis the segment runs along, or None when it is not axis-parallel"""
        moving = [i for i in range(3) if self.a[i] != self.b[i]]
        return moving[0] if len(moving) == 1 else None

    def point_at(self, lam: Fraction) -> Point3:
        return tuple(self.a[i] + lam * (self.b[i] - self.a[i]) for i in range(3))

    def midpoint(self) -> Point3:
        return self.point_at(Fraction(1, 2))


@dataclass(frozen=True)
class Edge:
    segment: Segment3
    axis: int
    kind: str  # 'convex' or 'reflex'


@dataclass(frozen=True)
class Notch:
    """Maximal reflex edge.

    ``exterior`` is the sign vector (0 on the notch axis) pointing into the
    one exterior quadrant around the edge.
    """
    edge: Segment3
    orientation: int
    exterior: Tuple[int, int, int]
    adjacent_faces: Tuple[int, int]
    fence_direction: Optional[Tuple[int, int, int]] = None

    @property
    def horizontal(self) -> bool:
        return self.orientation != 2

    @property
    def vertical(self) -> bool:
        return self.orientation == 2

    def describe(self) -> str:
        kind = 'vertical' if self.vertical else 'horizontal'
        a, b = self.edge.a, self.edge.b
        return (f"{kind} notch along {AXIS_NAMES[self.orientation]} "
                f"({', '.join(map(format_rational, a))}) -> ({', '.join(map(format_rational, b))})")


# ---------------------------------------------------------------------------
# Stratum lattice helpers (dimension independent)
# ---------------------------------------------------------------------------

def stratum_index(coords: Sequence[Fraction], value: Fraction) -> Optional[int]:
    """Lattice index of a coordinate: 2k on coords[k], 2k+1 strictly between"""
    k = bisect_left(coords, value)
    if k < len(coords) and coords[k] == value:
        return 2 * k
    if k == 0 or k == len(coords):
        return None
    return 2 * k - 1


def locate(coords: Sequence[Sequence[Fraction]], point: Sequence[Fraction]) -> Optional[Tuple[int, ...]]:
    index = []
    for axis_coords, value in zip(coords, point):
        idx = stratum_index(axis_coords, value)
        if idx is None:
            return None
        index.append(idx)
    return tuple(index)


def admissibility_lattice(interior: np.ndarray) -> np.ndarray:
    """Boolean lattice over strata: True where some incident cell is interior"""
    shape = tuple(2 * n + 1 for n in interior.shape)
    lattice = np.zeros(shape, dtype=bool)
    lattice[tuple(slice(1, None, 2) for _ in shape)] = interior
    structure = np.ones((3,) * interior.ndim, dtype=bool)
    return ndimage.binary_dilation(lattice, structure=structure)


def lattice_point_inside(coords, admissible: np.ndarray, point) -> bool:
    idx = locate(coords, point)
    return idx is not None and bool(admissible[idx])


def lattice_segment_inside(coords, admissible: np.ndarray, a, b) -> bool:
    """Exact walk: split [a, b] at every grid-plane crossing and test each piece"""
    lams = {Fraction(0), Fraction(1)}
    for axis, axis_coords in enumerate(coords):
        delta = b[axis] - a[axis]
        if delta == 0:
            continue
        lo, hi = (a[axis], b[axis]) if delta > 0 else (b[axis], a[axis])
        start = bisect_left(axis_coords, lo)
        for c in axis_coords[start:]:
            if c >= hi:
                break
            if c > lo:
                lams.add((c - a[axis]) / delta)
    ordered = sorted(lams)
    samples = list(ordered)
    samples.extend((l0 + l1) / 2 for l0, l1 in zip(ordered, ordered[1:]))
    for lam in samples:
        p = tuple(a[i] + lam * (b[i] - a[i]) for i in range(len(a)))
        if not lattice_point_inside(coords, admissible, p):
            return False
    return True


class _MuRange:
    """Sub-interval of [0, 1] with open or closed ends"""

    def __init__(self):
        self.low, self.low_open = Fraction(0), False
        self.high, self.high_open = Fraction(1), False

    def constrain(self, c1: Fraction, c0: Fraction, strict: bool) -> None:
        """Impose c1 * mu + c0 < 0 (strict) or <= 0"""
        if c1 == 0:
            if c0 > 0 or (strict and c0 == 0):
                self.low, self.high = Fraction(1), Fraction(0)
            return
        bound = -c0 / c1
        if c1 > 0:
            if bound < self.high or (bound == self.high and strict):
                self.high, self.high_open = bound, strict
        else:
            if bound > self.low or (bound == self.low and strict):
                self.low, self.low_open = bound, strict

    def empty(self) -> bool:
        if self.low < self.high:
            return False
        return not (self.low == self.high and not self.low_open and not self.high_open)


def _hull_meets_stratum(apex, lo, hi, coords, index) -> bool:
    """Does conv({apex} U box[lo, hi]) meet the open stratum at ``index``?"""
    mu = _MuRange()
    for axis, idx in enumerate(index):
        a, l, h = apex[axis], lo[axis], hi[axis]
        axis_coords = coords[axis]
        if idx % 2 == 0:
            c = axis_coords[idx // 2]
            mu.constrain(a - l, l - c, False)
            mu.constrain(h - a, c - h, False)
        else:
            p, q = axis_coords[idx // 2], axis_coords[idx // 2 + 1]
            mu.constrain(a - l, l - q, True)
            mu.constrain(h - a, p - h, True)
        if mu.empty():
            return False
    return True


def lattice_hull_inside(coords, admissible: np.ndarray, apex, lo, hi) -> bool:
    """Exact test that conv({apex} U [lo, hi]) lies in the closed solid"""
    dim = len(coords)
    index_lo, index_hi = [], []
    for axis in range(dim):
        blo = min(apex[axis], lo[axis])
        bhi = max(apex[axis], hi[axis])
        first = stratum_index(coords[axis], blo)
        last = stratum_index(coords[axis], bhi)
        if first is None or last is None:
            return False
        index_lo.append(first)
        index_hi.append(last)
    window = admissible[tuple(slice(s, e + 1) for s, e in zip(index_lo, index_hi))]
    bad = np.argwhere(~window)
    if bad.size == 0:
        return True
    offset = np.array(index_lo)
    for rel in bad:
        index = tuple(int(v) for v in rel + offset)
        if _hull_meets_stratum(apex, lo, hi, coords, index):
            return False
    return True


# ---------------------------------------------------------------------------
# Grid complex
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridComplex:
    """Cuboid cell decomposition with interior labels"""
    coords: Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...], Tuple[Fraction, ...]]
    interior: np.ndarray
    admissible: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.interior.setflags(write=False)
        lattice = admissibility_lattice(self.interior)
        lattice.setflags(write=False)
        object.__setattr__(self, 'admissible', lattice)

    @property
    def xs(self) -> Tuple[Fraction, ...]:
        return self.coords[0]

    @property
    def ys(self) -> Tuple[Fraction, ...]:
        return self.coords[1]

    @property
    def zs(self) -> Tuple[Fraction, ...]:
        return self.coords[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self.interior.shape)

    @property
    def min_gap(self) -> Fraction:
        """Minimum positive difference between any two vertex coordinates"""
        values = sorted(set(self.xs) | set(self.ys) | set(self.zs))
        gaps = [b - a for a, b in zip(values, values[1:])]
        return min(gaps) if gaps else Fraction(1)

    def is_interior(self, cell: Cell) -> bool:
        if any(c < 0 or c >= n for c, n in zip(cell, self.shape)):
            return False
        return bool(self.interior[cell])

    def interior_cells(self) -> List[Cell]:
        return [tuple(int(v) for v in c) for c in np.argwhere(self.interior)]

    def cell_box(self, cell: Cell) -> Box:
        lo = tuple(self.coords[a][cell[a]] for a in range(3))
        hi = tuple(self.coords[a][cell[a] + 1] for a in range(3))
        return lo, hi

    def cell_center(self, cell: Cell) -> Point3:
        lo, hi = self.cell_box(cell)
        return tuple((l + h) / 2 for l, h in zip(lo, hi))

    def cell_volume(self, cell: Cell) -> Fraction:
        lo, hi = self.cell_box(cell)
        return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2])

    def volume(self) -> Fraction:
        return sum((self.cell_volume(c) for c in self.interior_cells()), Fraction(0))

    def facet_cells(self, facet: Facet) -> Tuple[Cell, Cell]:
        """The two cells a facet separates (the lower one first)"""
        axis = facet[0]
        plus = list(facet[1:])
        minus = list(plus)
        minus[axis] -= 1
        return tuple(minus), tuple(plus)

    def facet_between(self, c1: Cell, c2: Cell) -> Facet:
        diff = [b - a for a, b in zip(c1, c2)]
        axis = next(i for i, d in enumerate(diff) if d != 0)
        upper = c2 if diff[axis] > 0 else c1
        return (axis,) + tuple(upper)

    def facet_label(self, facet: Facet) -> str:
        minus, plus = self.facet_cells(facet)
        inside = self.is_interior(minus) + self.is_interior(plus)
        return ('outside', 'boundary', 'internal')[inside]

    def facet_box(self, facet: Facet) -> Box:
        axis = facet[0]
        lo, hi = [], []
        for a in range(3):
            idx = facet[1 + a]
            if a == axis:
                lo.append(self.coords[a][idx])
                hi.append(self.coords[a][idx])
            else:
                lo.append(self.coords[a][idx])
                hi.append(self.coords[a][idx + 1])
        return tuple(lo), tuple(hi)

    def facet_area(self, facet: Facet) -> Fraction:
        lo, hi = self.facet_box(facet)
        area = Fraction(1)
        for a in range(3):
            if a != facet[0]:
                area *= hi[a] - lo[a]
        return area

    def facets(self, label: Optional[str] = None) -> Iterator[Facet]:
        for axis in range(3):
            dims = list(self.shape)
            dims[axis] += 1
            for idx in np.ndindex(*dims):
                facet = (axis,) + tuple(int(v) for v in idx)
                if label is None or self.facet_label(facet) == label:
                    yield facet

    def internal_facets(self) -> List[Facet]:
        found = []
        for axis in range(3):
            a = np.moveaxis(self.interior, axis, 0)
            both = a[1:] & a[:-1]
            u, v = plane_axes(axis)
            for plane, o1, o2 in np.argwhere(both):
                full = [0, 0, 0]
                full[axis], full[u], full[v] = int(plane) + 1, int(o1), int(o2)
                found.append((axis,) + tuple(full))
        return sorted(found)

    def boundary_facets(self) -> List[Facet]:
        found = []
        padded = np.pad(self.interior, 1)
        for axis in range(3):
            a = np.moveaxis(padded, axis, 0)
            change = a[1:] != a[:-1]
            u, v = plane_axes(axis)
            for plane, o1, o2 in np.argwhere(change):
                plane, o1, o2 = int(plane), int(o1), int(o2)
                if not (1 <= o1 <= self.shape[u] and 1 <= o2 <= self.shape[v]):
                    continue
                full = [0, 0, 0]
                full[axis], full[u], full[v] = plane, o1 - 1, o2 - 1
                found.append((axis,) + tuple(full))
        return sorted(found)

    def locate(self, point: Sequence[Fraction]) -> Optional[Tuple[int, int, int]]:
        return locate(self.coords, point)

    def contains_point(self, point: Sequence[Fraction]) -> bool:
        return lattice_point_inside(self.coords, self.admissible, point)

    def cell_of_point(self, point: Sequence[Fraction]) -> Optional[Cell]:
        """Interior cell whose closure holds the point, smallest index first"""
        idx = self.locate(point)
        if idx is None:
            return None
        choices = []
        for i in idx:
            choices.append((i // 2,) if i % 2 else (i // 2 - 1, i // 2))
        for cell in product(*choices):
            if self.is_interior(cell):
                return cell
        return None


# ---------------------------------------------------------------------------
# Polyhedron
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrthoPolyhedron:
    faces: Tuple[Face, ...]
    vertices: Tuple[Point3, ...]
    edges: Tuple[Edge, ...]
    grid: GridComplex = field(repr=False)
    facet_owner: Tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)

    def face_of_facet(self, facet: Facet) -> int:
        axis = facet[0]
        return int(self.facet_owner[axis][facet[1:]])


RawFace = Union[Face, Tuple[int, object, Sequence[Sequence[Tuple]]], Sequence[Sequence[Tuple]]]


def ring_area(ring: Sequence[Point2]) -> Fraction:
    """Signed shoelace area (positive for counterclockwise)"""
    total = Fraction(0)
    n = len(ring)
    for i in range(n):
        (x0, y0), (x1, y1) = ring[i], ring[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return total / 2


def _on_segment(p: Point2, a: Point2, b: Point2) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if cross != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def point_in_rings(p: Point2, rings: Sequence[Sequence[Point2]]) -> str:
    """Classify a point against a polygon with holes: inside, boundary or outside"""
    crossings = 0
    for ring in rings:
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            if _on_segment(p, a, b):
                return 'boundary'
            if (a[1] > p[1]) != (b[1] > p[1]):
                x_cross = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
                if x_cross > p[0]:
                    crossings += 1
    return 'inside' if crossings % 2 else 'outside'


def _segments_conflict(a: Point2, b: Point2, c: Point2, d: Point2) -> bool:
    """Axis-parallel segments that cross properly or overlap along a positive length"""
    ab_h, cd_h = a[1] == b[1], c[1] == d[1]
    if ab_h == cd_h:
        const = 1 if ab_h else 0
        run = 0 if ab_h else 1
        if a[const] != c[const]:
            return False
        lo = max(min(a[run], b[run]), min(c[run], d[run]))
        hi = min(max(a[run], b[run]), max(c[run], d[run]))
        return lo < hi
    if not ab_h:
        a, b, c, d = c, d, a, b
    # a-b horizontal, c-d vertical
    x, y = c[0], a[1]
    return (min(a[0], b[0]) < x < max(a[0], b[0])) and (min(c[1], d[1]) < y < max(c[1], d[1]))


def _normalize_ring(raw_ring, face_index: int) -> Tuple[Point2, ...]:
    ring = [tuple(to_scalar(v) for v in p) for p in raw_ring]
    if len(ring) > 1 and ring[0] == ring[-1]:
        ring.pop()
    cleaned: List[Point2] = []
    for p in ring:
        if not cleaned or cleaned[-1] != p:
            cleaned.append(p)
    if len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
        cleaned.pop()
    if len(cleaned) < 4:
        raise DegenerateFace(f"Face {face_index}: ring has fewer than 4 corners", subject=face_index)
    n = len(cleaned)
    for i in range(n):
        a, b = cleaned[i], cleaned[(i + 1) % n]
        if a[0] != b[0] and a[1] != b[1]:
            raise NotOrthogonal(f"Face {face_index}: ring edge {a} -> {b} is not axis-parallel",
                                subject=face_index)
    # drop collinear middle corners
    merged: List[Point2] = []
    for i in range(n):
        prev, cur, nxt = cleaned[i - 1], cleaned[i], cleaned[(i + 1) % n]
        if (prev[0] == cur[0] == nxt[0]) or (prev[1] == cur[1] == nxt[1]):
            continue
        merged.append(cur)
    if len(merged) < 4 or ring_area(merged) == 0:
        raise DegenerateFace(f"Face {face_index}: zero-area ring", subject=face_index)
    return tuple(merged)


def _normalize_face(raw: RawFace, index: int) -> Face:
    if isinstance(raw, Face):
        axis, offset, rings = raw.axis, raw.offset, raw.rings
    elif len(raw) == 3 and isinstance(raw[0], int):
        axis, offset, rings = raw[0], to_scalar(raw[1]), raw[2]
    else:
        points = [tuple(to_scalar(v) for v in p) for ring in raw for p in ring]
        constant = [a for a in range(3) if len({p[a] for p in points}) == 1]
        if not constant:
            raise NotOrthogonal(f"Face {index} is not parallel to any coordinate plane", subject=index)
        if len(constant) > 1:
            raise DegenerateFace(f"Face {index} is degenerate (collinear corners)", subject=index)
        axis = constant[0]
        offset = points[0][axis]
        u, v = plane_axes(axis)
        rings = [[(to_scalar(p[u]), to_scalar(p[v])) for p in ring] for ring in raw]
    if axis not in (0, 1, 2):
        raise NotOrthogonal(f"Face {index}: axis must be 0, 1 or 2", subject=index)
    normalized = tuple(_normalize_ring(r, index) for r in rings)
    if not normalized:
        raise DegenerateFace(f"Face {index} has no rings", subject=index)
    edges = []
    for ring in normalized:
        n = len(ring)
        edges.extend((ring[i], ring[(i + 1) % n]) for i in range(n))
    for i in range(len(edges)):
        for j in range(i + 1, len(edges)):
            if _segments_conflict(*edges[i], *edges[j]):
                raise DegenerateFace(f"Face {index}: ring edges cross or overlap", subject=index)
    return Face(axis=axis, offset=to_scalar(offset), rings=normalized)


def _rasterize(face: Face, coords) -> Tuple[int, np.ndarray]:
    """Plane index and facet mask covered by a face (scanline parity fill)"""
    u, v = plane_axes(face.axis)
    us, vs = coords[u], coords[v]
    mask = np.zeros((len(us) - 1, len(vs) - 1), dtype=bool)
    for ring in face.rings:
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            if a[0] != b[0]:
                continue
            iu = us.index(a[0])
            v0, v1 = sorted((vs.index(a[1]), vs.index(b[1])))
            mask[iu:, v0:v1] ^= True
    return coords[face.axis].index(face.offset), mask


@lru_cache(maxsize=None)
def _block_manifold_table() -> np.ndarray:
    """Lookup over 8-bit 2x2x2 occupancy codes: True when the boundary is a manifold there"""
    structure = ndimage.generate_binary_structure(3, 1)
    table = np.zeros(256, dtype=bool)
    for code in range(256):
        block = np.array([(code >> bit) & 1 for bit in range(8)], dtype=bool).reshape(2, 2, 2)
        if block.all() or not block.any():
            table[code] = True
            continue
        _, inside = ndimage.label(block, structure=structure)
        _, outside = ndimage.label(~block, structure=structure)
        table[code] = inside == 1 and outside == 1
    return table


def _vertex_codes(padded: np.ndarray) -> np.ndarray:
    code = np.zeros(tuple(n - 1 for n in padded.shape), dtype=np.int64)
    bit = 0
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                sub = padded[dx:dx + code.shape[0], dy:dy + code.shape[1], dz:dz + code.shape[2]]
                code |= sub.astype(np.int64) << bit
                bit += 1
    return code


def _edge_quadrants(padded: np.ndarray, axis: int) -> Tuple[np.ndarray, ...]:
    """Occupancy of the four cells around every grid edge along ``axis``.

    Returned arrays are indexed [slab, pu, pv] where (pu, pv) are lattice
    point indices of the two other axes; order is (--, +-, -+, ++).
    """
    a = np.moveaxis(padded, axis, 0)[1:-1]
    return a[:, :-1, :-1], a[:, 1:, :-1], a[:, :-1, 1:], a[:, 1:, 1:]


def validate_polyhedron(faces: Sequence[RawFace]) -> OrthoPolyhedron:
    """Validate a raw face list into an OrthoPolyhedron with its grid"""
    if not faces:
        raise DegenerateFace("Empty face list")
    normalized = tuple(_normalize_face(f, i) for i, f in enumerate(faces))

    values = [set(), set(), set()]
    for face in normalized:
        values[face.axis].add(face.offset)
        u, v = plane_axes(face.axis)
        for ring in face.rings:
            for p in ring:
                values[u].add(p[0])
                values[v].add(p[1])
    if any(len(vals) < 2 for vals in values):
        raise DegenerateFace("Faces do not span three dimensions")
    coords = tuple(tuple(sorted(vals)) for vals in values)
    shape = tuple(len(c) - 1 for c in coords)

    cover = []
    owner = []
    for axis in range(3):
        dims = list(shape)
        dims[axis] += 1
        cover.append(np.zeros(dims, dtype=np.int64))
        owner.append(np.full(dims, -1, dtype=np.int64))
    for index, face in enumerate(normalized):
        plane, mask = _rasterize(face, coords)
        view_cover = np.moveaxis(cover[face.axis], face.axis, 0)[plane]
        view_owner = np.moveaxis(owner[face.axis], face.axis, 0)[plane]
        if (view_cover[mask] > 0).any():
            raise DegenerateFace(f"Face {index} overlaps another face", subject=index)
        view_cover[mask] += 1
        view_owner[mask] = index

    # parity ray cast along +x from every cell center
    crossings = np.cumsum(cover[0][::-1], axis=0)[::-1]
    interior = (crossings[1:] % 2).astype(bool)
    if not interior.any():
        raise NotManifold("Faces enclose no volume")

    padded = np.pad(interior, 1)
    for axis in range(3):
        change = np.moveaxis(padded, axis, 0)
        change = (change[1:] != change[:-1])[:, 1:-1, 1:-1]
        covered = np.moveaxis(cover[axis], axis, 0) > 0
        mismatch = np.argwhere(change != covered)
        if mismatch.size:
            raise NotManifold("Faces do not bound a closed solid (an edge has other than two faces)",
                              subject=(axis,) + tuple(int(v) for v in mismatch[0]))

    for axis in range(3):
        q = _edge_quadrants(padded, axis)
        diagonal = (q[0] & q[3] & ~q[1] & ~q[2]) | (q[1] & q[2] & ~q[0] & ~q[3])
        if diagonal.any():
            slab, pu, pv = (int(v) for v in np.argwhere(diagonal)[0])
            u, v = plane_axes(axis)
            where = [Fraction(0)] * 3
            where[axis] = coords[axis][slab]
            where[u], where[v] = coords[u][pu], coords[v][pv]
            raise NotManifold(f"Edge through {tuple(map(format_rational, where))} has four incident faces",
                              subject=tuple(where))
    bad_vertices = ~_block_manifold_table()[_vertex_codes(padded)]
    if bad_vertices.any():
        i, j, k = (int(v) for v in np.argwhere(bad_vertices)[0])
        where = (coords[0][i], coords[1][j], coords[2][k])
        raise NotManifold(f"Vertex {tuple(map(format_rational, where))} has a pinched neighbourhood",
                          subject=where)

    structure = ndimage.generate_binary_structure(3, 1)
    _, solid_parts = ndimage.label(interior, structure=structure)
    if solid_parts != 1:
        raise NotConnected(f"Solid has {solid_parts} components", subject=solid_parts)
    _, outside_parts = ndimage.label(~padded, structure=structure)
    if outside_parts != 1:
        raise NotConnected(f"Boundary has {outside_parts} components", subject=outside_parts)

    grid = GridComplex(coords=coords, interior=interior)
    vertices = sorted({lift(f.axis, f.offset, p) for f in normalized for r in f.rings for p in r})
    edges = _classify_edges(grid)
    logger.info("Validated polyhedron: %d faces, grid %s, %d interior cells",
                len(normalized), shape, int(interior.sum()))
    return OrthoPolyhedron(faces=normalized, vertices=tuple(vertices), edges=tuple(edges),
                           grid=grid, facet_owner=tuple(owner))


def _edge_runs(grid: GridComplex) -> Iterator[Tuple[int, int, int, int, int, int]]:
    """Maximal runs of equal quadrant pattern: (axis, pu, pv, first slab, end slab, code)"""
    padded = np.pad(grid.interior, 1)
    for axis in range(3):
        q = _edge_quadrants(padded, axis)
        code = (q[0].astype(np.int64) | q[1].astype(np.int64) << 1
                | q[2].astype(np.int64) << 2 | q[3].astype(np.int64) << 3)
        slabs, nu, nv = code.shape
        for pu in range(nu):
            for pv in range(nv):
                run = code[:, pu, pv]
                start = 0
                for s in range(1, slabs + 1):
                    if s == slabs or run[s] != run[start]:
                        yield axis, pu, pv, start, s, int(run[start])
                        start = s


def _edge_kind(code: int) -> Optional[str]:
    count = bin(code).count('1')
    if count == 1:
        return 'convex'
    if count == 3:
        return 'reflex'
    return None


def _run_segment(grid: GridComplex, axis: int, pu: int, pv: int, s0: int, s1: int) -> Segment3:
    u, v = plane_axes(axis)
    a = [Fraction(0)] * 3
    b = [Fraction(0)] * 3
    a[axis], b[axis] = grid.coords[axis][s0], grid.coords[axis][s1]
    a[u] = b[u] = grid.coords[u][pu]
    a[v] = b[v] = grid.coords[v][pv]
    return Segment3(tuple(a), tuple(b), closed=True)


def _classify_edges(grid: GridComplex) -> List[Edge]:
    edges = []
    for axis, pu, pv, s0, s1, code in _edge_runs(grid):
        kind = _edge_kind(code)
        if kind:
            edges.append(Edge(_run_segment(grid, axis, pu, pv, s0, s1), axis, kind))
    return sorted(edges, key=lambda e: (e.segment.a, e.segment.b))


def build_grid(P: OrthoPolyhedron) -> GridComplex:
    return P.grid


def genus(P: OrthoPolyhedron) -> int:
    """Genus of the boundary from the Euler characteristic of its facet mesh"""
    padded = np.pad(P.grid.interior, 1)
    faces = 0
    for axis in range(3):
        a = np.moveaxis(padded, axis, 0)
        faces += int((a[1:] != a[:-1]).sum())
    edges = 0
    for axis in range(3):
        q = _edge_quadrants(padded, axis)
        same = (q[0] == q[1]) & (q[1] == q[2]) & (q[2] == q[3])
        edges += int((~same).sum())
    codes = _vertex_codes(padded)
    vertices = int(((codes != 0) & (codes != 255)).sum())
    chi = vertices - edges + faces
    return (2 - chi) // 2


def notches(P: OrthoPolyhedron) -> List[Notch]:
    """Maximal reflex edges, merged along runs with the same exterior quadrant"""
    grid = P.grid
    found = []
    for axis, pu, pv, s0, s1, code in _edge_runs(grid):
        if _edge_kind(code) != 'reflex':
            continue
        missing = [bit for bit in range(4) if not (code >> bit) & 1][0]
        su = 1 if missing & 1 else -1
        sv = 1 if missing & 2 else -1
        u, v = plane_axes(axis)
        exterior = [0, 0, 0]
        exterior[u], exterior[v] = su, sv
        segment = _run_segment(grid, axis, pu, pv, s0, s1)
        # facets bounding the exterior quadrant at the first slab
        cu = pu if su > 0 else pu - 1
        cv = pv if sv > 0 else pv - 1
        facet_u = [0, 0, 0]
        facet_u[axis], facet_u[u], facet_u[v] = s0, pu, cv
        facet_v = [0, 0, 0]
        facet_v[axis], facet_v[u], facet_v[v] = s0, cu, pv
        adjacent = (P.face_of_facet((u,) + tuple(facet_u)), P.face_of_facet((v,) + tuple(facet_v)))
        found.append(Notch(edge=segment, orientation=axis, exterior=tuple(exterior),
                           adjacent_faces=adjacent))
    found.sort(key=lambda n: (n.edge.a, n.edge.b))
    logger.debug("Found %d notches", len(found))
    return found


def segment_in_polyhedron(G: GridComplex, s: Segment3) -> bool:
    return lattice_segment_inside(G.coords, G.admissible, s.a, s.b)


def hull_in_polyhedron(G: GridComplex, apex: Point3, box: Box) -> bool:
    """Exact test that the convex hull of ``apex`` and a closed box lies in the solid"""
    lo, hi = box
    return lattice_hull_inside(G.coords, G.admissible, apex, lo, hi)


def polyhedron_volume(P: OrthoPolyhedron) -> Fraction:
    """Divergence theorem with the field (x, 0, 0): sum of x * n_x over x-faces"""
    grid = P.grid
    total = Fraction(0)
    for index, face in enumerate(P.faces):
        if face.axis != 0:
            continue
        plane, mask = _rasterize(face, grid.coords)
        signs = set()
        for j, k in np.argwhere(mask):
            lower = grid.is_interior((plane - 1, int(j), int(k)))
            signs.add(1 if lower else -1)
        if len(signs) == 1:
            total += signs.pop() * face.offset * face.area()
        else:
            for j, k in np.argwhere(mask):
                facet = (0, plane, int(j), int(k))
                sign = 1 if grid.is_interior((plane - 1, int(j), int(k))) else -1
                total += sign * face.offset * grid.facet_area(facet)
    return total


_RAY_DIRECTIONS = (
    (Fraction(1), Fraction(1, 7919), Fraction(1, 104729)),
    (Fraction(1, 3), Fraction(1), Fraction(2, 7907)),
    (Fraction(3, 1009), Fraction(5, 1013), Fraction(1)),
)


def point_in_polyhedron(P: OrthoPolyhedron, p: Sequence) -> bool:
    """Parity ray cast against the face list; boundary points are inside"""
    p = tuple(to_scalar(v) for v in p)
    for face in P.faces:
        u, v = plane_axes(face.axis)
        if p[face.axis] == face.offset and point_in_rings((p[u], p[v]), face.rings) != 'outside':
            return True
    for direction in _RAY_DIRECTIONS:
        crossings = 0
        degenerate = False
        for face in P.faces:
            d = direction[face.axis]
            lam = (face.offset - p[face.axis]) / d
            if lam <= 0:
                continue
            u, v = plane_axes(face.axis)
            hit = (p[u] + lam * direction[u], p[v] + lam * direction[v])
            where = point_in_rings(hit, face.rings)
            if where == 'boundary':
                degenerate = True
                break
            if where == 'inside':
                crossings += 1
        if not degenerate:
            return crossings % 2 == 1
    raise DegenerateSegment(f"Every test ray through {p} grazes an edge", subject=p)


# ---------------------------------------------------------------------------
# Faces from cell sets
# ---------------------------------------------------------------------------

def trace_rings(mask: np.ndarray, us: Sequence[Fraction], vs: Sequence[Fraction]) -> List[Tuple[Point2, ...]]:
    """Boundary rings of a square set (region on the left, so outers are ccw, holes cw)"""
    outgoing: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
    nu, nv = mask.shape

    def filled(i, j):
        return 0 <= i < nu and 0 <= j < nv and bool(mask[i, j])

    for i, j in np.argwhere(mask):
        i, j = int(i), int(j)
        sides = (
            ((i, j), (i + 1, j), filled(i, j - 1)),
            ((i + 1, j), (i + 1, j + 1), filled(i + 1, j)),
            ((i + 1, j + 1), (i, j + 1), filled(i, j + 1)),
            ((i, j + 1), (i, j), filled(i - 1, j)),
        )
        for start, end, neighbour in sides:
            if not neighbour:
                outgoing.setdefault(start, []).append(end)

    def turn_rank(incoming, candidate):
        cross = incoming[0] * candidate[1] - incoming[1] * candidate[0]
        if cross > 0:
            return 0
        if cross == 0:
            return 1
        return 2

    rings = []
    while outgoing:
        start = min(outgoing)
        ring = []
        previous, current = None, start
        while True:
            ring.append(current)
            options = outgoing[current]
            if previous is not None:
                incoming = (current[0] - previous[0], current[1] - previous[1])
                here = current
                options.sort(key=lambda e: turn_rank(incoming, (e[0] - here[0], e[1] - here[1])))
            nxt = options.pop(0)
            if not options:
                del outgoing[current]
            previous, current = current, nxt
            if current == start:
                break
        corners = []
        n = len(ring)
        for idx in range(n):
            a, b, c = ring[idx - 1], ring[idx], ring[(idx + 1) % n]
            if (a[0] == b[0] == c[0]) or (a[1] == b[1] == c[1]):
                continue
            corners.append((us[b[0]], vs[b[1]]))
        rings.append(tuple(corners))
    return rings


def faces_from_cells(coords, interior: np.ndarray) -> List[Face]:
    """Maximal faces of a cell set, one per edge-connected oriented facet patch"""
    padded = np.pad(interior, 1)
    faces = []
    structure = ndimage.generate_binary_structure(2, 1)
    for axis in range(3):
        u, v = plane_axes(axis)
        a = np.moveaxis(padded, axis, 0)
        for plane in range(interior.shape[axis] + 1):
            below, above = a[plane][1:-1, 1:-1], a[plane + 1][1:-1, 1:-1]
            for patch in (below & ~above, above & ~below):
                labels, count = ndimage.label(patch, structure=structure)
                for label in range(1, count + 1):
                    rings = trace_rings(labels == label, coords[u], coords[v])
                    rings.sort(key=ring_area, reverse=True)
                    faces.append(Face(axis, coords[axis][plane], tuple(rings)))
    return faces


def polyhedron_from_cells(coords, interior: np.ndarray) -> OrthoPolyhedron:
    return validate_polyhedron(faces_from_cells(coords, np.asarray(interior, dtype=bool)))


# ---------------------------------------------------------------------------
# orthopoly v1 text format
# ---------------------------------------------------------------------------

def parse_orthopoly(text: str) -> Tuple[List[Face], Dict[str, Fraction]]:
    """Parse an instance file into raw faces and named coordinates"""
    lines = [ln.split('#', 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != ORTHOPOLY_HEADER:
        raise FormatError(f"Missing header '{ORTHOPOLY_HEADER}'")
    names: Dict[str, Fraction] = {}

    def value(token: str) -> Fraction:
        if token in names:
            return names[token]
        return parse_rational(token)

    faces: List[Face] = []
    current: Optional[Tuple[int, Fraction, List]] = None
    for line in lines[1:]:
        parts = line.split()
        keyword = parts[0]
        if keyword == 'coords':
            continue
        if keyword == 'coord':
            if len(parts) != 3:
                raise FormatError(f"Bad coord line: {line}")
            names[parts[1]] = parse_rational(parts[2])
        elif keyword == 'face':
            if len(parts) != 3 or parts[1] not in AXIS_NAMES:
                raise FormatError(f"Bad face line: {line}")
            if current is not None:
                faces.append(Face(current[0], current[1], tuple(current[2])))
            current = (AXIS_NAMES.index(parts[1]), value(parts[2]), [])
        elif keyword == 'ring':
            if current is None:
                raise FormatError("Ring before any face")
            numbers = [value(t) for t in parts[1:]]
            if len(numbers) % 2 or not numbers:
                raise FormatError(f"Ring needs coordinate pairs: {line}")
            current[2].append(tuple(zip(numbers[0::2], numbers[1::2])))
        else:
            raise FormatError(f"Unknown keyword '{keyword}'")
    if current is not None:
        faces.append(Face(current[0], current[1], tuple(current[2])))
    return faces, names


def serialize_orthopoly(faces: Sequence[Face], names: Optional[Dict[str, Fraction]] = None) -> str:
    out = [ORTHOPOLY_HEADER]
    if names:
        out.append('coords')
        for name in sorted(names):
            out.append(f"coord {name} {format_rational(names[name])}")
    for face in faces:
        out.append(f"face {AXIS_NAMES[face.axis]} {format_rational(face.offset)}")
        for ring in face.rings:
            flat = ' '.join(format_rational(c) for p in ring for c in p)
            out.append(f"ring {flat}")
    return '\n'.join(out) + '\n'


def read_instance(path: str) -> OrthoPolyhedron:
    with open(path, 'r') as f:
        faces, _ = parse_orthopoly(f.read())
    return validate_polyhedron(faces)
