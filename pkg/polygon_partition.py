"""Convex partition of a polygon with holes by reflex-angle cuts, and open-edge guards.

Each reflex vertex is resolved by one cut along (a rational stand-in for)
its angle bisector, up to the first boundary point the ray meets. A cut
that lands on another boundary component merges it in through a doubled
slit edge; any other cut splits a region in two. With r reflex vertices and
h holes that is r cuts, h of them merges, so r - h + 1 convex pieces.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from errors import DegenerateFace, FormatError, PartitionError, PointOutside
from geometry_core import Point2, format_rational, parse_rational, point_in_rings, ring_area, to_scalar
from searchlights import AimDirection

logger = logging.getLogger(__name__)

POLY2_HEADER = 'poly2 v1'

Ring = Tuple[Point2, ...]


def _sub(a: Point2, b: Point2) -> Point2:
    return a[0] - b[0], a[1] - b[1]


def _cross(a: Point2, b: Point2) -> Fraction:
    return a[0] * b[1] - a[1] * b[0]


def _on_segment(p: Point2, a: Point2, b: Point2) -> bool:
    if _cross(_sub(b, a), _sub(p, a)) != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def _segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool:
    """Edges of a simple ring may meet only at a shared endpoint"""
    shared = {a, b} & {c, d}
    d1, d2 = _cross(_sub(b, a), _sub(c, a)), _cross(_sub(b, a), _sub(d, a))
    if d1 == 0 and d2 == 0:
        if {a, b} == {c, d}:
            return True
        return (any(p not in shared and _on_segment(p, a, b) for p in (c, d))
                or any(p not in shared and _on_segment(p, c, d) for p in (a, b)))
    d3, d4 = _cross(_sub(d, c), _sub(a, c)), _cross(_sub(d, c), _sub(b, c))
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    for p, s, t in ((c, a, b), (d, a, b), (a, c, d), (b, c, d)):
        if p not in shared and _on_segment(p, s, t):
            return True
    return False


def _clean_ring(raw: Sequence[Sequence]) -> List[Point2]:
    ring = [tuple(to_scalar(v) for v in p) for p in raw]
    out: List[Point2] = []
    for p in ring:
        if not out or out[-1] != p:
            out.append(p)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        for i in range(len(out)):
            prev, cur, nxt = out[i - 1], out[i], out[(i + 1) % len(out)]
            if _cross(_sub(cur, prev), _sub(nxt, cur)) == 0:
                del out[i]
                changed = True
                break
    return out


@dataclass(frozen=True)
class Polygon2:
    """Outer ring counterclockwise, holes clockwise; orientation is normalized on construction"""
    outer: Ring
    holes: Tuple[Ring, ...] = ()

    def __post_init__(self):
        outer = _clean_ring(self.outer)
        if len(outer) < 3 or ring_area(outer) == 0:
            raise DegenerateFace("Outer ring has zero area")
        if ring_area(outer) < 0:
            outer.reverse()
        holes = []
        for index, raw in enumerate(self.holes):
            hole = _clean_ring(raw)
            if len(hole) < 3 or ring_area(hole) == 0:
                raise DegenerateFace(f"Hole {index} has zero area", subject=index)
            if ring_area(hole) > 0:
                hole.reverse()
            holes.append(tuple(hole))
        object.__setattr__(self, 'outer', tuple(outer))
        object.__setattr__(self, 'holes', tuple(holes))
        corners = self.vertices()
        if len(set(corners)) != len(corners):
            raise DegenerateFace("A vertex is visited twice (pinched ring)")
        edges = self.edges()
        for i in range(len(edges)):
            for j in range(i + 1, len(edges)):
                if _segments_cross(*edges[i], *edges[j]):
                    raise DegenerateFace(f"Edges {i} and {j} cross or touch", subject=(i, j))
        for index, hole in enumerate(self.holes):
            if any(point_in_rings(p, [self.outer]) != 'inside' for p in hole):
                raise DegenerateFace(f"Hole {index} is not strictly inside the outer ring", subject=index)
            for other, ring in enumerate(self.holes):
                if other != index and point_in_rings(hole[0], [ring]) != 'outside':
                    raise DegenerateFace(f"Hole {index} lies inside hole {other}", subject=index)

    @property
    def rings(self) -> Tuple[Ring, ...]:
        return (self.outer,) + self.holes

    def edges(self) -> List[Tuple[Point2, Point2]]:
        """Outer ring edges first, then each hole's, in ring order"""
        out = []
        for ring in self.rings:
            n = len(ring)
            out.extend((ring[i], ring[(i + 1) % n]) for i in range(n))
        return out

    def reflex_vertices(self) -> List[Point2]:
        return [ring[i] for ring in self.rings for i in range(len(ring)) if _reflex_at(ring, i)]

    @property
    def r(self) -> int:
        return len(self.reflex_vertices())

    @property
    def h(self) -> int:
        return len(self.holes)

    def area(self) -> Fraction:
        return sum((ring_area(ring) for ring in self.rings), Fraction(0))

    def vertices(self) -> List[Point2]:
        return [p for ring in self.rings for p in ring]


def _reflex_at(ring: Sequence[Point2], i: int) -> bool:
    prev, cur, nxt = ring[i - 1], ring[i], ring[(i + 1) % len(ring)]
    return _cross(_sub(cur, prev), _sub(nxt, cur)) < 0


# ---------------------------------------------------------------------------
# Partition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cut:
    vertex: Point2
    direction: Point2
    hit: Point2
    perturbed: bool
    outcome: str  # 'split' or 'hole-merge'


@dataclass
class ConvexPartition:
    pieces: List[Ring]
    cut_log: List[Cut] = field(default_factory=list)
    degenerate_edges: List[Tuple[Point2, Point2]] = field(default_factory=list)

    @property
    def splits(self) -> int:
        return sum(1 for c in self.cut_log if c.outcome == 'split')

    @property
    def merges(self) -> int:
        return sum(1 for c in self.cut_log if c.outcome == 'hole-merge')


def _unit_length(v: Point2) -> Fraction:
    """Rational stand-in for the Euclidean length"""
    squared = v[0] * v[0] + v[1] * v[1]
    root = math.isqrt(squared.numerator * squared.denominator)
    if root * root == squared.numerator * squared.denominator:
        return Fraction(root, squared.denominator)
    return Fraction(math.sqrt(squared)).limit_denominator(10 ** 6)


def _bisector(prev: Point2, v: Point2, nxt: Point2) -> Point2:
    a, b = _sub(prev, v), _sub(nxt, v)
    la, lb = _unit_length(a), _unit_length(b)
    return -(a[0] / la + b[0] / lb), -(a[1] / la + b[1] / lb)


def _inside_angle(prev: Point2, v: Point2, nxt: Point2, d: Point2) -> bool:
    """Is d strictly inside the interior angle at v (interior to the left of the ring)?"""
    out_dir, in_dir = _sub(nxt, v), _sub(prev, v)
    start = AimDirection(*out_dir).pseudo_angle()
    span = (AimDirection(*in_dir).pseudo_angle() - start) % 4
    at = (AimDirection(*d).pseudo_angle() - start) % 4
    return 0 < at < span


@dataclass(frozen=True)
class _Hit:
    ring: int
    edge: int
    point: Point2
    distance: Fraction
    at_vertex: bool


def _cast(rings: List[List[Point2]], ring_index: int, k: int, d: Point2) -> Optional[_Hit]:
    """Nearest boundary point the ray from rings[ring_index][k] along d meets"""
    origin = rings[ring_index][k]
    n_own = len(rings[ring_index])
    skip = {(ring_index, k), (ring_index, (k - 1) % n_own)}
    best: Optional[_Hit] = None
    for ri, ring in enumerate(rings):
        n = len(ring)
        for ei in range(n):
            if (ri, ei) in skip:
                continue
            a, b = ring[ei], ring[(ei + 1) % n]
            edge = _sub(b, a)
            denom = _cross(d, edge)
            rel = _sub(a, origin)
            if denom == 0:
                if _cross(rel, d) != 0:
                    continue
                # collinear: the ray runs along the edge; report its nearer endpoint as a vertex hit
                ahead = [p for p in (a, b) if (p[0] - origin[0]) * d[0] + (p[1] - origin[1]) * d[1] > 0]
                for p in ahead:
                    lam = (_sub(p, origin)[0] * d[0] + _sub(p, origin)[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])
                    if best is None or lam < best.distance:
                        best = _Hit(ri, ei, p, lam, True)
                continue
            lam = _cross(rel, edge) / denom
            mu = _cross(rel, d) / denom
            if lam <= 0 or mu < 0 or mu > 1:
                continue
            if _cross(edge, _sub(origin, a)) <= 0 and 0 < mu < 1:
                continue
            point = (origin[0] + lam * d[0], origin[1] + lam * d[1])
            at_vertex = mu == 0 or mu == 1
            if best is None or lam < best.distance or (lam == best.distance and at_vertex):
                best = _Hit(ri, ei, point, lam, at_vertex)
    return best


def _perturbed_cast(rings, ring_index: int, k: int, d: Point2) -> Tuple[Point2, _Hit]:
    ring = rings[ring_index]
    n = len(ring)
    prev, v, nxt = ring[k - 1], ring[k], ring[(k + 1) % n]
    # rotate toward the neighbour on the lower-indexed adjacent edge
    toward = prev if k > 0 else nxt
    side = _cross(d, _sub(toward, v))
    perp = (-d[1], d[0]) if side > 0 else (d[1], -d[0])
    for j in range(4, 64):
        eps = Fraction(1, 2 ** j)
        rotated = (d[0] + eps * perp[0], d[1] + eps * perp[1])
        if not _inside_angle(prev, v, nxt, rotated):
            continue
        hit = _cast(rings, ring_index, k, rotated)
        if hit is not None and not hit.at_vertex:
            return rotated, hit
    raise PartitionError(f"No clean cut direction from reflex vertex {v}", subject=v)


def _forward(ring: Sequence[Point2], start: int, stop: int) -> List[Point2]:
    """ring[start], ring[start+1], ..., ring[stop] with wraparound"""
    n = len(ring)
    out = [ring[start % n]]
    i = start % n
    while i != stop % n:
        i = (i + 1) % n
        out.append(ring[i])
    return out


def _next_reflex(regions: List[List[List[Point2]]]) -> Optional[Tuple[int, int, int]]:
    best = None
    for gi, rings in enumerate(regions):
        for ri, ring in enumerate(rings):
            for k in range(len(ring)):
                if _reflex_at(ring, k):
                    key = (ring[k], gi, ri, k)
                    if best is None or key < best:
                        best = key
    return None if best is None else best[1:]


def _contains(ring: Sequence[Point2], other: Sequence[Point2]) -> bool:
    return any(point_in_rings(p, [ring]) == 'inside' for p in other)


def bisector_partition(P: Polygon2, e: int = 0) -> ConvexPartition:
    """Cut every reflex vertex, smallest first, until every piece is convex"""
    if not 0 <= e < len(P.edges()):
        raise PartitionError(f"Edge {e} is not an edge of the polygon", subject=e)
    regions: List[List[List[Point2]]] = [[list(ring) for ring in P.rings]]
    partition = ConvexPartition(pieces=[])
    expected = P.r
    while True:
        found = _next_reflex(regions)
        if found is None:
            break
        gi, ri, k = found
        rings = regions[gi]
        ring = rings[ri]
        v = ring[k]
        d = _bisector(ring[k - 1], v, ring[(k + 1) % len(ring)])
        hit = _cast(rings, ri, k, d)
        perturbed = hit is None or hit.at_vertex
        if perturbed:
            d, hit = _perturbed_cast(rings, ri, k, d)
        h = hit.point
        if hit.ring == ri:
            outcome = 'split'
            first = [v] + _forward(ring, k + 1, hit.edge) + [h]
            second = [v, h] + _forward(ring, hit.edge + 1, k - 1)
            if ri == 0:
                holes = rings[1:]
                new = [[first] + [hr for hr in holes if _contains(first, hr)],
                       [second] + [hr for hr in holes if not _contains(first, hr)]]
                regions[gi:gi + 1] = new
            else:
                pos, neg = (first, second) if ring_area(first) > 0 else (second, first)
                inner = [hr for j, hr in enumerate(rings) if j not in (0, ri) and _contains(pos, hr)]
                rest = [hr for j, hr in enumerate(rings) if j not in (0, ri) and not _contains(pos, hr)]
                regions[gi:gi + 1] = [[rings[0], neg] + rest, [pos] + inner]
        else:
            outcome = 'hole-merge'
            other = rings[hit.ring]
            loop = _forward(other, hit.edge + 1, hit.edge)
            combined = [v, h] + loop + [h, v] + _forward(ring, k + 1, k - 1)
            keep = [r for j, r in enumerate(rings) if j not in (ri, hit.ring)]
            if 0 in (ri, hit.ring):
                regions[gi] = [combined] + keep
            else:
                regions[gi] = [keep[0], combined] + keep[1:]
            partition.degenerate_edges.append((v, h))
        partition.cut_log.append(Cut(v, d, h, perturbed, outcome))
        logger.debug("Cut from %s to %s: %s%s", v, h, outcome, ' (perturbed)' if perturbed else '')
        if len(partition.cut_log) > expected:
            raise PartitionError("Cut count exceeds the reflex vertex count", subject=v)
    for rings in regions:
        if len(rings) != 1:
            raise PartitionError("A piece still has a hole")
        partition.pieces.append(tuple(rings[0]))
    logger.info("Partitioned polygon (r=%d, h=%d) into %d convex pieces", P.r, P.h, len(partition.pieces))
    return partition


# ---------------------------------------------------------------------------
# Guards
# ---------------------------------------------------------------------------

@dataclass
class OpenEdgeGuardSet:
    guards: List[int]
    coverage: Dict[int, int]

    def segments(self, P: Polygon2) -> List[Tuple[Point2, Point2]]:
        edges = P.edges()
        return [edges[i] for i in self.guards]


def _boundary_edges_of_piece(P: Polygon2, piece: Ring) -> List[int]:
    """Input edges that contain a positive-length boundary segment of the piece"""
    edges = P.edges()
    found = set()
    n = len(piece)
    for i in range(n):
        p, q = piece[i], piece[(i + 1) % n]
        for index, (a, b) in enumerate(edges):
            if _on_segment(p, a, b) and _on_segment(q, a, b):
                found.add(index)
    return sorted(found)


def select_open_edge_guards(P: Polygon2, partition: ConvexPartition, e: int = 0) -> OpenEdgeGuardSet:
    """e first, then for each uncovered piece the lowest-indexed edge under it"""
    guards = [e]
    coverage: Dict[int, int] = {}
    for index, piece in enumerate(partition.pieces):
        under = _boundary_edges_of_piece(P, piece)
        if not under:
            raise PartitionError(f"Piece {index} touches no input edge", subject=index)
        chosen = next((g for g in guards if g in under), None)
        if chosen is None:
            chosen = under[0]
            guards.append(chosen)
        coverage[index] = chosen
    return OpenEdgeGuardSet(guards=guards, coverage=coverage)


# ---------------------------------------------------------------------------
# Visibility
# ---------------------------------------------------------------------------

def segment_in_polygon(P: Polygon2, a: Point2, b: Point2) -> bool:
    """Exact test that the closed segment stays in the closed polygon"""
    rings = P.rings
    if point_in_rings(a, rings) == 'outside' or point_in_rings(b, rings) == 'outside':
        return False
    if a == b:
        return True
    d = _sub(b, a)
    params = {Fraction(0), Fraction(1)}
    for c, e in P.edges():
        edge = _sub(e, c)
        denom = _cross(d, edge)
        rel = _sub(c, a)
        if denom == 0:
            if _cross(rel, d) != 0:
                continue
            length = d[0] * d[0] + d[1] * d[1]
            for p in (c, e):
                lam = (_sub(p, a)[0] * d[0] + _sub(p, a)[1] * d[1]) / length
                if 0 < lam < 1:
                    params.add(lam)
            continue
        lam = _cross(rel, edge) / denom
        mu = _cross(rel, d) / denom
        if 0 < lam < 1 and 0 <= mu <= 1:
            params.add(lam)
    ordered = sorted(params)
    for lo, hi in zip(ordered, ordered[1:]):
        mid = (lo + hi) / 2
        if point_in_rings((a[0] + mid * d[0], a[1] + mid * d[1]), rings) == 'outside':
            return False
    return True


def _ray_exit(P: Polygon2, x: Point2, w: Point2) -> Optional[Point2]:
    """First boundary point strictly beyond w on the ray from x through w"""
    d = _sub(w, x)
    best = None
    for c, e in P.edges():
        edge = _sub(e, c)
        denom = _cross(d, edge)
        rel = _sub(c, x)
        if denom == 0:
            if _cross(rel, d) != 0:
                continue
            length = d[0] * d[0] + d[1] * d[1]
            for p in (c, e):
                lam = (_sub(p, x)[0] * d[0] + _sub(p, x)[1] * d[1]) / length
                if lam > 1 and (best is None or lam < best):
                    best = lam
            continue
        lam = _cross(rel, edge) / denom
        mu = _cross(rel, d) / denom
        if lam > 1 and 0 <= mu <= 1 and (best is None or lam < best):
            best = lam
    if best is None:
        return None
    return x[0] + best * d[0], x[1] + best * d[1]


def _grazing_side(P: Polygon2, x: Point2, w: Point2) -> int:
    """+1 when w's boundary edges lie counterclockwise of the ray x -> w, -1 when clockwise"""
    d = _sub(w, x)
    for ring in P.rings:
        n = len(ring)
        for i in range(n):
            if ring[i] != w:
                continue
            for nbr in (ring[i - 1], ring[(i + 1) % n]):
                side = _cross(d, _sub(nbr, w))
                if side != 0:
                    return 1 if side > 0 else -1
    return -1


def visibility_polygon(P: Polygon2, x: Point2) -> Ring:
    """Star-shaped region seen from x, by an angular sweep over the vertices"""
    x = tuple(to_scalar(v) for v in x)
    if point_in_rings(x, P.rings) == 'outside':
        raise PointOutside(f"Point {x} is outside the polygon", subject=x)
    groups: Dict[Fraction, List[Point2]] = {}
    sides: Dict[Fraction, int] = {}
    for w in sorted(set(P.vertices())):
        if w == x or not segment_in_polygon(P, x, w):
            continue
        key = AimDirection(*_sub(w, x)).pseudo_angle()
        groups.setdefault(key, []).append(w)
        beyond = _ray_exit(P, x, w)
        if beyond is not None and segment_in_polygon(P, w, beyond):
            groups[key].append(beyond)
            sides[key] = _grazing_side(P, x, w)
    ring: List[Point2] = []
    for key in sorted(groups):
        points = sorted(set(groups[key]), key=lambda p: (p[0] - x[0]) ** 2 + (p[1] - x[1]) ** 2)
        if sides.get(key, -1) > 0:
            points.reverse()
        for p in points:
            if not ring or ring[-1] != p:
                ring.append(p)
    return tuple(ring)


def _open_edge_sees(P: Polygon2, x: Point2, edge: Tuple[Point2, Point2]) -> bool:
    """Some point in the relative interior of the edge sees x"""
    a, b = edge
    d = _sub(b, a)
    params = {Fraction(0), Fraction(1)}
    for w in P.vertices():
        ray = _sub(w, x)
        denom = _cross(d, ray)
        if ray == (0, 0) or denom == 0:
            continue
        mu = _cross(_sub(x, a), ray) / denom
        if 0 < mu < 1:
            params.add(mu)
    ordered = sorted(params)
    candidates = [(lo + hi) / 2 for lo, hi in zip(ordered, ordered[1:])] + ordered[1:-1]
    for mu in candidates:
        p = (a[0] + mu * d[0], a[1] + mu * d[1])
        if segment_in_polygon(P, x, p):
            return True
    return False


@dataclass
class CoverageReport:
    samples: int
    uncovered: List[Point2]

    @property
    def complete(self) -> bool:
        return not self.uncovered

    def lines(self) -> List[str]:
        return [f"uncovered {format_rational(p[0])} {format_rational(p[1])}" for p in self.uncovered]


def _sample_points(P: Polygon2, density: int, partition: Optional[ConvexPartition]) -> List[Point2]:
    xs = [p[0] for p in P.outer]
    ys = [p[1] for p in P.outer]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    points = []
    for i in range(density):
        for j in range(density):
            p = (x0 + (x1 - x0) * Fraction(2 * i + 1, 2 * density), y0 + (y1 - y0) * Fraction(2 * j + 1, 2 * density))
            if point_in_rings(p, P.rings) == 'inside':
                points.append(p)
    if partition is not None:
        for piece in partition.pieces:
            n = len(piece)
            for k in range(n):
                a, b = piece[k], piece[(k + 1) % n]
                points.append(a)
                points.append(((a[0] + b[0]) / 2, (a[1] + b[1]) / 2))
    return sorted(set(points))


def verify_coverage(P: Polygon2, guards: OpenEdgeGuardSet, density: int = 50,
                    partition: Optional[ConvexPartition] = None) -> CoverageReport:
    """Sampled check that every point is seen by the interior of some guard edge"""
    segments = guards.segments(P)
    samples = _sample_points(P, density, partition)
    uncovered = [x for x in samples if not any(_open_edge_sees(P, x, s) for s in segments)]
    logger.info("Coverage: %d samples, %d uncovered", len(samples), len(uncovered))
    return CoverageReport(samples=len(samples), uncovered=uncovered)


# ---------------------------------------------------------------------------
# poly2 v1 text format
# ---------------------------------------------------------------------------

def parse_polygon(text: str) -> Tuple[Polygon2, int]:
    lines = [ln.split('#', 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != POLY2_HEADER:
        raise FormatError(f"Missing header '{POLY2_HEADER}'")
    rings: List[List[Point2]] = []
    kinds: List[str] = []
    distinguished = 0
    for line in lines[1:]:
        parts = line.split()
        if parts[0] in ('outer', 'hole'):
            kinds.append(parts[0])
            rings.append([])
        elif parts[0] == 'distinguished':
            if len(parts) != 2 or not parts[1].isdigit():
                raise FormatError(f"Bad distinguished line: {line}")
            distinguished = int(parts[1])
        elif len(parts) == 2 and rings:
            rings[-1].append((parse_rational(parts[0]), parse_rational(parts[1])))
        else:
            raise FormatError(f"Unexpected line: {line}")
    if kinds.count('outer') != 1 or kinds[0] != 'outer':
        raise FormatError("Exactly one outer ring must come first")
    polygon = Polygon2(tuple(rings[0]), tuple(tuple(r) for r in rings[1:]))
    if distinguished >= len(polygon.edges()):
        raise FormatError(f"Distinguished edge {distinguished} does not exist")
    return polygon, distinguished


def serialize_polygon(P: Polygon2, distinguished: int = 0) -> str:
    out = [POLY2_HEADER]
    for kind, ring in [('outer', P.outer)] + [('hole', h) for h in P.holes]:
        out.append(kind)
        out.extend(f"{format_rational(p[0])} {format_rational(p[1])}" for p in ring)
    out.append(f"distinguished {distinguished}")
    return '\n'.join(out) + '\n'
