"""Searchplanes, their exhaustiveness, and the event-based guard decision.

A searchplane is sliced on its own 2D stratum lattice: ``s`` runs along the
guard axis and ``t`` along the aim, so the half-plane is the quadrant
``t >= 0``. Every grid plane crosses it in an ``s`` or ``t`` line, which
makes each open rectangle of the (s, t) lattice a piece of exactly one 3D
stratum. The 2D containment tests of geometry_core then answer in-plane
visibility exactly.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
import sympy
from scipy import ndimage

from config import get_config
from errors import BlindDirection
from geometry_core import (
    Facet,
    GridComplex,
    OrthoPolyhedron,
    Point3,
    lattice_hull_inside,
    lattice_point_inside,
    lattice_segment_inside,
    plane_axes,
)
from searchlights import (
    AimDirection,
    Guard,
    ccw_between,
    cyclic_frame,
    nonblind_arc,
    resolve,
)

logger = logging.getLogger(__name__)

Point2 = Tuple[Fraction, Fraction]
Lattice2 = Tuple[int, int]


class PlaneSection:
    """The half-plane of a guard and direction, cut along every grid crossing"""

    def __init__(self, grid: GridComplex, guard: Guard, direction: AimDirection):
        self.grid = grid
        self.guard = guard
        self.direction = direction
        self.axis = guard.axis
        self.cu, self.cv = cyclic_frame(guard.axis)
        self.base_u = guard.a[self.cu]
        self.base_v = guard.a[self.cv]
        s_values = set(grid.coords[self.axis]) | {guard.lo, guard.hi}
        self.s_coords = tuple(sorted(s_values))
        self.t_coords = self._t_breakpoints()
        self.coords = (self.s_coords, self.t_coords)
        self.admissible = self._admissible_lattice()

    def _t_breakpoints(self) -> Tuple[Fraction, ...]:
        ts = {Fraction(0)}
        exits = []
        for axis, base, step in ((self.cu, self.base_u, self.direction.u),
                                 (self.cv, self.base_v, self.direction.v)):
            if step == 0:
                continue
            coords = self.grid.coords[axis]
            for c in coords:
                t = (c - base) / step
                if t > 0:
                    ts.add(t)
            far = coords[-1] if step > 0 else coords[0]
            exits.append((far - base) / step)
        t_max = min(exits)
        return tuple(t for t in sorted(ts) if t <= t_max) if t_max > 0 else (Fraction(0),)

    def to_3d(self, point: Point2) -> Point3:
        s, t = point
        out = [Fraction(0)] * 3
        out[self.axis] = s
        out[self.cu] = self.base_u + t * self.direction.u
        out[self.cv] = self.base_v + t * self.direction.v
        return tuple(out)

    def representative(self, index: Lattice2) -> Point2:
        values = []
        for coords, i in zip(self.coords, index):
            if i % 2 == 0:
                values.append(coords[i // 2])
            else:
                values.append((coords[i // 2] + coords[i // 2 + 1]) / 2)
        return tuple(values)

    def _admissible_lattice(self) -> np.ndarray:
        shape = (2 * len(self.s_coords) - 1, 2 * len(self.t_coords) - 1)
        lattice = np.zeros(shape, dtype=bool)
        for i in range(shape[0]):
            for j in range(shape[1]):
                lattice[i, j] = self.grid.contains_point(self.to_3d(self.representative((i, j))))
        return lattice

    def box(self, index: Lattice2) -> Tuple[Point2, Point2]:
        lo, hi = [], []
        for coords, i in zip(self.coords, index):
            if i % 2 == 0:
                lo.append(coords[i // 2])
                hi.append(coords[i // 2])
            else:
                lo.append(coords[i // 2])
                hi.append(coords[i // 2 + 1])
        return tuple(lo), tuple(hi)

    def contains(self, point: Point2) -> bool:
        return lattice_point_inside(self.coords, self.admissible, point)

    def segment_inside(self, a: Point2, b: Point2) -> bool:
        return lattice_segment_inside(self.coords, self.admissible, a, b)

    def hull_inside(self, apex: Point2, lo: Point2, hi: Point2) -> bool:
        return lattice_hull_inside(self.coords, self.admissible, apex, lo, hi)

    def guard_component(self) -> np.ndarray:
        """Mask of lattice strata in the connected section component holding the guard"""
        labels, _ = ndimage.label(self.admissible, structure=ndimage.generate_binary_structure(2, 1))
        start = 2 * self.s_coords.index(self.guard.lo) + 1
        return labels == labels[start, 0]

    def guard_params(self) -> List[Fraction]:
        subdivision = get_config().witness_subdivision
        return [p[self.axis] for p in self.guard.witness_points(self.grid, subdivision)]

    def point_visible(self, q: Point2) -> bool:
        """Exact test: does some point of the open guard see q inside the section?"""
        lo, hi = self.guard.lo, self.guard.hi
        qs, qt = q
        if qt == 0:
            if lo < qs < hi:
                return True
            inner = min(self.grid.min_gap / 4, (hi - lo) / 4)
            g = hi - inner if qs >= hi else lo + inner
            return self.segment_inside((g, Fraction(0)), q)
        params = {lo, hi}
        for ws in self.s_coords:
            for wt in self.t_coords:
                if wt >= qt:
                    break
                gs = qs + (ws - qs) * qt / (qt - wt)
                if lo < gs < hi:
                    params.add(gs)
        ordered = sorted(params)
        samples = ordered[1:-1] + [(a + b) / 2 for a, b in zip(ordered, ordered[1:])]
        return any(self.segment_inside((g, Fraction(0)), q) for g in samples)

    def _box_witness(self, lo: Point2, hi: Point2, params: Sequence[Fraction]) -> bool:
        glo, ghi = self.guard.lo, self.guard.hi
        extra = []
        inner = min(self.grid.min_gap / 4, (ghi - glo) / 4)
        for s in (lo[0], hi[0], (lo[0] + hi[0]) / 2):
            extra.append(min(max(s, glo + inner), ghi - inner))
        for g in list(params) + extra:
            if self.hull_inside((g, Fraction(0)), lo, hi):
                return True
        return False

    def box_visible(self, lo: Point2, hi: Point2, depth: int) -> Optional[bool]:
        """True if every point of the closed box is visible, False if some point is not,
        None when undecided at the subdivision limit"""
        if self._box_witness(lo, hi, self.guard_params()):
            return True
        mid = ((lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2)
        samples = [lo, hi, (lo[0], hi[1]), (hi[0], lo[1]), mid,
                   (mid[0], lo[1]), (mid[0], hi[1]), (lo[0], mid[1]), (hi[0], mid[1])]
        if not all(self.point_visible(p) for p in samples):
            return False
        if depth <= 0:
            return None
        verdicts = [self.box_visible(a, b, depth - 1) for a, b in _quarter(lo, hi)]
        if False in verdicts:
            return False
        if None in verdicts:
            return None
        return True


def _quarter(lo: Point2, hi: Point2) -> List[Tuple[Point2, Point2]]:
    ms = (lo[0] + hi[0]) / 2
    mt = (lo[1] + hi[1]) / 2
    return [((lo[0], lo[1]), (ms, mt)), ((ms, lo[1]), (hi[0], mt)),
            ((lo[0], mt), (ms, hi[1])), ((ms, mt), (hi[0], hi[1]))]


@dataclass
class SearchPlane:
    guard: Guard
    direction: AimDirection
    section: PlaneSection = field(repr=False)
    component: np.ndarray = field(repr=False)
    visible: Set[Lattice2] = field(repr=False)
    undecided: Set[Lattice2] = field(default_factory=set, repr=False)

    @property
    def strata(self) -> List[Lattice2]:
        return [tuple(int(v) for v in idx) for idx in np.argwhere(self.component)]

    @property
    def exhaustive(self) -> bool:
        return all(idx in self.visible for idx in self.strata)

    def dangling_boundary(self) -> List[Tuple[Point3, Point3]]:
        """Section edges separating visible rectangles from the rest of the component"""
        found = []
        nu, nv = self.component.shape
        for i, j in self.strata:
            if i % 2 == 0 or j % 2 == 0 or (i, j) not in self.visible:
                continue
            for di, dj in ((2, 0), (-2, 0), (0, 2), (0, -2)):
                other = (i + di, j + dj)
                if not (0 <= other[0] < nu and 0 <= other[1] < nv):
                    continue
                if self.component[other] and other not in self.visible:
                    edge = (i + di // 2, j + dj // 2)
                    lo, hi = self.section.box(edge)
                    found.append((self.section.to_3d(lo), self.section.to_3d(hi)))
        return sorted(found)

    def lit_facets(self) -> Set[Facet]:
        """Internal grid facets wholly inside the visible part of an axis-aligned searchplane"""
        grid = self.section.grid
        pieces: Dict[Facet, List[bool]] = {}
        for i, j in self.strata:
            if i % 2 == 0 or j % 2 == 0:
                continue
            point = self.section.to_3d(self.section.representative((i, j)))
            stratum = grid.locate(point)
            even = [a for a in range(3) if stratum[a] % 2 == 0]
            if len(even) != 1:
                continue
            axis = even[0]
            facet = [0, 0, 0]
            for a in range(3):
                facet[a] = stratum[a] // 2
            facet = (axis,) + tuple(facet)
            pieces.setdefault(facet, []).append((i, j) in self.visible)
        lit = set()
        for facet, flags in pieces.items():
            if not all(flags) or grid.facet_label(facet) != 'internal':
                continue
            # every sub-rectangle of the facet must belong to the section component
            if len(flags) == _pieces_per_facet(self.section, facet):
                lit.add(facet)
        return lit

    def boundary_on_surface(self) -> bool:
        """Each edge where the component meets the non-section lies on the solid's surface"""
        nu, nv = self.component.shape
        for i, j in self.strata:
            if i % 2 == 0 or j % 2 == 0:
                continue
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                edge = (i + di, j + dj)
                beyond = (i + 2 * di, j + 2 * dj)
                inside_lattice = 0 <= beyond[0] < nu and 0 <= beyond[1] < nv
                if inside_lattice and self.section.admissible[beyond]:
                    continue
                if edge[1] == 0:
                    continue
                point = self.section.to_3d(self.section.representative(edge))
                if _interior_point(self.section.grid, point):
                    return False
        return True


def _interior_point(grid: GridComplex, point: Point3) -> bool:
    idx = grid.locate(point)
    if idx is None:
        return False
    choices = []
    for i in idx:
        choices.append((i // 2,) if i % 2 else (i // 2 - 1, i // 2))
    cells = [(a, b, c) for a in choices[0] for b in choices[1] for c in choices[2]]
    return all(grid.is_interior(c) for c in cells)


def _pieces_per_facet(section: PlaneSection, facet: Facet) -> int:
    grid = section.grid
    lo, hi = grid.facet_box(facet)
    s_lo, s_hi = lo[section.axis], hi[section.axis]
    s_pieces = sum(1 for a, b in zip(section.s_coords, section.s_coords[1:]) if s_lo <= a and b <= s_hi)
    t_axis = next(a for a in plane_axes(facet[0]) if a != section.axis)
    step = section.direction.u if t_axis == section.cu else section.direction.v
    base = section.base_u if t_axis == section.cu else section.base_v
    t_lo, t_hi = sorted(((lo[t_axis] - base) / step, (hi[t_axis] - base) / step))
    t_pieces = sum(1 for a, b in zip(section.t_coords, section.t_coords[1:]) if t_lo <= a and b <= t_hi)
    return s_pieces * t_pieces


def compute_searchplane(P: OrthoPolyhedron, guard: Guard, d: AimDirection) -> SearchPlane:
    """Section component of the guard's half-plane and its visible part"""
    grid = P.grid
    d = resolve(grid, guard, d)
    section = PlaneSection(grid, guard, d)
    component = section.guard_component()
    depth = get_config().witness_subdivision
    visible: Set[Lattice2] = set()
    undecided: Set[Lattice2] = set()
    strata = [tuple(int(v) for v in idx) for idx in np.argwhere(component)]
    rectangles = [idx for idx in strata if idx[0] % 2 == 1 and idx[1] % 2 == 1]
    for idx in rectangles:
        lo, hi = section.box(idx)
        verdict = section.box_visible(lo, hi, depth)
        if verdict:
            visible.add(idx)
        elif verdict is None:
            undecided.add(idx)
    if not any(idx[1] > 0 for idx in visible):
        raise BlindDirection(f"Guard {guard.gid} sees nothing in direction {d}", subject=d)
    # lower-dimensional strata: covered by a visible rectangle's closure, else tested directly
    for idx in strata:
        if idx in visible or (idx[0] % 2 == 1 and idx[1] % 2 == 1):
            continue
        neighbours = [(idx[0] + di, idx[1] + dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]
        if any(n in visible for n in neighbours if n[0] % 2 == 1 and n[1] % 2 == 1):
            visible.add(idx)
            continue
        lo, hi = section.box(idx)
        if section._box_witness(lo, hi, section.guard_params()):
            visible.add(idx)
    if undecided:
        logger.debug("Guard %s direction %s: %d rectangles undecided, treated as not visible",
                     guard.gid, d, len(undecided))
    return SearchPlane(guard=guard, direction=d, section=section, component=component,
                       visible=visible, undecided=undecided)


@dataclass(frozen=True)
class Event:
    direction: AimDirection
    kind: str  # 'vertex' or 'face-edge'
    source: Tuple


@dataclass(frozen=True)
class EventSet:
    guard: Guard
    events: Tuple[Event, ...]

    def directions(self) -> List[AimDirection]:
        seen = []
        for e in self.events:
            if e.direction not in seen:
                seen.append(e.direction)
        return seen

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class BlindArc:
    leftmost: AimDirection
    rightmost: AimDirection
    extent: sympy.Expr

    @property
    def blind_extent(self) -> sympy.Expr:
        return 2 * sympy.pi - self.extent


def blind_arc(P: OrthoPolyhedron, guard: Guard) -> BlindArc:
    left, right, quarters = nonblind_arc(P.grid, guard)
    return BlindArc(leftmost=left, rightmost=right, extent=sympy.pi * quarters / 2)


def _direction_to(guard: Guard, point: Point3) -> Optional[AimDirection]:
    cu, cv = cyclic_frame(guard.axis)
    du = point[cu] - guard.a[cu]
    dv = point[cv] - guard.a[cv]
    if du == 0 and dv == 0:
        return None
    return AimDirection(du, dv)


def _arc_order(arc: BlindArc):
    start = arc.leftmost.pseudo_angle()

    def key(d: AimDirection) -> Fraction:
        return (d.pseudo_angle() - start) % 4
    return key


def enumerate_events(P: OrthoPolyhedron, guard: Guard) -> EventSet:
    """Vertex directions and face-plane by edge-line crossings, sorted along the non-blind arc"""
    arc = blind_arc(P, guard)
    raw: List[Event] = []
    for vertex in P.vertices:
        d = _direction_to(guard, vertex)
        if d is not None:
            raw.append(Event(d, 'vertex', (vertex,)))
    for fi, face in enumerate(P.faces):
        for ei, edge in enumerate(P.edges):
            if edge.axis != face.axis:
                continue
            point = list(edge.segment.a)
            point[face.axis] = face.offset
            d = _direction_to(guard, tuple(point))
            if d is not None:
                raw.append(Event(d, 'face-edge', (fi, ei)))
    for d in (arc.leftmost, arc.rightmost):
        raw.append(Event(d, 'vertex', ('arc',)))
    inside = [e for e in raw if ccw_between(e.direction, arc.leftmost, arc.rightmost)]
    key = _arc_order(arc)
    unique: Dict[Tuple, Event] = {}
    for e in inside:
        unique.setdefault((e.direction, e.kind, e.source), e)
    ordered = sorted(unique.values(), key=lambda e: (key(e.direction), e.kind, str(e.source)))
    return EventSet(guard=guard, events=tuple(ordered))


def interval_midpoint(d1: AimDirection, d2: AimDirection) -> AimDirection:
    """A rational direction strictly inside the ccw interval from d1 to d2"""
    n1 = abs(d1.u) + abs(d1.v)
    n2 = abs(d2.u) + abs(d2.v)
    su = Fraction(d1.u, n1) + Fraction(d2.u, n2)
    sv = Fraction(d1.v, n1) + Fraction(d2.v, n2)
    cross = d1.u * d2.v - d1.v * d2.u
    if cross > 0:
        return AimDirection(su, sv)
    if cross == 0:
        # opposite directions
        return AimDirection(-d1.v, d1.u)
    return AimDirection(-su, -sv)


def event_intervals(P: OrthoPolyhedron, guard: Guard) -> List[Tuple[AimDirection, AimDirection]]:
    directions = enumerate_events(P, guard).directions()
    return list(zip(directions, directions[1:]))


def is_exhaustive_guard(P: OrthoPolyhedron, guard: Guard) -> Tuple[bool, Optional[AimDirection]]:
    """Check every event direction and one direction per interval between events"""
    directions = enumerate_events(P, guard).directions()
    candidates = []
    for d, nxt in zip(directions, directions[1:] + [None]):
        candidates.append(d)
        if nxt is not None:
            candidates.append(interval_midpoint(d, nxt))
    for d in candidates:
        try:
            plane = compute_searchplane(P, guard, d)
        except BlindDirection:
            continue
        if not plane.exhaustive:
            logger.info("Guard %s is not exhaustive: direction %s", guard.gid, d)
            return False, d
    logger.info("Guard %s is exhaustive over %d directions", guard.gid, len(candidates))
    return True, None
