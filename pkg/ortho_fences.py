"""Fences, the cuboid partition they induce, and guard placement over notches.

Fences are sets of internal grid facets. Step 1 drops a vertical wall from
every horizontal notch, opposite its vertical adjacent face. Each resulting
piece is a prism over a 2D footprint. Step 2 sends a full-height wall along
x from every vertical notch into each prism holding both quadrants behind
it, whether the notch makes a reflex corner of the footprint or lies on a
flat lateral face next to a Step-1 fence. Step 3 cuts the remaining reflex
corners by extending the fence that made them. Later rays stop at earlier
fences.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import networkx as nx

from config import get_config
from errors import ConvexInput, LemmaViolation, NotABox, WitnessNotFound
from exhaustiveness import compute_searchplane
from geometry_core import (
    Cell,
    Facet,
    GridComplex,
    Notch,
    OrthoPolyhedron,
    Point3,
    hull_in_polyhedron,
    notches,
)
from searchlights import AimDirection, Guard

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Fence:
    fid: int
    facets: FrozenSet[Facet]
    step: int
    source_notch: Notch
    merged_into: Optional[int] = None

    @property
    def plane(self) -> Tuple[int, int]:
        """(axis, plane index) shared by every facet"""
        facet = min(self.facets)
        return facet[0], facet[1 + facet[0]]


@dataclass(frozen=True)
class Cuboid:
    """Combinatorial box of interior cells: lo inclusive, hi exclusive"""
    lo: Cell
    hi: Cell
    bounding_fences: FrozenSet[int] = frozenset()

    def cells(self) -> List[Cell]:
        return [(i, j, k)
                for i in range(self.lo[0], self.hi[0])
                for j in range(self.lo[1], self.hi[1])
                for k in range(self.lo[2], self.hi[2])]

    def box(self, grid: GridComplex) -> Tuple[Point3, Point3]:
        lo = tuple(grid.coords[a][self.lo[a]] for a in range(3))
        hi = tuple(grid.coords[a][self.hi[a]] for a in range(3))
        return lo, hi

    def describe(self) -> str:
        return ','.join(f"{l}:{h}" for l, h in zip(self.lo, self.hi))


@dataclass
class FencePlan:
    fences: List[Fence]
    guards: List[Guard]
    aims: Dict[str, AimDirection]
    notches: List[Notch]
    guard_of_fence: Dict[int, str]
    cuboids: List[Cuboid] = field(default_factory=list)
    fenceless_notches: List[Notch] = field(default_factory=list)

    def owner(self) -> Dict[Facet, int]:
        return {f: fence.fid for fence in self.fences for f in fence.facets}

    def fence_facets(self) -> Set[Facet]:
        return {f for fence in self.fences for f in fence.facets}

    def guard(self, gid: str) -> Guard:
        return next(g for g in self.guards if g.gid == gid)

    def fences_of_guard(self, gid: str) -> List[Fence]:
        return [f for f in self.fences if self.guard_of_fence[f.fid] == gid]

    def fence_generating_guards(self) -> List[str]:
        """Guards with at least one fence, in construction order"""
        order = []
        for fence in self.fences:
            gid = self.guard_of_fence[fence.fid]
            if gid not in order:
                order.append(gid)
        return order

    def region_of_guard(self, gid: str) -> List[Cuboid]:
        """Cuboids bounded by a guard's fences"""
        fids = {f.fid for f in self.fences_of_guard(gid)}
        return [c for c in self.cuboids if c.bounding_fences & fids]


# ---------------------------------------------------------------------------
# Step 1
# ---------------------------------------------------------------------------

def _claimable(grid: GridComplex, facet: Facet, owner: Dict[Facet, int]) -> bool:
    return facet not in owner and grid.facet_label(facet) == 'internal'


def _slab_range(grid: GridComplex, axis: int, lo, hi) -> range:
    coords = grid.coords[axis]
    return range(coords.index(lo), coords.index(hi))


def _step_one(grid: GridComplex, notch: Notch, owner: Dict[Facet, int]) -> List[Facet]:
    along = notch.orientation
    across = 1 - along
    sz = notch.exterior[2]
    plane = grid.coords[across].index(notch.edge.a[across])
    z_point = grid.coords[2].index(notch.edge.a[2])
    step = -sz
    claimed = []
    for k in _slab_range(grid, along, notch.edge.a[along], notch.edge.b[along]):
        zc = z_point if step > 0 else z_point - 1
        while 0 <= zc < grid.shape[2]:
            index = [0, 0, 0]
            index[across], index[along], index[2] = plane, k, zc
            facet = (across,) + tuple(index)
            if not _claimable(grid, facet, owner):
                break
            claimed.append(facet)
            zc += step
    return claimed


# ---------------------------------------------------------------------------
# Pieces
# ---------------------------------------------------------------------------

def _pieces(grid: GridComplex, cut: Set[Facet]) -> List[List[Cell]]:
    graph = nx.Graph()
    graph.add_nodes_from(grid.interior_cells())
    for facet in grid.internal_facets():
        if facet not in cut:
            graph.add_edge(*grid.facet_cells(facet))
    return sorted(sorted(c) for c in nx.connected_components(graph))


@dataclass(frozen=True)
class _Prism:
    footprint: FrozenSet[Tuple[int, int]]
    k0: int
    k1: int


def _as_prism(cells: List[Cell]) -> _Prism:
    columns: Dict[Tuple[int, int], List[int]] = {}
    for i, j, k in cells:
        columns.setdefault((i, j), []).append(k)
    ranges = {(min(ks), max(ks) + 1, len(ks)) for ks in columns.values()}
    if len(ranges) != 1:
        raise NotABox(f"Piece at {cells[0]} is not a prism", subject=cells[0])
    k0, k1, count = ranges.pop()
    if count != k1 - k0:
        raise NotABox(f"Piece at {cells[0]} has a gap along z", subject=cells[0])
    return _Prism(frozenset(columns), k0, k1)


def _square_at(i: int, j: int, dx: int, dy: int) -> Tuple[int, int]:
    return (i if dx > 0 else i - 1, j if dy > 0 else j - 1)


def _column_facets(grid: GridComplex, prism: _Prism, p, q) -> List[Facet]:
    return [grid.facet_between((p[0], p[1], k), (q[0], q[1], k)) for k in range(prism.k0, prism.k1)]


def _wall(grid: GridComplex, prism: _Prism, p, q, owner: Dict[Facet, int]) -> bool:
    if p not in prism.footprint or q not in prism.footprint:
        return True
    return any(f in owner for f in _column_facets(grid, prism, p, q))


@dataclass(frozen=True)
class _Corner:
    i: int
    j: int
    sx: int
    sy: int
    prism: _Prism


def _reflex_corners(grid: GridComplex, prism: _Prism, owner: Dict[Facet, int]) -> List[_Corner]:
    points = {(i + di, j + dj) for i, j in prism.footprint for di in (0, 1) for dj in (0, 1)}
    corners = []
    for i, j in sorted(points):
        for sx in (1, -1):
            for sy in (1, -1):
                missing = _square_at(i, j, sx, sy)
                a = _square_at(i, j, -sx, sy)
                b = _square_at(i, j, -sx, -sy)
                c = _square_at(i, j, sx, -sy)
                if missing in prism.footprint:
                    continue
                if not all(s in prism.footprint for s in (a, b, c)):
                    continue
                if _wall(grid, prism, a, b, owner) or _wall(grid, prism, b, c, owner):
                    continue
                corners.append(_Corner(i, j, sx, sy, prism))
    return corners


def _cast_ray(grid: GridComplex, corner: _Corner, run_axis: int, sign: int,
              owner: Dict[Facet, int]) -> List[Facet]:
    """Full-height facets along a ray from a footprint corner, in the run_axis direction"""
    prism = corner.prism
    fixed = corner.j if run_axis == 0 else corner.i
    start = corner.i if run_axis == 0 else corner.j
    m = start if sign > 0 else start - 1
    claimed: List[Facet] = []

    def square(run: int, side: int) -> Tuple[int, int]:
        return (run, fixed + side) if run_axis == 0 else (fixed + side, run)

    while True:
        p, q = square(m, -1), square(m, 0)
        if p not in prism.footprint or q not in prism.footprint:
            break
        facets = _column_facets(grid, prism, p, q)
        if any(f in owner for f in facets) or any(f in claimed for f in facets):
            break
        claimed.extend(facets)
        nxt = m + sign
        crossing_low = _wall(grid, prism, square(m, -1), square(nxt, -1), owner)
        crossing_high = _wall(grid, prism, square(m, 0), square(nxt, 0), owner)
        if crossing_low and crossing_high:
            break
        m = nxt
    return claimed


def _vertical_notch_at(corner: _Corner, grid: GridComplex, vertical: List[Notch]) -> Optional[Notch]:
    x, y = grid.xs[corner.i], grid.ys[corner.j]
    z0, z1 = grid.zs[corner.prism.k0], grid.zs[corner.prism.k1]
    for notch in vertical:
        if notch.edge.a[0] != x or notch.edge.a[1] != y:
            continue
        if notch.exterior[0] != corner.sx or notch.exterior[1] != corner.sy:
            continue
        if notch.edge.a[2] < z1 and notch.edge.b[2] > z0:
            return notch
    return None


def _notch_corners(grid: GridComplex, notch: Notch, prisms: List[_Prism]) -> List[_Corner]:
    """Prisms with both quadrants behind a vertical notch, reflex corner or flat lateral face alike"""
    i = grid.xs.index(notch.edge.a[0])
    j = grid.ys.index(notch.edge.a[1])
    sx, sy = notch.exterior[0], notch.exterior[1]
    behind = (_square_at(i, j, -sx, sy), _square_at(i, j, -sx, -sy))
    z0, z1 = notch.edge.a[2], notch.edge.b[2]
    return [_Corner(i, j, sx, sy, prism) for prism in prisms
            if all(s in prism.footprint for s in behind)
            and grid.zs[prism.k0] < z1 and grid.zs[prism.k1] > z0]


def _next_step_two(grid: GridComplex, vertical: List[Notch],
                   owner: Dict[Facet, int]) -> Optional[Tuple[Notch, List[Facet]]]:
    prisms = [_as_prism(cells) for cells in _pieces(grid, set(owner))]
    for notch in vertical:
        for corner in _notch_corners(grid, notch, prisms):
            facets = _cast_ray(grid, corner, 0, -corner.sx, owner)
            if facets:
                return notch, facets
    return None


def _corner_key(grid: GridComplex, corner: _Corner):
    return (grid.xs[corner.i], grid.ys[corner.j], grid.zs[corner.prism.k0], -corner.sx, -corner.sy)


def _all_corners(grid: GridComplex, owner: Dict[Facet, int]) -> List[_Corner]:
    corners = []
    for cells in _pieces(grid, set(owner)):
        corners.extend(_reflex_corners(grid, _as_prism(cells), owner))
    return sorted(corners, key=lambda c: _corner_key(grid, c))


def _root(fences: List[Fence], fid: int) -> int:
    while fences[fid].merged_into is not None:
        fid = fences[fid].merged_into
    return fid


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def erect_fences(P: OrthoPolyhedron, G: Optional[GridComplex] = None) -> FencePlan:
    """Run the three fence steps and partition the solid into cuboids"""
    grid = G or P.grid
    found = notches(P)
    if not found:
        raise ConvexInput("Polyhedron has no notches")
    guards = [Guard(f"g{i}", n.edge.a, n.edge.b) for i, n in enumerate(found)]
    gid_of_notch = {id(n): g.gid for n, g in zip(found, guards)}
    fences: List[Fence] = []
    owner: Dict[Facet, int] = {}
    guard_of_fence: Dict[int, str] = {}

    def record(facets: List[Facet], step: int, notch: Notch, gid: str, merged_into=None) -> Fence:
        fence = Fence(len(fences), frozenset(facets), step, notch, merged_into)
        fences.append(fence)
        guard_of_fence[fence.fid] = gid
        for f in facets:
            owner[f] = fence.fid
        logger.debug("Step %d fence %d: %d facets, guard %s", step, fence.fid, len(facets), gid)
        return fence

    horizontal = [n for n in found if n.horizontal]
    vertical = [n for n in found if n.vertical]
    for notch in horizontal:
        facets = _step_one(grid, notch, owner)
        if facets:
            record(facets, 1, notch, gid_of_notch[id(notch)])

    # every Step-1 piece must be a prism before footprints make sense
    for cells in _pieces(grid, set(owner)):
        _as_prism(cells)

    fenced_vertical = set()
    while True:
        found_ray = _next_step_two(grid, vertical, owner)
        if found_ray is None:
            break
        notch, facets = found_ray
        record(facets, 2, notch, gid_of_notch[id(notch)])
        fenced_vertical.add(id(notch))

    while True:
        corners = _all_corners(grid, owner)
        if not corners:
            break
        corner = corners[0]
        prism = corner.prism
        missing = _square_at(corner.i, corner.j, corner.sx, corner.sy)
        a = _square_at(corner.i, corner.j, -corner.sx, corner.sy)
        c = _square_at(corner.i, corner.j, corner.sx, -corner.sy)
        k = prism.k0
        options = (
            (grid.facet_between((c[0], c[1], k), (missing[0], missing[1], k)), 0, -corner.sx),
            (grid.facet_between((a[0], a[1], k), (missing[0], missing[1], k)), 1, -corner.sy),
        )
        chosen = None
        for facet, run_axis, sign in options:
            if grid.is_interior((missing[0], missing[1], k)) and facet in owner:
                chosen = (_root(fences, owner[facet]), run_axis, sign)
                break
        if chosen is None:
            notch = _vertical_notch_at(corner, grid, vertical)
            if notch is None:
                raise NotABox(f"Reflex corner at ({corner.i}, {corner.j}) has no fence to extend",
                              subject=(corner.i, corner.j))
            facets = _cast_ray(grid, corner, 0, -corner.sx, owner)
            if not facets:
                raise NotABox(f"Ray from corner ({corner.i}, {corner.j}) is blocked at once",
                              subject=(corner.i, corner.j))
            record(facets, 2, notch, gid_of_notch[id(notch)])
            fenced_vertical.add(id(notch))
            continue
        parent, run_axis, sign = chosen
        facets = _cast_ray(grid, corner, run_axis, sign, owner)
        if not facets:
            raise NotABox(f"Ray from corner ({corner.i}, {corner.j}) is blocked at once",
                          subject=(corner.i, corner.j))
        record(facets, 3, fences[parent].source_notch, guard_of_fence[parent], merged_into=parent)

    fenced_ids = {id(f.source_notch) for f in fences}
    fenceless = [n for n in vertical if id(n) not in fenced_vertical and id(n) not in fenced_ids]
    for n in fenceless:
        logger.info("No fence from %s", n.describe())

    placed = [replace(n, fence_direction=_fence_vector(n)) for n in found]
    plan = FencePlan(fences=fences, guards=guards, aims={}, notches=placed,
                     guard_of_fence=guard_of_fence, fenceless_notches=fenceless)
    plan.aims = {g.gid: g.aim_from_vector(n.fence_direction) for g, n in zip(guards, placed)}
    plan.cuboids = cuboid_partition(plan, grid)
    logger.info("Erected %d fences (%d merged), %d cuboids",
                len(fences), sum(1 for f in fences if f.merged_into is not None), len(plan.cuboids))
    return plan


def _fence_vector(notch: Notch) -> Tuple[int, int, int]:
    """Horizontal notches aim vertically away from F; vertical notches aim along x"""
    if notch.horizontal:
        return (0, 0, -notch.exterior[2])
    return (-notch.exterior[0], 0, 0)


def cuboid_partition(plan: FencePlan, G: GridComplex) -> List[Cuboid]:
    """Interior cells cut by every fence facet; each component must be a box"""
    owner = plan.owner()
    cuboids = []
    for cells in _pieces(G, set(owner)):
        lo = tuple(min(c[a] for c in cells) for a in range(3))
        hi = tuple(max(c[a] for c in cells) + 1 for a in range(3))
        volume = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2])
        if volume != len(cells):
            raise NotABox(f"Component at {cells[0]} is not box-shaped", subject=cells[0])
        members = set(cells)
        bounding = set()
        for facet, fid in owner.items():
            minus, plus = G.facet_cells(facet)
            if minus in members or plus in members:
                bounding.add(fid)
        cuboids.append(Cuboid(lo, hi, frozenset(bounding)))
    return cuboids


def place_guards(P: OrthoPolyhedron, plan: FencePlan) -> List[Tuple[Guard, AimDirection]]:
    """One guard over every notch, aimed along its fence direction"""
    return [(g, plan.aims[g.gid]) for g in plan.guards]


# ---------------------------------------------------------------------------
# Lemma checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FenceCheck:
    fid: int
    gid: str
    facets: int


@dataclass(frozen=True)
class CuboidWitness:
    cuboid: int
    fid: int
    gid: str
    point: Point3


def guard_lit_facets(P: OrthoPolyhedron, guard: Guard, aim: AimDirection) -> Set[Facet]:
    return compute_searchplane(P, guard, aim).lit_facets()


def check_fence_lemma(plan: FencePlan, P: OrthoPolyhedron) -> List[FenceCheck]:
    """Every fence lies in the lit searchplane of its guard at the initial aim"""
    report = []
    lit_cache: Dict[str, Set[Facet]] = {}
    for fence in plan.fences:
        gid = plan.guard_of_fence[fence.fid]
        axis, plane = fence.plane
        for facet in sorted(fence.facets):
            if facet[0] != axis or facet[1 + axis] != plane:
                raise LemmaViolation(f"Fence {fence.fid} is not planar at facet {facet}", subject=facet)
        if gid not in lit_cache:
            lit_cache[gid] = guard_lit_facets(P, plan.guard(gid), plan.aims[gid])
        for facet in sorted(fence.facets):
            if facet not in lit_cache[gid]:
                raise LemmaViolation(f"Facet {facet} of fence {fence.fid} is not lit by guard {gid}",
                                     subject=facet)
        report.append(FenceCheck(fence.fid, gid, len(fence.facets)))
    return report


def check_cuboid_lemma(plan: FencePlan, P: OrthoPolyhedron) -> List[CuboidWitness]:
    """Each cuboid is seen whole from a point of the guard of every fence bounding it"""
    grid = P.grid
    subdivision = get_config().witness_subdivision
    witnesses = []
    for index, cuboid in enumerate(plan.cuboids):
        box = cuboid.box(grid)
        for fid in sorted(cuboid.bounding_fences):
            gid = plan.guard_of_fence[fid]
            guard = plan.guard(gid)
            point = next((x for x in guard.witness_points(grid, subdivision)
                          if hull_in_polyhedron(grid, x, box)), None)
            if point is None:
                raise WitnessNotFound(f"No point of guard {gid} sees cuboid {cuboid.describe()}",
                                      subject=index)
            witnesses.append(CuboidWitness(index, fid, gid, point))
    return witnesses
