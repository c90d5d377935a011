"""Contamination simulation over the cell complex, and a refinement oracle.

The macro verifier tracks which interior cells may hold the evader. Lit
internal facets cut the adjacency graph of interior cells; contamination
floods every unlit component it touches. The oracle works on sub-cell
centers and samples the lowered angle functions instead.
"""
import hashlib
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import sympy

from config import get_config
from errors import (
    BlindDirection,
    LeakyBoundary,
    NonUniformState,
    NotVisible,
    RegionOutside,
    SearchlightError,
    TooLarge,
    UnsupportedSchedule,
)
from geometry_core import Cell, Facet, GridComplex, OrthoPolyhedron, Point3, Segment3, hull_in_polyhedron, \
    segment_in_polyhedron, to_scalar
from exhaustiveness import compute_searchplane
from schedule import HOLD, CW, Hold, MacroSchedule, Move, ParallelSweep, Schedule, Sweep
from searchlights import AimDirection, Guard, ccw_between, cyclic_frame, require_nonblind, resolve

logger = logging.getLogger(__name__)

SEARCHED = 'SEARCHED'
FAILED = 'FAILED'


class World:
    """Per-instance context shared by every state of one simulation"""

    def __init__(self, P: OrthoPolyhedron, guards: Sequence[Guard]):
        self.P = P
        self.grid = P.grid
        self.guards = {g.gid: g for g in guards}
        self.graph = nx.Graph()
        self.graph.add_nodes_from(self.grid.interior_cells())
        for facet in self.grid.internal_facets():
            c1, c2 = self.grid.facet_cells(facet)
            self.graph.add_edge(c1, c2, facet=facet)
        self._lit: Dict[Tuple[str, AimDirection], FrozenSet[Facet]] = {}

    def guard(self, gid: str) -> Guard:
        if gid not in self.guards:
            raise UnsupportedSchedule(f"Unknown guard {gid}", subject=gid)
        return self.guards[gid]

    def lit_facets(self, gid: str, aim: AimDirection) -> FrozenSet[Facet]:
        """Facets an axis-aligned searchplane lights; other aims light none"""
        key = (gid, aim)
        if key not in self._lit:
            lit: FrozenSet[Facet] = frozenset()
            if aim.u == 0 or aim.v == 0:
                try:
                    lit = frozenset(compute_searchplane(self.P, self.guard(gid), aim).lit_facets())
                except BlindDirection:
                    pass
            self._lit[key] = lit
        return self._lit[key]

    def region_cells(self, region) -> Set[Cell]:
        if region is None:
            return set(self.graph.nodes)
        cells: Set[Cell] = set()
        for lo, hi in region:
            for i in range(lo[0], hi[0]):
                for j in range(lo[1], hi[1]):
                    for k in range(lo[2], hi[2]):
                        if not self.grid.is_interior((i, j, k)):
                            raise RegionOutside(f"Region box {lo}..{hi} leaves the solid", subject=(i, j, k))
                        cells.add((i, j, k))
        return cells

    def region_boxes(self, region) -> List[Tuple[Point3, Point3]]:
        if region is None:
            return [self.grid.cell_box(c) for c in sorted(self.graph.nodes)]
        coords = self.grid.coords
        return [(tuple(coords[a][lo[a]] for a in range(3)), tuple(coords[a][hi[a]] for a in range(3)))
                for lo, hi in region]

    def region_boundary(self, cells: Set[Cell]) -> List[Facet]:
        return sorted(data['facet'] for c1, c2, data in self.graph.edges(data=True)
                      if (c1 in cells) != (c2 in cells))


@dataclass(frozen=True)
class ContaminationState:
    world: World = field(repr=False, compare=False)
    contaminated: FrozenSet[Cell]
    lit: Dict[str, FrozenSet[Facet]] = field(compare=False)
    aims: Dict[str, AimDirection] = field(compare=False)

    def lit_facets(self, exclude: Iterable[str] = ()) -> Set[Facet]:
        skip = set(exclude)
        return {f for gid, facets in self.lit.items() if gid not in skip for f in facets}

    def digest(self) -> str:
        text = ';'.join(','.join(str(v) for v in c) for c in sorted(self.contaminated))
        return hashlib.sha1(text.encode('utf-8')).hexdigest()


@dataclass
class Verdict:
    outcome: str
    witness: Optional[Cell] = None
    diagnostic: str = ''
    trace: List[str] = field(default_factory=list)

    @property
    def searched(self) -> bool:
        return self.outcome == SEARCHED

    def describe(self) -> str:
        text = self.outcome
        if self.witness is not None:
            text += f" witness={','.join(str(v) for v in self.witness)}"
        if self.diagnostic:
            text += f" ({self.diagnostic})"
        return text


@dataclass(frozen=True)
class TargetRegion:
    """Closed ball; resolves to the interior cells it meets"""
    center: Point3
    radius: Fraction

    def cells(self, grid: GridComplex) -> Set[Cell]:
        center = tuple(to_scalar(v) for v in self.center)
        radius = to_scalar(self.radius)
        if radius < 0 or not grid.contains_point(center):
            raise RegionOutside(f"Target center {center} is not in the solid", subject=center)
        found = set()
        for cell in grid.interior_cells():
            lo, hi = grid.cell_box(cell)
            gap = sum(max(lo[a] - center[a], Fraction(0), center[a] - hi[a]) ** 2 for a in range(3))
            if gap <= radius * radius:
                found.add(cell)
        if not found:
            raise RegionOutside("Target region meets no interior cell", subject=center)
        return found

    @classmethod
    def parse(cls, text: str) -> 'TargetRegion':
        """'x,y,z,r'"""
        parts = text.split(',')
        if len(parts) != 4:
            raise ValueError(f"Target needs x,y,z,r: {text!r}")
        values = [Fraction(p) for p in parts]
        return cls(tuple(values[:3]), values[3])


def _propagate(world: World, contaminated: Iterable[Cell], lit: Set[Facet]) -> FrozenSet[Cell]:
    blocked = [(c1, c2) for c1, c2, data in world.graph.edges(data=True) if data['facet'] in lit]
    view = nx.restricted_view(world.graph, [], blocked)
    dirty = set(contaminated)
    spread: Set[Cell] = set()
    for component in nx.connected_components(view):
        if component & dirty:
            spread |= component
    return frozenset(spread)


def region_uniform(s: ContaminationState) -> bool:
    """Every unlit component is wholly clear or wholly contaminated"""
    lit = s.lit_facets()
    blocked = [(c1, c2) for c1, c2, data in s.world.graph.edges(data=True) if data['facet'] in lit]
    view = nx.restricted_view(s.world.graph, [], blocked)
    for component in nx.connected_components(view):
        hits = len(component & s.contaminated)
        if hits not in (0, len(component)):
            return False
    return True


def init_state(P: OrthoPolyhedron, guards: Sequence[Guard], aims: Dict[str, AimDirection]) -> ContaminationState:
    """Everything contaminated, every guard at its resolved initial aim"""
    world = World(P, guards)
    resolved = {}
    lit = {}
    for g in guards:
        aim = resolve(P.grid, g, aims[g.gid]) if g.gid in aims else resolve(P.grid, g, AimDirection.leftmost())
        resolved[g.gid] = aim
        lit[g.gid] = world.lit_facets(g.gid, aim)
    return ContaminationState(world, frozenset(world.graph.nodes), lit, resolved)


def apply_move(s: ContaminationState, step: Move) -> ContaminationState:
    world = s.world
    guard = world.guard(step.guard)
    target = resolve(world.grid, guard, step.target)
    lit = dict(s.lit)
    lit[guard.gid] = frozenset()
    contaminated = _propagate(world, s.contaminated, {f for v in lit.values() for f in v})
    aims = dict(s.aims)
    aims[guard.gid] = target
    lit[guard.gid] = world.lit_facets(guard.gid, target)
    return ContaminationState(world, contaminated, lit, aims)


def _require_visible(world: World, guard: Guard, region) -> None:
    subdivision = get_config().witness_subdivision
    points = guard.witness_points(world.grid, subdivision)
    for box in world.region_boxes(region):
        if not any(hull_in_polyhedron(world.grid, x, box) for x in points):
            raise NotVisible(f"Guard {guard.gid} has no witness for box {box}", subject=box)


def _require_sealed(s: ContaminationState, cells: Set[Cell], sweeping: Sequence[str]) -> None:
    stationary = s.lit_facets(exclude=sweeping)
    for facet in s.world.region_boundary(cells):
        if facet not in stationary:
            raise LeakyBoundary(f"Facet {facet} on the sweep boundary is unlit", subject=facet)


def apply_sweep(s: ContaminationState, step: Sweep) -> ContaminationState:
    """Guarded sweep: boundary lit by the others, region seen whole, then cleared"""
    world = s.world
    guard = world.guard(step.guard)
    require_nonblind(world.grid, guard, step.start)
    end = require_nonblind(world.grid, guard, step.end)
    cells = world.region_cells(step.region)
    _require_sealed(s, cells, [guard.gid])
    _require_visible(world, guard, step.region)
    lit = dict(s.lit)
    lit[guard.gid] = frozenset()
    contaminated = _propagate(world, s.contaminated, {f for v in lit.values() for f in v}) - cells
    aims = dict(s.aims)
    aims[guard.gid] = end
    lit[guard.gid] = world.lit_facets(guard.gid, end)
    return ContaminationState(world, frozenset(contaminated), lit, aims)


def apply_sweep_parallel(s: ContaminationState, step: ParallelSweep) -> ContaminationState:
    world = s.world
    regions = step.regions or tuple(None for _ in step.guards)
    swept: Set[Cell] = set()
    ends = {}
    for gid, region in zip(step.guards, regions):
        guard = world.guard(gid)
        require_nonblind(world.grid, guard, step.start)
        ends[gid] = require_nonblind(world.grid, guard, step.end)
        cells = world.region_cells(region)
        _require_sealed(s, cells, step.guards)
        _require_visible(world, guard, region)
        swept |= cells
    lit = dict(s.lit)
    for gid in step.guards:
        lit[gid] = frozenset()
    contaminated = _propagate(world, s.contaminated, {f for v in lit.values() for f in v}) - swept
    aims = dict(s.aims)
    for gid, end in ends.items():
        aims[gid] = end
        lit[gid] = world.lit_facets(gid, end)
    return ContaminationState(world, frozenset(contaminated), lit, aims)


def apply_hold(s: ContaminationState, step: Hold) -> ContaminationState:
    return replace(s, contaminated=_propagate(s.world, s.contaminated, s.lit_facets()))


_STEP_HANDLERS = {
    Move: apply_move,
    Sweep: apply_sweep,
    ParallelSweep: apply_sweep_parallel,
    Hold: apply_hold,
}


def _apply_step(s: ContaminationState, step) -> ContaminationState:
    handler = _STEP_HANDLERS.get(type(step))
    if handler is None:
        raise UnsupportedSchedule(f"Unsupported step {step!r}", subject=step)
    return handler(s, step)


def is_region_clear(s: ContaminationState, t: TargetRegion) -> bool:
    return not (t.cells(s.world.grid) & s.contaminated)


def verify_schedule(P: OrthoPolyhedron, guards: Optional[Sequence[Guard]], m: MacroSchedule,
                    target: Optional[TargetRegion] = None) -> Verdict:
    """Replay a macro schedule; SEARCHED when the target (default: the solid) ends clear"""
    guards = list(guards) if guards is not None else list(m.guards)
    m.validate_header()
    state = init_state(P, guards, m.initial)
    trace = [state.digest()]
    for index, step in enumerate(m.steps):
        try:
            m.validate_step(step)
            state = _apply_step(state, step)
            if not region_uniform(state):
                raise NonUniformState("Contamination is not uniform", subject=index)
        except SearchlightError as e:
            logger.info("Step %d rejected: %s", index, e)
            witness = min(state.contaminated) if state.contaminated else None
            return Verdict(FAILED, witness, f"step {index}: {e}", trace)
        trace.append(state.digest())
        logger.debug("Step %d: %d cells contaminated", index, len(state.contaminated))
    dirty = state.contaminated
    if target is not None:
        dirty = dirty & target.cells(P.grid)
    if dirty:
        return Verdict(FAILED, min(dirty), f"{len(dirty)} cells still contaminated", trace)
    return Verdict(SEARCHED, None, '', trace)


@dataclass
class ViabilityReport:
    viable: bool
    uncovered: List[Cell]
    witnesses: Dict[Cell, Tuple[str, Point3]]


def check_viable(P: OrthoPolyhedron, guards: Sequence[Guard]) -> ViabilityReport:
    """Each interior cell must be seen whole from some point of some guard"""
    grid = P.grid
    subdivision = get_config().witness_subdivision
    candidates = [(g.gid, x) for g in guards for x in g.witness_points(grid, subdivision)]
    witnesses: Dict[Cell, Tuple[str, Point3]] = {}
    uncovered = []
    for cell in grid.interior_cells():
        box = grid.cell_box(cell)
        found = next(((gid, x) for gid, x in candidates if hull_in_polyhedron(grid, x, box)), None)
        if found is None:
            uncovered.append(cell)
        else:
            witnesses[cell] = found
    return ViabilityReport(not uncovered, uncovered, witnesses)


# ---------------------------------------------------------------------------
# Refinement oracle
# ---------------------------------------------------------------------------

class _Oracle:
    def __init__(self, P: OrthoPolyhedron, guards: Sequence[Guard], refinement: int):
        self.grid = P.grid
        self.guards = list(guards)
        self.points: List[Point3] = []
        self.owner: List[Cell] = []
        index: Dict[Tuple[Cell, Tuple[int, int, int]], int] = {}
        k = refinement
        for cell in self.grid.interior_cells():
            lo, hi = self.grid.cell_box(cell)
            for m in ((a, b, c) for a in range(k) for b in range(k) for c in range(k)):
                point = tuple(lo[ax] + (hi[ax] - lo[ax]) * Fraction(2 * m[ax] + 1, 2 * k) for ax in range(3))
                index[(cell, m)] = len(self.points)
                self.points.append(point)
                self.owner.append(cell)
        self.graph = nx.Graph()
        self.graph.add_nodes_from(range(len(self.points)))
        for (cell, m), i in index.items():
            for ax in range(3):
                step = list(m)
                step[ax] += 1
                nbr_cell = cell
                if step[ax] == k:
                    step[ax] = 0
                    nbr_cell = tuple(c + (1 if a == ax else 0) for a, c in enumerate(cell))
                j = index.get((nbr_cell, tuple(step)))
                if j is not None:
                    self.graph.add_edge(i, j)
        self._visible: Dict[Tuple[str, Point3], bool] = {}
        self._points_of_guard = {g.gid: g.witness_points(self.grid, get_config().witness_subdivision)
                                 for g in self.guards}

    def frame(self, guard: Guard, p: Point3) -> Tuple[Fraction, Fraction]:
        cu, cv = cyclic_frame(guard.axis)
        return p[cu] - guard.a[cu], p[cv] - guard.a[cv]

    def visible(self, guard: Guard, p: Point3) -> bool:
        key = (guard.gid, p)
        if key not in self._visible:
            candidates = list(self._points_of_guard[guard.gid])
            if guard.lo < p[guard.axis] < guard.hi:
                candidates.insert(0, guard.point_at(p[guard.axis]))
            self._visible[key] = any(x == p or segment_in_polyhedron(self.grid, Segment3(x, p))
                                     for x in candidates)
        return self._visible[key]

    def on_beam(self, guard: Guard, d: AimDirection, p: Point3) -> bool:
        wu, wv = self.frame(guard, p)
        return d.u * wv - d.v * wu == 0 and d.u * wu + d.v * wv >= 0 and self.visible(guard, p)

    def blocks(self, guard: Guard, d: AimDirection, p: Point3, q: Point3) -> bool:
        (pu, pv), (qu, qv) = self.frame(guard, p), self.frame(guard, q)
        k1, k2 = d.u * pv - d.v * pu, d.u * qv - d.v * qu
        if k1 == 0 and k2 == 0:
            mid = tuple((a + b) / 2 for a, b in zip(p, q))
            return any(self.on_beam(guard, d, x) for x in (p, mid, q))
        if (k1 > 0 and k2 > 0) or (k1 < 0 and k2 < 0):
            return False
        lam = k1 / (k1 - k2)
        x = tuple(a + lam * (b - a) for a, b in zip(p, q))
        return self.on_beam(guard, d, x)

    def lit_points(self, aims: Dict[str, AimDirection]) -> Set[int]:
        return {i for g in self.guards for i, p in enumerate(self.points) if self.on_beam(g, aims[g.gid], p)}

    def blocked_edges(self, aims: Dict[str, AimDirection]) -> List[Tuple[int, int]]:
        blocked = []
        for i, j in self.graph.edges:
            if any(self.blocks(g, aims[g.gid], self.points[i], self.points[j]) for g in self.guards):
                blocked.append((i, j))
        return blocked

    def flood(self, dirty: Set[int], aims: Dict[str, AimDirection]) -> Set[int]:
        dirty = dirty - self.lit_points(aims)
        view = nx.restricted_view(self.graph, [], self.blocked_edges(aims))
        spread: Set[int] = set()
        for component in nx.connected_components(view):
            if component & dirty:
                spread |= component
        return spread

    def swept(self, guard: Guard, start: AimDirection, end: AimDirection, sense: int) -> Set[int]:
        if start == end:
            return set()
        lo, hi = (end, start) if sense == CW else (start, end)
        found = set()
        for i, p in enumerate(self.points):
            wu, wv = self.frame(guard, p)
            if wu == 0 and wv == 0:
                continue
            if ccw_between(AimDirection(wu, wv), lo, hi) and self.visible(guard, p):
                found.add(i)
        return found


def _snapshot_times(lowered: Schedule, refinement: int) -> List[sympy.Expr]:
    marks = lowered.breakpoints()
    times = [marks[0]]
    for t0, t1 in zip(marks, marks[1:]):
        for i in range(1, refinement + 1):
            times.append(t0 + (t1 - t0) * sympy.Rational(i, refinement + 1))
        times.append(t1)
    return times


def brute_force_verify(P: OrthoPolyhedron, guards: Optional[Sequence[Guard]], lowered: Schedule,
                       refinement: int = 1) -> Verdict:
    """Sample the lowered schedule on sub-cell centers; small instances only"""
    limit = get_config().oracle_max_cells
    cells = P.grid.interior_cells()
    if len(cells) > limit:
        raise TooLarge(f"{len(cells)} cells exceeds the oracle limit of {limit}", subject=len(cells))
    if refinement < 1:
        raise ValueError("Refinement must be at least 1")
    guards = list(guards) if guards is not None else list(lowered.guards)
    oracle = _Oracle(P, guards, refinement)
    times = _snapshot_times(lowered, refinement)
    aims = {g.gid: lowered.aim_at(g.gid, times[0]) for g in guards}
    dirty = oracle.flood(set(range(len(oracle.points))), aims)
    trace = []
    for t0, t1 in zip(times, times[1:]):
        middle = (t0 + t1) / 2
        nxt = {g.gid: lowered.aim_at(g.gid, t1) for g in guards}
        for g in guards:
            sense = lowered.piece_at(g.gid, middle).sense
            if sense != HOLD:
                dirty -= oracle.swept(g, aims[g.gid], nxt[g.gid], sense)
        aims = nxt
        dirty = oracle.flood(dirty, aims)
        trace.append(hashlib.sha1(repr(sorted(dirty)).encode('utf-8')).hexdigest())
    logger.info("Oracle: %d snapshots, %d sub-cells, %d contaminated at the end",
                len(times), len(oracle.points), len(dirty))
    if dirty:
        witness = min(oracle.owner[i] for i in dirty)
        return Verdict(FAILED, witness, f"{len(dirty)} sub-cells contaminated", trace)
    return Verdict(SEARCHED, None, '', trace)


def compare_verdicts(macro: Verdict, oracle: Verdict) -> Optional[str]:
    """Disagreement message when the macro verifier accepts what the oracle rejects"""
    if macro.searched and not oracle.searched:
        return f"macro SEARCHED but oracle FAILED at {oracle.witness}"
    return None

