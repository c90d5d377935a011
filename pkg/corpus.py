"""Named fixtures and seeded random instance generators."""
import logging
import random
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import SearchlightError
from geometry_core import (
    Face,
    OrthoPolyhedron,
    faces_from_cells,
    notches,
    polyhedron_from_cells,
    ring_area,
    serialize_orthopoly,
    to_scalar,
    trace_rings,
)
from ncl import AND, OR, AsyncSchedule, ConstraintGraph, Configuration, NclInstance, Phase, Vertex, \
    check_async_schedule, legal_configs, serialize_ncl
from polygon_partition import Polygon2, serialize_polygon
from schedule import MacroSchedule, Sweep
from searchlights import AimDirection, Guard

logger = logging.getLogger(__name__)

BoxSpec = Tuple[Sequence, Sequence]


def _cells_of_boxes(boxes: Sequence[BoxSpec]):
    lows = [tuple(to_scalar(v) for v in lo) for lo, _ in boxes]
    highs = [tuple(to_scalar(v) for v in hi) for _, hi in boxes]
    coords = tuple(tuple(sorted({p[a] for p in lows + highs})) for a in range(3))
    interior = np.zeros(tuple(len(c) - 1 for c in coords), dtype=bool)
    for lo, hi in zip(lows, highs):
        index = [slice(coords[a].index(lo[a]), coords[a].index(hi[a])) for a in range(3)]
        interior[tuple(index)] = True
    return coords, interior


def faces_from_boxes(boxes: Sequence[BoxSpec]) -> List[Face]:
    coords, interior = _cells_of_boxes(boxes)
    return faces_from_cells(coords, interior)


def polyhedron_from_boxes(boxes: Sequence[BoxSpec]) -> OrthoPolyhedron:
    """Validated solid for a union of closed boxes"""
    coords, interior = _cells_of_boxes(boxes)
    return polyhedron_from_cells(coords, interior)


# ---------------------------------------------------------------------------
# Solids
# ---------------------------------------------------------------------------

UNIT_CUBE = [((0, 0, 0), (1, 1, 1))]
L_SOLID = [((0, 0, 0), (2, 1, 1)), ((0, 0, 1), (1, 1, 2))]
STAIRCASE = [((0, 0, 0), (1, 1, 3)), ((1, 0, 0), (2, 1, 2)), ((2, 0, 0), (3, 1, 1))]
SQUARE_TORUS = [((0, 0, 0), (3, 1, 1)), ((0, 2, 0), (3, 3, 1)), ((0, 1, 0), (1, 2, 1)), ((2, 1, 0), (3, 2, 1))]
SHADOW = [((0, 0, 0), (1, 2, 2)), ((1, 0, 0), (2, 1, 2))]
L_FOOTPRINT = [((0, 0, 0), (2, 1, 1)), ((0, 1, 0), (1, 2, 1))]
TOWER_ON_SLAB = [((0, 0, 0), (2, 2, 1)), ((0, 0, 1), (1, 1, 2))]
CROSSING_CORRIDORS = [((0, 1, 0), (3, 2, 1)), ((1, 0, 0), (2, 3, 1))]
# slab with a turret over one cell and a bay cut beside it; the bay's vertical notch lies on a
# flat face of the Step-1 prism, next to the turret's fence
TURRET_AND_BAY = [((0, 0, 0), (2, 2, 1)), ((0, 2, 0), (1, 3, 1)), ((1, 1, 1), (2, 2, 2))]
# a notch along y looking down a corridor that turns sideways at its far end
TURNING_CORRIDOR = [((0, 0, 0), (3, 1, 1)), ((0, 0, 1), (2, 1, 2)), ((0, 1, 0), (1, 3, 1))]
TWO_CUBES_SHARING_AN_EDGE = [((0, 0, 0), (1, 1, 1)), ((1, 1, 0), (2, 2, 1))]

SOLIDS: Dict[str, Sequence[BoxSpec]] = {
    'unit-cube': UNIT_CUBE,
    'l-solid': L_SOLID,
    'staircase': STAIRCASE,
    'square-torus': SQUARE_TORUS,
    'shadow': SHADOW,
    'l-footprint': L_FOOTPRINT,
    'tower-on-slab': TOWER_ON_SLAB,
    'crossing-corridors': CROSSING_CORRIDORS,
    'turret-and-bay': TURRET_AND_BAY,
    'turning-corridor': TURNING_CORRIDOR,
}


def fixture(name: str) -> OrthoPolyhedron:
    if name not in SOLIDS:
        raise KeyError(f"Unknown fixture: {name}")
    return polyhedron_from_boxes(SOLIDS[name])


def shadow_guard() -> Guard:
    return Guard('s', (2, 0, 1), (2, 1, 1))


def turning_corridor_guard() -> Guard:
    """Notch guard at the upper bar's end; the sideways leg of the corridor is in its shadow"""
    return Guard('t', (2, 0, 1), (2, 1, 1))


def l_solid_endpoint_guard() -> Guard:
    """Top edge of the front face right of the notch; its endpoint touches the notch"""
    return Guard('e', (1, 0, 1), (2, 0, 1))


def box_edge_guard() -> Guard:
    """Full top front edge of the box [0,2]x[0,1]x[0,1]"""
    return Guard('b', (0, 0, 1), (2, 0, 1))


def crossing_corridors_naive_plan() -> MacroSchedule:
    """Each guard sweeps its own corridor inward while the other is not holding a fence"""
    ga = Guard('ga', (0, 1, 1), (0, 2, 1))
    gb = Guard('gb', (1, 0, 1), (2, 0, 1))
    steps = [
        Sweep('ga', AimDirection.leftmost(), AimDirection.rightmost(), (((0, 1, 0), (3, 2, 1)),)),
        Sweep('gb', AimDirection.leftmost(), AimDirection.rightmost(), (((1, 0, 0), (2, 3, 1)),)),
    ]
    return MacroSchedule(guards=[ga, gb], initial={'ga': AimDirection.leftmost(), 'gb': AimDirection.leftmost()},
                         steps=steps)


# ---------------------------------------------------------------------------
# Polygons
# ---------------------------------------------------------------------------

L_HEXAGON = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
SQUARE_WITH_HOLE = ([(0, 0), (3, 0), (3, 3), (0, 3)], [[(1, 1), (1, 2), (2, 2), (2, 1)]])


def l_hexagon() -> Polygon2:
    return Polygon2(tuple(L_HEXAGON))


def square_with_hole() -> Polygon2:
    outer, holes = SQUARE_WITH_HOLE
    return Polygon2(tuple(outer), tuple(tuple(h) for h in holes))


def polygon_from_squares(mask: np.ndarray) -> Polygon2:
    """Polygon covering the unit squares set in a 2D mask"""
    mask = np.asarray(mask, dtype=bool)
    us = [Fraction(i) for i in range(mask.shape[0] + 1)]
    vs = [Fraction(j) for j in range(mask.shape[1] + 1)]
    rings = trace_rings(mask, us, vs)
    rings.sort(key=lambda r: abs(ring_area(r)), reverse=True)
    return Polygon2(rings[0], tuple(rings[1:]))


# ---------------------------------------------------------------------------
# NCL
# ---------------------------------------------------------------------------

def parallel_triple() -> ConstraintGraph:
    """Two OR vertices joined by three parallel edges"""
    return ConstraintGraph([Vertex('v0', OR, ('e1', 'e2', 'e3')), Vertex('v1', OR, ('e1', 'e2', 'e3'))],
                           targets=[('e1', 'v0'), ('e2', 'v0')])


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------

def random_box_union(rng: random.Random, boxes: int, size: int = 4,
                     max_notches: Optional[int] = None, attempts: int = 500) -> OrthoPolyhedron:
    """Connected manifold union of axis-aligned boxes on an integer lattice, with at least one notch"""
    for _ in range(attempts):
        specs = []
        for _ in range(boxes):
            lo = [rng.randrange(0, size) for _ in range(3)]
            hi = [rng.randrange(v + 1, size + 1) for v in lo]
            specs.append((tuple(lo), tuple(hi)))
        try:
            P = polyhedron_from_boxes(specs)
        except SearchlightError:
            continue
        found = len(notches(P))
        if found == 0 or (max_notches is not None and found > max_notches):
            continue
        return P
    raise RuntimeError(f"No valid union of {boxes} boxes after {attempts} attempts")


def random_orthogonal_corpus(seed: int, count: int, max_boxes: int = 10,
                             max_notches: int = 8) -> List[OrthoPolyhedron]:
    rng = random.Random(seed)
    return [random_box_union(rng, rng.randint(2, max_boxes), max_notches=max_notches) for _ in range(count)]


def random_polygon(rng: random.Random, size: int = 6, max_reflex: int = 12, max_holes: int = 3,
                   attempts: int = 500) -> Polygon2:
    """Polygon from a grown set of lattice squares with some interior squares removed as holes"""
    for _ in range(attempts):
        mask = np.zeros((size, size), dtype=bool)
        i, j = rng.randrange(size), rng.randrange(size)
        mask[i, j] = True
        for _ in range(rng.randint(size, size * size)):
            filled = [tuple(int(v) for v in p) for p in np.argwhere(mask)]
            i, j = rng.choice(filled)
            di, dj = rng.choice(((1, 0), (-1, 0), (0, 1), (0, -1)))
            if 0 <= i + di < size and 0 <= j + dj < size:
                mask[i + di, j + dj] = True
        for _ in range(rng.randint(0, max_holes)):
            candidates = [(a, b) for a in range(1, size - 1) for b in range(1, size - 1)
                          if mask[a - 1:a + 2, b - 1:b + 2].all()]
            if candidates:
                a, b = rng.choice(candidates)
                mask[a, b] = False
        try:
            polygon = polygon_from_squares(mask)
        except SearchlightError:
            continue
        if polygon.h <= max_holes and polygon.r <= max_reflex:
            return polygon
    raise RuntimeError(f"No valid polygon after {attempts} attempts")


def random_ncl_graph(rng: random.Random, vertex_count: int = 4, attempts: int = 200) -> ConstraintGraph:
    """3-regular multigraph (no loops) from random stub pairings, random vertex kinds"""
    if vertex_count % 2:
        raise ValueError("A 3-regular graph needs an even vertex count")
    for _ in range(attempts):
        stubs = [v for v in range(vertex_count) for _ in range(3)]
        rng.shuffle(stubs)
        pairs = [(stubs[i], stubs[i + 1]) for i in range(0, len(stubs), 2)]
        if any(a == b for a, b in pairs):
            continue
        incident: Dict[int, List[str]] = {v: [] for v in range(vertex_count)}
        for index, (a, b) in enumerate(pairs):
            incident[a].append(f"e{index}")
            incident[b].append(f"e{index}")
        vertices = []
        for v in range(vertex_count):
            edges = incident[v][:]
            rng.shuffle(edges)
            vertices.append(Vertex(f"v{v}", rng.choice((AND, OR)), tuple(edges)))
        return ConstraintGraph(vertices)
    raise RuntimeError("No loop-free pairing found")


def random_legal_config(rng: random.Random, g: ConstraintGraph) -> Optional[Configuration]:
    legal = legal_configs(g)
    return rng.choice(legal) if legal else None


def random_async_schedule(rng: random.Random, g: ConstraintGraph, start: Configuration,
                          max_events: int = 12, attempts: int = 50) -> AsyncSchedule:
    """Legal asynchronous schedule by rejection sampling; the empty schedule as a last resort"""
    edges = g.edges
    for _ in range(attempts):
        phases: List[Phase] = []
        for _ in range(rng.randint(1, max_events)):
            edge = rng.choice(edges)
            begin = Fraction(rng.randrange(0, 40), 4)
            phase = Phase(edge, begin, begin + Fraction(rng.randrange(1, 12), 4))
            if any(p.edge == edge and p.start < phase.end and phase.start < p.end for p in phases):
                continue
            phases.append(phase)
        schedule = AsyncSchedule(phases)
        if check_async_schedule(g, start, schedule)[0]:
            return schedule
    return AsyncSchedule([])


def random_ncl_instance(rng: random.Random, vertex_count: int = 4) -> NclInstance:
    """Random cubic graph with a legal start and a legal async schedule when one exists"""
    g = random_ncl_graph(rng, vertex_count)
    start = random_legal_config(rng, g)
    schedule = random_async_schedule(rng, g, start) if start is not None else AsyncSchedule([])
    return NclInstance(g, start, schedule)


# kind -> (generator taking rng and a size, text serializer)
GENERATORS: Dict[str, Tuple[Callable, Callable[..., str]]] = {
    'boxes': (random_box_union, lambda P: serialize_orthopoly(P.faces)),
    'polygon': (random_polygon, serialize_polygon),
    'ncl': (random_ncl_instance, serialize_ncl),
}
