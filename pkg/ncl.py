"""Nondeterministic constraint logic: configurations, moves, asynchronous schedules.

An edge's orientation is the id of the vertex it points toward, or None
while it is being reversed (a reversing edge points toward neither end).
"""
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from config import get_config
from errors import FormatError, IllegalAsync, MalformedGraph, MalformedSchedule, RestrictionViolated, TooLarge
from geometry_core import format_rational, parse_rational

logger = logging.getLogger(__name__)

NCL_HEADER = 'ncl v1'
AND, OR = 'and', 'or'

Configuration = Dict[str, Optional[str]]


@dataclass(frozen=True)
class Vertex:
    vid: str
    kind: str
    edges: Tuple[str, str, str]  # AND: (output, input, input)


@dataclass
class ConstraintGraph:
    vertices: List[Vertex]
    targets: List[Tuple[str, str]] = field(default_factory=list)  # (edge, vertex it must point toward)

    def __post_init__(self):
        self.endpoints: Dict[str, Tuple[str, str]] = {}
        seen: Dict[str, List[str]] = {}
        for vertex in self.vertices:
            if vertex.kind not in (AND, OR):
                raise MalformedGraph(f"Vertex {vertex.vid} has unknown kind {vertex.kind}", subject=vertex.vid)
            if len(vertex.edges) != 3:
                raise MalformedGraph(f"Vertex {vertex.vid} needs exactly 3 edges", subject=vertex.vid)
            for edge in vertex.edges:
                seen.setdefault(edge, []).append(vertex.vid)
        for edge, ends in seen.items():
            if len(ends) != 2:
                raise MalformedGraph(f"Edge {edge} has {len(ends)} endpoints", subject=edge)
            if ends[0] == ends[1]:
                raise MalformedGraph(f"Edge {edge} is a loop", subject=edge)
            self.endpoints[edge] = (ends[0], ends[1])
        for edge, toward in self.targets:
            if edge not in self.endpoints or toward not in self.endpoints[edge]:
                raise MalformedGraph(f"Target {edge} -> {toward} does not name an edge end", subject=edge)
        if len(self.targets) == 2 and self.targets[0][0] == self.targets[1][0]:
            raise MalformedGraph("Distinguished edges must differ", subject=self.targets[0][0])

    @property
    def edges(self) -> List[str]:
        return sorted(self.endpoints)

    def vertex(self, vid: str) -> Vertex:
        return next(v for v in self.vertices if v.vid == vid)

    def other_end(self, edge: str, vid: str) -> str:
        a, b = self.endpoints[edge]
        return b if vid == a else a


def _vertex_ok(vertex: Vertex, c: Configuration) -> bool:
    inward = [c.get(e) == vertex.vid for e in vertex.edges]
    if vertex.kind == AND:
        return inward[0] or (inward[1] and inward[2])
    return any(inward)


def is_legal_config(g: ConstraintGraph, c: Configuration) -> Tuple[bool, Optional[str]]:
    """Legality and the first violating vertex"""
    missing = [e for e in g.edges if e not in c]
    if missing:
        raise MalformedGraph(f"Configuration leaves edge {missing[0]} unassigned", subject=missing[0])
    for vertex in g.vertices:
        if not _vertex_ok(vertex, c):
            return False, vertex.vid
    return True, None


def reversed_config(g: ConstraintGraph, c: Configuration, edge: str) -> Configuration:
    out = dict(c)
    out[edge] = g.other_end(edge, c[edge])
    return out


def is_legal_move(g: ConstraintGraph, c: Configuration, edge: str) -> bool:
    if c.get(edge) is None:
        return False
    return is_legal_config(g, reversed_config(g, c, edge))[0]


def is_legal_sequence(g: ConstraintGraph, start: Configuration, moves: Sequence[str]) -> Tuple[bool, Optional[int]]:
    """Every prefix legal; the index of the first illegal move otherwise"""
    c = dict(start)
    if not is_legal_config(g, c)[0]:
        return False, -1
    for index, edge in enumerate(moves):
        if not is_legal_move(g, c, edge):
            return False, index
        c = reversed_config(g, c, edge)
    return True, None


def apply_moves(g: ConstraintGraph, start: Configuration, moves: Sequence[str]) -> Configuration:
    c = dict(start)
    for edge in moves:
        c = reversed_config(g, c, edge)
    return c


def reverse_moves(g: ConstraintGraph, start: Configuration, moves: Sequence[str]) -> Tuple[Configuration, List[str]]:
    """End configuration and the move list that leads back from it"""
    return apply_moves(g, start, moves), list(reversed(moves))


# ---------------------------------------------------------------------------
# Asynchronous schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Phase:
    edge: str
    start: Fraction
    end: Fraction


@dataclass
class AsyncSchedule:
    phases: List[Phase] = field(default_factory=list)

    def times(self) -> List[Fraction]:
        return sorted({p.start for p in self.phases} | {p.end for p in self.phases})


def _validate_phases(g: ConstraintGraph, s: AsyncSchedule) -> None:
    by_edge: Dict[str, List[Phase]] = {}
    for phase in s.phases:
        if phase.edge not in g.endpoints:
            raise MalformedSchedule(f"Phase names unknown edge {phase.edge}", subject=phase)
        if phase.end <= phase.start:
            raise MalformedSchedule(f"Phase of {phase.edge} ends before it starts", subject=phase)
        by_edge.setdefault(phase.edge, []).append(phase)
    for edge, phases in by_edge.items():
        phases.sort(key=lambda p: p.start)
        for first, second in zip(phases, phases[1:]):
            if second.start < first.end:
                raise MalformedSchedule(f"Reversal phases of {edge} overlap", subject=second)


def config_at(g: ConstraintGraph, start: Configuration, s: AsyncSchedule, t: Fraction) -> Configuration:
    """Configuration at time t; phases are reversing on [start, end) and done from end on"""
    c = dict(start)
    for phase in sorted(s.phases, key=lambda p: p.start):
        if phase.end <= t:
            c[phase.edge] = g.other_end(phase.edge, c[phase.edge])
    for phase in s.phases:
        if phase.start <= t < phase.end:
            c[phase.edge] = None
    return c


def check_async_schedule(g: ConstraintGraph, start: Configuration,
                         s: AsyncSchedule) -> Tuple[bool, Optional[Fraction]]:
    """Legal at every phase boundary; the configuration is constant in between"""
    _validate_phases(g, s)
    if not is_legal_config(g, start)[0]:
        raise IllegalAsync("Start configuration is illegal")
    for t in s.times():
        if not is_legal_config(g, config_at(g, start, s, t))[0]:
            return False, t
    return True, None


def final_config(g: ConstraintGraph, start: Configuration, s: AsyncSchedule) -> Configuration:
    if not s.phases:
        return dict(start)
    return config_at(g, start, s, max(p.end for p in s.phases))


def serialize_async(g: ConstraintGraph, start: Configuration, s: AsyncSchedule) -> List[str]:
    """Instantaneous moves in order of weakly increasing phase start"""
    ok, when = check_async_schedule(g, start, s)
    if not ok:
        raise IllegalAsync(f"Schedule is illegal at t={when}", subject=when)
    ordered = sorted(s.phases, key=lambda p: (p.start, p.end, p.edge))
    moves = [p.edge for p in ordered]
    legal, index = is_legal_sequence(g, start, moves)
    if not legal:
        raise IllegalAsync(f"Serialized move {index} is illegal", subject=index)
    if apply_moves(g, start, moves) != final_config(g, start, s):
        raise IllegalAsync("Serialized moves end in a different configuration")
    logger.debug("Serialized %d phases", len(moves))
    return moves


# ---------------------------------------------------------------------------
# Exhaustive decision
# ---------------------------------------------------------------------------

def _encode(g: ConstraintGraph, c: Configuration) -> int:
    mask = 0
    for bit, edge in enumerate(g.edges):
        if c[edge] == g.endpoints[edge][1]:
            mask |= 1 << bit
    return mask


def _decode(g: ConstraintGraph, mask: int) -> Configuration:
    return {edge: g.endpoints[edge][(mask >> bit) & 1] for bit, edge in enumerate(g.edges)}


def legal_configs(g: ConstraintGraph) -> List[Configuration]:
    limit = get_config().ncl_max_edges
    if len(g.edges) > limit:
        raise TooLarge(f"{len(g.edges)} edges exceeds the limit of {limit}", subject=len(g.edges))
    configs = (_decode(g, m) for m in range(1 << len(g.edges)))
    return [c for c in configs if is_legal_config(g, c)[0]]


def ee_decide(g: ConstraintGraph, shuffle_seed: Optional[int] = None) -> Tuple[bool, List[str]]:
    """Breadth-first search from every legal configuration with e_a at target"""
    if len(g.targets) != 2:
        raise MalformedGraph("Decision needs two target lines")
    (ea, ta), (eb, tb) = g.targets
    legal = legal_configs(g)
    if any(c[ea] == ta and c[eb] == tb for c in legal):
        raise RestrictionViolated("Some legal configuration has both distinguished edges at target")
    rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
    edges = list(g.edges)
    starts = [c for c in legal if c[ea] == ta]
    parent: Dict[int, Tuple[Optional[int], Optional[str]]] = {}
    queue = deque()
    for c in starts:
        mask = _encode(g, c)
        parent[mask] = (None, None)
        queue.append((mask, c))
    while queue:
        mask, c = queue.popleft()
        if c[eb] == tb:
            moves = []
            while parent[mask][0] is not None:
                previous, edge = parent[mask]
                moves.append(edge)
                mask = previous
            moves.reverse()
            logger.info("EE decision: reachable in %d moves (%d states visited)", len(moves), len(parent))
            return True, moves
        order = edges[:]
        if rng is not None:
            rng.shuffle(order)
        for edge in order:
            if not is_legal_move(g, c, edge):
                continue
            nxt = reversed_config(g, c, edge)
            key = _encode(g, nxt)
            if key not in parent:
                parent[key] = (mask, edge)
                queue.append((key, nxt))
    logger.info("EE decision: unreachable (%d states visited)", len(parent))
    return False, []


# ---------------------------------------------------------------------------
# ncl v1 text format
# ---------------------------------------------------------------------------

@dataclass
class NclInstance:
    graph: ConstraintGraph
    start: Optional[Configuration]
    schedule: AsyncSchedule


def parse_ncl(text: str) -> NclInstance:
    lines = [ln.split('#', 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != NCL_HEADER:
        raise FormatError(f"Missing header '{NCL_HEADER}'")
    vertices: List[Vertex] = []
    targets: List[Tuple[str, str]] = []
    orient: Dict[str, str] = {}
    phases: List[Phase] = []
    for line in lines[1:]:
        parts = line.split()
        keyword, args = parts[0], parts[1:]
        if keyword in (AND, OR):
            if len(args) != 3:
                raise FormatError(f"Vertex needs three edges: {line}")
            vertices.append(Vertex(f"v{len(vertices)}", keyword, tuple(args)))
        elif keyword == 'target':
            if len(args) != 2:
                raise FormatError(f"Bad target line: {line}")
            targets.append((args[0], args[1]))
        elif keyword == 'orient':
            if len(args) != 2:
                raise FormatError(f"Bad orient line: {line}")
            orient[args[0]] = args[1]
        elif keyword == 'phase':
            if len(args) != 3:
                raise FormatError(f"Bad phase line: {line}")
            phases.append(Phase(args[0], parse_rational(args[1]), parse_rational(args[2])))
        else:
            raise FormatError(f"Unknown keyword '{keyword}'")
    graph = ConstraintGraph(vertices, targets)
    start = None
    if orient:
        for edge, toward in orient.items():
            if edge not in graph.endpoints or toward not in graph.endpoints[edge]:
                raise FormatError(f"Orientation {edge} -> {toward} does not name an edge end")
        start = dict(orient)
    return NclInstance(graph, start, AsyncSchedule(phases))


def serialize_ncl(instance: NclInstance) -> str:
    out = [NCL_HEADER]
    for vertex in instance.graph.vertices:
        out.append(f"{vertex.kind} {' '.join(vertex.edges)}")
    for edge, toward in instance.graph.targets:
        out.append(f"target {edge} {toward}")
    if instance.start:
        for edge in instance.graph.edges:
            out.append(f"orient {edge} {instance.start[edge]}")
    for phase in instance.schedule.phases:
        out.append(f"phase {phase.edge} {format_rational(phase.start)} {format_rational(phase.end)}")
    return '\n'.join(out) + '\n'
