"""Macro schedules, the three planners, and lowering to angle functions.

A macro schedule is a list of steps (move, sweep, parallel sweep, hold)
over a fixed guard set. Lowering turns it into piecewise angle functions at
maximum angular speed: every guard gets a piece for every step, holding
still when the step does not move it, so all guards share breakpoints.
"""
import logging
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import sympy

from config import get_config
from errors import FormatError, NotViable, PrerequisiteFailed, SearchlightError, UnsupportedSchedule
from geometry_core import Cell, OrthoPolyhedron, format_rational, parse_rational
from ortho_fences import FencePlan, check_cuboid_lemma, check_fence_lemma, erect_fences
from searchlights import (
    AimDirection,
    Guard,
    ccw_arc,
    nonblind_arc,
    require_nonblind,
    resolve,
)

logger = logging.getLogger(__name__)

SCHED_HEADER = 'sched v1'
LOWERED_HEADER = 'sched v1 lowered'

CellBox = Tuple[Cell, Cell]
Region = Optional[Tuple[CellBox, ...]]  # None means every interior cell


@dataclass(frozen=True)
class Move:
    guard: str
    target: AimDirection
    origin: Optional[AimDirection] = None


@dataclass(frozen=True)
class Sweep:
    guard: str
    start: AimDirection
    end: AimDirection
    region: Region = None


@dataclass(frozen=True)
class ParallelSweep:
    guards: Tuple[str, ...]
    start: AimDirection
    end: AimDirection
    regions: Tuple[Region, ...] = ()


@dataclass(frozen=True)
class Hold:
    duration: Fraction


Step = Union[Move, Sweep, ParallelSweep, Hold]


@dataclass
class MacroSchedule:
    guards: List[Guard]
    initial: Dict[str, AimDirection]
    steps: List[Step] = field(default_factory=list)

    def guard(self, gid: str) -> Guard:
        for g in self.guards:
            if g.gid == gid:
                return g
        raise UnsupportedSchedule(f"Unknown guard {gid}", subject=gid)

    def validate_header(self) -> None:
        ids = [g.gid for g in self.guards]
        if len(set(ids)) != len(ids):
            raise UnsupportedSchedule("Duplicate guard id")
        for gid in self.initial:
            self.guard(gid)

    def validate_step(self, step) -> None:
        if isinstance(step, (Move, Sweep)):
            self.guard(step.guard)
        elif isinstance(step, ParallelSweep):
            if len(set(step.guards)) != len(step.guards):
                raise UnsupportedSchedule("Parallel sweep repeats a guard")
            if step.regions and len(step.regions) != len(step.guards):
                raise UnsupportedSchedule("Parallel sweep needs one region per guard")
            for gid in step.guards:
                self.guard(gid)
        elif not isinstance(step, Hold):
            raise UnsupportedSchedule(f"Unsupported step {step!r}", subject=step)

    def validate(self) -> None:
        self.validate_header()
        for step in self.steps:
            self.validate_step(step)


# ---------------------------------------------------------------------------
# Planners
# ---------------------------------------------------------------------------

def _box_of(cuboid) -> CellBox:
    return (tuple(cuboid.lo), tuple(cuboid.hi))


def plan_single_guard(P: OrthoPolyhedron, guard: Guard) -> MacroSchedule:
    """One sweep from leftmost to rightmost; the instance must be viable with this guard"""
    from sim_verify import check_viable

    report = check_viable(P, [guard])
    if not report.viable:
        raise NotViable(f"Cell {report.uncovered[0]} has no visibility witness on guard {guard.gid}",
                        subject=report.uncovered[0])
    left, _, _ = nonblind_arc(P.grid, guard)
    return MacroSchedule(guards=[guard], initial={guard.gid: left},
                         steps=[Sweep(guard.gid, AimDirection.leftmost(), AimDirection.rightmost())])


def plan_sequential(P: OrthoPolyhedron, plan: Optional[FencePlan] = None) -> MacroSchedule:
    """Each fence-generating guard sweeps its cuboids, then returns to its fence aim"""
    plan = plan or erect_fences(P)
    try:
        check_fence_lemma(plan, P)
        check_cuboid_lemma(plan, P)
    except SearchlightError as e:
        raise PrerequisiteFailed(f"Fence plan rejected: {e}", subject=e)
    steps: List[Step] = []
    for gid in plan.fence_generating_guards():
        guard = plan.guard(gid)
        _, right, _ = nonblind_arc(P.grid, guard)
        region = tuple(_box_of(c) for c in plan.region_of_guard(gid))
        steps.append(Sweep(gid, AimDirection.leftmost(), AimDirection.rightmost(), region))
        steps.append(Move(gid, plan.aims[gid], origin=right))
    logger.info("Sequential plan: %d sweeps over %d guards", len(steps) // 2, len(plan.guards))
    return MacroSchedule(guards=list(plan.guards), initial=dict(plan.aims), steps=steps)


def twin_id(gid: str) -> str:
    return f"{gid}s"


def plan_parallel(P: OrthoPolyhedron, plan: Optional[FencePlan] = None) -> Tuple[List[Guard], MacroSchedule]:
    """Two guards per notch: one holds the fence, its twin sweeps leftmost to rightmost"""
    plan = plan or erect_fences(P)
    stationary = list(plan.guards)
    sweepers = [Guard(twin_id(g.gid), g.a, g.b) for g in stationary]
    initial = dict(plan.aims)
    for twin in sweepers:
        initial[twin.gid] = nonblind_arc(P.grid, twin)[0]
    regions = tuple(tuple(_box_of(c) for c in plan.region_of_guard(g.gid)) for g in stationary)
    step = ParallelSweep(tuple(t.gid for t in sweepers), AimDirection.leftmost(),
                         AimDirection.rightmost(), regions)
    guards = stationary + sweepers
    logger.info("Parallel plan: %d guards", len(guards))
    return guards, MacroSchedule(guards=guards, initial=initial, steps=[step])


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------

HOLD, CCW, CW = 0, 1, -1


@dataclass(frozen=True)
class Piece:
    t0: sympy.Expr
    t1: sympy.Expr
    start: AimDirection
    end: AimDirection
    sense: int

    def arc(self) -> sympy.Expr:
        if self.sense == HOLD:
            return sympy.Integer(0)
        if self.sense == CCW:
            return ccw_arc(self.start, self.end)
        return ccw_arc(self.end, self.start)

    def pseudo_span(self) -> Fraction:
        if self.sense == HOLD:
            return Fraction(0)
        a, b = self.start.pseudo_angle(), self.end.pseudo_angle()
        return (b - a) % 4 if self.sense == CCW else (a - b) % 4


@dataclass
class Schedule:
    guards: List[Guard]
    pieces: Dict[str, List[Piece]]
    T: sympy.Expr

    def breakpoints(self) -> List[sympy.Expr]:
        times = {sympy.Integer(0), self.T}
        for plist in self.pieces.values():
            for p in plist:
                times.add(p.t0)
                times.add(p.t1)
        return sorted(times, key=lambda t: float(t))

    def piece_at(self, gid: str, t) -> Piece:
        plist = self.pieces[gid]
        for p in plist:
            if p.t0 <= t <= p.t1 and p.t1 != p.t0:
                return p
        return plist[-1]

    def aim_at(self, gid: str, t) -> AimDirection:
        """Direction at time t; within a piece the pseudo-angle advances linearly"""
        p = self.piece_at(gid, t)
        if p.sense == HOLD or t >= p.t1:
            return p.end if t >= p.t1 else p.start
        fraction = _as_fraction((t - p.t0) / (p.t1 - p.t0))
        return direction_at(p.start.pseudo_angle() + p.sense * p.pseudo_span() * fraction)

    def moving_guards(self, t0, t1) -> List[str]:
        return [gid for gid, plist in self.pieces.items()
                if any(p.sense != HOLD and p.t0 < t1 and p.t1 > t0 for p in plist)]

    def check(self) -> None:
        """Continuity at every breakpoint and the angular speed cap on every piece"""
        cap = 2 * sympy.pi * sympy.Rational(str(get_config().turns_per_second))
        for gid, plist in self.pieces.items():
            for prev, nxt in zip(plist, plist[1:]):
                if prev.t1 != nxt.t0 or prev.end != nxt.start:
                    raise UnsupportedSchedule(f"Guard {gid} jumps at t={prev.t1}", subject=gid)
            for p in plist:
                duration = p.t1 - p.t0
                if duration < 0:
                    raise UnsupportedSchedule(f"Guard {gid} has a piece running backwards", subject=gid)
                if p.sense != HOLD and sympy.simplify(p.arc() - cap * duration) > 0:
                    raise UnsupportedSchedule(f"Guard {gid} exceeds the speed cap", subject=gid)


def direction_at(pseudo: Fraction) -> AimDirection:
    pseudo = pseudo % 4
    q = int(pseudo)
    f = pseudo - q
    u, v = 1 - f, f
    for _ in range(q):
        u, v = -v, u
    return AimDirection(u, v)


def _as_fraction(value) -> Fraction:
    value = sympy.sympify(value)
    if getattr(value, 'is_Rational', False):
        return Fraction(int(value.p), int(value.q))
    return Fraction(str(sympy.Rational(sympy.Float(value, 40))))


def _arc_position(left: AimDirection, d: AimDirection) -> Fraction:
    return (d.pseudo_angle() - left.pseudo_angle()) % 4


def _path(P: OrthoPolyhedron, guard: Guard, current: AimDirection,
          target: AimDirection) -> Optional[Tuple[int, sympy.Expr]]:
    """Turning sense and arc from current to target, staying inside the non-blind arc"""
    if current == target:
        return None
    left, _, quarters = nonblind_arc(P.grid, guard)
    pc, pt = _arc_position(left, current), _arc_position(left, target)
    if pc <= quarters and pt <= quarters:
        if pt >= pc:
            return CCW, ccw_arc(current, target)
        return CW, ccw_arc(target, current)
    forward = ccw_arc(current, target)
    if forward <= sympy.pi:
        return CCW, forward
    return CW, ccw_arc(target, current)


def lower(m: MacroSchedule, P: OrthoPolyhedron) -> Schedule:
    """Angle functions at maximum speed; parallel steps overlap, others run in order"""
    m.validate()
    speed = 2 * sympy.pi * sympy.Rational(str(get_config().turns_per_second))
    grid = P.grid
    current = {g.gid: resolve(grid, g, m.initial[g.gid]) for g in m.guards if g.gid in m.initial}
    for g in m.guards:
        if g.gid not in current:
            current[g.gid] = nonblind_arc(grid, g)[0]
    pieces: Dict[str, List[Piece]] = {g.gid: [] for g in m.guards}
    t = sympy.Integer(0)

    def run(motions: Dict[str, List[Tuple[AimDirection, AimDirection, int, sympy.Expr]]],
            minimum: sympy.Expr) -> None:
        nonlocal t
        durations = {gid: sum((arc / speed for *_, arc in legs), sympy.Integer(0))
                     for gid, legs in motions.items()}
        length = max([minimum] + list(durations.values()), key=lambda x: float(x))
        for gid in pieces:
            clock = t
            for start, end, sense, arc in motions.get(gid, []):
                nxt = clock + arc / speed
                pieces[gid].append(Piece(clock, nxt, start, end, sense))
                clock = nxt
            if clock != t + length or not motions.get(gid):
                pieces[gid].append(Piece(clock, t + length, current[gid], current[gid], HOLD))
        t = t + length

    def legs(gid: str, target: AimDirection) -> List[Tuple]:
        guard = m.guard(gid)
        step = _path(P, guard, current[gid], target)
        if step is None:
            return []
        sense, arc = step
        leg = (current[gid], target, sense, arc)
        current[gid] = target
        return [leg]

    for step in m.steps:
        if isinstance(step, Hold):
            run({}, sympy.Rational(step.duration.numerator, step.duration.denominator))
        elif isinstance(step, Move):
            target = resolve(grid, m.guard(step.guard), step.target)
            run({step.guard: legs(step.guard, target)}, sympy.Integer(0))
        elif isinstance(step, Sweep):
            guard = m.guard(step.guard)
            start = require_nonblind(grid, guard, step.start)
            end = require_nonblind(grid, guard, step.end)
            motion = legs(step.guard, start) + legs(step.guard, end)
            run({step.guard: motion}, sympy.Integer(0))
        else:
            motions = {}
            for gid in step.guards:
                guard = m.guard(gid)
                start = require_nonblind(grid, guard, step.start)
                end = require_nonblind(grid, guard, step.end)
                motions[gid] = legs(gid, start) + legs(gid, end)
            run(motions, sympy.Integer(0))
    for gid, plist in pieces.items():
        pieces[gid] = [p for p in plist if p.t1 != p.t0] or [Piece(sympy.Integer(0), t, current[gid],
                                                                    current[gid], HOLD)]
    schedule = Schedule(guards=list(m.guards), pieces=pieces, T=t)
    schedule.check()
    logger.info("Lowered %d steps: T = %s s", len(m.steps), format_seconds(t))
    return schedule


def format_seconds(T: sympy.Expr) -> str:
    """Decimal rendering; exact when the rational duration terminates"""
    if T.is_Rational:
        q = int(T.q)
        while q % 2 == 0:
            q //= 2
        while q % 5 == 0:
            q //= 5
        if q == 1:
            value = Decimal(int(T.p)) / Decimal(int(T.q))
            text = format(value.normalize(), 'f')
            return text
    return str(sympy.N(T, 12))


def search_time(s: Schedule) -> Tuple[sympy.Expr, str]:
    return s.T, format_seconds(s.T)


# ---------------------------------------------------------------------------
# sched v1 text format
# ---------------------------------------------------------------------------

def _format_region(region: Region) -> str:
    if region is None:
        return 'all'
    return ';'.join(','.join(f"{lo[a]}:{hi[a]}" for a in range(3)) for lo, hi in region)


def _parse_region(text: str) -> Region:
    if text == 'all':
        return None
    if not text:
        return ()
    boxes = []
    for part in text.split(';'):
        ranges = part.split(',')
        if len(ranges) != 3:
            raise FormatError(f"Bad region box: {part}")
        try:
            pairs = [tuple(int(v) for v in r.split(':')) for r in ranges]
        except ValueError:
            raise FormatError(f"Bad region box: {part}")
        if any(len(p) != 2 for p in pairs):
            raise FormatError(f"Bad region box: {part}")
        boxes.append((tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)))
    return tuple(boxes)


def _region_token(tokens: Sequence[str]) -> str:
    extra = [t for t in tokens if t.startswith('region=')]
    if not extra:
        return 'all'
    return extra[0][len('region='):]


def serialize_schedule(m: MacroSchedule) -> str:
    out = [SCHED_HEADER]
    for g in m.guards:
        out.append(g.to_line())
    for g in m.guards:
        if g.gid in m.initial:
            out.append(f"init {g.gid} {m.initial[g.gid].token()}")
    for step in m.steps:
        if isinstance(step, Move):
            origin = step.origin.token() if step.origin else '*'
            out.append(f"move {step.guard} {origin} {step.target.token()}")
        elif isinstance(step, Sweep):
            out.append(f"sweep {step.guard} {step.start.token()} {step.end.token()} "
                       f"region={_format_region(step.region)}")
        elif isinstance(step, ParallelSweep):
            line = f"psweep {','.join(step.guards)} {step.start.token()} {step.end.token()}"
            if step.regions:
                line += " region=" + '|'.join(_format_region(r) for r in step.regions)
            out.append(line)
        else:
            out.append(f"hold {format_rational(step.duration)}")
    return '\n'.join(out) + '\n'


def parse_schedule(text: str) -> MacroSchedule:
    lines = [ln.split('#', 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != SCHED_HEADER:
        raise FormatError(f"Missing header '{SCHED_HEADER}'")
    guards: List[Guard] = []
    initial: Dict[str, AimDirection] = {}
    steps: List[Step] = []
    for line in lines[1:]:
        parts = line.split()
        keyword, args = parts[0], parts[1:]
        if keyword == 'guard':
            guards.append(Guard.from_tokens(args))
        elif keyword == 'init':
            if len(args) != 2:
                raise FormatError(f"Bad init line: {line}")
            initial[args[0]] = AimDirection.parse(args[1])
        elif keyword == 'move':
            if len(args) != 3:
                raise FormatError(f"Bad move line: {line}")
            origin = None if args[1] == '*' else AimDirection.parse(args[1])
            steps.append(Move(args[0], AimDirection.parse(args[2]), origin))
        elif keyword == 'sweep':
            if len(args) < 3:
                raise FormatError(f"Bad sweep line: {line}")
            steps.append(Sweep(args[0], AimDirection.parse(args[1]), AimDirection.parse(args[2]),
                               _parse_region(_region_token(args[3:]))))
        elif keyword == 'psweep':
            if len(args) < 3:
                raise FormatError(f"Bad psweep line: {line}")
            gids = tuple(args[0].split(','))
            token = _region_token(args[3:])
            regions = tuple(_parse_region(r) for r in token.split('|')) if args[3:] else ()
            steps.append(ParallelSweep(gids, AimDirection.parse(args[1]), AimDirection.parse(args[2]),
                                       regions))
        elif keyword == 'hold':
            if len(args) != 1:
                raise FormatError(f"Bad hold line: {line}")
            steps.append(Hold(parse_rational(args[0])))
        else:
            raise FormatError(f"Unknown keyword '{keyword}'")
    return MacroSchedule(guards=guards, initial=initial, steps=steps)


def _format_time(t: sympy.Expr) -> str:
    if t.is_Rational:
        return format_rational(Fraction(int(t.p), int(t.q)))
    return str(t).replace(' ', '')


def _parse_time(token: str) -> sympy.Expr:
    try:
        if '/' in token and all(part.lstrip('-').isdigit() for part in token.split('/')):
            value = parse_rational(token)
            return sympy.Rational(value.numerator, value.denominator)
        return sympy.sympify(token)
    except (sympy.SympifyError, FormatError):
        raise FormatError(f"Bad time: {token!r}")


_SENSES = {HOLD: 'hold', CCW: 'ccw', CW: 'cw'}


def serialize_lowered(s: Schedule) -> str:
    out = [LOWERED_HEADER]
    for g in s.guards:
        out.append(g.to_line())
    out.append(f"duration {_format_time(s.T)}")
    for g in s.guards:
        for p in s.pieces[g.gid]:
            out.append(f"piece {g.gid} @t={_format_time(p.t0)} @t={_format_time(p.t1)} "
                       f"{p.start.token()} {p.end.token()} {_SENSES[p.sense]}")
    return '\n'.join(out) + '\n'


def parse_lowered(text: str) -> Schedule:
    lines = [ln.split('#', 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != LOWERED_HEADER:
        raise FormatError(f"Missing header '{LOWERED_HEADER}'")
    guards: List[Guard] = []
    pieces: Dict[str, List[Piece]] = {}
    T = None
    senses = {v: k for k, v in _SENSES.items()}
    for line in lines[1:]:
        parts = line.split()
        keyword, args = parts[0], parts[1:]
        if keyword == 'guard':
            guard = Guard.from_tokens(args)
            guards.append(guard)
            pieces[guard.gid] = []
        elif keyword == 'duration':
            T = _parse_time(args[0])
        elif keyword == 'piece':
            if len(args) != 6 or not args[1].startswith('@t=') or not args[2].startswith('@t='):
                raise FormatError(f"Bad piece line: {line}")
            if args[0] not in pieces or args[5] not in senses:
                raise FormatError(f"Bad piece line: {line}")
            pieces[args[0]].append(Piece(_parse_time(args[1][3:]), _parse_time(args[2][3:]),
                                         AimDirection.parse(args[3]), AimDirection.parse(args[4]),
                                         senses[args[5]]))
        else:
            raise FormatError(f"Unknown keyword '{keyword}'")
    if T is None:
        raise FormatError("Missing duration line")
    return Schedule(guards=guards, pieces=pieces, T=T)
