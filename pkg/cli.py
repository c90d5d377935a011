#!/usr/bin/env python3
import argparse
import logging
import os
import random
import sys
from typing import List, Optional, Tuple

import corpus
from config import Config
from errors import SearchlightError
from exhaustiveness import enumerate_events, is_exhaustive_guard
from geometry_core import (
    OrthoPolyhedron,
    format_rational,
    genus,
    notches,
    parse_rational,
    polyhedron_volume,
    read_instance,
)
from ncl import check_async_schedule, ee_decide, parse_ncl, serialize_async
from obj_export import write_obj
from ortho_fences import check_cuboid_lemma, check_fence_lemma, erect_fences, guard_lit_facets
from polygon_partition import (
    Polygon2,
    bisector_partition,
    parse_polygon,
    select_open_edge_guards,
    verify_coverage,
)
from schedule import (
    MacroSchedule,
    lower,
    parse_schedule,
    plan_parallel,
    plan_sequential,
    plan_single_guard,
    search_time,
    serialize_schedule,
)
from searchlights import Guard
from sim_verify import TargetRegion, brute_force_verify, compare_verdicts, verify_schedule

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FALSE, EXIT_INPUT = 0, 1, 2

POLYGON_FIXTURES = {
    'l-hexagon': corpus.l_hexagon,
    'square-with-hole': corpus.square_with_hole,
}


def safe_print(text: str) -> None:
    """Print text safely, surviving characters the terminal cannot encode"""
    try:
        print(text, flush=True)
    except UnicodeEncodeError:
        safe_text = text.encode('ascii', errors='replace').decode('ascii')
        print(safe_text, flush=True)


def _read_text(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def _write_or_print(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, 'w', encoding='utf-8') as f:
            f.write(text)
        safe_print(f"Wrote {output}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def load_instance(source: str) -> OrthoPolyhedron:
    """An orthopoly file, or the name of a built-in fixture"""
    if not os.path.exists(source) and source in corpus.SOLIDS:
        return corpus.fixture(source)
    return read_instance(source)


def load_polygon(source: str) -> Tuple[Polygon2, int]:
    if not os.path.exists(source) and source in POLYGON_FIXTURES:
        return POLYGON_FIXTURES[source](), 0
    return parse_polygon(_read_text(source))


def parse_segment(gid: str, text: str) -> Guard:
    """'x,y,z,x,y,z' to a guard"""
    parts = text.split(',')
    if len(parts) != 6:
        raise ValueError(f"Guard segment needs six coordinates: {text!r}")
    values = [parse_rational(p) for p in parts]
    return Guard(gid, tuple(values[:3]), tuple(values[3:]))


def notch_guards(P: OrthoPolyhedron) -> List[Guard]:
    return [Guard(f"g{i}", n.edge.a, n.edge.b) for i, n in enumerate(notches(P))]


class SearchlightCLI:
    """Searchlight scheduling command line interface"""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()

    def validate(self, args) -> int:
        P = load_instance(args.instance)
        safe_print(f"valid: {len(P.faces)} faces, {len(P.vertices)} vertices, {len(P.edges)} edges")
        safe_print(f"genus: {genus(P)}")
        safe_print(f"volume: {format_rational(polyhedron_volume(P))}")
        return EXIT_OK

    def genus(self, args) -> int:
        safe_print(str(genus(load_instance(args.instance))))
        return EXIT_OK

    def notches(self, args) -> int:
        found = notches(load_instance(args.instance))
        for i, n in enumerate(found):
            safe_print(f"g{i}: {n.describe()}")
        safe_print(f"{len(found)} notches")
        return EXIT_OK

    def fences(self, args) -> int:
        P = load_instance(args.instance)
        plan = erect_fences(P)
        check_fence_lemma(plan, P)
        check_cuboid_lemma(plan, P)
        grid = P.grid
        for fence in plan.fences:
            axis, plane = fence.plane
            facets = ' '.join(grid_facet_range(f) for f in sorted(fence.facets))
            merged = f" merged={fence.merged_into}" if fence.merged_into is not None else ''
            safe_print(f"fence {fence.fid} step={fence.step} plane={'xyz'[axis]}="
                       f"{format_rational(grid.coords[axis][plane])} guard={plan.guard_of_fence[fence.fid]}"
                       f"{merged} facets={facets}")
        for index, cuboid in enumerate(plan.cuboids):
            safe_print(f"cuboid {index} {cuboid.describe()} fences={sorted(cuboid.bounding_fences)}")
        for notch in plan.fenceless_notches:
            safe_print(f"fenceless {notch.describe()}")
        if args.obj:
            lit = set()
            for gid in plan.fence_generating_guards():
                lit |= guard_lit_facets(P, plan.guard(gid), plan.aims[gid])
            write_obj(args.obj, P, sorted(plan.fence_facets()), lit)
            safe_print(f"Wrote {args.obj}")
        return EXIT_OK

    def plan(self, args) -> int:
        P = load_instance(args.instance)
        if args.mode == 'single':
            if not args.guard:
                raise ValueError("--guard x,y,z,x,y,z is required with --mode single")
            m = plan_single_guard(P, parse_segment('g', args.guard))
        elif args.mode == 'parallel':
            _, m = plan_parallel(P)
        else:
            m = plan_sequential(P)
        _write_or_print(serialize_schedule(m), args.output)
        _, text = search_time(lower(m, P))
        logger.info("Planned %d steps for %d guards", len(m.steps), len(m.guards))
        if args.output:
            safe_print(f"T = {text} s")
        return EXIT_OK

    def _schedule(self, args) -> MacroSchedule:
        return parse_schedule(_read_text(args.schedule))

    def verify(self, args) -> int:
        P = load_instance(args.instance)
        m = self._schedule(args)
        target = TargetRegion.parse(args.target) if args.target else None
        verdict = verify_schedule(P, None, m, target)
        safe_print(verdict.describe())
        if args.trace:
            for index, digest in enumerate(verdict.trace):
                safe_print(f"trace {index} {digest}")
        if verdict.searched:
            _, text = search_time(lower(m, P))
            safe_print(f"T = {text} s")
            return EXIT_OK
        return EXIT_FALSE

    def oracle_verify(self, args) -> int:
        P = load_instance(args.instance)
        m = self._schedule(args)
        macro = verify_schedule(P, None, m)
        oracle = brute_force_verify(P, None, lower(m, P), args.refine)
        safe_print(f"macro: {macro.describe()}")
        safe_print(f"oracle: {oracle.describe()}")
        disagreement = compare_verdicts(macro, oracle)
        if disagreement:
            safe_print(f"disagreement: {disagreement}")
            return EXIT_FALSE
        return EXIT_OK if oracle.searched else EXIT_FALSE

    def polygon_guards(self, args) -> int:
        polygon, distinguished = load_polygon(args.polygon)
        if args.edge is not None:
            distinguished = args.edge
        partition = bisector_partition(polygon, distinguished)
        guards = select_open_edge_guards(polygon, partition, distinguished)
        density = args.density or self.config.coverage_density
        report = verify_coverage(polygon, guards, density, partition)
        safe_print(f"r = {polygon.r}, h = {polygon.h}, pieces = {len(partition.pieces)} "
                   f"({partition.splits} splits, {partition.merges} merges)")
        edges = polygon.edges()
        for gid in guards.guards:
            a, b = edges[gid]
            safe_print(f"guard edge {gid}: ({format_rational(a[0])}, {format_rational(a[1])}) -> "
                       f"({format_rational(b[0])}, {format_rational(b[1])})")
        safe_print(f"coverage: {report.samples} samples, {len(report.uncovered)} uncovered")
        for line in report.lines():
            safe_print(line)
        return EXIT_OK if report.complete else EXIT_FALSE

    def exhaustive(self, args) -> int:
        P = load_instance(args.instance)
        if args.segment:
            guard = parse_segment(args.guard or 'g', args.segment)
        else:
            guard = next((g for g in notch_guards(P) if g.gid == args.guard), None)
            if guard is None:
                raise ValueError(f"Unknown guard: {args.guard}")
        events = enumerate_events(P, guard)
        ok, witness = is_exhaustive_guard(P, guard)
        safe_print(f"{guard.describe()}")
        safe_print(f"events: {len(events)}")
        if ok:
            safe_print("exhaustive")
            return EXIT_OK
        safe_print(f"not exhaustive at direction {witness}")
        return EXIT_FALSE

    def ncl(self, args) -> int:
        instance = parse_ncl(_read_text(args.file))
        g = instance.graph
        if args.action == 'decide':
            found, moves = ee_decide(g, args.seed)
            safe_print('true' if found else 'false')
            if found:
                safe_print(' '.join(moves))
            return EXIT_OK if found else EXIT_FALSE
        if instance.start is None:
            raise ValueError("NCL file has no orient lines for the start configuration")
        if args.action == 'check':
            ok, when = check_async_schedule(g, instance.start, instance.schedule)
            if ok:
                safe_print('true')
                return EXIT_OK
            safe_print(f"false at t={format_rational(when)}")
            return EXIT_FALSE
        moves = serialize_async(g, instance.start, instance.schedule)
        safe_print(' '.join(moves))
        return EXIT_OK

    def export(self, args) -> int:
        P = load_instance(args.instance)
        fences, lit = [], set()
        if args.fences and notches(P):
            plan = erect_fences(P)
            fences = sorted(plan.fence_facets())
            for gid in plan.fence_generating_guards():
                lit |= guard_lit_facets(P, plan.guard(gid), plan.aims[gid])
        write_obj(args.obj, P, fences, lit)
        safe_print(f"Wrote {args.obj}")
        return EXIT_OK

    def generate(self, args) -> int:
        seed = args.seed if args.seed is not None else self.config.seed
        make, serialize = corpus.GENERATORS[args.kind]
        options = {'max_notches': args.max_notches} if args.kind == 'boxes' else {}
        instance = make(random.Random(seed), args.count, **options)
        logger.info("Generated a %s instance from seed %s", args.kind, seed)
        _write_or_print(serialize(instance), args.output)
        return EXIT_OK


def grid_facet_range(facet) -> str:
    axis, i, j, k = facet
    return f"{'xyz'[axis]}{i},{j},{k}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Searchlight scheduling for orthogonal polyhedra')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    instance_help = 'orthopoly v1 file or fixture name'

    for name, help_text in (('validate', 'Validate an instance'),
                            ('genus', 'Print the genus'),
                            ('notches', 'List notches')):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument('instance', help=instance_help)

    fences_parser = subparsers.add_parser('fences', help='Erect fences and list the cuboid partition')
    fences_parser.add_argument('instance', help=instance_help)
    fences_parser.add_argument('--obj', help='Also write an OBJ overlay')

    plan_parser = subparsers.add_parser('plan', help='Plan a macro schedule')
    plan_parser.add_argument('instance', help=instance_help)
    plan_parser.add_argument('--mode', choices=['sequential', 'parallel', 'single'], default='sequential')
    plan_parser.add_argument('--guard', help='Guard segment x,y,z,x,y,z (single mode)')
    plan_parser.add_argument('--output', '-o', help='Schedule file (default: stdout)')

    verify_parser = subparsers.add_parser('verify', help='Verify a macro schedule')
    verify_parser.add_argument('instance', help=instance_help)
    verify_parser.add_argument('schedule', help='sched v1 file')
    verify_parser.add_argument('--target', help='Target ball x,y,z,r')
    verify_parser.add_argument('--trace', action='store_true', help='Print per-step state digests')

    oracle_parser = subparsers.add_parser('oracle-verify', help='Check a schedule with the refinement oracle')
    oracle_parser.add_argument('instance', help=instance_help)
    oracle_parser.add_argument('schedule', help='sched v1 file')
    oracle_parser.add_argument('--refine', type=int, default=1, help='Sub-cells per cell edge')

    polygon_parser = subparsers.add_parser('polygon-guards', help='Open-edge guards for a polygon with holes')
    polygon_parser.add_argument('polygon', help='poly2 v1 file or fixture name')
    polygon_parser.add_argument('--edge', type=int, help='Distinguished edge index')
    polygon_parser.add_argument('--density', type=int, help='Coverage samples per unit')

    exhaustive_parser = subparsers.add_parser('exhaustive', help='Check exhaustiveness of a guard')
    exhaustive_parser.add_argument('instance', help=instance_help)
    exhaustive_parser.add_argument('--guard', help='Notch guard id (g0, g1, ...)')
    exhaustive_parser.add_argument('--segment', help='Arbitrary guard segment x,y,z,x,y,z')

    ncl_parser = subparsers.add_parser('ncl', help='Nondeterministic constraint logic tools')
    ncl_parser.add_argument('action', choices=['check', 'serialize', 'decide'])
    ncl_parser.add_argument('file', help='ncl v1 file')
    ncl_parser.add_argument('--seed', type=int, help='Shuffle seed for decide')

    export_parser = subparsers.add_parser('export', help='Export an OBJ overlay')
    export_parser.add_argument('instance', help=instance_help)
    export_parser.add_argument('--obj', required=True, help='OBJ output path')
    export_parser.add_argument('--fences', action='store_true', help='Include fences and lit facets')

    generate_parser = subparsers.add_parser('generate', help='Write a random instance')
    generate_parser.add_argument('--kind', choices=sorted(corpus.GENERATORS), default='boxes',
                                 help='Instance kind (default: boxes)')
    generate_parser.add_argument('--seed', type=int, help='Random seed')
    generate_parser.add_argument('--count', '--boxes', dest='count', type=int, default=4,
                                 help='Boxes, polygon lattice size or NCL vertex count')
    generate_parser.add_argument('--max-notches', type=int, default=8, help='Reject instances with more notches')
    generate_parser.add_argument('--output', '-o', help='Output file (default: stdout)')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')

    if not args.command:
        parser.print_help()
        return EXIT_INPUT

    try:
        cli = SearchlightCLI()
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT

    command_map = {
        'validate': cli.validate,
        'genus': cli.genus,
        'notches': cli.notches,
        'fences': cli.fences,
        'plan': cli.plan,
        'verify': cli.verify,
        'oracle-verify': cli.oracle_verify,
        'polygon-guards': cli.polygon_guards,
        'exhaustive': cli.exhaustive,
        'ncl': cli.ncl,
        'export': cli.export,
        'generate': cli.generate,
    }

    try:
        return command_map[args.command](args)
    except SearchlightError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == '__main__':
    sys.exit(main())
