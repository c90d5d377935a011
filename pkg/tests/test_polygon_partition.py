import random
from fractions import Fraction

import pytest

import corpus
from errors import DegenerateFace, FormatError, PartitionError, PointOutside
from geometry_core import ring_area
from polygon_partition import (
    POLY2_HEADER,
    CoverageReport,
    Polygon2,
    bisector_partition,
    parse_polygon,
    segment_in_polygon,
    select_open_edge_guards,
    serialize_polygon,
    verify_coverage,
    visibility_polygon,
)

F = Fraction


def is_convex(ring):
    n = len(ring)
    for i in range(n):
        a, b, c = ring[i - 1], ring[i], ring[(i + 1) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) < 0:
            return False
    return True


@pytest.fixture
def hexagon():
    return corpus.l_hexagon()


@pytest.fixture
def holed():
    return corpus.square_with_hole()


class TestPolygon2:
    """Test polygon construction and validation"""

    def test_orientation_is_normalized(self):
        cw = Polygon2(tuple(reversed(corpus.L_HEXAGON)))
        assert ring_area(cw.outer) == 3
        assert cw.area() == 3

    def test_hole_orientation(self, holed):
        assert ring_area(holed.holes[0]) == -1
        assert holed.area() == 8

    def test_reflex_counts(self, hexagon, holed):
        assert hexagon.reflex_vertices() == [(F(1), F(1))]
        assert (hexagon.r, hexagon.h) == (1, 0)
        assert (holed.r, holed.h) == (4, 1)

    def test_edges_outer_first(self, holed):
        edges = holed.edges()
        assert len(edges) == 8
        assert edges[0] == ((F(0), F(0)), (F(3), F(0)))

    def test_collinear_corner_dropped(self):
        P = Polygon2(((0, 0), (1, 0), (2, 0), (2, 2), (0, 2)))
        assert len(P.outer) == 4

    def test_zero_area(self):
        with pytest.raises(DegenerateFace, match="zero area"):
            Polygon2(((0, 0), (2, 2), (2, 0), (0, 2)))

    def test_pinched_ring(self):
        with pytest.raises(DegenerateFace, match="pinched"):
            Polygon2(((0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (1, 2), (1, 1), (0, 1)))

    def test_hole_touching_outer(self):
        with pytest.raises(DegenerateFace):
            Polygon2(((0, 0), (3, 0), (3, 3), (0, 3)), (((0, 1), (1, 1), (1, 2), (0, 2)),))

    def test_hole_outside(self):
        with pytest.raises(DegenerateFace, match="not strictly inside"):
            Polygon2(((0, 0), (3, 0), (3, 3), (0, 3)), (((5, 5), (6, 5), (6, 6), (5, 6)),))


class TestPartition:
    """Test reflex-angle cut partitions"""

    def test_l_hexagon(self, hexagon):
        partition = bisector_partition(hexagon)
        assert len(partition.pieces) == 2
        assert len(partition.cut_log) == 1
        cut = partition.cut_log[0]
        assert cut.vertex == (F(1), F(1))
        assert cut.perturbed
        assert cut.outcome == 'split'
        assert all(is_convex(piece) for piece in partition.pieces)
        assert sum(ring_area(piece) for piece in partition.pieces) == 3

    def test_square_with_hole(self, holed):
        partition = bisector_partition(holed)
        assert partition.merges == 1
        assert partition.splits == 3
        assert len(partition.pieces) == holed.r - holed.h + 1 == 4
        assert len(partition.degenerate_edges) == 1
        assert all(is_convex(piece) for piece in partition.pieces)
        assert sum(ring_area(piece) for piece in partition.pieces) == 8

    def test_convex_input_is_one_piece(self):
        square = Polygon2(((0, 0), (1, 0), (1, 1), (0, 1)))
        partition = bisector_partition(square)
        assert partition.cut_log == []
        assert len(partition.pieces) == 1

    def test_bad_distinguished_edge(self, hexagon):
        with pytest.raises(PartitionError, match="not an edge"):
            bisector_partition(hexagon, e=6)


class TestGuards:
    """Test open-edge guard selection and coverage"""

    def test_l_hexagon_needs_one_guard(self, hexagon):
        partition = bisector_partition(hexagon)
        guards = select_open_edge_guards(hexagon, partition, 0)
        assert guards.guards == [0]
        assert guards.segments(hexagon) == [((F(0), F(0)), (F(2), F(0)))]
        assert verify_coverage(hexagon, guards, density=4, partition=partition).complete

    def test_every_piece_has_a_guard(self, holed):
        partition = bisector_partition(holed)
        guards = select_open_edge_guards(holed, partition, 0)
        assert guards.guards[0] == 0
        assert len(guards.guards) <= len(partition.pieces)
        assert set(guards.coverage) == set(range(len(partition.pieces)))
        assert set(guards.coverage.values()) <= set(guards.guards)
        assert verify_coverage(holed, guards, density=6, partition=partition).complete

    def test_report_lines(self):
        report = CoverageReport(samples=2, uncovered=[(F(1, 2), F(3))])
        assert not report.complete
        assert report.lines() == ['uncovered 1/2 3']


class TestVisibility:
    """Test exact visibility in polygons"""

    def test_segments(self, hexagon):
        assert segment_in_polygon(hexagon, (F(1, 2), F(3, 2)), (F(3, 2), F(1, 2)))
        assert not segment_in_polygon(hexagon, (F(1, 2), F(3, 2)), (F(3, 2), F(3, 2)))

    def test_segment_along_boundary(self, hexagon):
        assert segment_in_polygon(hexagon, (F(0), F(0)), (F(2), F(0)))

    def test_star_shaped_from_the_corner_square(self, hexagon):
        region = visibility_polygon(hexagon, (F(1, 2), F(1, 2)))
        assert ring_area(region) == 3

    def test_point_outside(self, hexagon):
        with pytest.raises(PointOutside):
            visibility_polygon(hexagon, (3, 3))


class TestTextFormat:
    """Test the poly2 v1 text format"""

    def test_round_trip(self, holed):
        text = serialize_polygon(holed, 2)
        assert text.startswith(POLY2_HEADER + '\nouter\n')
        polygon, distinguished = parse_polygon(text)
        assert polygon == holed
        assert distinguished == 2

    def test_missing_outer(self):
        with pytest.raises(FormatError, match="outer ring must come first"):
            parse_polygon(f"{POLY2_HEADER}\nhole\n0 0\n1 0\n1 1\n")

    def test_missing_distinguished_edge(self):
        with pytest.raises(FormatError, match="does not exist"):
            parse_polygon(f"{POLY2_HEADER}\nouter\n0 0\n1 0\n1 1\n0 1\ndistinguished 9\n")


@pytest.mark.slow
class TestRandomPolygons:
    """Property checks over seeded random polygons"""

    @pytest.mark.parametrize('seed', [0, 1, 2])
    def test_piece_count(self, seed):
        P = corpus.random_polygon(random.Random(seed))
        partition = bisector_partition(P)
        assert len(partition.cut_log) == P.r
        assert partition.merges == P.h
        assert len(partition.pieces) == P.r - P.h + 1
        assert sum(ring_area(piece) for piece in partition.pieces) == P.area()

    def test_hundred_polygons(self):
        rng = random.Random(41)
        for _ in range(100):
            P = corpus.random_polygon(rng)
            assert P.r <= 12 and P.h <= 3
            partition = bisector_partition(P)
            guards = select_open_edge_guards(P, partition)
            assert len(partition.pieces) <= P.r - P.h + 1
            assert len(guards.guards) <= P.r - P.h + 1
            assert guards.guards[0] == 0
            assert verify_coverage(P, guards, density=10, partition=partition).complete
