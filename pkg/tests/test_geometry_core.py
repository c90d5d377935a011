import pytest
from fractions import Fraction

import numpy as np

import corpus
from errors import (
    DegenerateFace,
    DegenerateSegment,
    FormatError,
    NotConnected,
    NotManifold,
    NotOrthogonal,
    SearchlightError,
)
from geometry_core import (
    ORTHOPOLY_HEADER,
    Segment3,
    format_rational,
    genus,
    hull_in_polyhedron,
    notches,
    parse_orthopoly,
    parse_rational,
    point_in_polyhedron,
    point_in_rings,
    polyhedron_volume,
    read_instance,
    ring_area,
    segment_in_polyhedron,
    serialize_orthopoly,
    to_scalar,
    trace_rings,
    validate_polyhedron,
)

F = Fraction


@pytest.fixture
def unit_cube():
    return corpus.fixture('unit-cube')


@pytest.fixture
def l_solid():
    return corpus.fixture('l-solid')


class TestScalars:
    """Test exact scalar helpers"""

    def test_to_scalar_accepts_exact_values(self):
        assert to_scalar(3) == F(3)
        assert to_scalar('3/4') == F(3, 4)
        assert to_scalar(F(1, 2)) == F(1, 2)

    def test_to_scalar_rejects_floats(self):
        with pytest.raises(TypeError, match="Not an exact rational"):
            to_scalar(0.5)

    def test_parse_rational_errors(self):
        with pytest.raises(FormatError, match="Not a rational"):
            parse_rational('1/0')
        with pytest.raises(FormatError):
            parse_rational('x')

    def test_format_rational(self):
        assert format_rational(F(3, 2)) == '3/2'
        assert format_rational(F(4, 2)) == '2'

    def test_errors_are_value_errors(self):
        assert issubclass(SearchlightError, ValueError)


class TestValidation:
    """Test face-list validation"""

    def test_unit_cube(self, unit_cube):
        assert len(unit_cube.faces) == 6
        assert len(unit_cube.vertices) == 8
        assert len(unit_cube.edges) == 12
        assert all(e.kind == 'convex' for e in unit_cube.edges)

    def test_l_solid_counts(self, l_solid):
        assert len(l_solid.faces) == 8
        assert len(l_solid.vertices) == 12
        assert len(l_solid.edges) == 18
        assert sum(1 for e in l_solid.edges if e.kind == 'reflex') == 1

    def test_empty_face_list(self):
        with pytest.raises(DegenerateFace, match="Empty face list"):
            validate_polyhedron([])

    def test_tilted_face(self):
        tilted = [[(0, 0, 0), (1, 0, 1), (1, 1, 1), (0, 1, 0)]]
        with pytest.raises(NotOrthogonal):
            validate_polyhedron(tilted)

    def test_open_surface(self, unit_cube):
        with pytest.raises(NotManifold):
            validate_polyhedron(list(unit_cube.faces[:-1]))

    def test_two_cubes_sharing_an_edge(self):
        faces = corpus.faces_from_boxes(corpus.TWO_CUBES_SHARING_AN_EDGE)
        with pytest.raises(NotManifold):
            validate_polyhedron(faces)

    def test_two_cubes_sharing_a_vertex(self):
        faces = corpus.faces_from_boxes([((0, 0, 0), (1, 1, 1)), ((1, 1, 1), (2, 2, 2))])
        with pytest.raises(NotManifold, match="pinched neighbourhood"):
            validate_polyhedron(faces)

    def test_two_separate_cubes(self):
        faces = corpus.faces_from_boxes([((0, 0, 0), (1, 1, 1)), ((2, 0, 0), (3, 1, 1))])
        with pytest.raises(NotConnected):
            validate_polyhedron(faces)

    def test_ring_with_diagonal_edge(self):
        face = (2, 0, [[(0, 0), (1, 1), (0, 1), (0, 2)]])
        with pytest.raises(NotOrthogonal):
            validate_polyhedron([face])

    def test_degenerate_segment(self):
        with pytest.raises(DegenerateSegment):
            Segment3((0, 0, 0), (0, 0, 0))


class TestTopology:
    """Test genus, notches and volume"""

    @pytest.mark.parametrize('name,expected', [
        ('unit-cube', 0),
        ('l-solid', 0),
        ('staircase', 0),
        ('square-torus', 1),
    ])
    def test_genus(self, name, expected):
        assert genus(corpus.fixture(name)) == expected

    def test_no_notches_in_cube(self, unit_cube):
        assert notches(unit_cube) == []

    def test_l_solid_notch(self, l_solid):
        found = notches(l_solid)
        assert len(found) == 1
        notch = found[0]
        assert notch.orientation == 1
        assert notch.horizontal
        assert notch.exterior == (1, 0, 1)
        assert notch.edge.a == (F(1), F(0), F(1))
        assert notch.edge.b == (F(1), F(1), F(1))
        assert notch.describe() == "horizontal notch along y (1, 0, 1) -> (1, 1, 1)"

    def test_square_torus_notches_are_vertical(self):
        found = notches(corpus.fixture('square-torus'))
        assert len(found) == 4
        assert all(n.vertical for n in found)

    def test_staircase_notches(self):
        found = notches(corpus.fixture('staircase'))
        assert [n.edge.a for n in found] == [(F(1), F(0), F(2)), (F(2), F(0), F(1))]

    def test_volume(self, l_solid):
        assert polyhedron_volume(l_solid) == 3
        assert l_solid.grid.volume() == 3

    def test_volume_of_torus(self):
        P = corpus.fixture('square-torus')
        assert polyhedron_volume(P) == P.grid.volume() == 8


class TestGrid:
    """Test the cell complex of the L-solid"""

    def test_interior_cells(self, l_solid):
        assert sorted(l_solid.grid.interior_cells()) == [(0, 0, 0), (0, 0, 1), (1, 0, 0)]

    def test_internal_facets(self, l_solid):
        assert l_solid.grid.internal_facets() == [(0, 1, 0, 0), (2, 0, 0, 1)]

    def test_boundary_facets(self, l_solid):
        assert len(l_solid.grid.boundary_facets()) == 14

    def test_facet_labels(self, l_solid):
        grid = l_solid.grid
        assert grid.facet_label((0, 1, 0, 0)) == 'internal'
        assert grid.facet_label((0, 0, 0, 0)) == 'boundary'
        assert grid.facet_label((0, 1, 0, 1)) == 'boundary'

    def test_cell_of_point(self, l_solid):
        assert l_solid.grid.cell_of_point((F(1), F(0), F(1))) == (0, 0, 0)
        assert l_solid.grid.cell_of_point((F(3, 2), F(1, 2), F(3, 2))) is None


class TestContainment:
    """Test exact segment, hull and point containment"""

    def test_segment_through_notch_edge(self, l_solid):
        s = Segment3((F(1, 2), F(1, 2), F(3, 2)), (F(3, 2), F(1, 2), F(1, 2)))
        assert segment_in_polyhedron(l_solid.grid, s)

    def test_segment_leaving_solid(self, l_solid):
        s = Segment3((F(1, 2), F(1, 2), F(3, 2)), (F(3, 2), F(1, 2), F(3, 2)))
        assert not segment_in_polyhedron(l_solid.grid, s)

    def test_hull_inside(self, l_solid):
        box = l_solid.grid.cell_box((1, 0, 0))
        assert hull_in_polyhedron(l_solid.grid, (F(0), F(1, 2), F(1, 2)), box)

    def test_hull_cutting_the_corner(self, l_solid):
        box = l_solid.grid.cell_box((1, 0, 0))
        assert not hull_in_polyhedron(l_solid.grid, (F(0), F(0), F(2)), box)

    def test_point_in_polyhedron(self, l_solid):
        assert point_in_polyhedron(l_solid, (F(1, 2), F(1, 2), F(3, 2)))
        assert not point_in_polyhedron(l_solid, (F(3, 2), F(1, 2), F(3, 2)))
        assert point_in_polyhedron(l_solid, (F(1), F(1, 2), F(3, 2)))

    def test_point_classification_agrees_with_grid(self, l_solid):
        for cell in [(0, 0, 0), (1, 0, 0), (0, 0, 1)]:
            assert point_in_polyhedron(l_solid, l_solid.grid.cell_center(cell))
        assert not point_in_polyhedron(l_solid, (F(3, 2), F(1, 2), F(3, 2)))

    def test_point_in_rings(self):
        square = [(F(0), F(0)), (F(2), F(0)), (F(2), F(2)), (F(0), F(2))]
        assert point_in_rings((F(1), F(1)), [square]) == 'inside'
        assert point_in_rings((F(2), F(1)), [square]) == 'boundary'
        assert point_in_rings((F(3), F(1)), [square]) == 'outside'


class TestRings:
    """Test boundary tracing of square sets"""

    def test_square_with_hole(self):
        mask = np.ones((3, 3), dtype=bool)
        mask[1, 1] = False
        rings = trace_rings(mask, [F(i) for i in range(4)], [F(j) for j in range(4)])
        areas = sorted(ring_area(r) for r in rings)
        assert areas == [-1, 9]


class TestTextFormat:
    """Test the orthopoly v1 text format"""

    def test_named_coordinates(self):
        text = (f"{ORTHOPOLY_HEADER}\n"
                "coords\n"
                "coord w 1/2\n"
                "face z w  # a single square\n"
                "ring 0 0 w 0 w w 0 w\n")
        faces, names = parse_orthopoly(text)
        assert names == {'w': F(1, 2)}
        assert faces[0].axis == 2
        assert faces[0].offset == F(1, 2)
        assert faces[0].rings[0][2] == (F(1, 2), F(1, 2))

    def test_missing_header(self):
        with pytest.raises(FormatError, match="Missing header"):
            parse_orthopoly("face z 0\n")

    def test_unknown_keyword(self):
        with pytest.raises(FormatError, match="Unknown keyword"):
            parse_orthopoly(f"{ORTHOPOLY_HEADER}\nsolid 1\n")

    def test_read_instance(self, tmp_path, l_solid):
        path = tmp_path / 'l.orthopoly'
        path.write_text(serialize_orthopoly(l_solid.faces))
        P = read_instance(str(path))
        assert polyhedron_volume(P) == 3
        assert len(notches(P)) == 1
