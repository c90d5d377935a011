import pytest
from fractions import Fraction

import sympy

import corpus
from errors import BlindEndpoint, FormatError, InvalidGuard
from searchlights import (
    AimDirection,
    Guard,
    ccw_arc,
    ccw_between,
    cyclic_frame,
    interior_quadrants,
    is_blind,
    nonblind_arc,
    quadrants_of,
    require_nonblind,
    resolve,
)

F = Fraction


@pytest.fixture
def cube_grid():
    return corpus.fixture('unit-cube').grid


@pytest.fixture
def cube_edge():
    """Top front edge of the unit cube, running along x"""
    return Guard('u', (0, 0, 1), (1, 0, 1))


class TestAimDirection:
    """Test cases for AimDirection"""

    def test_reduced_on_construction(self):
        assert AimDirection(2, 4) == AimDirection(1, 2)
        assert AimDirection(F(1, 2), 1) == AimDirection(1, 2)
        assert AimDirection(-3, 0) == AimDirection(-1, 0)

    def test_zero_rejected(self):
        with pytest.raises(ValueError, match="nonzero"):
            AimDirection(0, 0)

    @pytest.mark.parametrize('u,v,expected', [
        (1, 0, F(0)),
        (1, 1, F(1, 2)),
        (0, 1, F(1)),
        (-1, 0, F(2)),
        (0, -1, F(3)),
        (1, -1, F(7, 2)),
    ])
    def test_pseudo_angle(self, u, v, expected):
        assert AimDirection(u, v).pseudo_angle() == expected

    def test_symbolic_has_no_angle(self):
        with pytest.raises(ValueError, match="Symbolic"):
            AimDirection.leftmost().pseudo_angle()

    def test_exact_angle(self):
        assert AimDirection(0, -1).angle() == 3 * sympy.pi / 2
        assert AimDirection(1, 1).angle() == sympy.pi / 4

    def test_ccw_arc_wraps(self):
        assert ccw_arc(AimDirection(0, 1), AimDirection(1, 0)) == 3 * sympy.pi / 2
        assert ccw_arc(AimDirection(1, 0), AimDirection(0, 1)) == sympy.pi / 2

    def test_ccw_between(self):
        start, end = AimDirection(0, 1), AimDirection(1, 0)
        assert ccw_between(AimDirection(-1, 0), start, end)
        assert ccw_between(end, start, end)
        assert not ccw_between(AimDirection(1, 1), start, end)

    def test_tokens(self):
        assert AimDirection.parse('1/-2') == AimDirection(1, -2)
        assert AimDirection.parse('leftmost').symbolic
        assert str(AimDirection(-1, 0)) == '-1/0'

    def test_bad_token(self):
        with pytest.raises(FormatError, match="Bad direction token"):
            AimDirection.parse('up')

    def test_unknown_symbol(self):
        with pytest.raises(ValueError, match="Unknown symbolic direction"):
            AimDirection(symbol='middle')

    def test_quadrants(self):
        assert quadrants_of(AimDirection(1, 1)) == frozenset({0})
        assert quadrants_of(AimDirection(0, 1)) == frozenset({0, 1})
        assert quadrants_of(AimDirection(1, 0)) == frozenset({0, 3})


class TestGuard:
    """Test cases for Guard"""

    def test_endpoints_sorted(self):
        g = Guard('g', (1, 0, 1), (0, 0, 1))
        assert g.a == (F(0), F(0), F(1))
        assert g.axis == 0
        assert (g.lo, g.hi) == (F(0), F(1))

    def test_not_axis_parallel(self):
        with pytest.raises(InvalidGuard, match="axis-parallel"):
            Guard('g', (0, 0, 0), (1, 1, 0))

    def test_zero_length(self):
        with pytest.raises(InvalidGuard):
            Guard('g', (0, 0, 0), (0, 0, 0))

    def test_cyclic_frame(self):
        assert cyclic_frame(0) == (1, 2)
        assert cyclic_frame(1) == (2, 0)
        assert cyclic_frame(2) == (0, 1)

    def test_direction_vector(self):
        g = Guard('g0', (1, 0, 1), (1, 1, 1))
        assert g.direction_vector(AimDirection(-1, 0)) == (0, 0, -1)
        assert g.aim_from_vector((1, 0, 0)) == AimDirection(0, 1)

    def test_aim_from_parallel_vector(self):
        g = Guard('g0', (1, 0, 1), (1, 1, 1))
        with pytest.raises(ValueError, match="not orthogonal"):
            g.aim_from_vector((0, 1, 0))

    def test_text_line(self):
        g = Guard('g0', (1, 0, 1), (1, 1, 1))
        assert g.to_line() == 'guard g0 1 0 1 1 1 1'
        assert Guard.from_tokens(g.to_line().split()[1:]) == g
        assert g.describe() == 'g0: y in (0, 1), x=1, z=1'

    def test_short_guard_line(self):
        with pytest.raises(FormatError, match="six coordinates"):
            Guard.from_tokens(['g0', '1', '0'])

    def test_witness_points(self, cube_grid, cube_edge):
        params = [p[0] for p in cube_edge.witness_points(cube_grid, 2)]
        assert params == [F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(3, 4)]
        assert all(p[1:] == (F(0), F(1)) for p in cube_edge.witness_points(cube_grid, 2))

    def test_breakpoints(self):
        grid = corpus.fixture('l-solid').grid
        assert Guard('b', (0, 0, 1), (2, 0, 1)).breakpoints(grid) == [F(1)]


class TestNonblindArc:
    """Test the arc of non-blind aims of boundary guards"""

    def test_convex_edge(self, cube_grid, cube_edge):
        left, right, extent = nonblind_arc(cube_grid, cube_edge)
        assert (left, right, extent) == (AimDirection(0, -1), AimDirection(1, 0), 1)
        assert interior_quadrants(cube_grid, cube_edge) == frozenset({3})

    def test_guard_on_a_flat_face(self, cube_grid):
        flat = Guard('f', (0, 0, F(1, 2)), (1, 0, F(1, 2)))
        left, right, extent = nonblind_arc(cube_grid, flat)
        assert (left, right, extent) == (AimDirection(0, -1), AimDirection(0, 1), 2)

    def test_notch_edge(self):
        P = corpus.fixture('l-solid')
        left, right, extent = nonblind_arc(P.grid, Guard('g0', (1, 0, 1), (1, 1, 1)))
        assert (left, right, extent) == (AimDirection(0, 1), AimDirection(1, 0), 3)

    def test_guard_off_the_solid(self, cube_grid):
        with pytest.raises(InvalidGuard, match="does not lie on the boundary"):
            nonblind_arc(cube_grid, Guard('o', (5, 5, 5), (6, 5, 5)))

    def test_blindness(self, cube_grid, cube_edge):
        assert is_blind(cube_grid, cube_edge, AimDirection(-1, 0))
        assert not is_blind(cube_grid, cube_edge, AimDirection(1, -1))

    def test_resolve_symbols(self, cube_grid, cube_edge):
        assert resolve(cube_grid, cube_edge, AimDirection.leftmost()) == AimDirection(0, -1)
        assert resolve(cube_grid, cube_edge, AimDirection.rightmost()) == AimDirection(1, 0)
        assert resolve(cube_grid, cube_edge, AimDirection(1, 1)) == AimDirection(1, 1)

    def test_require_nonblind(self, cube_grid, cube_edge):
        assert require_nonblind(cube_grid, cube_edge, AimDirection.leftmost()) == AimDirection(0, -1)
        with pytest.raises(BlindEndpoint, match="is blind"):
            require_nonblind(cube_grid, cube_edge, AimDirection(-1, 0))
