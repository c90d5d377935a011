import random

import pytest

import sympy

import corpus
from errors import BlindDirection
from exhaustiveness import (
    blind_arc,
    compute_searchplane,
    enumerate_events,
    event_intervals,
    interval_midpoint,
    is_exhaustive_guard,
)
from ortho_fences import erect_fences
from searchlights import AimDirection, Guard, ccw_between


@pytest.fixture
def l_solid():
    return corpus.fixture('l-solid')


@pytest.fixture
def notch_guard():
    return Guard('g0', (1, 0, 1), (1, 1, 1))


class TestBlindArc:
    """Test the blind arc of guards"""

    def test_notch_guard(self, l_solid, notch_guard):
        arc = blind_arc(l_solid, notch_guard)
        assert arc.leftmost == AimDirection(0, 1)
        assert arc.rightmost == AimDirection(1, 0)
        assert arc.extent == 3 * sympy.pi / 2
        assert arc.blind_extent == sympy.pi / 2

    def test_convex_edge(self):
        arc = blind_arc(corpus.fixture('unit-cube'), Guard('u', (0, 0, 1), (1, 0, 1)))
        assert arc.extent == sympy.pi / 2


class TestEvents:
    """Test event enumeration along the non-blind arc"""

    def test_events_run_from_leftmost_to_rightmost(self, l_solid, notch_guard):
        events = enumerate_events(l_solid, notch_guard)
        directions = events.directions()
        assert directions[0] == AimDirection(0, 1)
        assert directions[-1] == AimDirection(1, 0)
        assert len(events) >= len(directions)

    def test_events_stay_on_the_arc(self, l_solid, notch_guard):
        for event in enumerate_events(l_solid, notch_guard).events:
            assert ccw_between(event.direction, AimDirection(0, 1), AimDirection(1, 0))
            assert event.kind in ('vertex', 'face-edge')

    def test_intervals_chain(self, l_solid, notch_guard):
        intervals = event_intervals(l_solid, notch_guard)
        assert all(a == prev_b for (_, prev_b), (a, _) in zip(intervals, intervals[1:]))

    @pytest.mark.parametrize('d1,d2,expected', [
        ((1, 0), (0, 1), (1, 1)),
        ((0, 1), (1, 0), (-1, -1)),
        ((1, 0), (-1, 0), (0, 1)),
        ((1, 0), (1, 1), (3, 1)),
    ])
    def test_interval_midpoint(self, d1, d2, expected):
        assert interval_midpoint(AimDirection(*d1), AimDirection(*d2)) == AimDirection(*expected)


class TestSearchplane:
    """Test searchplane construction and exhaustiveness"""

    def test_fence_aim_lights_the_notch_facet(self, l_solid, notch_guard):
        plane = compute_searchplane(l_solid, notch_guard, AimDirection(-1, 0))
        assert plane.lit_facets() == {(0, 1, 0, 0)}
        assert plane.exhaustive
        assert plane.boundary_on_surface()

    def test_symbolic_aim_is_resolved(self, l_solid, notch_guard):
        plane = compute_searchplane(l_solid, notch_guard, AimDirection.leftmost())
        assert plane.direction == AimDirection(0, 1)

    def test_blind_direction(self):
        P = corpus.fixture('unit-cube')
        with pytest.raises(BlindDirection, match="sees nothing"):
            compute_searchplane(P, Guard('u', (0, 0, 1), (1, 0, 1)), AimDirection(-1, 0))

    def test_shadowed_searchplane(self):
        plane = compute_searchplane(corpus.fixture('shadow'), corpus.shadow_guard(), AimDirection(0, -1))
        assert not plane.exhaustive
        assert set(plane.strata) - plane.visible


class TestExhaustiveGuard:
    """Test the event-based exhaustive guard decision"""

    def test_convex_edge_is_exhaustive(self):
        assert is_exhaustive_guard(corpus.fixture('unit-cube'), Guard('u', (0, 0, 1), (1, 0, 1))) == (True, None)

    def test_shadow_guard_is_not(self):
        exhaustive, direction = is_exhaustive_guard(corpus.fixture('shadow'), corpus.shadow_guard())
        assert not exhaustive
        assert direction is not None

    def test_notch_guard_can_have_a_shadow(self):
        P = corpus.fixture('turning-corridor')
        guard = corpus.turning_corridor_guard()
        plane = compute_searchplane(P, guard, AimDirection(0, -1))
        assert not plane.exhaustive
        # the leg at y in [1, 3] lies behind the corner at (y=1, x=1)
        assert any(plane.section.to_3d(plane.section.representative(index))[1] > 1
                   for index in set(plane.strata) - plane.visible)
        exhaustive, direction = is_exhaustive_guard(P, guard)
        assert not exhaustive
        assert not compute_searchplane(P, guard, direction).exhaustive


def direction_inside(rng, d1, d2):
    """A direction strictly between two events, by random repeated halving"""
    lo, hi = d1, d2
    d = interval_midpoint(lo, hi)
    for _ in range(rng.randint(1, 4)):
        lo, hi = (lo, d) if rng.random() < 0.5 else (d, hi)
        d = interval_midpoint(lo, hi)
    return d


@pytest.mark.slow
class TestRandomCorpus:
    """Exhaustiveness over notch guards of seeded random solids"""

    def test_verdict_carries_a_witness(self):
        for P in corpus.random_orthogonal_corpus(7, 10, max_boxes=5):
            for guard in erect_fences(P).guards:
                exhaustive, direction = is_exhaustive_guard(P, guard)
                if exhaustive:
                    assert direction is None
                else:
                    assert not compute_searchplane(P, guard, direction).exhaustive

    def test_interval_stability(self):
        rng = random.Random(13)
        checked = 0
        for P in corpus.random_orthogonal_corpus(7, 20, max_boxes=5):
            for guard in erect_fences(P).guards:
                for d1, d2 in event_intervals(P, guard):
                    expected = compute_searchplane(P, guard, interval_midpoint(d1, d2)).exhaustive
                    d = direction_inside(rng, d1, d2)
                    assert compute_searchplane(P, guard, d).exhaustive == expected, (guard.gid, d)
                    checked += 1
                    if checked == 100:
                        return
        pytest.fail(f"Only {checked} intervals in the corpus")
