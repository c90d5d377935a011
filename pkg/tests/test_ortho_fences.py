import pytest

import corpus
from errors import ConvexInput
from ortho_fences import (
    Cuboid,
    check_cuboid_lemma,
    check_fence_lemma,
    cuboid_partition,
    erect_fences,
    guard_lit_facets,
    place_guards,
)
from searchlights import AimDirection


@pytest.fixture
def l_solid():
    return corpus.fixture('l-solid')


@pytest.fixture
def l_plan(l_solid):
    return erect_fences(l_solid)


def cuboid_cells(plan):
    return sorted(cell for c in plan.cuboids for cell in c.cells())


class TestErectFences:
    """Test fence construction on the fixture solids"""

    def test_convex_input(self):
        with pytest.raises(ConvexInput, match="no notches"):
            erect_fences(corpus.fixture('unit-cube'))

    def test_l_solid_single_fence(self, l_plan):
        assert len(l_plan.fences) == 1
        fence = l_plan.fences[0]
        assert fence.step == 1
        assert fence.facets == frozenset({(0, 1, 0, 0)})
        assert fence.plane == (0, 1)
        assert l_plan.guard_of_fence == {0: 'g0'}

    def test_l_solid_guard_and_aim(self, l_plan):
        assert [g.gid for g in l_plan.guards] == ['g0']
        assert l_plan.aims == {'g0': AimDirection(-1, 0)}
        assert l_plan.notches[0].fence_direction == (0, 0, -1)

    def test_l_solid_cuboids(self, l_plan):
        boxes = {(c.lo, c.hi) for c in l_plan.cuboids}
        assert boxes == {((0, 0, 0), (1, 1, 2)), ((1, 0, 0), (2, 1, 1))}
        assert all(c.bounding_fences == frozenset({0}) for c in l_plan.cuboids)

    def test_region_of_guard(self, l_plan):
        assert l_plan.fence_generating_guards() == ['g0']
        assert len(l_plan.region_of_guard('g0')) == 2

    def test_staircase(self):
        plan = erect_fences(corpus.fixture('staircase'))
        assert len(plan.fences) == 2
        assert sum(len(f.facets) for f in plan.fences) == 3
        assert len(plan.cuboids) == 3

    def test_l_footprint_uses_a_vertical_notch(self):
        plan = erect_fences(corpus.fixture('l-footprint'))
        assert [f.step for f in plan.fences] == [2]
        assert len(plan.cuboids) == 2
        assert plan.fenceless_notches == []

    def test_vertical_notch_on_a_flat_prism_face(self):
        plan = erect_fences(corpus.fixture('turret-and-bay'))
        step_two = [f for f in plan.fences if f.step == 2]
        assert len(step_two) == 1
        assert step_two[0].facets == frozenset({(1, 0, 2, 0)})
        assert step_two[0].source_notch.vertical
        assert plan.fenceless_notches == []
        assert {(c.lo, c.hi) for c in plan.cuboids} == {
            ((0, 0, 0), (2, 1, 1)),
            ((0, 1, 0), (1, 2, 1)),
            ((0, 2, 0), (1, 3, 1)),
            ((1, 1, 0), (2, 2, 2)),
        }

    def test_tower_on_slab_extends_a_fence(self):
        plan = erect_fences(corpus.fixture('tower-on-slab'))
        assert 3 in {f.step for f in plan.fences}
        merged = [f for f in plan.fences if f.step == 3]
        assert all(f.merged_into is not None for f in merged)
        assert len(plan.cuboids) == 3

    @pytest.mark.parametrize('name', ['l-solid', 'staircase', 'square-torus', 'l-footprint', 'tower-on-slab',
                                      'turret-and-bay'])
    def test_cuboids_partition_the_interior(self, name):
        P = corpus.fixture(name)
        plan = erect_fences(P)
        assert cuboid_cells(plan) == sorted(P.grid.interior_cells())

    def test_fences_are_internal(self):
        P = corpus.fixture('tower-on-slab')
        plan = erect_fences(P)
        assert all(P.grid.facet_label(f) == 'internal' for f in plan.fence_facets())


class TestCuboids:
    """Test cuboid helpers"""

    def test_cells_and_box(self, l_solid):
        cuboid = Cuboid((0, 0, 0), (1, 1, 2))
        assert cuboid.cells() == [(0, 0, 0), (0, 0, 1)]
        assert cuboid.box(l_solid.grid) == ((0, 0, 0), (1, 1, 2))
        assert cuboid.describe() == '0:1,0:1,0:2'

    def test_partition_is_recomputable(self, l_solid, l_plan):
        assert cuboid_partition(l_plan, l_solid.grid) == l_plan.cuboids


class TestLemmas:
    """Test the fence and cuboid lemma checks"""

    def test_place_guards(self, l_solid, l_plan):
        placed = place_guards(l_solid, l_plan)
        assert [(g.gid, aim) for g, aim in placed] == [('g0', AimDirection(-1, 0))]

    def test_fence_is_lit(self, l_solid, l_plan):
        assert guard_lit_facets(l_solid, l_plan.guards[0], AimDirection(-1, 0)) == {(0, 1, 0, 0)}
        report = check_fence_lemma(l_plan, l_solid)
        assert [(r.fid, r.gid, r.facets) for r in report] == [(0, 'g0', 1)]

    def test_cuboid_witnesses(self, l_solid, l_plan):
        witnesses = check_cuboid_lemma(l_plan, l_solid)
        assert len(witnesses) == 2
        assert {w.gid for w in witnesses} == {'g0'}
        for w in witnesses:
            assert w.point[0] == 1 and w.point[2] == 1
            assert 0 < w.point[1] < 1

    def test_staircase_lemmas(self):
        P = corpus.fixture('staircase')
        plan = erect_fences(P)
        assert len(check_fence_lemma(plan, P)) == 2
        assert len(check_cuboid_lemma(plan, P)) >= 3

    def test_turret_and_bay_lemmas(self):
        P = corpus.fixture('turret-and-bay')
        plan = erect_fences(P)
        check_fence_lemma(plan, P)
        witnesses = check_cuboid_lemma(plan, P)
        far_side = next(i for i, c in enumerate(plan.cuboids) if (c.lo, c.hi) == ((0, 1, 0), (1, 2, 1)))
        assert len({w.gid for w in witnesses if w.cuboid == far_side}) == 3
