import random
from unittest.mock import patch

import numpy as np
import pytest

import corpus
from geometry_core import genus, notches, serialize_orthopoly
from ortho_fences import cuboid_partition, erect_fences, place_guards
from ncl import check_async_schedule, is_legal_config
from schedule import lower, plan_parallel, plan_sequential
from sim_verify import verify_schedule


class TestFixtures:
    """Test the named fixture solids and polygons"""

    @pytest.mark.parametrize('name', sorted(corpus.SOLIDS))
    def test_every_fixture_validates(self, name):
        P = corpus.fixture(name)
        assert P.grid.volume() > 0

    def test_unknown_fixture(self):
        with pytest.raises(KeyError, match="Unknown fixture"):
            corpus.fixture('klein-bottle')

    def test_notch_counts(self):
        assert len(notches(corpus.fixture('unit-cube'))) == 0
        assert len(notches(corpus.fixture('l-solid'))) == 1
        assert len(notches(corpus.fixture('staircase'))) == 2
        assert len(notches(corpus.fixture('square-torus'))) == 4

    def test_polygon_from_squares(self):
        mask = np.array([[True, True], [True, False]])
        P = corpus.polygon_from_squares(mask)
        assert P.area() == 3
        assert P.r == 1

    def test_polygon_from_squares_with_hole(self):
        mask = np.ones((3, 3), dtype=bool)
        mask[1, 1] = False
        P = corpus.polygon_from_squares(mask)
        assert (P.r, P.h) == (4, 1)
        assert P.area() == 8


class TestGenerators:
    """Test seeded random generators"""

    def test_box_union_is_deterministic(self):
        a = corpus.random_box_union(random.Random(5), 3)
        b = corpus.random_box_union(random.Random(5), 3)
        assert serialize_orthopoly(a.faces) == serialize_orthopoly(b.faces)

    def test_box_union_respects_notch_limit(self):
        P = corpus.random_box_union(random.Random(1), 3, max_notches=2)
        assert len(notches(P)) <= 2

    def test_ncl_graph_is_cubic(self):
        g = corpus.random_ncl_graph(random.Random(2), 4)
        assert len(g.vertices) == 4
        assert len(g.edges) == 6
        assert all(len(v.edges) == 3 for v in g.vertices)

    def test_ncl_graph_needs_even_order(self):
        with pytest.raises(ValueError, match="even vertex count"):
            corpus.random_ncl_graph(random.Random(0), 3)

    def test_random_async_schedule_is_legal(self):
        rng = random.Random(4)
        for _ in range(5):
            g = corpus.random_ncl_graph(rng, 4)
            start = corpus.random_legal_config(rng, g)
            if start is None:
                continue
            assert is_legal_config(g, start)[0]
            schedule = corpus.random_async_schedule(rng, g, start)
            assert check_async_schedule(g, start, schedule)[0]

    def test_box_union_rejects_convex_unions(self):
        with patch('corpus.notches', return_value=[]):
            with pytest.raises(RuntimeError, match="No valid union"):
                corpus.random_box_union(random.Random(0), 2, attempts=5)

    def test_box_union_has_a_notch(self):
        rng = random.Random(26)
        for _ in range(20):
            assert notches(corpus.random_box_union(rng, rng.randint(2, 5)))

    def test_generator_registry(self):
        assert set(corpus.GENERATORS) == {'boxes', 'polygon', 'ncl'}
        make, serialize = corpus.GENERATORS['ncl']
        assert serialize(make(random.Random(3), 4)).startswith('ncl v1')


@pytest.mark.slow
class TestRandomCorpus:
    """End-to-end checks over a seeded corpus of random solids"""

    def test_corpus_is_reproducible(self):
        first = corpus.random_orthogonal_corpus(11, 3, max_boxes=4)
        second = corpus.random_orthogonal_corpus(11, 3, max_boxes=4)
        assert [serialize_orthopoly(P.faces) for P in first] == [serialize_orthopoly(P.faces) for P in second]

    def test_genus_is_non_negative(self):
        for P in corpus.random_orthogonal_corpus(3, 4, max_boxes=4):
            assert genus(P) >= 0

    def test_parallel_plan_on_fixtures(self):
        for name in ('l-solid', 'staircase'):
            P = corpus.fixture(name)
            guards, m = plan_parallel(P)
            assert verify_schedule(P, guards, m).searched
            assert lower(m, P).T > 0

    def test_pipeline_over_fifty_solids(self):
        for index, P in enumerate(corpus.random_orthogonal_corpus(7, 50)):
            plan = erect_fences(P)
            assert len(place_guards(P, plan)) == len(notches(P))
            cuboids = cuboid_partition(plan, P.grid)
            assert all(c.bounding_fences for c in cuboids)
            verdict = verify_schedule(P, None, plan_sequential(P, plan))
            assert verdict.searched, (index, verdict.diagnostic)
            guards, m = plan_parallel(P, plan)
            assert verify_schedule(P, guards, m).searched, index
