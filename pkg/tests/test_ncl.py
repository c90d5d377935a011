import random
from fractions import Fraction
from unittest.mock import Mock, patch

import pytest

import corpus
from errors import FormatError, IllegalAsync, MalformedGraph, MalformedSchedule, RestrictionViolated, TooLarge
from ncl import (
    AND,
    OR,
    AsyncSchedule,
    ConstraintGraph,
    NclInstance,
    Phase,
    Vertex,
    apply_moves,
    check_async_schedule,
    config_at,
    ee_decide,
    final_config,
    is_legal_config,
    is_legal_move,
    is_legal_sequence,
    legal_configs,
    parse_ncl,
    reverse_moves,
    serialize_async,
    serialize_ncl,
)

F = Fraction


@pytest.fixture
def triple():
    return corpus.parallel_triple()


@pytest.fixture
def start():
    return {'e1': 'v0', 'e2': 'v0', 'e3': 'v1'}


@pytest.fixture
def and_or():
    """AND vertex v0 (output e1) joined to OR vertex v1 by three edges"""
    return ConstraintGraph([Vertex('v0', AND, ('e1', 'e2', 'e3')), Vertex('v1', OR, ('e1', 'e2', 'e3'))],
                           targets=[('e3', 'v1'), ('e1', 'v1')])


class TestConstraintGraph:
    """Test graph validation"""

    def test_endpoints(self, triple):
        assert triple.edges == ['e1', 'e2', 'e3']
        assert triple.endpoints['e1'] == ('v0', 'v1')
        assert triple.other_end('e1', 'v0') == 'v1'

    def test_unknown_kind(self):
        with pytest.raises(MalformedGraph, match="unknown kind"):
            ConstraintGraph([Vertex('v0', 'xor', ('a', 'b', 'c')), Vertex('v1', OR, ('a', 'b', 'c'))])

    def test_dangling_edge(self):
        with pytest.raises(MalformedGraph, match="has 1 endpoints"):
            ConstraintGraph([Vertex('v0', OR, ('a', 'b', 'c')), Vertex('v1', OR, ('a', 'b', 'd'))])

    def test_loop(self):
        with pytest.raises(MalformedGraph, match="is a loop"):
            ConstraintGraph([Vertex('v0', OR, ('a', 'a', 'b')), Vertex('v1', OR, ('b', 'c', 'c'))])

    def test_bad_target(self):
        with pytest.raises(MalformedGraph, match="does not name an edge end"):
            ConstraintGraph([Vertex('v0', OR, ('a', 'b', 'c')), Vertex('v1', OR, ('a', 'b', 'c'))],
                            targets=[('a', 'v7')])

    def test_targets_must_differ(self):
        with pytest.raises(MalformedGraph, match="must differ"):
            ConstraintGraph([Vertex('v0', OR, ('a', 'b', 'c')), Vertex('v1', OR, ('a', 'b', 'c'))],
                            targets=[('a', 'v0'), ('a', 'v1')])


class TestLegality:
    """Test configuration and move legality"""

    def test_or_vertex_needs_an_inflow(self, triple, start):
        assert is_legal_config(triple, start) == (True, None)
        assert is_legal_config(triple, {'e1': 'v0', 'e2': 'v0', 'e3': 'v0'}) == (False, 'v1')

    def test_and_vertex(self, and_or):
        assert is_legal_config(and_or, {'e1': 'v0', 'e2': 'v1', 'e3': 'v1'})[0]
        assert is_legal_config(and_or, {'e1': 'v1', 'e2': 'v0', 'e3': 'v0'})[0]
        assert is_legal_config(and_or, {'e1': 'v1', 'e2': 'v0', 'e3': 'v1'}) == (False, 'v0')

    def test_reversing_edge_counts_for_neither_end(self, triple):
        assert not is_legal_config(triple, {'e1': 'v0', 'e2': 'v0', 'e3': None})[0]

    def test_unassigned_edge(self, triple):
        with pytest.raises(MalformedGraph, match="unassigned"):
            is_legal_config(triple, {'e1': 'v0'})

    def test_moves(self, triple, start):
        assert is_legal_move(triple, start, 'e1')
        assert not is_legal_move(triple, start, 'e3')

    def test_sequence(self, triple, start):
        assert is_legal_sequence(triple, start, ['e1', 'e3']) == (True, None)
        assert is_legal_sequence(triple, start, ['e3']) == (False, 0)
        assert is_legal_sequence(triple, {'e1': 'v0', 'e2': 'v0', 'e3': 'v0'}, []) == (False, -1)

    def test_reverse_moves_lead_back(self, triple, start):
        end, back = reverse_moves(triple, start, ['e1', 'e3'])
        assert end == {'e1': 'v1', 'e2': 'v0', 'e3': 'v0'}
        assert back == ['e3', 'e1']
        assert is_legal_sequence(triple, end, back) == (True, None)
        assert apply_moves(triple, end, back) == start

    def test_legal_configs(self, triple, and_or):
        assert len(legal_configs(triple)) == 6
        assert len(legal_configs(and_or)) == 4

    def test_too_many_edges(self, triple):
        with patch('ncl.get_config', return_value=Mock(ncl_max_edges=2)):
            with pytest.raises(TooLarge, match="exceeds the limit of 2"):
                legal_configs(triple)


class TestAsyncSchedule:
    """Test asynchronous reversal schedules"""

    def test_staggered_reversals_are_legal(self, triple, start):
        s = AsyncSchedule([Phase('e1', F(0), F(1)), Phase('e3', F(1), F(2))])
        assert check_async_schedule(triple, start, s) == (True, None)
        assert final_config(triple, start, s) == {'e1': 'v1', 'e2': 'v0', 'e3': 'v0'}

    def test_reversing_edge_during_phase(self, triple, start):
        s = AsyncSchedule([Phase('e1', F(0), F(2))])
        assert config_at(triple, start, s, F(1))['e1'] is None
        assert config_at(triple, start, s, F(2))['e1'] == 'v1'

    def test_lone_inflow_cannot_reverse(self, triple, start):
        s = AsyncSchedule([Phase('e3', F(0), F(1))])
        assert check_async_schedule(triple, start, s) == (False, F(0))

    def test_overlapping_reversals_of_both_inflows(self, triple, start):
        s = AsyncSchedule([Phase('e1', F(0), F(2)), Phase('e2', F(1), F(3))])
        assert check_async_schedule(triple, start, s) == (False, F(1))

    def test_overlapping_phases_of_one_edge(self, triple, start):
        s = AsyncSchedule([Phase('e1', F(0), F(2)), Phase('e1', F(1), F(3))])
        with pytest.raises(MalformedSchedule, match="overlap"):
            check_async_schedule(triple, start, s)

    def test_empty_phase(self, triple, start):
        with pytest.raises(MalformedSchedule, match="ends before it starts"):
            check_async_schedule(triple, start, AsyncSchedule([Phase('e1', F(1), F(1))]))

    def test_illegal_start(self, triple):
        with pytest.raises(IllegalAsync, match="Start configuration"):
            check_async_schedule(triple, {'e1': 'v0', 'e2': 'v0', 'e3': 'v0'}, AsyncSchedule([]))

    def test_serialize(self, triple, start):
        s = AsyncSchedule([Phase('e3', F(1), F(2)), Phase('e1', F(0), F(1))])
        assert serialize_async(triple, start, s) == ['e1', 'e3']

    def test_serialize_illegal(self, triple, start):
        with pytest.raises(IllegalAsync, match="illegal at t=0"):
            serialize_async(triple, start, AsyncSchedule([Phase('e3', F(0), F(1))]))


class TestDecision:
    """Test the exhaustive EE decision"""

    def test_restriction_violated(self, triple):
        with pytest.raises(RestrictionViolated):
            ee_decide(triple)

    def test_unreachable(self, and_or):
        assert ee_decide(and_or) == (False, [])
        assert ee_decide(and_or, shuffle_seed=3) == (False, [])

    def test_needs_two_targets(self):
        g = ConstraintGraph([Vertex('v0', OR, ('a', 'b', 'c')), Vertex('v1', OR, ('a', 'b', 'c'))])
        with pytest.raises(MalformedGraph, match="two target lines"):
            ee_decide(g)


class TestTextFormat:
    """Test the ncl v1 text format"""

    TEXT = ("ncl v1\n"
            "or e1 e2 e3\n"
            "or e1 e2 e3  # second vertex\n"
            "target e1 v0\n"
            "orient e1 v0\n"
            "orient e2 v0\n"
            "orient e3 v1\n"
            "phase e1 0 1\n"
            "phase e3 1 3/2\n")

    def test_parse(self):
        instance = parse_ncl(self.TEXT)
        assert [v.vid for v in instance.graph.vertices] == ['v0', 'v1']
        assert instance.graph.targets == [('e1', 'v0')]
        assert instance.start == {'e1': 'v0', 'e2': 'v0', 'e3': 'v1'}
        assert instance.schedule.phases[1] == Phase('e3', F(1), F(3, 2))

    def test_serialize_round_trip(self):
        instance = parse_ncl(self.TEXT)
        again = parse_ncl(serialize_ncl(instance))
        assert again.start == instance.start
        assert again.schedule == instance.schedule

    def test_serialize_without_orientation(self, triple):
        text = serialize_ncl(NclInstance(triple, None, AsyncSchedule([])))
        assert 'orient' not in text
        assert text.startswith('ncl v1\nor e1 e2 e3\n')

    def test_missing_header(self):
        with pytest.raises(FormatError, match="Missing header"):
            parse_ncl("or e1 e2 e3\n")

    def test_bad_orientation(self):
        with pytest.raises(FormatError, match="does not name an edge end"):
            parse_ncl("ncl v1\nor a b c\nor a b c\norient a v9\n")

    def test_unknown_keyword(self):
        with pytest.raises(FormatError, match="Unknown keyword"):
            parse_ncl("ncl v1\nnot a b c\n")


@pytest.mark.slow
class TestRandomInstances:
    """Properties over seeded random cubic graphs"""

    def test_serialization_over_five_hundred_schedules(self):
        rng = random.Random(8)
        checked = 0
        while checked < 500:
            g = corpus.random_ncl_graph(rng, rng.choice((2, 4)))
            start = corpus.random_legal_config(rng, g)
            if start is None:
                continue
            schedule = corpus.random_async_schedule(rng, g, start)
            if not schedule.phases:
                continue
            moves = serialize_async(g, start, schedule)
            assert is_legal_sequence(g, start, moves) == (True, None)
            assert apply_moves(g, start, moves) == final_config(g, start, schedule)
            checked += 1

    def test_decision_ignores_expansion_order(self):
        rng = random.Random(9)
        decided = 0
        for _ in range(200):
            g = corpus.random_ncl_graph(rng, 4)
            (ea, eb) = rng.sample(g.edges, 2)
            targets = [(ea, rng.choice(g.endpoints[ea])), (eb, rng.choice(g.endpoints[eb]))]
            h = ConstraintGraph(g.vertices, targets=targets)
            try:
                reachable, moves = ee_decide(h)
            except RestrictionViolated:
                continue
            shuffled, other = ee_decide(h, shuffle_seed=rng.randrange(1000))
            assert shuffled == reachable
            assert len(other) == len(moves)
            decided += 1
        assert decided > 0
