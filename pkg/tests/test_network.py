import pytest
from hypothesis import given, settings, strategies as st

from dhtree import (
    Junction,
    Pump,
    edge,
    generate_random_network,
    leaves,
    subtree,
    validate,
    valve,
)
from dhtree.errors import (
    CycleDetected,
    Disconnected,
    DuplicateEdge,
    InvalidVertex,
    IsRoot,
    LeafNotValve,
    MissingPump,
    MultiplePumps,
    NonLeafValve,
    PumpNotRoot,
    RootIsLeaf,
    SelfLoop,
    ValidationError,
)
from dhtree.network import Valve


def single_edge():
    return validate([(0, Pump(1.0)), (1, valve(1.0))], [edge(0, 1, 0.5, 0.5)])


class TestValidate:
    def test_two_consumer(self, net2):
        assert net2.root_series_pipe
        assert net2.root_out_degree == 1
        assert net2.num_vertices == 5
        assert len(net2.edges) == 4
        assert net2.children[3] == (1, 4)
        assert net2.parent[2] == 4

    def test_single_edge(self):
        net = single_edge()
        assert net.root_series_pipe
        assert net.leaves() == [1]

    def test_two_pipes_from_pump(self):
        net = validate([(0, Pump(1.0)), (1, valve(1.0)), (2, valve(1.0))],
                       [edge(0, 1, 1, 1), edge(0, 2, 1, 1)])
        assert not net.root_series_pipe

    def test_edge_order_does_not_matter(self, net2):
        shuffled = validate(list(reversed(net2.vertices)), list(reversed(net2.edges)))
        assert shuffled == net2

    def test_two_cycle(self):
        with pytest.raises(CycleDetected):
            validate([(0, Pump(1.0)), (1, valve(1.0))], [edge(0, 1, 1, 1), edge(1, 0, 1, 1)])

    def test_cycle_off_tree(self):
        verts = [(0, Pump(1.0)), (1, valve(1.0)), (2, Junction()), (3, Junction())]
        with pytest.raises(CycleDetected):
            validate(verts, [edge(0, 1, 1, 1), edge(2, 3, 1, 1), edge(3, 2, 1, 1)])

    def test_disconnected(self):
        verts = [(0, Pump(1.0)), (1, valve(1.0)), (2, valve(1.0))]
        with pytest.raises(Disconnected, match=r"\[2\]"):
            validate(verts, [edge(0, 1, 1, 1)])

    def test_multiple_pumps(self):
        verts = [(0, Pump(1.0)), (1, Pump(1.0)), (2, valve(1.0))]
        with pytest.raises(MultiplePumps):
            validate(verts, [edge(0, 1, 1, 1), edge(1, 2, 1, 1)])

    def test_missing_pump(self):
        with pytest.raises(MissingPump):
            validate([(0, Junction()), (1, valve(1.0))], [edge(0, 1, 1, 1)])

    def test_pump_not_root(self):
        verts = [(0, Junction()), (1, Pump(1.0)), (2, valve(1.0))]
        with pytest.raises(PumpNotRoot):
            validate(verts, [edge(0, 1, 1, 1), edge(1, 2, 1, 1)])

    def test_root_id_must_be_zero(self):
        with pytest.raises(PumpNotRoot):
            validate([(5, Pump(1.0)), (1, valve(1.0))], [edge(5, 1, 1, 1)])

    def test_non_leaf_valve(self):
        verts = [(0, Pump(1.0)), (1, valve(1.0)), (2, valve(1.0))]
        with pytest.raises(NonLeafValve, match="valve 1"):
            validate(verts, [edge(0, 1, 1, 1), edge(1, 2, 1, 1)])

    def test_leaf_not_valve(self):
        verts = [(0, Pump(1.0)), (1, Junction())]
        with pytest.raises(LeafNotValve, match="vertex 1"):
            validate(verts, [edge(0, 1, 1, 1)])

    def test_duplicate_edge(self):
        with pytest.raises(DuplicateEdge, match="0->1"):
            validate([(0, Pump(1.0)), (1, valve(1.0))], [edge(0, 1, 1, 1), edge(0, 1, 1, 1)])

    def test_self_loop(self):
        with pytest.raises(SelfLoop, match="vertex 1"):
            validate([(0, Pump(1.0)), (1, valve(1.0))], [edge(0, 1, 1, 1), edge(1, 1, 1, 1)])

    def test_pump_alone(self):
        with pytest.raises(RootIsLeaf):
            validate([(0, Pump(1.0))], [])

    @pytest.mark.parametrize("vid", [-1, 1.5, True])
    def test_bad_ids(self, vid):
        with pytest.raises(InvalidVertex):
            validate([(0, Pump(1.0)), (vid, valve(1.0))], [])

    def test_unknown_endpoint(self):
        with pytest.raises(InvalidVertex):
            validate([(0, Pump(1.0)), (1, valve(1.0))], [edge(0, 1, 1, 1), edge(1, 9, 1, 1)])

    def test_errors_are_value_errors(self):
        assert issubclass(CycleDetected, ValidationError)
        assert issubclass(ValidationError, ValueError)


class TestLeavesAndSubtree:
    def test_leaves(self, net2):
        assert leaves(net2) == [1, 2]
        assert leaves(single_edge()) == [1]

    def test_network22_leaves(self, net22_file):
        assert leaves(net22_file.network) == list(range(1, 23))

    def test_subtree_at_4(self, net2):
        view = subtree(net2, 4)
        assert set(view.vertices) == {4, 2}
        assert [(e.tail, e.head) for e in view.edges] == [(4, 2)]
        assert view.inflow_edge.tail == 3

    def test_subtree_at_leaf(self, net2):
        view = subtree(net2, 1)
        assert view.vertices == (1,)
        assert view.edges == ()
        assert view.leaves() == [1]

    def test_subtree_at_3(self, net2):
        assert set(subtree(net2, 3).vertices) == {3, 1, 4, 2}

    def test_subtree_at_root(self, net2):
        with pytest.raises(IsRoot):
            subtree(net2, 0)


seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_tree_invariants(seed):
    net = generate_random_network(seed, (2, 40))
    assert len(net.edges) == net.num_vertices - 1
    reached = set(subtree(net, net.children[0][0]).vertices) | {0}
    assert reached == {v for v, _ in net.vertices}
    valves = sorted(v for v, k in net.vertices if isinstance(k, Valve))
    assert leaves(net) == valves and valves


@settings(max_examples=60, deadline=None)
@given(seed=seeds, data=st.data())
def test_child_subtrees_partition(seed, data):
    net = generate_random_network(seed, (2, 40))
    v = data.draw(st.sampled_from([w for w, _ in net.vertices if w != 0]))
    whole = subtree(net, v).vertices
    parts = [subtree(net, c).vertices for c in net.children[v]]
    flat = [w for p in parts for w in p]
    assert len(flat) == len(set(flat))
    assert sorted(flat + [v]) == sorted(whole)
