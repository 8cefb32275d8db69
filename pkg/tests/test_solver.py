import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import two_consumer_bisection_oracle, two_consumer_oracle
from dhtree import (
    Junction,
    Pump,
    SolverConfig,
    ValveSettings,
    edge,
    generate_random_network,
    residual,
    solve,
    solve_newton,
    solve_tree,
    subtree_flow_response,
    validate,
    valve,
)
from dhtree.errors import (
    ClosedValve,
    DimensionMismatch,
    IsRoot,
    ResidualCheckFailed,
    ValveSettingsError,
)
from dhtree.solver import EquilibriumSolution, SolverDiagnostics


def mp_two_consumer(u1, u2):
    """30-digit solve of the two-consumer equations by mpmath.findroot."""
    mpmath.mp.dps = 30
    a, b = 1 + mpmath.mpf(u1) ** -2, 2 + mpmath.mpf(u2) ** -2
    q1, q2 = mpmath.findroot(
        lambda x, y: [(x + y) ** 2 + a * x ** 2 - 1, (x + y) ** 2 + b * y ** 2 - 1],
        (0.4, 0.4))
    return float(q1), float(q2)


@pytest.mark.parametrize("u1, u2", [(1.0, 1.0), (0.5, 1.0), (0.3, 0.8)])
def test_oracles_agree(u1, u2):
    closed = two_consumer_oracle(u1, u2)
    q1, q2 = mp_two_consumer(u1, u2)
    b1, b2 = two_consumer_bisection_oracle(u1, u2)
    assert closed["q1"] == pytest.approx(q1, abs=1e-15)
    assert closed["q2"] == pytest.approx(q2, abs=1e-15)
    assert (b1, b2) == pytest.approx((q1, q2), abs=1e-15)


class TestSolveTree:
    @pytest.mark.parametrize("u1, u2", [(1.0, 1.0), (0.5, 1.0), (0.3, 0.8), (1.0, 0.1)])
    def test_two_consumer_matches_oracle(self, net2, u1, u2):
        sol = solve_tree(net2, 1.0, {1: u1, 2: u2})
        ref = two_consumer_oracle(u1, u2)
        assert sol.consumer_flow[1] == pytest.approx(ref["q1"], abs=1e-9)
        assert sol.consumer_flow[2] == pytest.approx(ref["q2"], abs=1e-9)
        assert sol.total_consumer_flow == pytest.approx(ref["total"], abs=1e-9)
        for v, p in ref["p"].items():
            assert sol.pressure[v] == pytest.approx(p, abs=1e-9)

    def test_reference_values(self, net2):
        sol = solve_tree(net2, 1.0, 1.0)
        assert sol.consumer_flow[1] == pytest.approx(0.4343861831556161, abs=1e-12)
        assert sol.consumer_flow[2] == pytest.approx(0.3546748333488055, abs=1e-12)
        sol = solve_tree(net2, 1.0, {1: 0.5, 2: 1.0})
        assert sol.total_consumer_flow == pytest.approx(0.7156333774269252, abs=1e-12)

    @pytest.mark.parametrize("u", [1.0, 0.2, {1: 0.7, 2: 0.01}])
    def test_zero_pump(self, net2, u):
        sol = solve_tree(net2, 0.0, u)
        assert all(v == 0.0 for v in sol.pressure.values())
        assert all(q == 0.0 for q in sol.edge_flow.values())
        assert sol.diagnostics.residual_inf_norm == 0.0

    def test_pump_pressure_defaults_to_network(self):
        from dhtree import two_consumer_network
        net = two_consumer_network(pump_pressure=2.0)
        assert solve_tree(net, None, 1.0) == solve_tree(net, 2.0, 1.0)

    def test_deterministic(self, net22_file):
        a = solve_tree(net22_file.network, None, 0.6)
        b = solve_tree(net22_file.network, None, 0.6)
        assert a == b

    def test_diagnostics(self, net2):
        d = solve_tree(net2, 1.0, 1.0).diagnostics
        assert d.method == "tree"
        assert d.outer_iterations == 4
        assert d.residual_inf_norm <= 1e-9

    def test_missing_leaf(self, net2):
        with pytest.raises(ValveSettingsError, match=r"missing leaves \[2\]"):
            solve_tree(net2, 1.0, {1: 1.0})

    def test_unknown_leaf(self, net2):
        with pytest.raises(ValveSettingsError, match="unknown"):
            solve_tree(net2, 1.0, {1: 1.0, 2: 1.0, 3: 1.0})

    def test_closed_valve(self, net2):
        with pytest.raises(ClosedValve):
            solve_tree(net2, 1.0, {1: 0.0, 2: 1.0})

    def test_negative_pump_reverses_flow(self, net2):
        sol = solve_tree(net2, -1.0, 1.0)
        ref = two_consumer_oracle()
        assert sol.consumer_flow[1] == pytest.approx(-ref["q1"], abs=1e-9)

    def test_unreduced_path(self, net2):
        cfg = SolverConfig(reduce_power_laws=False)
        sol = solve_tree(net2, 1.0, {1: 0.5, 2: 1.0}, cfg)
        ref = two_consumer_oracle(0.5, 1.0)
        assert sol.consumer_flow[1] == pytest.approx(ref["q1"], abs=1e-9)
        assert sol.consumer_flow[2] == pytest.approx(ref["q2"], abs=1e-9)

    def test_unknown_method(self, net2):
        with pytest.raises(ValueError):
            solve(net2, 1.0, 1.0, method="brent")


def mixed_exponent_network():
    # exponents differ, so the series/parallel reduction cannot collapse them
    return validate(
        [(0, Pump(1.5)), (1, Junction()), (2, valve(2.0, 1.8)), (3, Junction()),
         (4, valve(0.5)), (5, valve(1.0, 2.5))],
        [edge(0, 1, 0.3, 0.4, 1.9), edge(1, 2, 1.0, 1.0), edge(1, 3, 0.2, 0.2, 1.75),
         edge(3, 4, 0.5, 0.1), edge(3, 5, 0.3, 0.3, 2.2)],
    )


class TestNewton:
    def test_two_consumer(self, net2):
        a = solve_tree(net2, 1.0, 1.0)
        b = solve_newton(net2, 1.0, 1.0)
        for v in a.pressure:
            assert b.pressure[v] == pytest.approx(a.pressure[v], abs=1e-8)
        for e in a.edge_flow:
            assert b.edge_flow[e] == pytest.approx(a.edge_flow[e], abs=1e-8)
        assert b.diagnostics.method == "newton"

    def test_zero_pump(self, net2):
        sol = solve_newton(net2, 0.0, 0.5)
        # below |q| ~ 1e-9 the slope floor makes Newton crawl; 1e-8 is the
        # agreement tolerance against the tree solver, which returns exact zeros
        assert max(abs(q) for q in sol.edge_flow.values()) <= 1e-8
        assert sol.diagnostics.residual_inf_norm <= 1e-12

    def test_mixed_exponents(self):
        net = mixed_exponent_network()
        u = {2: 0.4, 4: 0.9, 5: 0.6}
        a = solve_tree(net, None, u)
        b = solve_newton(net, None, u)
        for leaf in a.consumer_flow:
            assert b.consumer_flow[leaf] == pytest.approx(a.consumer_flow[leaf], rel=1e-8)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_50_vertex(self, seed):
        rng = np.random.default_rng(seed)
        net = generate_random_network(rng, (50, 50))
        u = {l: float(rng.uniform(0.2, 1.0)) for l in net.leaves()}
        a = solve_tree(net, None, u)
        b = solve_newton(net, None, u)
        for leaf in a.consumer_flow:
            assert b.consumer_flow[leaf] == pytest.approx(a.consumer_flow[leaf], rel=1e-8)


def _zero_solution(net, method="tree"):
    return EquilibriumSolution(
        pressure={v: 0.0 for v, _ in net.vertices},
        edge_flow={(e.tail, e.head): 0.0 for e in net.edges},
        consumer_flow={l: 0.0 for l in net.leaves()},
        root_flow=0.0,
        diagnostics=SolverDiagnostics(0.0, 0, method),
    )


class TestResidual:
    def test_exact_solution(self, net2):
        ref = two_consumer_oracle()
        cand = EquilibriumSolution(
            pressure=ref["p"],
            edge_flow={(0, 3): ref["total"], (3, 1): ref["q1"], (3, 4): ref["q2"],
                       (4, 2): ref["q2"]},
            consumer_flow={1: ref["q1"], 2: ref["q2"]},
            root_flow=-ref["total"],
            diagnostics=SolverDiagnostics(0.0, 0, "oracle"),
        )
        _, norm = residual(net2, cand, 1.0)
        assert norm <= 1e-9

    def test_zero_solution_zero_pump(self):
        from dhtree import two_consumer_network
        net = two_consumer_network(pump_pressure=0.0)
        vec, norm = residual(net, _zero_solution(net), 1.0)
        assert norm == 0.0
        # root, 4 edges, 2 leaves, 5 balances
        assert vec.shape == (12,)

    def test_zero_solution_unit_pump(self, net2):
        vec, norm = residual(net2, _zero_solution(net2), 1.0)
        assert norm == 1.0
        assert vec[0] == -1.0 and np.count_nonzero(vec) == 1

    def test_pump_override(self, net2):
        _, norm = residual(net2, _zero_solution(net2), 1.0, pump_pressure=0.0)
        assert norm == 0.0

    def test_dimension_mismatch(self, net2):
        sol = solve_tree(net2, 1.0, 1.0)
        bad = EquilibriumSolution(
            pressure=sol.pressure, edge_flow={(0, 3): 1.0}, consumer_flow=sol.consumer_flow,
            root_flow=sol.root_flow, diagnostics=sol.diagnostics)
        with pytest.raises(DimensionMismatch):
            residual(net2, bad, 1.0)

    def test_guard_trips_on_tiny_tolerance(self, net2):
        with pytest.raises(ResidualCheckFailed):
            solve_tree(net2, 1.0, {1: 0.37, 2: 0.91}, SolverConfig(residual_tolerance=1e-300))


class TestSubtreeFlowResponse:
    def test_leaf(self):
        net = validate([(0, Pump(1.0)), (1, valve(1.0))], [edge(0, 1, 0.5, 0.5)])
        assert subtree_flow_response(net, 1, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("v", [1, 2, 3, 4])
    def test_zero_pressure(self, net2, v):
        assert subtree_flow_response(net2, v, 0.0, 1.0) == 0.0

    def test_junction_matches_oracle(self, net2):
        ref = two_consumer_oracle()
        q = subtree_flow_response(net2, 3, ref["p"][3], 1.0)
        assert q == pytest.approx(ref["total"], abs=1e-9)

    def test_root_rejected(self, net2):
        with pytest.raises(IsRoot):
            subtree_flow_response(net2, 0, 1.0, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), p1=st.floats(-5, 5), p2=st.floats(-5, 5))
    def test_strictly_increasing(self, seed, p1, p2):
        lo, hi = sorted((p1, p2))
        if hi - lo < 1e-6:
            return
        rng = np.random.default_rng(seed)
        net = generate_random_network(rng, (2, 20))
        u = {l: float(rng.uniform(0.2, 1.0)) for l in net.leaves()}
        v = int(rng.choice([w for w, _ in net.vertices if w != 0]))
        assert subtree_flow_response(net, v, lo, u) < subtree_flow_response(net, v, hi, u)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), method=st.sampled_from(["tree", "newton"]))
def test_solution_invariants(seed, method):
    rng = np.random.default_rng(seed)
    net = generate_random_network(rng, (2, 50))
    u = {l: float(rng.uniform(0.2, 1.0)) for l in net.leaves()}
    sol = solve(net, None, u, method=method)
    tol = SolverConfig().residual_tolerance
    _, norm = residual(net, sol, u)
    assert norm <= tol
    # conservation over all vertices
    assert abs(sol.root_flow + math.fsum(sol.consumer_flow.values())) <= tol
    # each edge carries the flow of the consumers below it
    for (i, j), q in sol.edge_flow.items():
        below = net.subtree(j).leaves()
        assert abs(q - math.fsum(sol.consumer_flow[l] for l in below)) <= 10 * tol
    # positive pump head and open valves give positive flows everywhere
    assert all(q > 0 for q in sol.edge_flow.values())


def test_valve_settings_helpers(net2):
    vs = ValveSettings.uniform(net2, 0.4)
    assert dict(vs) == {1: 0.4, 2: 0.4}
    assert vs.updated({2: 0.9})[2] == 0.9
    with pytest.warns(RuntimeWarning):
        ValveSettings({1: 1.2})
