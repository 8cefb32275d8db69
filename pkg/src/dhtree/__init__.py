"""Steady-state hydraulics of tree-structured district heating networks."""

from .components import (
    FunctionCurve,
    MonotoneCurve,
    PipeCurveParams,
    PowerLawCurve,
    ValveCurveParams,
    curve_inverse_numeric,
    parallel,
    pipe_eval,
    series,
    valve_eval,
    valve_inverse,
)
from .formats import (
    ResultTable,
    load_bundled,
    load_network_file,
    parse_network,
    serialize_network,
)
from .network import (
    EdgeSpec,
    Junction,
    NetworkSpec,
    Pump,
    Valve,
    edge,
    leaves,
    subtree,
    two_consumer_network,
    validate,
    valve,
)
from .scenarios import (
    CoefficientRanges,
    GroupScenario,
    PropertyCampaignSpec,
    SweepSpec,
    check_monotone_case,
    generate_random_network,
    run_group_scenario,
    run_property_campaign,
    run_sweep,
)
from .solver import (
    EquilibriumSolution,
    SolverConfig,
    ValveSettings,
    residual,
    solve,
    solve_newton,
    solve_tree,
    subtree_flow_response,
)

__version__ = "0.1.0"
