import itertools
import math

import numpy as np
import pytest
from scipy import sparse

from detector_placement.coverage import CoverageTable, build_coverage
from detector_placement.grid_model import with_parameter
from detector_placement.objective import Placement, constraint_violations, expected_casualties
from detector_placement.pathing import all_paths
from detector_placement.solver import (
    InstanceTooLarge,
    LinearProgram,
    PlacementModel,
    RelaxationNode,
    SolveOptions,
    branch,
    build_relaxation,
    enumerate_optimal,
    lp_solve,
    propagate,
    select_branch_variable,
    solve_bnb,
    solve_node,
)
from detector_placement.solver.enumeration import feasible_placements
from conftest import make_scenario
from instances import random_instance

EXACT = SolveOptions(gap_tolerance=1e-9)


def lp(c, A_ub=None, b_ub=None, lb=None, ub=None):
    n = len(c)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float)
    return LinearProgram(np.asarray(c, float), A_ub, b_ub, np.zeros((0, n)), np.zeros(0),
                         np.asarray(lb, float), np.asarray(ub, float))


def test_lp_box():
    sol = lp_solve(lp([1.0], lb=[2.0], ub=[5.0]))
    assert sol.value == pytest.approx(2.0) and sol.x[0] == pytest.approx(2.0)


def test_lp_cover():
    sol = lp_solve(lp([1.0, 1.0], A_ub=[[-1.0, -1.0]], b_ub=[-1.0], lb=[0, 0], ub=[1, 1]))
    assert sol.value == pytest.approx(1.0)


def vertex_minimum(c, A, b, lb, ub):
    """Minimum over all basic feasible points of {A x <= b, lb <= x <= ub}."""
    n = len(c)
    G = np.vstack([A, np.eye(n), -np.eye(n)])
    h = np.concatenate([b, ub, -lb])
    best = math.inf
    for rows in itertools.combinations(range(len(h)), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    return best


def test_lp_five_variables_against_vertex_enumeration():
    c = np.array([-3.0, -1.0, -2.0, 1.5, -0.5])
    A = np.array([
        [1.0, 1.0, 1.0, 0.0, 0.0],
        [2.0, 0.0, 1.0, -1.0, 1.0],
        [0.0, 1.0, -1.0, 1.0, 2.0],
        [1.0, -2.0, 0.0, 1.0, 1.0],
    ])
    b = np.array([4.0, 5.0, 3.0, 2.0])
    lb, ub = np.zeros(5), np.array([3.0, 2.0, 2.5, 1.0, 4.0])
    ref = vertex_minimum(c, A, b, lb, ub)
    assert lp_solve(lp(c, A, b, lb, ub)).value == pytest.approx(ref, abs=1e-7)


def fake_model(primary, secondary, kp=3, ks=3):
    return PlacementModel(
        primary_cells=tuple(primary), secondary_cells=tuple(secondary), pairs=((1, 2),),
        weight=np.ones(1), log_miss_p=-np.ones((len(primary), 1)), log_miss_s=-np.ones((len(secondary), 1)),
        theta1=0.9, theta2=0.5, max_primary=kp, max_secondary=ks, shared=(),
    )


def test_branch_most_fractional():
    m = fake_model([3, 7], [])
    node = RelaxationNode.root(m)
    assert select_branch_variable(m, node, np.array([0.5, 0.9]), np.zeros(0)) == ("x", 0)


def test_branch_tie_lowest_cell():
    m = fake_model([2, 4], [1])
    node = RelaxationNode.root(m)
    assert select_branch_variable(m, node, np.array([0.5, 0.5]), np.array([0.2])) == ("x", 0)
    # cell index beats layer: Y_1 ties X_2 and has the lower cell
    assert select_branch_variable(m, node, np.array([0.5, 0.5]), np.array([0.5])) == ("y", 0)


def test_branch_integral_and_leaf():
    m = fake_model([2, 4], [])
    node = RelaxationNode.root(m)
    # integral point: falls back to the first free variable
    assert select_branch_variable(m, node, np.array([1.0, 0.0]), np.zeros(0)) == ("x", 0)
    node.x_lo[:] = node.x_hi[:] = 1
    assert select_branch_variable(m, node, np.array([1.0, 1.0]), np.zeros(0)) is None


def test_branch_children_fix_and_propagate():
    m = fake_model([2, 4], [5], kp=1, ks=1)
    root = RelaxationNode.root(m)
    zero, one = branch(m, root, ("x", 0), 1)
    assert (zero.x_lo[0], zero.x_hi[0]) == (0, 0)
    assert (one.x_lo[0], one.x_hi[0]) == (1, 1)
    assert one.x_hi[1] == 0  # budget of one primary is used up


def test_propagate_linking():
    m = fake_model([2], [5])
    node = RelaxationNode.root(m)
    node.x_hi[0] = 0
    assert propagate(m, node)
    assert node.y_hi[0] == 0


# --- enumeration ---------------------------------------------------------------

def hand_table(cells_p, cells_s, rho):
    return CoverageTable(
        rho_primary={(i, 1, 5): rho for i in cells_p},
        rho_secondary={(i, 1, 5): rho for i in cells_s},
        eligible_primary={(1, 5): frozenset(cells_p)},
        eligible_secondary={(1, 5): frozenset(cells_s)},
        candidates_P=frozenset(cells_p),
        candidates_S=frozenset(cells_s),
    )


def test_enumerate_nothing_to_place():
    s = make_scenario(1, 5, [1], [(5, 10.0)], {(1, 5): 1.0})
    res = enumerate_optimal(s, hand_table([], [], 0.5))
    assert res.placement == Placement() and res.objective == 10.0 and res.status == "Optimal"


def test_enumerate_no_primary_budget():
    s = make_scenario(1, 5, [1], [(5, 10.0)], {(1, 5): 1.0}, primary=(1.5, 1.0, 2.0, 1.0))
    res = enumerate_optimal(s, hand_table([2, 3], [2, 3], 0.5))
    assert res.placement == Placement() and res.objective == 10.0


def test_enumerate_two_candidates():
    rho = 1 - math.exp(-3.0)
    s = make_scenario(1, 5, [1], [(5, 10.0)], {(1, 5): 1.0})
    cov = hand_table([2, 3], [2, 3], rho)
    placements = list(feasible_placements(s, cov))
    assert len(placements) == 5
    # brute force over the 5 feasible placements with the event-tree factor
    q = 1 - rho
    expected = 10 * (1 - 0.9 * rho ** 2 - 0.6 * q * rho)
    res = enumerate_optimal(s, cov)
    assert res.objective == pytest.approx(expected, abs=1e-12)
    assert res.placement == Placement.of([2], [3])  # lexicographic tie-break
    assert solve_bnb(s, cov, EXACT).objective == pytest.approx(expected, abs=1e-9)


def test_enumerate_guard():
    s = make_scenario(5, 5, [1], [(25, 1.0)], {(1, 25): 1.0})
    cov = hand_table(range(2, 15), range(2, 15), 0.5)
    with pytest.raises(InstanceTooLarge):
        enumerate_optimal(s, cov)


# --- relaxation ----------------------------------------------------------------

def instances(seed, count, **kw):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, **kw) for _ in range(count)]


def test_fully_fixed_node_is_exact():
    rng = np.random.default_rng(21)
    for s, _, cov in instances(20, 10):
        m = PlacementModel.build(s, cov)
        for pl in list(feasible_placements(s, cov))[:: 7][:10]:
            x, y = m.vectors(pl)
            node = RelaxationNode.root(m)
            node.x_lo[:] = node.x_hi[:] = x
            node.y_lo[:] = node.y_hi[:] = y
            ev = solve_node(m, node, SolveOptions(oa_rounds=0))
            exact = expected_casualties(s, cov, pl).expected_casualties
            assert ev.bound == pytest.approx(exact, abs=1e-7)
    del rng


def test_root_bound_below_optimum_and_nested_tangents():
    for s, _, cov in instances(22, 15):
        m = PlacementModel.build(s, cov)
        opt = enumerate_optimal(s, cov).objective
        bounds = []
        for t in (2, 8):
            root = RelaxationNode.root(m)
            propagate(m, root)
            bounds.append(solve_node(m, root, SolveOptions(tangent_breakpoints=t, oa_rounds=0)).bound)
        assert bounds[0] <= opt + 1e-9 and bounds[1] <= opt + 1e-9
        assert bounds[1] >= bounds[0] - 1e-9


def test_relaxation_shape():
    s, _, cov = instances(23, 1)[0]
    m = PlacementModel.build(s, cov)
    prog, layout = build_relaxation(m, RelaxationNode.root(m), SolveOptions())
    assert sparse.issparse(prog.A_ub)
    assert prog.A_ub.shape[1] == prog.A_eq.shape[1] == layout.n_vars == prog.n_vars


# --- branch and bound ----------------------------------------------------------

def test_bnb_empty_candidates():
    s = make_scenario(1, 5, [1], [(5, 10.0)], {(1, 5): 1.0})
    cov = hand_table([], [], 0.5)
    a, b = enumerate_optimal(s, cov), solve_bnb(s, cov)
    assert b.objective == a.objective == 10.0 and b.status == "Optimal"


def test_bnb_matches_enumeration():
    for s, _, cov in instances(30, 25):
        ref = enumerate_optimal(s, cov)
        res = solve_bnb(s, cov, EXACT)
        assert res.objective == pytest.approx(ref.objective, abs=1e-6)
        assert res.lower_bound <= res.objective + 1e-12
        assert res.status == "Optimal" and res.relative_gap <= EXACT.gap_tolerance
        assert constraint_violations(s, cov, res.placement) == []


def test_doubling_primary_budget_never_hurts():
    for s, _, cov in instances(31, 10):
        base = enumerate_optimal(s, cov).objective
        s2 = with_parameter(s, "budget_p", 2 * s.primary_spec.budget_M)
        cov2 = build_coverage(s2, all_paths(s2))
        try:
            doubled = enumerate_optimal(s2, cov2).objective
        except InstanceTooLarge:
            continue
        assert doubled <= base + 1e-12
        assert solve_bnb(s2, cov2, EXACT).objective == pytest.approx(doubled, abs=1e-6)


def test_child_bounds_monotone():
    for s, _, cov in instances(32, 5):
        seen = {}
        parents = {}

        def trace(rec):
            seen[rec.node_id] = rec.bound
            parents[rec.node_id] = rec.node.parent_id

        solve_bnb(s, cov, EXACT, trace=trace)
        for nid, pid in parents.items():
            if pid is not None and pid in seen:
                assert seen[nid] >= seen[pid] - 1e-12


def test_node_limit_status():
    s, _, cov = max(instances(33, 8), key=lambda t: len(t[2].candidates_P) + len(t[2].candidates_S))
    res = solve_bnb(s, cov, SolveOptions(node_limit=1, oa_rounds=0, gap_tolerance=1e-12))
    if res.status == "NodeLimit":
        assert res.nodes_explored == 1
        assert res.lower_bound <= res.objective
        assert constraint_violations(s, cov, res.placement) == []


def test_parallel_matches_serial():
    for s, _, cov in instances(34, 5):
        a = solve_bnb(s, cov, SolveOptions(parallel_nodes=1))
        b = solve_bnb(s, cov, SolveOptions(parallel_nodes=4))
        assert a == b


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(gap_tolerance=0)
    with pytest.raises(ValueError):
        SolveOptions(mccormick_partitions=0)
