import json
import math

import numpy as np
import pytest

from conftest import random_confidence_set
from rldp.core import Alphabet, JointDistribution
from rldp.errors import DimensionCapExceeded, Infeasible
from rldp.infotheory import mu
from rldp.polyopt import (
    HPolytope,
    Objective,
    box_simplex,
    dump_polytope,
    enumerate_vertices,
    gamma_inequalities,
    gamma_polytope,
    mu1,
    mu2,
    polyopt_build,
    solve_assignment_lp,
    solve_lp,
)
from rldp.polyopt.gamma import cone_inequalities
from rldp.protocols import build_srr, optimize_protocol, utility
from rldp.randstats import SeededRng
from rldp.uncertainty import ConfidenceSet, conditional_minima, sample_members

LN3 = math.log(3.0)


def _sorted(V):
    V = np.asarray(V)
    return V[np.lexsort(V.T[::-1])]


# -- vertex enumeration -------------------------------------------------------


def test_unit_square_has_four_vertices():
    sq = HPolytope(2, np.vstack([-np.eye(2), np.eye(2)]), [0, 0, -1, -1])
    V = enumerate_vertices(sq).vertices
    assert np.allclose(_sorted(V), [[0, 0], [0, 1], [1, 0], [1, 1]])


def test_simplex_vertices_are_unit_vectors():
    V = enumerate_vertices(HPolytope(3, -np.eye(3), np.zeros(3), np.ones((1, 3)), [-1.0])).vertices
    assert np.allclose(_sorted(V), _sorted(np.eye(3)))


def test_box_simplex_vertices():
    V = enumerate_vertices(box_simplex(np.array([0.1, 0.2, 0.3]), np.array([0.5, 0.5, 0.5]))).vertices
    assert np.allclose(V.sum(axis=1), 1.0)
    assert np.all(V >= np.array([0.1, 0.2, 0.3]) - 1e-12) and np.all(V <= 0.5 + 1e-12)
    # two coordinates at a bound, the third fixed by the sum: five feasible choices
    assert len(V) == 5


def test_infeasible_polytope_raises():
    with pytest.raises(Infeasible):
        enumerate_vertices(HPolytope(2, -np.eye(2), np.zeros(2), np.ones((1, 2)), [1.0]))


def test_dimension_cap():
    F = random_confidence_set(4, 4, 1000, SeededRng(1))
    with pytest.raises(DimensionCapExceeded, match="12"):
        polyopt_build(F, 1.0)


def test_dump_polytope_round_trips_through_json():
    poly = box_simplex(np.zeros(2), np.ones(2))
    obj = json.loads(dump_polytope(poly, enumerate_vertices(poly)))
    assert obj["dim"] == 2
    assert len(obj["inequalities"]) == 4 and len(obj["equalities"]) == 1
    assert _sorted(obj["vertices"]).tolist() == [[0.0, 1.0], [1.0, 0.0]]


# -- the admissible cone --------------------------------------------------------


def test_gamma_two_by_one_is_grr():
    F = ConfidenceSet(JointDistribution.from_grid([[0.5], [0.5]]), 0.0)
    poly = gamma_inequalities(F, LN3)
    assert poly.n_inequalities == 2 * 1 * 1 + 2
    rows = cone_inequalities(conditional_minima(F), LN3)
    assert np.allclose(rows, [[1, -3], [-3, 1]])
    V = enumerate_vertices(poly).vertices
    assert np.allclose(_sorted(V), [[0.25, 0.75], [0.75, 0.25]])


@pytest.mark.parametrize("a1,a2", [(2, 2), (3, 2), (3, 3)])
def test_gamma_constraint_count(a1, a2):
    F = random_confidence_set(a1, a2, 500, SeededRng(a1 * 10 + a2))
    poly = gamma_inequalities(F, 1.0)
    assert poly.n_inequalities == a1 * (a1 - 1) * a2 ** 2 + a1 * a2
    assert poly.eq_normals.shape[0] == 1


def test_zero_minima_reduce_to_maximal_condition():
    pmin = np.zeros((2, 2))
    eps = 0.8
    rows = cone_inequalities(pmin, eps)
    e = math.exp(eps)
    # each row reads T[s1, u1] - e^eps T[s2, u2] <= 0
    for r in rows:
        assert sorted(np.round(r, 12).tolist()) == sorted(np.round([1.0, -e, 0.0, 0.0], 12).tolist())


def test_zero_radius_uses_center_conditionals():
    P = JointDistribution.from_grid([[0.1, 0.3], [0.2, 0.4]])
    F = ConfidenceSet(P, 0.0)
    assert np.allclose(conditional_minima(F), [[0.25, 0.75], [1 / 3, 2 / 3]])
    # a column meeting the exact ratio condition at P with equality lies on the boundary
    T = np.array([1.0, 1.0, 1.0, 1.0])
    assert gamma_inequalities(F, 0.0).violation(T[None, :] / 4)[0] <= 1e-12


@pytest.mark.parametrize("eps", [0.5, 2.0, 8.0])
def test_vertices_satisfy_constraints_and_are_distinct(eps):
    F = random_confidence_set(3, 3, 1000, SeededRng(int(eps * 10)))
    poly = gamma_inequalities(F, eps)
    V = enumerate_vertices(poly).vertices
    assert poly.violation(V).max() <= 1e-9
    gaps = np.abs(V[:, None, :] - V[None, :, :]).max(axis=2) + np.eye(len(V))
    assert gaps.min() > 1e-9


def test_vertices_are_extreme_points():
    F = random_confidence_set(2, 3, 300, SeededRng(4))
    poly = gamma_inequalities(F, 1.5)
    V = enumerate_vertices(poly).vertices
    A = np.vstack([poly.normals, poly.eq_normals])
    b = np.concatenate([poly.offsets, poly.eq_offsets])
    for v in V:
        active = np.abs(A @ v + b) <= 1e-9
        assert np.linalg.matrix_rank(A[active]) == poly.dim


def test_pmin_rounding_is_conservative():
    # vertices of the rounded cone satisfy the unrounded constraints
    pmin = np.array([[0.3, 0.2], [0.1 + 1e-13, 0.6]])
    for eps in (0.3, 1.0, 1 / 3):
        V = enumerate_vertices(gamma_polytope(pmin, eps)).vertices
        assert (V @ cone_inequalities(pmin, eps).T).max() <= 1e-12


# -- utility functionals ------------------------------------------------------


def test_mu_of_all_ones_is_zero(conf3):
    v = np.ones(9)
    assert mu1(v, conf3.center.mass) == pytest.approx(0.0, abs=1e-15)
    assert mu2(v, conf3) == pytest.approx(0.0, abs=1e-15)


def test_mu2_never_exceeds_mu1(conf3):
    rng = SeededRng(8)
    for _ in range(50):
        v = rng.uniform(9)
        assert mu2(v, conf3) <= mu1(v, conf3.center.mass) + 1e-12


def test_mu2_matches_grid_search():
    # with two cells F is an interval, so the box cover is exact
    F = ConfidenceSet(JointDistribution.from_grid([[0.3], [0.7]]), 0.05)
    grid = np.linspace(0, 1, 200_001)
    P = np.column_stack([grid, 1 - grid])
    inside = P[np.array([F.contains(p) for p in P])]
    rng = SeededRng(12)
    for _ in range(10):
        v = rng.uniform(2)
        best = min(mu(v, p) for p in inside[::20])
        assert mu2(v, F) == pytest.approx(best, abs=2e-3)
        assert mu2(v, F) <= best + 1e-12


# -- linear programming -------------------------------------------------------


def test_lp_basis_vectors():
    theta = solve_assignment_lp(np.eye(2), [1.0, 1.0])
    assert np.allclose(theta, [1.0, 1.0])


def test_lp_recovers_grr():
    V = np.array([[0.75, 0.25], [0.25, 0.75]])
    center = np.array([0.5, 0.5])
    theta = solve_assignment_lp(V, [mu1(v, center) for v in V])
    assert np.allclose(theta, [1.0, 1.0])


def test_lp_zero_objective_returns_basic_solution():
    V = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    theta = solve_assignment_lp(V, np.zeros(3))
    assert np.allclose(V.T @ theta, 1.0)
    assert np.count_nonzero(theta > 1e-12) <= 2


def test_lp_reduced_costs_are_dual_feasible():
    rng = SeededRng(21)
    A = rng.uniform(12).reshape(3, 4) + 0.1
    b = A @ np.ones(4)
    c = rng.uniform(4)
    res = solve_lp(c, A, b)
    assert np.all(res.reduced_costs <= 1e-9)
    assert res.objective == pytest.approx(float(res.duals @ b), abs=1e-9)


def test_lp_infeasible():
    with pytest.raises(Infeasible):
        solve_lp(np.ones(2), np.array([[1.0, 1.0]]), np.array([-1.0]))


# -- assembled protocols --------------------------------------------------------


def test_polyopt_two_by_one_reduces_to_grr():
    F = ConfidenceSet(JointDistribution.from_grid([[0.5], [0.5]]), 0.0)
    spec, lower = polyopt_build(F, LN3)
    assert lower is None
    assert np.allclose(_sorted(spec.channel.matrix), [[0.25, 0.75], [0.75, 0.25]])


@pytest.mark.parametrize("eps", [0.5, 2.0, 8.0])
def test_polyopt_rows_lie_in_gamma(conf3, eps):
    spec, _ = polyopt_build(conf3, eps)
    poly = gamma_inequalities(conf3, eps)
    rows = spec.channel.matrix
    assert rows.shape[0] <= conf3.alphabet.a
    assert poly.violation(rows / rows.sum(axis=1, keepdims=True)).max() <= 1e-9
    assert np.allclose(rows.sum(axis=0), 1.0)


def test_polyopt_beats_parametric_protocols(conf3):
    for eps in (0.5, 2.0):
        best = utility(polyopt_build(conf3, eps)[0], conf3.center)
        for m in ("ir", "grr-cr"):
            assert best >= utility(optimize_protocol(conf3, m, eps)) - 1e-9


def test_huge_radius_approaches_srr():
    rng = SeededRng(0)
    for _ in range(3):
        P = JointDistribution.from_grid(rng.dirichlet_half(4).reshape(2, 2))
        F = ConfidenceSet(P, 1e6)
        for eps in (0.5, 2.0, 4.0, 6.0):
            poly_u = utility(polyopt_build(F, eps)[0], P)
            srr_u = utility(build_srr(P.alphabet, eps), P)
            assert poly_u >= srr_u - 1e-9
            if eps >= 4.0:
                assert poly_u == pytest.approx(srr_u, abs=1e-5)


def test_robust_bound_holds_on_samples():
    F = random_confidence_set(3, 3, 1000, SeededRng(31))
    spec, L = polyopt_build(F, 2.0, Objective.ROBUST)
    assert L is not None and spec.params["lower_bound"] == L
    members = sample_members(F, SeededRng(32), 50, np.arange(50) % 5 != 0)
    for p in members:
        assert utility(spec, p) >= L - 1e-6


def test_objective_parse():
    assert Objective.parse("ROBUST") is Objective.ROBUST
    with pytest.raises(ValueError):
        Objective.parse("nope")
    assert Alphabet(2, 2).a == 4
