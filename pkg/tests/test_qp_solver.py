import json
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import linprog

from tube_dissip.qp_solver import (
    QpBuilder,
    QpProblem,
    QpSolution,
    QpStatus,
    solve,
    verify_kkt,
)

INF = float("inf")


def qp_1d_bound() -> QpProblem:
    # min x^2 s.t. x >= 1
    return QpProblem(H=[[2.0]], g=[0.0], lb=[1.0], ub=[INF])


class TestSolveBasics:
    def test_bound_constrained_scalar(self):
        sol = solve(qp_1d_bound())
        assert sol.status is QpStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(1.0, abs=1e-9)
        assert sol.objective == pytest.approx(1.0, abs=1e-9)

    def test_row_constrained_scalar(self):
        qp = QpProblem(H=[[2.0]], g=[0.0], Ain=[[-1.0]], bin=[-1.0])
        sol = solve(qp)
        assert sol.status is QpStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(1.0, abs=1e-9)

    def test_unconstrained_quadratic(self):
        sol = solve(QpProblem(H=[[2.0]], g=[-4.0], c0=3.0))
        assert sol.status is QpStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(2.0, abs=1e-9)
        assert sol.objective == pytest.approx(-1.0, abs=1e-9)

    def test_equality_constrained(self):
        # min x1^2 + x2^2 s.t. x1 + x2 = 2 -> (1, 1)
        qp = QpProblem(H=2 * np.eye(2), g=np.zeros(2), Aeq=[[1.0, 1.0]], beq=[2.0])
        sol = solve(qp)
        assert sol.status is QpStatus.OPTIMAL
        np.testing.assert_allclose(sol.x, [1.0, 1.0], atol=1e-9)
        assert sol.eq_multipliers[0] == pytest.approx(-2.0, abs=1e-7)

    def test_infeasible_detection(self):
        qp = QpProblem(H=np.zeros((1, 1)), g=[0.0], Ain=[[1.0], [-1.0]], bin=[0.0, -1.0])
        sol = solve(qp)
        assert sol.status is QpStatus.INFEASIBLE
        cert = sol.infeasibility_certificate
        mu = cert["ineq"]
        assert np.all(mu >= -1e-12)
        # Farkas: combined row is void while the combined bound is negative
        assert abs(mu @ np.array([[1.0], [-1.0]])) <= 1e-8
        assert mu @ np.array([0.0, -1.0]) < 0

    def test_unbounded_detection(self):
        qp = QpProblem(H=np.zeros((2, 2)), g=[0.0, -1.0], Ain=[[1.0, 0.0]], bin=[1.0], lb=[0.0, -INF])
        sol = solve(qp)
        assert sol.status is QpStatus.UNBOUNDED
        ray = sol.unbounded_ray
        assert ray is not None and ray[1] > 0

    def test_constant_row_infeasibility(self):
        builder = QpBuilder()
        builder.new_var()
        builder.add_row({}, 1.0, INF)  # 0 >= 1, no variables involved
        sol = solve(builder.build())
        assert sol.status is QpStatus.INFEASIBLE


class TestValidation:
    def test_asymmetric_hessian_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            QpProblem(H=[[1.0, 0.5], [0.0, 1.0]], g=[0.0, 0.0])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            QpProblem(H=np.eye(2), g=np.zeros(2), Ain=[[1.0]], bin=[0.0])

    def test_bounds_order_enforced(self):
        with pytest.raises(ValueError):
            QpProblem(H=np.eye(1), g=[0.0], lb=[1.0], ub=[0.0])

    def test_matrix_without_rhs_rejected(self):
        with pytest.raises(ValueError):
            QpProblem(H=np.eye(1), g=[0.0], Aeq=[[1.0]])


class TestCertificates:
    def test_verify_kkt_on_solution(self):
        sol = solve(qp_1d_bound())
        assert verify_kkt(qp_1d_bound(), sol, 1e-6)

    def test_verify_kkt_rejects_perturbed_primal(self):
        qp = qp_1d_bound()
        sol = solve(qp)
        wrong = replace(sol, x=sol.x + 1e-3)
        assert not verify_kkt(qp, wrong, 1e-10)

    def test_verify_kkt_unconstrained_origin(self):
        qp = QpProblem(H=[[2.0]], g=[0.0])
        sol = solve(qp)
        assert sol.x[0] == pytest.approx(0.0, abs=1e-12)
        assert verify_kkt(qp, sol, 1e-12)

    def test_verify_kkt_requires_optimal_status(self):
        with pytest.raises(ValueError):
            verify_kkt(qp_1d_bound(), QpSolution(status=QpStatus.INFEASIBLE), 1e-8)


def random_qp(rng, n=6, m=8, strictly_convex=True) -> QpProblem:
    M = rng.normal(size=(n, n))
    H = M.T @ M + (1.0 if strictly_convex else 0.0) * np.eye(n)
    H = 0.5 * (H + H.T)
    g = rng.normal(size=n)
    Ain = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    bin_ = Ain @ x0 + rng.uniform(0.1, 1.0, size=m)  # x0 strictly feasible
    return QpProblem(H=H, g=g, Ain=Ain, bin=bin_, lb=np.full(n, -10.0), ub=np.full(n, 10.0))


class TestRandomProblems:
    def test_random_strictly_convex_soundness(self, rng):
        for _ in range(40):
            qp = random_qp(rng)
            sol = solve(qp)
            assert sol.status is QpStatus.OPTIMAL
            assert verify_kkt(qp, sol, 1e-6)
            assert sol.kkt_residual <= 1e-6

    def test_random_lps_match_reference_solver(self, rng):
        for _ in range(30):
            n, m = 4, 7
            g = rng.normal(size=n)
            Ain = rng.normal(size=(m, n))
            bin_ = Ain @ rng.normal(size=n) + rng.uniform(0.1, 1.0, size=m)
            qp = QpProblem(H=np.zeros((n, n)), g=g, Ain=Ain, bin=bin_,
                           lb=np.full(n, -5.0), ub=np.full(n, 5.0))
            ref = linprog(g, A_ub=Ain, b_ub=bin_, bounds=[(-5, 5)] * n, method="highs")
            sol = solve(qp)
            assert ref.status == 0 and sol.status is QpStatus.OPTIMAL
            assert sol.objective == pytest.approx(ref.fun, abs=1e-6)

    def test_starting_point_independence(self, rng):
        for _ in range(10):
            qp = random_qp(rng)
            a = solve(qp)
            b = solve(qp, x0=rng.normal(size=qp.n) * 5)
            assert np.max(np.abs(a.x - b.x)) <= 1e-6

    def test_objective_formula(self, rng):
        for _ in range(10):
            qp = random_qp(rng)
            qp = replace_c0(qp, 1.75)
            sol = solve(qp)
            explicit = 0.5 * sol.x @ qp.H @ sol.x + qp.g @ sol.x + qp.c0
            assert sol.objective == pytest.approx(explicit, abs=1e-9)

    def test_infeasible_stays_infeasible_under_tightening(self, rng):
        qp = QpProblem(H=np.zeros((1, 1)), g=[0.0], Ain=[[1.0], [-1.0]], bin=[0.0, -1.0])
        for delta in (0.0, 0.5, 2.0):
            tightened = QpProblem(
                H=qp.H, g=qp.g, Ain=qp.Ain, bin=np.asarray(qp.bin) - delta
            )
            assert solve(tightened).status is QpStatus.INFEASIBLE


def replace_c0(qp: QpProblem, c0: float) -> QpProblem:
    return QpProblem(H=qp.H, g=qp.g, c0=c0, Aeq=qp.Aeq, beq=qp.beq,
                     Ain=qp.Ain, bin=qp.bin, lb=qp.lb, ub=qp.ub)


class TestDegenerate:
    def test_semidefinite_flat_direction(self):
        # x2 enters neither the cost nor any constraint; any value is optimal
        qp = QpProblem(
            H=np.diag([2.0, 0.0]),
            g=[-2.0, 0.0],
            Ain=[[1.0, 0.0]],
            bin=[5.0],
        )
        sol = solve(qp)
        assert sol.status is QpStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(1.0, abs=1e-8)

    def test_degenerate_equality_pinning(self):
        # equality-pinned variable plus a redundant pair of active rows
        builder = QpBuilder()
        x = builder.new_var()
        y = builder.new_var()
        builder.add_row({x: 1.0}, 2.0, 2.0)
        builder.add_row({x: 1.0, y: 1.0}, -INF, 3.0)
        builder.add_row({y: 1.0}, -INF, 1.0)
        builder.add_quad(y, 1.0)
        builder.add_lin(y, -4.0)  # pushes y up against both rows at once
        sol = solve(builder.build())
        assert sol.status is QpStatus.OPTIMAL
        assert sol.x[x] == pytest.approx(2.0, abs=1e-8)
        assert sol.x[y] == pytest.approx(1.0, abs=1e-8)


class TestBuilder:
    def test_bound_merging_tightens(self):
        builder = QpBuilder()
        x = builder.new_var(-10.0, 10.0)
        builder.bound(x, -1.0, INF)
        builder.bound(x, -INF, 2.0)
        builder.add_lin(x, 1.0)
        sol = solve(builder.build())
        assert sol.x[x] == pytest.approx(-1.0, abs=1e-9)

    def test_conflicting_bounds_become_certified_infeasibility(self):
        builder = QpBuilder()
        x = builder.new_var()
        builder.bound(x, 1.0, INF)
        builder.bound(x, -INF, 0.0)
        sol = solve(builder.build())
        assert sol.status is QpStatus.INFEASIBLE

    def test_two_sided_row_splits(self):
        builder = QpBuilder()
        x = builder.new_var()
        y = builder.new_var()
        builder.add_row({x: 1.0, y: 1.0}, -1.0, 1.0)
        qp = builder.build()
        assert qp.Ain.shape == (2, 2)
        assert qp.Aeq is None

    def test_equal_bounds_become_equality_row(self):
        builder = QpBuilder()
        x = builder.new_var()
        y = builder.new_var()
        builder.add_row({x: 1.0, y: -1.0}, 0.5, 0.5)
        qp = builder.build()
        assert qp.Aeq.shape == (1, 2)


def test_debug_dump_round_trips_matrices(rng):
    qp = random_qp(rng, n=3, m=4)
    obj = json.loads(json.dumps(qp.to_json_dict()))
    np.testing.assert_allclose(np.array(obj["H"]), qp.H)
    np.testing.assert_allclose(np.array(obj["Ain"]), qp.Ain)
    np.testing.assert_allclose(np.array(obj["g"]), qp.g)
    assert obj["Aeq"] is None
