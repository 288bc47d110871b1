import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from cavedamage.solvers import (
    BoxConstraints,
    KktReport,
    LinearSolveError,
    QuadraticObjective,
    kkt_measures,
    minimize_box,
    solve_spd,
)
from oracles import box_qp_bvls, box_qp_enumerate, qp_value, quadratic_form, random_isotropic_subproblem


def random_spd(rng, n, cond=1e3):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (q * np.geomspace(1, cond, n)) @ q.T


# ---------------------------------------------------------------------------
# linear solver
# ---------------------------------------------------------------------------


def test_identity_and_zero_rhs():
    b = np.arange(1.0, 6.0)
    np.testing.assert_array_equal(solve_spd(sp.eye(5), b), b)
    np.testing.assert_array_equal(solve_spd(sp.eye(5), np.zeros(5)), 0.0)
    assert solve_spd(sp.csr_matrix((0, 0)), np.zeros(0)).shape == (0,)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_random_spd_matches_dense(method):
    rng = np.random.default_rng(0)
    K = random_spd(rng, 50)
    b = rng.normal(size=50)
    x = solve_spd(sp.csr_matrix(K), b, tol=1e-12, method=method)
    np.testing.assert_allclose(x, np.linalg.solve(K, b), rtol=1e-9, atol=1e-9 * np.abs(x).max())
    assert np.linalg.norm(K @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_solver_errors():
    with pytest.raises(LinearSolveError):
        solve_spd(sp.diags([1.0, -1.0]), np.ones(2))
    with pytest.raises(LinearSolveError) as info:
        solve_spd(sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]])), np.array([1.0, 0.0]))
    assert info.value.residual > 0
    with pytest.raises(ValueError):
        solve_spd(sp.eye(2), np.ones(2), method="qr")


# ---------------------------------------------------------------------------
# box-constrained minimizer
# ---------------------------------------------------------------------------


def test_box_validation():
    with pytest.raises(ValueError):
        BoxConstraints(np.ones(3), np.zeros(3))
    with pytest.raises(ValueError):
        BoxConstraints.damage(np.array([0.0, 1.5]))
    box = BoxConstraints.damage(np.array([0.2, 0.0]))
    np.testing.assert_array_equal(box.upper, 1.0)
    np.testing.assert_array_equal(box.project(np.array([-1.0, 2.0])), [0.2, 1.0])


def test_separable_quadratic_interior_minimum():
    c = np.array([0.1, 0.4, 0.9])
    f = QuadraticObjective(2 * sp.eye(3), -2 * c, c @ c)
    x, rep = minimize_box(f, BoxConstraints(np.zeros(3), np.ones(3)))
    np.testing.assert_allclose(x, c, atol=1e-12)
    assert rep.converged and rep.residual <= 1e-6


def test_clamping_at_lower_bound():
    f = QuadraticObjective(2 * sp.eye(2), np.array([4.0, -1.0]))
    lo = np.array([0.3, 0.0])
    x, rep = minimize_box(f, BoxConstraints(lo, np.ones(2)), x0=np.array([0.9, 0.9]))
    np.testing.assert_allclose(x, [0.3, 0.5])
    assert x[0] == lo[0]  # exactly on the bound, not within a tolerance
    assert rep.converged


def test_pinned_variables_stay_put():
    f = QuadraticObjective(2 * sp.eye(2), np.array([-10.0, -10.0]))
    x, rep = minimize_box(f, BoxConstraints(np.array([0.4, 0.0]), np.array([0.4, 1.0])))
    np.testing.assert_array_equal(x, [0.4, 1.0])
    assert rep.converged


class Recorder:
    """Wraps an objective and keeps every point it is asked to evaluate."""

    def __init__(self, f):
        self.f = f
        self.points = []

    def value_and_grad(self, x):
        self.points.append(np.array(x))
        return self.f.value_and_grad(x)

    def hessian(self, x, convexify=False):
        return self.f.hessian(x, convexify)


class DoubleWell:
    """Nonconvex separable quartic plus a coupling term."""

    def __init__(self, n, rng):
        self.c = rng.uniform(-1, 1, n)
        A = rng.normal(size=(n, n))
        self.C = sp.csr_matrix(0.1 * (A @ A.T))

    def value_and_grad(self, x):
        s = x - 0.5
        v = float(np.sum(s**4 - 0.2 * s**2 + self.c * x)) + 0.5 * float(x @ (self.C @ x))
        return v, 4 * s**3 - 0.4 * s + self.c + self.C @ x

    def hessian(self, x, convexify=False):
        d = 12 * (x - 0.5) ** 2 - 0.4
        if convexify:
            d = np.maximum(d, 0.0)
        return (sp.diags(d) + self.C).tocsr()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_feasible_iterates_and_monotone_descent(seed):
    rng = np.random.default_rng(seed)
    n = 12
    f = Recorder(DoubleWell(n, rng))
    lo = rng.uniform(0, 0.5, n)
    box = BoxConstraints(lo, np.ones(n))
    x0 = rng.uniform(0, 1, n)
    x, rep = minimize_box(f, box, x0, tol=1e-6)
    for p in f.points:
        assert np.all(p >= box.lower) and np.all(p <= box.upper)
    assert np.all(np.diff(rep.history) <= 0.0)
    assert f.f.value_and_grad(x)[0] <= f.f.value_and_grad(box.project(x0))[0]
    assert rep.converged
    # the reported maxima are reproducible from the returned point
    interior, viol = kkt_measures(x, f.f.value_and_grad(x)[1], box)
    assert interior == pytest.approx(rep.max_interior_gradient, abs=1e-12)
    assert viol == pytest.approx(rep.max_bound_violation, abs=1e-12)


def test_kkt_measures_signs():
    box = BoxConstraints(np.zeros(3), np.ones(3))
    x = np.array([0.0, 0.5, 1.0])
    interior, viol = kkt_measures(x, np.array([1.0, 0.2, -1.0]), box)
    assert interior == pytest.approx(0.2) and viol == 0.0
    interior, viol = kkt_measures(x, np.array([-0.3, 0.0, 0.7]), box)
    assert interior == 0.0 and viol == pytest.approx(0.7)
    assert KktReport(0.1, 0.3).residual == 0.3


def test_unconverged_reports_best_iterate():
    f = DoubleWell(20, np.random.default_rng(1))
    box = BoxConstraints(np.zeros(20), np.ones(20))
    x, rep = minimize_box(f, box, np.full(20, 0.5), tol=1e-14, max_iter=1)
    assert not rep.converged and rep.iterations == 1
    assert f.value_and_grad(x)[0] < f.value_and_grad(np.full(20, 0.5))[0]


def test_bvls_oracle_agrees_with_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(5):
        F = random_isotropic_subproblem(rng, cells=(2, 1))
        H, c, f0 = quadratic_form(F, F.n)
        xe = box_qp_enumerate(H, c, F.lower, F.upper)
        xb = box_qp_bvls(H, c, F.lower, F.upper)
        assert qp_value(H, c, f0, xb) == pytest.approx(qp_value(H, c, f0, xe), rel=1e-12)


def test_isotropic_subproblem_is_global_minimum():
    rng = np.random.default_rng(3)
    for _ in range(5):
        F = random_isotropic_subproblem(rng, cells=(6, 6))
        H, c, f0 = quadratic_form(F, F.n)
        x, rep = minimize_box(F, BoxConstraints(F.lower, F.upper), F.lower, 1e-9, 100, F.scale)
        ref = box_qp_bvls(H, c, F.lower, F.upper)
        assert rep.converged
        assert F.value(x) == pytest.approx(qp_value(H, c, f0, ref), rel=1e-10)
