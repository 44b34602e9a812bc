import numpy as np
import pytest

from actionscale.errors import Infeasible, NotPositiveDefinite
from actionscale.qp import QpProblem, least_squares, nnls, solve_qp, spd_solve


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def textbook_normal_equations(a, y):
    """Brute-force normal equations via explicit inverse (oracle)."""
    gram = np.zeros((a.shape[1], a.shape[1]))
    rhs = np.zeros(a.shape[1])
    for i in range(a.shape[1]):
        rhs[i] = sum(a[k, i] * y[k] for k in range(a.shape[0]))
        for j in range(a.shape[1]):
            gram[i, j] = sum(a[k, i] * a[k, j] for k in range(a.shape[0]))
    return np.linalg.inv(gram) @ rhs


def dykstra_project(x, a_eq, b_eq, nonneg_mask, iters=200):
    """Projection onto {A_eq x = b_eq} intersect {x_i >= 0 on mask}."""
    if a_eq.shape[0]:
        pinv = np.linalg.pinv(a_eq)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(iters):
        y = x + p
        if a_eq.shape[0]:
            y = y - pinv @ (a_eq @ y - b_eq)
        p = (x + p) - y
        z = y + q
        znew = z.copy()
        znew[nonneg_mask] = np.maximum(znew[nonneg_mask], 0.0)
        q = z - znew
        x = znew
    return x


def projected_gradient_qp(h, f, a_eq, b_eq, nonneg_mask, iters=40000, tol=1e-10):
    """Projected-gradient oracle for strictly convex QPs."""
    n = len(f)
    lip = np.linalg.eigvalsh(h).max()
    step = 1.0 / lip
    x = dykstra_project(np.zeros(n), a_eq, b_eq, nonneg_mask)
    for _ in range(iters):
        g = h @ x + f
        x_new = dykstra_project(x - step * g, a_eq, b_eq, nonneg_mask)
        if np.abs(x_new - x).max() < tol:
            return x_new
        x = x_new
    return x


def enumerate_active_sets(h, f, a_eq, b_eq, nonneg_idx):
    """Exhaustive oracle: try every subset of x_i = 0 pins, keep the best
    KKT-consistent point. Only sane for len(nonneg_idx) <= ~12."""
    n = len(f)
    best, best_obj = None, np.inf
    for mask in range(1 << len(nonneg_idx)):
        pinned = [nonneg_idx[j] for j in range(len(nonneg_idx)) if mask >> j & 1]
        rows = [a_eq] if a_eq.shape[0] else []
        for i in pinned:
            e = np.zeros(n)
            e[i] = -1.0  # constraint -x_i <= 0, multiplier must be >= 0
            rows.append(e[None, :])
        a_act = np.vstack(rows) if rows else np.zeros((0, n))
        b_act = np.concatenate([b_eq] + [np.zeros(1) for _ in pinned]) \
            if rows else np.zeros(0)
        kkt = np.block([[h, a_act.T],
                        [a_act, np.zeros((a_act.shape[0], a_act.shape[0]))]])
        rhs = np.concatenate([-f, b_act])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            continue
        x = sol[:n]
        lam = sol[n + a_eq.shape[0]:]
        if any(x[i] < -1e-9 for i in nonneg_idx):
            continue
        if any(l < -1e-9 for l in lam):
            continue
        obj = 0.5 * x @ h @ x + f @ x
        if obj < best_obj - 1e-12:
            best, best_obj = x, obj
    return best


def random_strict_qp(rng, n, n_eq):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    h = q @ np.diag(rng.uniform(1.0, 10.0, n)) @ q.T
    f = rng.standard_normal(n)
    a_eq = rng.standard_normal((n_eq, n))
    x_feas = rng.uniform(0.1, 1.0, n)  # strictly positive, so system is feasible
    b_eq = a_eq @ x_feas
    return h, f, a_eq, b_eq


# ---------------------------------------------------------------------------
# spd_solve / least_squares
# ---------------------------------------------------------------------------

class TestSpdSolve:
    def test_identity(self):
        rhs = np.array([3.0, -1.0, 2.0])
        assert np.allclose(spd_solve(np.eye(3), rhs), rhs)

    def test_hand_inverted_2x2(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        x = spd_solve(m, np.array([1.0, 2.0]))
        assert np.allclose(x, [-1.0 / 8.0, 3.0 / 4.0], atol=1e-12)

    def test_singular_raises(self):
        m = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(NotPositiveDefinite):
            spd_solve(m, np.array([1.0, 1.0]))

    def test_residual_bound(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((40, 40))
        m = a @ a.T + 40 * np.eye(40)
        rhs = rng.standard_normal(40)
        x = spd_solve(m, rhs)
        res = np.linalg.norm(m @ x - rhs)
        bound = 1e-8 * (np.linalg.norm(m) * np.linalg.norm(x) + np.linalg.norm(rhs))
        assert res <= bound


class TestLeastSquares:
    def test_column_of_ones_gives_mean(self):
        a = np.ones((3, 1))
        x, _ = least_squares(a, np.array([1.0, 2.0, 3.0]))
        assert x[0] == pytest.approx(2.0)

    def test_square_system_matches_spd_solve(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        y = rng.standard_normal(4)
        x, _ = least_squares(a, y)
        x_direct = spd_solve(a.T @ a, a.T @ y)
        assert np.allclose(x, x_direct, atol=1e-10)

    def test_matches_textbook_oracle(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((50, 4))
        y = rng.standard_normal(50)
        x, gram = least_squares(a, y)
        assert np.allclose(x, textbook_normal_equations(a, y), atol=1e-9)
        assert np.allclose(gram, a.T @ a)

    def test_dependent_columns_raise(self):
        a = np.ones((10, 2))
        with pytest.raises(NotPositiveDefinite):
            least_squares(a, np.arange(10.0))


# ---------------------------------------------------------------------------
# solve_qp
# ---------------------------------------------------------------------------

class TestSolveQp:
    def test_equality_pins_solution(self):
        prob = QpProblem(h=np.array([[2.0]]), f=np.zeros(1),
                         a_eq=np.array([[1.0]]), b_eq=np.array([1.0]))
        x, active = solve_qp(prob)
        assert x[0] == pytest.approx(1.0, abs=1e-10)
        assert active == []

    def test_clipped_unconstrained_optimum(self):
        # min (x-2)^2 s.t. x <= 1
        prob = QpProblem(h=np.array([[2.0]]), f=np.array([-4.0]),
                         a_in=np.array([[1.0]]), b_in=np.array([1.0]))
        x, active = solve_qp(prob)
        assert x[0] == pytest.approx(1.0, abs=1e-10)
        assert active == [0]

    def test_matches_projected_gradient_oracle(self):
        rng = np.random.default_rng(42)
        n, n_eq = 6, 2
        for _ in range(20):
            h, f, a_eq, b_eq = random_strict_qp(rng, n, n_eq)
            prob = QpProblem(h=h, f=f, a_eq=a_eq, b_eq=b_eq,
                             a_in=-np.eye(n), b_in=np.zeros(n))
            x, _ = solve_qp(prob)
            x_pg = projected_gradient_qp(h, f, a_eq, b_eq,
                                         np.ones(n, dtype=bool))
            assert np.abs(x - x_pg).max() < 1e-6

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(43)
        n, n_eq = 6, 2
        for _ in range(30):
            h, f, a_eq, b_eq = random_strict_qp(rng, n, n_eq)
            prob = QpProblem(h=h, f=f, a_eq=a_eq, b_eq=b_eq,
                             a_in=-np.eye(n), b_in=np.zeros(n))
            x, _ = solve_qp(prob)
            x_enum = enumerate_active_sets(h, f, a_eq, b_eq, list(range(n)))
            assert x_enum is not None
            assert np.abs(x - x_enum).max() < 1e-6

    def test_kkt_residuals(self):
        rng = np.random.default_rng(44)
        h, f, a_eq, b_eq = random_strict_qp(rng, 8, 3)
        prob = QpProblem(h=h, f=f, a_eq=a_eq, b_eq=b_eq,
                         a_in=-np.eye(8), b_in=np.zeros(8))
        x, active = solve_qp(prob)
        assert np.abs(a_eq @ x - b_eq).max() < 1e-8
        assert x.min() > -1e-8
        # stationarity: grad must be a combination of active constraint rows
        rows = np.vstack([a_eq, -np.eye(8)[active]])
        lam, *_ = np.linalg.lstsq(rows.T, -(h @ x + f), rcond=None)
        assert np.abs(rows.T @ lam + h @ x + f).max() < 1e-7
        # complementary slackness
        slack = -x[active]
        assert np.abs(slack).max(initial=0.0) < 1e-8

    def test_local_optimality_probe(self):
        rng = np.random.default_rng(45)
        h, f, a_eq, b_eq = random_strict_qp(rng, 6, 2)
        prob = QpProblem(h=h, f=f, a_eq=a_eq, b_eq=b_eq,
                         a_in=-np.eye(6), b_in=np.zeros(6))
        x, _ = solve_qp(prob)
        obj = 0.5 * x @ h @ x + f @ x
        for i in range(6):
            for delta in (1e-4, -1e-4):
                x_pert = x.copy()
                x_pert[i] += delta
                x_pert = dykstra_project(x_pert, a_eq, b_eq, np.ones(6, bool))
                obj_pert = 0.5 * x_pert @ h @ x_pert + f @ x_pert
                assert obj_pert >= obj - 1e-9

    def test_infeasible_detected(self):
        prob = QpProblem(h=np.eye(1), f=np.zeros(1),
                         a_eq=np.array([[1.0]]), b_eq=np.array([-2.0]),
                         a_in=-np.eye(1), b_in=np.zeros(1))
        with pytest.raises(Infeasible):
            solve_qp(prob)


class TestNnls:
    def test_matches_solve_qp_and_enumeration(self):
        rng = np.random.default_rng(46)
        for n in (4, 6, 8):
            a = rng.standard_normal((30, n))
            y = rng.standard_normal(30)
            x_nnls = nnls(a, y)
            h, f = a.T @ a, -a.T @ y
            prob = QpProblem(h=h, f=f, a_in=-np.eye(n), b_in=np.zeros(n))
            x_qp, _ = solve_qp(prob)
            empty = np.zeros((0, n))
            x_enum = enumerate_active_sets(h, f, empty, np.zeros(0), list(range(n)))
            assert np.abs(x_nnls - x_enum).max() < 1e-8
            assert np.abs(x_qp - x_enum).max() < 1e-8

    def test_free_variables(self):
        rng = np.random.default_rng(47)
        a = rng.standard_normal((40, 5))
        truth = np.array([-2.0, 1.5, 0.0, 0.7, 0.0])
        y = a @ truth
        x = nnls(a, y, free=1)  # first coordinate unconstrained
        assert np.abs(x - truth).max() < 1e-8
