"""Dense symmetric solves, least squares, and a small active-set QP solver.

Everything here is dense and small (tens to a few hundred variables): normal
equations for the sliding-window estimators and the two quadratic programs of
the jumping pipeline (nonnegative kernel weights; minimum-total-variation
launch signal).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import Infeasible, MaxIterations, NotPositiveDefinite

__all__ = ["QpProblem", "spd_solve", "least_squares", "solve_qp", "nnls"]

# Feasibility / optimality tolerance shared by the active-set loop.
KKT_TOL = 1e-8

COND_WARN = 1e10


def spd_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve m @ x = rhs for symmetric positive definite m via Cholesky.

    Raises NotPositiveDefinite on a non-positive pivot, which in the
    estimation pipeline signals rank deficiency (insufficient excitation).
    """
    m = np.asarray(m, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(m).max())):
        raise ValueError("matrix is not symmetric")
    try:
        cho = sla.cho_factor(m, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return sla.cho_solve(cho, rhs, check_finite=False)


def least_squares(a: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """argmin ||a x - y||^2 via the normal equations.

    Returns (x, gram) where gram = a^T a is kept for excitation diagnostics.
    Raises NotPositiveDefinite when the columns are linearly dependent.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise ValueError(f"need rows >= cols, got shape {a.shape}")
    gram = a.T @ a
    x = spd_solve(gram, a.T @ y)
    cond = np.linalg.cond(gram)
    if cond > COND_WARN:
        warnings.warn(f"normal equations poorly conditioned (cond={cond:.2e})",
                      RuntimeWarning, stacklevel=2)
    return x, gram


@dataclass
class QpProblem:
    """min 0.5 x^T H x + f^T x  s.t.  A_eq x = b_eq, A_in x <= b_in.

    H must be symmetric and positive semidefinite on the null space of the
    equality constraints (checked implicitly at solve time via the reduced
    Cholesky factorizations).
    """

    h: np.ndarray
    f: np.ndarray
    a_eq: np.ndarray = field(default=None)
    b_eq: np.ndarray = field(default=None)
    a_in: np.ndarray = field(default=None)
    b_in: np.ndarray = field(default=None)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        n = len(self.f)
        if self.h.shape != (n, n):
            raise ValueError("H shape inconsistent with f")
        scale = max(1.0, np.abs(self.h).max())
        if not np.allclose(self.h, self.h.T, rtol=0.0, atol=1e-10 * scale):
            raise ValueError("H is not symmetric")
        self.h = 0.5 * (self.h + self.h.T)
        if self.a_eq is None:
            self.a_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        else:
            self.a_eq = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
            self.b_eq = np.atleast_1d(np.asarray(self.b_eq, dtype=float))
        if self.a_in is None:
            self.a_in = np.zeros((0, n))
            self.b_in = np.zeros(0)
        else:
            self.a_in = np.atleast_2d(np.asarray(self.a_in, dtype=float))
            self.b_in = np.atleast_1d(np.asarray(self.b_in, dtype=float))

    @property
    def n(self) -> int:
        return len(self.f)


def nnls(a: np.ndarray, y: np.ndarray, free: int = 0) -> np.ndarray:
    """min ||a x - y||^2 with x_i >= 0 for i >= free.

    Lawson-Hanson style active-set; the leading ``free`` variables are
    unconstrained. Ties when choosing the entering variable break toward the
    lowest index for determinism.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    n = a.shape[1]
    passive = np.zeros(n, dtype=bool)
    passive[:free] = True
    x = np.zeros(n)
    if free:
        sol, *_ = np.linalg.lstsq(a[:, :free], y, rcond=None)
        x[:free] = sol
    scale = max(1.0, np.abs(y).max()) * max(1.0, np.abs(a).max())
    max_iter = 3 * n + 30
    for _ in range(max_iter):
        grad = a.T @ (y - a @ x)
        grad[passive] = -np.inf
        if not np.any(grad > KKT_TOL * scale):
            return x
        passive[int(np.argmax(grad))] = True  # argmax ties break low-index
        # inner loop: solve on the passive set, clip negatives back out
        for _ in range(max_iter):
            idx = np.flatnonzero(passive)
            sol, *_ = np.linalg.lstsq(a[:, idx], y, rcond=None)
            constrained = idx >= free
            bad = constrained & (sol < 0.0)
            if not np.any(bad):
                x = np.zeros(n)
                x[idx] = sol
                break
            # step toward sol until the first constrained coordinate hits zero
            alpha = (x[idx][bad] / (x[idx][bad] - sol[bad])).min()
            x_new = np.zeros(n)
            x_new[idx] = x[idx] + alpha * (sol - x[idx])
            x = x_new
            drop = idx[constrained & (x[idx] <= 1e-14)]
            passive[drop] = False
            x[drop] = 0.0
        else:
            raise MaxIterations("nnls inner loop stalled", last_x=x)
    raise MaxIterations("nnls failed to converge", last_x=x)


def _null_space(a: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the null space of a (n columns)."""
    if a.shape[0] == 0:
        return np.eye(n)
    q, r = np.linalg.qr(a.T, mode="complete")
    diag = np.abs(np.diag(r)) if min(r.shape) else np.zeros(0)
    tol = max(a.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    return q[:, rank:]


def _step_in_working_set(h, grad, a_work, n):
    """Minimize the local quadratic on {p : a_work p = 0}.

    Returns (p, bounded). When the reduced Hessian is singular but the
    system is consistent, returns the least-squares step; when the reduced
    gradient has a zero-curvature descent component, returns that ray with
    bounded=False.
    """
    z = _null_space(a_work, n)
    if z.shape[1] == 0:
        return np.zeros(n), True
    hz = z.T @ h @ z
    gz = z.T @ grad
    try:
        pz = spd_solve(hz, -gz)
        return z @ pz, True
    except NotPositiveDefinite:
        pz, res, *_ = np.linalg.lstsq(hz, -gz, rcond=None)
        residual = hz @ pz + gz
        scale = max(1.0, np.abs(gz).max())
        if np.abs(residual).max() <= 1e-9 * scale:
            return z @ pz, True
        # descent ray along the zero-curvature directions
        w, v = np.linalg.eigh(hz)
        null_dirs = v[:, w < 1e-12 * max(1.0, w.max())]
        coeff = null_dirs.T @ gz
        ray = -null_dirs @ coeff
        return z @ ray, False


def solve_qp(prob: QpProblem, x0: np.ndarray | None = None,
             max_iter: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Primal active-set solve of a convex QP.

    Returns (x, active_set) where active_set lists the inequality rows that
    are active (binding) at the solution. Tie-breaking is lowest-index-first
    so repeated solves are bit-reproducible.
    """
    n = prob.n
    if x0 is None:
        x = _feasible_point(prob)
    else:
        x = np.asarray(x0, dtype=float).copy()
        _check_feasible(prob, x)
    n_in = prob.a_in.shape[0]
    # warm-start the working set with an independent subset of the
    # constraints active at x; any such subset is a valid start and saves
    # one iteration per eventually-active constraint
    if n_in:
        slack = prob.b_in - prob.a_in @ x
        active0 = np.flatnonzero(slack <= KKT_TOL * np.maximum(1.0, np.abs(prob.b_in)))
        working = _independent_subset(prob, active0)
    else:
        working = []
    if max_iter is None:
        max_iter = 20 * (n + n_in + prob.a_eq.shape[0]) + 100

    for _ in range(max_iter):
        a_work = np.vstack([prob.a_eq, prob.a_in[working]])
        grad = prob.h @ x + prob.f
        p, bounded = _step_in_working_set(prob.h, grad, a_work, n)
        if bounded and np.abs(p).max(initial=0.0) <= 1e-11 * max(1.0, np.abs(x).max()):
            # stationary in the working set: examine multipliers
            lam, *_ = np.linalg.lstsq(a_work.T, -grad, rcond=None)
            lam_in = lam[prob.a_eq.shape[0]:]
            tol_lam = KKT_TOL * max(1.0, np.abs(grad).max())
            if lam_in.size == 0 or lam_in.min() >= -tol_lam:
                return x, sorted(working)
            # drop every decisively negative multiplier in one round; the
            # one-at-a-time textbook rule costs an O(n^3) KKT solve per drop
            drops = np.flatnonzero(lam_in < -tol_lam)
            if drops.size == 0:
                drops = np.array([int(np.argmin(lam_in))])
            working = [w for j, w in enumerate(working) if j not in set(drops)]
            continue
        # step length limited by inactive inequality constraints
        alpha = 1.0 if bounded else np.inf
        blocker = None
        if n_in:
            direction = prob.a_in @ p
            room = prob.b_in - prob.a_in @ x
            movable = direction > KKT_TOL * max(1.0, np.abs(p).max())
            movable[working] = False
            idx = np.flatnonzero(movable)
            if idx.size:
                cand = room[idx] / direction[idx]
                best = cand.min()
                if best < alpha - 1e-14:
                    alpha = max(best, 0.0)
                    blocker = int(idx[cand <= best + 1e-14][0])  # lowest index
        if not np.isfinite(alpha):
            raise MaxIterations("objective unbounded in working set", last_x=x)
        x = x + alpha * p
        if blocker is not None:
            trial = np.vstack([prob.a_eq, prob.a_in[sorted(working + [blocker])]])
            if np.linalg.matrix_rank(trial) == trial.shape[0]:
                working.append(blocker)
    raise MaxIterations(f"active set did not converge in {max_iter} iterations",
                        last_x=x)


def _independent_subset(prob: QpProblem, candidates: np.ndarray) -> list[int]:
    """Maximal independent subset of inequality rows, relative to equalities."""
    if candidates.size == 0:
        return []
    z = _null_space(prob.a_eq, prob.n)
    if z.shape[1] == 0:
        return []
    proj = prob.a_in[candidates] @ z
    _, r, piv = sla.qr(proj.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return []
    rank = int(np.sum(diag > max(proj.shape) * np.finfo(float).eps * diag[0]))
    return sorted(int(candidates[j]) for j in piv[:rank])


def _check_feasible(prob: QpProblem, x: np.ndarray):
    if prob.a_eq.shape[0]:
        err = np.abs(prob.a_eq @ x - prob.b_eq).max()
        if err > 1e-7 * max(1.0, np.abs(prob.b_eq).max()):
            raise Infeasible(f"x0 violates equalities by {err:.2e}")
    if prob.a_in.shape[0]:
        err = (prob.a_in @ x - prob.b_in).max()
        if err > 1e-7 * max(1.0, np.abs(prob.b_in).max(initial=0.0)):
            raise Infeasible(f"x0 violates inequalities by {err:.2e}")


def _feasible_point(prob: QpProblem) -> np.ndarray:
    """Find any point satisfying the constraints.

    Slack formulation: A_eq x = b_eq and A_in x + s = b_in with s >= 0 is
    solved as one nonnegative least-squares problem over (x free, s >= 0)
    with unit-normalized rows; a nonzero minimum residual certifies
    infeasibility.
    """
    n = prob.n
    m_eq, m_in = prob.a_eq.shape[0], prob.a_in.shape[0]
    if m_eq == 0 and m_in == 0:
        return np.zeros(n)
    if m_in == 0:
        x_p, *_ = np.linalg.lstsq(prob.a_eq, prob.b_eq, rcond=None)
        if np.abs(prob.a_eq @ x_p - prob.b_eq).max() > 1e-8 * max(
                1.0, np.abs(prob.b_eq).max()):
            raise Infeasible("equality constraints are inconsistent")
        return x_p
    if m_eq == 0 and (prob.b_in >= 0.0).all():
        return np.zeros(n)
    if (m_in == n and prob.b_in.max(initial=0.0) == 0.0
            and np.array_equal(prob.a_in, -np.eye(n))):
        # pure nonnegativity: feasibility is plain NNLS on the equalities
        norms = np.maximum(np.linalg.norm(prob.a_eq, axis=1), 1e-300)
        x = nnls(prob.a_eq / norms[:, None], prob.b_eq / norms)
        if np.abs(prob.a_eq @ x - prob.b_eq).max() > 1e-7 * max(
                1.0, np.abs(prob.b_eq).max()):
            raise Infeasible("no nonnegative point satisfies the equalities")
        return x
    a_big = np.zeros((m_eq + m_in, n + m_in))
    a_big[:m_eq, :n] = prob.a_eq
    a_big[m_eq:, :n] = prob.a_in
    a_big[m_eq:, n:] = np.eye(m_in)
    y = np.concatenate([prob.b_eq, prob.b_in])
    norms = np.maximum(np.linalg.norm(a_big, axis=1), 1e-300)
    sol = nnls(a_big / norms[:, None], y / norms, free=n)
    x = sol[:n]
    resid = np.abs(a_big @ sol - y)
    scale = max(1.0, np.abs(y).max())
    if resid[:m_eq].max(initial=0.0) > 1e-7 * scale:
        raise Infeasible(f"equalities unreachable (residual {resid[:m_eq].max():.2e})")
    viol = (prob.a_in @ x - prob.b_in).max()
    if viol > 1e-7 * max(1.0, np.abs(prob.b_in).max(initial=0.0)):
        raise Infeasible(f"no feasible point found (violation {viol:.2e})")
    return x
