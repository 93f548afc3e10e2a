"""Inner optimization: full joint coefficient solve and fast one-sided solves.

The full solve refits an r x r coefficient matrix X in R(U X V^T) by
conjugate gradient on the normal equations. The fast solve refits one whole
factor, decomposed into independent per-row least-squares systems, each run
for a fixed (small) number of CG-on-normal-equations steps from a zero
start; the iteration cap doubles as regularization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .linalg import FactorPair, SparseObservations, project_observed
from .objectives import HuberLowRank, huber_value

__all__ = ["InnerConfig", "FullSolveInfo", "optimize_full", "optimize_fast",
           "objective_after_inner"]


@dataclass
class InnerConfig:
    """Knobs for the inner solves.

    ls_iters caps the per-row least-squares iterations of the fast solve
    (2-3 acts as regularization); full_solve_tol is the CG tolerance of the
    full solve; grad_inner_iters / grad_memory configure the quasi-Newton
    fallback used by non-quadratic objectives.
    """

    ls_iters: int = 3
    full_solve_tol: float = 1e-10
    grad_inner_iters: int = 10
    grad_memory: int = 5

    def __post_init__(self):
        if min(self.ls_iters, self.grad_inner_iters, self.grad_memory) < 1:
            raise ValueError("iteration counts must be >= 1")


@dataclass
class FullSolveInfo:
    converged: bool
    iterations: int
    rel_residual: float

    @property
    def flag(self) -> str:
        return "" if self.converged else "cg_incomplete"


def optimize_full(U: np.ndarray, V: np.ndarray, objective,
                  tol: float = 1e-10, max_iters: int | None = None
                  ) -> tuple[FactorPair, FullSolveInfo]:
    """Minimize R(U X V^T) over X in R^{r x r}; returns (U X, V).

    Requires a quadratic objective. CG runs on the normal equations from a
    zero start, so singular systems yield the minimum-norm solution (the
    non-converged flag is reported, not raised).
    """
    r = U.shape[1]
    if r == 0:
        return FactorPair(U, V), FullSolveInfo(True, 0, 0.0)
    if not getattr(objective, "is_quadratic", False):
        raise ValueError("optimize_full requires a quadratic objective")

    m, n = objective.shape
    g0 = objective.gradient(FactorPair.empty(m, n))
    b = -g0.bilinear(U, V)

    def matvec(x):
        return objective.quad_term(U @ x, V).bilinear(U, V)

    cap = 10 * r * r if max_iters is None else max_iters
    x, info = _cg(matvec, b, tol, cap)
    return FactorPair(U @ x, V), info


def _cg(matvec, b: np.ndarray, tol: float, max_iters: int
        ) -> tuple[np.ndarray, FullSolveInfo]:
    """Plain CG over matrix-shaped unknowns with Frobenius inner products."""
    x = np.zeros_like(b)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, FullSolveInfo(True, 0, 0.0)
    r = b.copy()
    p = r.copy()
    rs = float(np.vdot(r, r))
    it = 0
    for it in range(1, max_iters + 1):
        q = matvec(p)
        pq = float(np.vdot(p, q))
        if pq <= 0.0:
            # numerically semidefinite direction: stop at current (min-norm) iterate
            return x, FullSolveInfo(False, it, np.sqrt(rs) / bnorm)
        alpha = rs / pq
        x = x + alpha * p
        r = r - alpha * q
        rs_new = float(np.vdot(r, r))
        if np.sqrt(rs_new) <= tol * bnorm:
            return x, FullSolveInfo(True, it, np.sqrt(rs_new) / bnorm)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, FullSolveInfo(False, it, np.sqrt(rs) / bnorm)


def optimize_fast(U: np.ndarray, V: np.ndarray, t: int, objective,
                  config: InnerConfig) -> FactorPair:
    """One alternating half-step: refit U when t is even, V when t is odd.

    Observed quadratics decompose into independent per-row systems on the
    observed entries, solved by config.ls_iters capped CG steps each;
    rows/columns with no observations are left unchanged. Huber objectives
    run a capped L-BFGS on the non-frozen factor instead.
    """
    if U.shape[1] == 0:
        return FactorPair(U, V)
    if getattr(objective, "column_system_support", False):
        omega = objective.target
        if t % 2 == 0:
            return FactorPair(_capped_cgnr(U, V, omega, config.ls_iters), V)
        return FactorPair(U, _capped_cgnr(V, U, omega.transpose, config.ls_iters))
    if isinstance(objective, HuberLowRank):
        return _huber_half_step(U, V, t, objective, config)
    raise TypeError(f"objective {type(objective).__name__} has no fast inner solve")


def _capped_cgnr(W: np.ndarray, F: np.ndarray, omega: SparseObservations,
                 iters: int) -> np.ndarray:
    """`iters` CG-on-normal-equations steps for every row system, from zero.

    Row i solves min_x ||F[omega_i] x - vals_i||_2. The zero start makes the
    iteration cap act like a truncated-Krylov refit of the whole factor (the
    regularization the fast solvers rely on). All rows advance in lockstep
    with their own step sizes; the systems are disjoint, so this matches
    solving them one by one. Rows that reach their numerical floor freeze
    (CG iterated past convergence turns rounding noise into huge steps).
    Rows with no observations keep their current value.
    """
    X = np.zeros_like(W)
    R = omega.csr_with(omega.vals) @ F
    P = R.copy()
    rs = np.einsum("ij,ij->i", R, R)
    floor = 1e-26 * rs
    for _ in range(iters):
        q_vals = project_observed(FactorPair(P, F), omega)
        Q = omega.csr_with(q_vals) @ F
        pq = np.einsum("ij,ij->i", P, Q)
        ok = (pq > 0.0) & (rs > floor)
        alpha = np.where(ok, rs / np.where(ok, pq, 1.0), 0.0)
        X += alpha[:, None] * P
        R = R - alpha[:, None] * Q
        rs_new = np.einsum("ij,ij->i", R, R)
        beta = np.where(ok, rs_new / np.where(ok, rs, 1.0), 0.0)
        P = np.where(ok[:, None], R + beta[:, None] * P, P)
        rs = np.where(ok, rs_new, rs)
    untouched = np.bincount(omega.row, minlength=W.shape[0]) == 0
    if untouched.any():
        X[untouched] = W[untouched]
    return X


def _huber_half_step(U: np.ndarray, V: np.ndarray, t: int,
                     objective: HuberLowRank, config: InnerConfig) -> FactorPair:
    M, d = objective.target, objective.delta
    opts = {"maxiter": config.grad_inner_iters, "maxcor": config.grad_memory}
    if t % 2 == 0:
        def fun(x):
            W = x.reshape(U.shape)
            resid = W @ V.T - M
            g = np.clip(resid, -d, d)
            return huber_value(resid, d), (g @ V).ravel()

        res = minimize(fun, U.ravel(), jac=True, method="L-BFGS-B", options=opts)
        return FactorPair(res.x.reshape(U.shape), V)

    def fun(x):
        W = x.reshape(V.shape)
        resid = U @ W.T - M
        g = np.clip(resid, -d, d)
        return huber_value(resid, d), (g.T @ U).ravel()

    res = minimize(fun, V.ravel(), jac=True, method="L-BFGS-B", options=opts)
    return FactorPair(U, res.x.reshape(V.shape))


def objective_after_inner(U: np.ndarray, V: np.ndarray, objective) -> float:
    return objective.value(FactorPair(U, V))
