"""Sparse direct solves for the two systems of each time step.

The velocity-pressure saddle problem is solved monolithically with the
pressure constant nullspace removed by a scalar Lagrange multiplier
enforcing zero mean; the vorticity system is a plain sparse solve.  Both
check their residual contract and raise SolverError instead of returning
silently degraded solutions.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError

__all__ = ["SaddleSystem", "solve_saddle", "solve_scalar", "LaggedLU",
           "DEFAULT_TOL"]

DEFAULT_TOL = 1e-10


class LaggedLU:
    """Direct solver that reuses a stale factorization across solves.

    Between time steps only the lagged cross/convection blocks change,
    and they are small against the mass term, so the previous LU is an
    excellent defect-correction preconditioner:

        x <- x + LU_old^{-1} (b - K x)

    The iteration is run until the true residual meets the target;
    if it stalls or exceeds ``max_refine`` sweeps, the current matrix is
    refactored and the solve repeated.  Every result therefore satisfies
    the same residual contract as a fresh factorization, deterministically.
    """

    def __init__(self, max_refine=8):
        self.max_refine = max_refine
        self._lu = None
        self.num_factorizations = 0

    def _factor(self, K):
        try:
            self._lu = spla.splu(K)
        except RuntimeError as exc:
            self._lu = None
            raise SolverError("factorization failed: %s" % exc) from exc
        self.num_factorizations += 1

    def _refine(self, K, rhs, scale, target):
        x = self._lu.solve(rhs)
        r = rhs - K @ x
        res = np.linalg.norm(r) / scale
        for _ in range(self.max_refine):
            if res <= target or not np.isfinite(res):
                break
            x += self._lu.solve(r)
            r = rhs - K @ x
            new_res = np.linalg.norm(r) / scale
            if not np.isfinite(new_res) or new_res > 0.5 * res:
                res = new_res
                break   # stalled; caller refactors
            res = new_res
        return x, res

    def solve(self, K, rhs, tol):
        rhs = np.asarray(rhs, dtype=float)
        scale = np.linalg.norm(rhs)
        if scale == 0.0:
            return np.zeros_like(rhs)
        target = 0.05 * tol
        if self._lu is not None and self._lu.shape == K.shape:
            x, res = self._refine(K, rhs, scale, target)
            if res <= target:
                return x
        self._factor(K)
        x, res = self._refine(K, rhs, scale, target)
        if res > tol or not np.isfinite(res):
            raise SolverError("residual %.3e exceeds tolerance %.1e after "
                              "refactoring" % (res, tol), residual=res)
        return x


class SaddleSystem:
    """Blocks of the constrained velocity-pressure problem.

    Solves
        A v - B^T p            = rhs_v
        B v            + m lam = rhs_div
              m^T p            = 0
    where m holds the pressure basis integrals (the constant nullspace
    direction in integral form).
    """

    def __init__(self, A, B, null_dir, rhs_v, rhs_div):
        self.A = A.tocsr()
        self.B = B.tocsr()
        self.null_dir = np.asarray(null_dir, dtype=float)
        self.rhs_v = np.asarray(rhs_v, dtype=float)
        self.rhs_div = np.asarray(rhs_div, dtype=float)


def solve_saddle(system, tol=DEFAULT_TOL, solver=None):
    """Solve the bordered saddle system by sparse LU.

    Returns (v, p, lam).  The residual of every block is checked against
    ``tol`` relative to the right-hand side; violation raises SolverError
    carrying the achieved residual.  An optional LaggedLU instance reuses
    factorizations across calls (same contract, checked every solve).
    """
    A, B, m = system.A, system.B, system.null_dir
    nv, npres = A.shape[0], B.shape[0]
    mcol = sp.csr_matrix(m.reshape(-1, 1))
    K = sp.bmat([[A, -B.T, None],
                 [B, None, mcol],
                 [None, mcol.T, None]], format="csc")
    rhs = np.concatenate([system.rhs_v, system.rhs_div, [0.0]])
    if solver is None:
        solver = LaggedLU()
    sol = solver.solve(K, rhs, tol)
    if not np.all(np.isfinite(sol)):
        raise SolverError("saddle solve produced non-finite values")
    v = sol[:nv]
    p = sol[nv:nv + npres]
    lam = sol[-1]

    scale = max(np.linalg.norm(rhs), 1e-30)
    res_v = np.linalg.norm(A @ v - B.T @ p - system.rhs_v)
    res_div = np.linalg.norm(B @ v + lam * m - system.rhs_div)
    res = max(res_v, res_div, abs(m @ p)) / scale
    if res > tol:
        raise SolverError("saddle residual %.3e exceeds tolerance %.1e"
                          % (res, tol), residual=res)
    # exact zero-mean shift (the multiplier already keeps it near zero)
    p = p - (m @ p) / m.sum()
    return v, p, lam


def solve_scalar(matrix, rhs, tol=DEFAULT_TOL, solver=None):
    """Sparse LU solve with a relative residual check."""
    rhs = np.asarray(rhs, dtype=float)
    if solver is None:
        solver = LaggedLU()
    x = solver.solve(matrix.tocsc(), rhs, tol)
    if not np.all(np.isfinite(x)):
        raise SolverError("solve produced non-finite values")
    scale = max(np.linalg.norm(rhs), 1e-30)
    res = np.linalg.norm(matrix @ x - rhs) / scale
    if res > tol:
        raise SolverError("residual %.3e exceeds tolerance %.1e" % (res, tol),
                          residual=res)
    return x
