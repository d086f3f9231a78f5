"""Smoothers, two-grid preconditioning, PCG and transient drivers.

The two-grid preconditioner applies pre-smoothing with S, a coarse
correction through the spectral prolongation (Galerkin coarse operator,
factored once with LU), and post-smoothing with S^T; for Gauss-Seidel
that means ascending sweeps before and descending sweeps after the
coarse solve, which keeps the induced operator symmetric positive
definite as PCG requires.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from . import fem
from .fem import TransientProblem
from .msbasis import Prolongation


class SolverError(RuntimeError):
    pass


class IndefiniteSystemError(SolverError):
    pass


SMOOTHER_KINDS = ("jacobi", "sgs")


@dataclass(frozen=True)
class Smoother:
    """Relaxation settings: damped Jacobi or Gauss-Seidel sweeps.

    ``sweeps`` is the number of applications per (pre- or post-)
    smoothing phase; 0 disables smoothing, which leaves the bare coarse
    correction (useful for exact-coarse checks).  ``omega`` damps Jacobi
    only.
    """

    kind: str = "sgs"
    sweeps: int = 5
    omega: float = 2.0 / 3.0

    def __post_init__(self):
        if self.kind not in SMOOTHER_KINDS:
            raise ValueError(f"unknown smoother kind {self.kind!r}")
        if self.sweeps < 0:
            raise ValueError("sweeps must be nonnegative")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("omega must be in (0, 1]")


@numba.njit(cache=True)
def _gs_forward(indptr, indices, data, diag, x, rhs):
    n = x.shape[0]
    for i in range(n):
        s = rhs[i]
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i:
                s -= data[k] * x[j]
        x[i] = s / diag[i]


@numba.njit(cache=True)
def _gs_backward(indptr, indices, data, diag, x, rhs):
    n = x.shape[0]
    for i in range(n - 1, -1, -1):
        s = rhs[i]
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i:
                s -= data[k] * x[j]
        x[i] = s / diag[i]


class SmootherKernel:
    """A smoother bound to one operator, with precomputed CSR arrays.

    ``transpose=True`` applies the adjoint smoother (descending sweep
    for Gauss-Seidel, identical for Jacobi).
    """

    def __init__(self, smoother: Smoother, Q: sparse.spmatrix):
        self.smoother = smoother
        self.Q = Q.tocsr()
        diag = self.Q.diagonal()
        if np.any(diag == 0.0):
            raise SolverError("operator has zero diagonal entries")
        self.diag = diag
        self._indptr = self.Q.indptr.astype(np.int64)
        self._indices = self.Q.indices.astype(np.int64)
        self._data = self.Q.data

    def sweeps(self, rhs: np.ndarray, x: np.ndarray, transpose: bool = False) -> np.ndarray:
        """Run the configured number of sweeps, starting from x (copied)."""
        x = np.array(x, dtype=float, copy=True)
        sm = self.smoother
        for _ in range(sm.sweeps):
            if sm.kind == "jacobi":
                x += sm.omega / self.diag * (rhs - self.Q @ x)
            elif transpose:
                _gs_backward(self._indptr, self._indices, self._data, self.diag, x, rhs)
            else:
                _gs_forward(self._indptr, self._indices, self._data, self.diag, x, rhs)
        return x


def smooth(smoother: Smoother, Q: sparse.spmatrix, rhs: np.ndarray, x0: np.ndarray,
           transpose: bool = False) -> np.ndarray:
    """Apply the smoother's sweeps to Q x = rhs starting from x0.

    Gauss-Seidel sweeps ascending dof order (descending when
    ``transpose``); Jacobi updates are x += omega D^{-1} (rhs - Q x).
    """
    return SmootherKernel(smoother, Q).sweeps(rhs, np.asarray(x0, dtype=float),
                                              transpose=transpose)


class CoarseFactor:
    """Reusable LU factorization of a coarse operator.

    Solutions are residual-checked.  With ``fallback=True`` a failed or
    inaccurate factorization falls back to a dense least-squares solve,
    needed in the V_H = V_h identity regime where overlapping subdomains
    make the prolongation rank deficient (consistent singular systems).
    Without it a bad factorization raises ``SolverError``.
    """

    def __init__(self, Q_H: sparse.spmatrix, fallback: bool = False, rtol: float = 1e-8):
        self.Q = Q_H.tocsr()
        self.fallback = fallback
        self.rtol = rtol
        self._scale = max(np.max(np.abs(self.Q.data)), 1e-300)
        self._dense = None
        try:
            self.lu = spla.splu(self.Q.tocsc())
        except RuntimeError as exc:
            if not fallback:
                raise SolverError(f"coarse operator is singular: {exc}") from exc
            self.lu = None

    def _lstsq(self, rhs: np.ndarray) -> np.ndarray:
        if self._dense is None:
            if self.Q.shape[0] > 20000:
                raise SolverError("coarse operator too large for dense fallback")
            self._dense = self.Q.toarray()
        x, *_ = np.linalg.lstsq(self._dense, rhs, rcond=None)
        return x

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        rnorm = np.linalg.norm(rhs)
        if rnorm == 0.0:
            return np.zeros_like(rhs)
        if self.lu is not None:
            x = self.lu.solve(rhs)
            res = np.linalg.norm(self.Q @ x - rhs)
            tol = self.rtol * max(rnorm, self._scale * np.linalg.norm(x))
            if res <= tol:
                return x
            if not self.fallback:
                raise SolverError("coarse LU solve failed the residual check "
                                  f"({res:.2e} > {tol:.2e}); operator is "
                                  "ill-conditioned or singular")
            self.lu = None  # switch to least squares permanently
        return self._lstsq(rhs)


def coarse_direct_solve(Q_H: sparse.spmatrix, rhs_H: np.ndarray) -> np.ndarray:
    """One-shot LU solve of the coarse system (residual-checked).

    Build a ``CoarseFactor`` directly to reuse the factorization across
    time steps.
    """
    return CoarseFactor(Q_H).solve(rhs_H)


class TwoGridPreconditioner:
    """Pre-smooth, coarse-correct through P, post-smooth with S^T.

    The coarse operator is the Galerkin projection of the fine operator
    being preconditioned and is factored once.  ``apply`` realizes the
    symmetric preconditioner inverse action z = C^{-1} r.
    """

    def __init__(self, Q: sparse.spmatrix, P, smoother: Smoother):
        self.Q = Q.tocsr()
        self.P = P.matrix if isinstance(P, Prolongation) else P.tocsr()
        self.R = self.P.T.tocsr()
        Q_H = self.R @ (self.Q @ self.P)
        Q_H = (0.5 * (Q_H + Q_H.T)).tocsr()
        self.coarse = CoarseFactor(Q_H)
        self.kernel = SmootherKernel(smoother, self.Q)

    @property
    def coarse_operator(self) -> sparse.csr_matrix:
        return self.coarse.Q

    def apply(self, r: np.ndarray) -> np.ndarray:
        y = np.zeros_like(r)
        if self.kernel.smoother.sweeps > 0:
            y = self.kernel.sweeps(r, y, transpose=False)
        r1 = r - self.Q @ y
        y = y + self.P @ self.coarse.solve(self.R @ r1)
        if self.kernel.smoother.sweeps > 0:
            y = self.kernel.sweeps(r, y, transpose=True)
        return y


@dataclass
class PCGInfo:
    iterations: int
    residuals: list
    converged: bool


def _pc_apply(pc):
    if pc is None:
        return lambda r: r
    if callable(pc):
        return pc
    return pc.apply


def pcg(Q: sparse.spmatrix, b: np.ndarray, pc=None, rtol: float = 1e-5,
        maxiter: int = 100, x0: np.ndarray | None = None) -> tuple[np.ndarray, PCGInfo]:
    """Preconditioned conjugate gradients on an SPD system.

    Stops when the explicitly computed residual 2-norm drops below
    ``rtol * ||b||``; hitting ``maxiter`` first returns with
    ``converged=False`` (the 'nc' outcome, not an exception).  A
    nonpositive p^T Q p or preconditioned inner product raises
    ``IndefiniteSystemError``.
    """
    apply_pc = _pc_apply(pc)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float, copy=True)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), PCGInfo(0, [0.0], True)
    r = b - Q @ x
    res = np.linalg.norm(r) / bnorm
    residuals = [res]
    if res <= rtol:
        return x, PCGInfo(0, residuals, True)
    z = apply_pc(r)
    rz = float(r @ z)
    if rz <= 0.0:
        raise IndefiniteSystemError("preconditioned inner product is not positive")
    p = z.copy()
    for k in range(1, maxiter + 1):
        q = Q @ p
        pq = float(p @ q)
        if pq <= 0.0:
            raise IndefiniteSystemError("p^T Q p <= 0: operator is not positive definite")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        res = np.linalg.norm(b - Q @ x) / bnorm
        residuals.append(res)
        if res <= rtol:
            return x, PCGInfo(k, residuals, True)
        z = apply_pc(r)
        rz_new = float(r @ z)
        if rz_new <= 0.0:
            raise IndefiniteSystemError("preconditioned inner product is not positive")
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, PCGInfo(maxiter, residuals, False)


@dataclass
class SolveReport:
    """Per-time-step iteration counts and residual histories.

    Wall times are kept apart from the deterministic payload so that
    reports can be serialized byte-identically across runs.
    """

    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    wall_time: float = 0.0
    basis_time: float = 0.0

    @property
    def n_steps(self) -> int:
        return len(self.iterations)

    @property
    def total_iterations(self) -> int:
        return int(sum(self.iterations))

    @property
    def nbar(self) -> float:
        """Average PCG iterations per time step."""
        return self.total_iterations / max(1, self.n_steps)

    @property
    def any_nc(self) -> bool:
        return not all(self.converged) if self.converged else False

    def to_dict(self) -> dict:
        return {
            "iterations": list(map(int, self.iterations)),
            "converged": list(map(bool, self.converged)),
            "final_relative_residuals": [float(h[-1]) for h in self.residuals],
            "nbar": float(self.nbar),
            "nc": bool(self.any_nc),
        }

    def times_dict(self) -> dict:
        return {"wall_time_s": float(self.wall_time),
                "basis_time_s": float(self.basis_time)}


def transient_pcg_solve(problem: TransientProblem, pc: str = "two-grid",
                        P=None, smoother: Smoother | None = None,
                        rtol: float = 1e-5, maxiter: int = 100) -> tuple[np.ndarray, SolveReport]:
    """Backward-Euler stepping with one PCG solve per step.

    ``pc`` is 'two-grid' (requires P and a smoother), 'identity' for
    plain CG, or a callable factory mapping the eliminated operator to a
    preconditioner action.  Every solve starts from zero so the
    iteration counts are comparable across steps and ratios.
    Non-convergence is recorded per step, not raised.
    """
    Q_bc, M_step, F_step = fem.transient_operators(problem)
    if pc == "two-grid":
        if P is None:
            raise SolverError("two-grid preconditioning needs a prolongation")
        apply_pc = TwoGridPreconditioner(Q_bc, P, smoother or Smoother()).apply
    elif pc in (None, "identity"):
        apply_pc = None
    elif callable(pc):
        apply_pc = pc(Q_bc)
    else:
        raise SolverError(f"unknown preconditioner {pc!r}")

    report = SolveReport()
    traj = np.empty((problem.n_steps + 1, problem.n_dofs))
    traj[0] = problem.T0
    t0 = time.perf_counter()
    for n in range(problem.n_steps):
        rhs = (1.0 / problem.tau) * (M_step @ traj[n]) + F_step
        x, info = pcg(Q_bc, rhs, pc=apply_pc, rtol=rtol, maxiter=maxiter)
        traj[n + 1] = x
        report.iterations.append(info.iterations)
        report.residuals.append(info.residuals)
        report.converged.append(info.converged)
    report.wall_time = time.perf_counter() - t0
    return traj, report


def multiscale_transient_solve(problem: TransientProblem, P) -> tuple[np.ndarray, SolveReport]:
    """Reduced-order stepping in the multiscale space.

    Projects the eliminated fine system through P, steps the coarse
    recursion with a reused LU factor, and reconstructs the fine-grid
    trajectory P T_H per step.  The initial coarse state is the mass
    projection of T0 onto range(P).
    """
    Pm = P.matrix if isinstance(P, Prolongation) else P.tocsr()
    Q_bc, M_step, F_step = fem.transient_operators(problem)
    Q_H = Pm.T @ (Q_bc @ Pm)
    Q_H = (0.5 * (Q_H + Q_H.T)).tocsr()
    M_H = Pm.T @ (M_step @ Pm)
    M_H = (0.5 * (M_H + M_H.T)).tocsr()
    F_H = Pm.T @ F_step

    G = Pm.T @ (problem.M @ Pm)
    G = (0.5 * (G + G.T)).tocsr()
    T_H = CoarseFactor(G, fallback=True).solve(Pm.T @ (problem.M @ problem.T0))

    report = SolveReport()
    factor = CoarseFactor(Q_H, fallback=True)
    traj = np.empty((problem.n_steps + 1, problem.n_dofs))
    traj[0] = Pm @ T_H
    t0 = time.perf_counter()
    for n in range(problem.n_steps):
        rhs_H = (1.0 / problem.tau) * (M_H @ T_H) + F_H
        T_H = factor.solve(rhs_H)
        traj[n + 1] = Pm @ T_H
        report.iterations.append(0)
        report.residuals.append([0.0])
        report.converged.append(True)
    report.wall_time = time.perf_counter() - t0
    return traj, report
