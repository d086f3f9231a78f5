"""Local spectral problems and the multiscale prolongation operator.

Per subdomain w_i we solve the generalized eigenproblem
A^{w_i} phi = lambda D^{w_i} phi with D^{w_i} = diag(A^{w_i}), where
A^{w_i} is re-assembled from the element contributions of the cells in
w_i only (natural boundary conditions, so constants are in the kernel
and the first eigenvalue is zero).  The eigenvectors associated with
the smallest eigenvalues, blended with the bilinear partition of unity,
form the columns of the prolongation P; the coarse operators are the
Galerkin triple products through P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sparse

from .fem import ElementMatrices
from .mesh import CoarseGrid, DofMap, Subdomain, partition_of_unity


class EigenSolveError(RuntimeError):
    pass


@dataclass
class LocalSpectralResult:
    """Smallest eigenpairs of one subdomain problem.

    ``eigenvalues`` holds ``n_basis`` selected values plus any extra
    pairs kept for estimate checking (e.g. lambda_{J+1}); ``vectors``
    are D-orthonormal and stored column-wise over the subdomain's local
    dofs.
    """

    index: int
    eigenvalues: np.ndarray
    vectors: np.ndarray
    d: np.ndarray
    n_basis: int

    @property
    def n_local(self) -> int:
        return self.d.shape[0]


@dataclass
class Prolongation:
    """Sparse n_fine x DOF_H interpolation from coarse coefficients.

    Column (i, j) is chi_i * phi_j^{w_i} scattered to global indexing;
    ``col_subdomain``/``col_mode`` record the (i, j) pair per column.
    """

    matrix: sparse.csr_matrix
    col_subdomain: np.ndarray
    col_mode: np.ndarray

    @property
    def n_fine(self) -> int:
        return self.matrix.shape[0]

    @property
    def dof_coarse(self) -> int:
        return self.matrix.shape[1]


def local_operator(elem: ElementMatrices, sub: Subdomain) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Subdomain stiffness by re-assembly over the cells of w_i.

    Returns the local matrix in local dof numbering and its diagonal.
    Only natural boundary conditions are involved, so row sums vanish.
    """
    gdofs = elem.dofs[sub.triangles]
    ldofs = sub.local_of_global(gdofs.ravel()).reshape(gdofs.shape)
    mats = elem.mats[sub.triangles]
    nl = ldofs.shape[1]
    rows = np.repeat(ldofs, nl, axis=1).ravel()
    cols = np.tile(ldofs, (1, nl)).ravel()
    n = sub.n_dofs
    A = sparse.coo_matrix((mats.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A = (0.5 * (A + A.T)).tocsr()
    d = A.diagonal()
    if np.any(d <= 0.0):
        raise ValueError(f"subdomain {sub.index}: nonpositive diagonal entry "
                         "(degenerate element)")
    return A, d


def _lambda_max_estimate(B: np.ndarray, iters: int = 40) -> float:
    """Power-iteration estimate of the largest eigenvalue (deterministic)."""
    rng = np.random.default_rng(1234)
    v = rng.standard_normal(B.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = B @ v
        lam = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return abs(lam)


def solve_local_eig(A_loc: sparse.spmatrix, d: np.ndarray, n_basis: int,
                    eps_scale: float = 1e-8, n_extra: int = 0,
                    dense_limit: int = 4000, index: int = 0) -> LocalSpectralResult:
    """Smallest eigenpairs of A phi = lambda D phi with D = diag(A).

    Solved densely in the symmetric standard form D^{-1/2} A D^{-1/2},
    so the returned vectors are exactly D-orthonormal and sorted
    ascending.  If the first eigenvalue is below
    ``eps_scale * lambda_max(D^{-1} A)`` the first vector is replaced by
    the D-normalized constant to remove spurious oscillations.

    ``n_extra`` extra trailing pairs are kept for estimate checks; they
    are clamped to the local dimension.
    """
    n = A_loc.shape[0]
    if n_basis < 1 or n_basis > n:
        raise EigenSolveError(f"need 1 <= n_basis <= {n}, got {n_basis}")
    if n > dense_limit:
        raise EigenSolveError(f"local dimension {n} exceeds dense limit {dense_limit}")
    want = min(n, n_basis + max(0, n_extra))

    dis = 1.0 / np.sqrt(d)
    B = dis[:, None] * A_loc.toarray() * dis[None, :]
    B = 0.5 * (B + B.T)
    try:
        w, y = la.eigh(B, subset_by_index=[0, want - 1])
    except la.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenSolveError(f"subdomain {index}: eigensolver failed") from exc

    vectors = dis[:, None] * y
    eps = eps_scale * _lambda_max_estimate(B)
    if w[0] < eps:
        vectors[:, 0] = 1.0 / np.sqrt(d.sum())
    return LocalSpectralResult(index=index, eigenvalues=w, vectors=vectors,
                               d=d.copy(), n_basis=n_basis)


def solve_subdomain_eigs(elem: ElementMatrices, subs: list[Subdomain], n_basis: int,
                         eps_scale: float = 1e-8, n_extra: int = 1,
                         dense_limit: int = 4000) -> list[LocalSpectralResult]:
    """Solve every subdomain problem, ordered by subdomain index.

    The problems are independent; results are deterministic and ordered
    regardless of how a caller might parallelize this loop.
    """
    out = []
    for sub in subs:
        A_loc, d = local_operator(elem, sub)
        out.append(solve_local_eig(A_loc, d, n_basis, eps_scale=eps_scale,
                                   n_extra=n_extra, dense_limit=dense_limit,
                                   index=sub.index))
    return out


def assemble_prolongation(results: list[LocalSpectralResult], subs: list[Subdomain],
                          cg: CoarseGrid, dofmap: DofMap,
                          n_basis: int | None = None) -> Prolongation:
    """Interpolation P with columns chi_i * phi_j^{w_i}.

    ``n_basis`` overrides the per-result selection count (it may use any
    prefix of the stored eigenvectors), which makes sweeps over J cheap:
    solve once with the largest J, then slice.
    """
    rows, cols, data = [], [], []
    col_sub, col_mode = [], []
    col = 0
    for res, sub in zip(results, subs):
        J = res.n_basis if n_basis is None else n_basis
        if J > res.vectors.shape[1]:
            raise ValueError(f"subdomain {sub.index}: only {res.vectors.shape[1]} "
                             f"stored eigenvectors, asked for {J}")
        chi = partition_of_unity(cg, sub.index, dofmap.coords[sub.dofs])
        block = chi[:, None] * res.vectors[:, :J]
        for j in range(J):
            rows.append(sub.dofs)
            cols.append(np.full(sub.n_dofs, col))
            data.append(block[:, j])
            col_sub.append(sub.index)
            col_mode.append(j)
            col += 1
    P = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dofmap.n_dofs, col)).tocsr()
    return Prolongation(matrix=P, col_subdomain=np.array(col_sub),
                        col_mode=np.array(col_mode))


def galerkin_project(P, M: sparse.spmatrix, A: sparse.spmatrix,
                     F: np.ndarray) -> tuple[sparse.csr_matrix, sparse.csr_matrix, np.ndarray]:
    """Coarse operators M_H = P^T M P, A_H = P^T A P, F_H = P^T F.

    Triple products are re-symmetrized exactly so round-off cannot leave
    a skew part.
    """
    Pm = P.matrix if isinstance(P, Prolongation) else P
    M_H = Pm.T @ (M @ Pm)
    A_H = Pm.T @ (A @ Pm)
    M_H = (0.5 * (M_H + M_H.T)).tocsr()
    A_H = (0.5 * (A_H + A_H.T)).tocsr()
    return M_H, A_H, Pm.T @ F


@dataclass
class MultiscaleBasis:
    """Subdomain eigendata plus the assembled prolongation."""

    subdomains: list
    results: list
    prolongation: Prolongation
    coarse_grid: CoarseGrid
    dofmap: DofMap

    def slice(self, n_basis: int) -> Prolongation:
        """Prolongation using only the first ``n_basis`` modes per subdomain."""
        return assemble_prolongation(self.results, self.subdomains,
                                     self.coarse_grid, self.dofmap, n_basis=n_basis)


def build_multiscale_basis(cg: CoarseGrid, subs: list[Subdomain], dofmap: DofMap,
                           elem: ElementMatrices, n_basis: int, n_extra: int = 1,
                           eps_scale: float = 1e-8, dense_limit: int = 4000) -> MultiscaleBasis:
    """Offline stage: local eigenproblems plus prolongation assembly."""
    results = solve_subdomain_eigs(elem, subs, n_basis, eps_scale=eps_scale,
                                   n_extra=n_extra, dense_limit=dense_limit)
    P = assemble_prolongation(results, subs, cg, dofmap)
    return MultiscaleBasis(subdomains=subs, results=results, prolongation=P,
                           coarse_grid=cg, dofmap=dofmap)
