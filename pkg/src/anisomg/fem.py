"""Finite element assembly and backward-Euler stepping on the fine grid.

Bilinear forms: m(u,v) = int u v, a(u,v) = int k_perp grad u . grad v
+ k_delta (b . grad u)(b . grad v), equivalently tensor diffusion with
K(x) = k_perp I + k_delta b b^T.  Assembly uses a degree-4 symmetric
triangle rule (exact for P2 mass/stiffness with constant coefficients);
the field direction b is evaluated at the mapped quadrature points since
it varies inside elements.

Operators are plain scipy CSR matrices, symmetrized exactly after
assembly so that ``(A - A.T)`` has no stored nonzeros in exact float
terms.  Dirichlet conditions use symmetric elimination (rows/columns
zeroed, unit diagonal, right-hand side lifted), which keeps every
operator handed to the iterative solvers symmetric positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .field import FieldSpec, eval_b
from .mesh import DofMap, FineMesh

# degree-4 symmetric rule, 6 points; barycentric orbits of
# (a, a, 1-2a) with weights summing to one (scaled by element area)
_QA1, _QW1 = 0.445948490915965, 0.223381589678011
_QA2, _QW2 = 0.091576213509771, 0.109951743655322


def _quad_rule() -> tuple[np.ndarray, np.ndarray]:
    pts = []
    wts = []
    for a, w in ((_QA1, _QW1), (_QA2, _QW2)):
        c = 1.0 - 2.0 * a
        for l1, l2, l3 in ((a, a, c), (a, c, a), (c, a, a)):
            pts.append((l2, l3))  # reference coordinates (xi, eta)
            wts.append(w)
    return np.array(pts), np.array(wts)


QUAD_POINTS, QUAD_WEIGHTS = _quad_rule()


def _collapsed_gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule collapsed onto the triangle; used for
    analytic source terms where the degree-4 rule is not enough."""
    t, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    U, V = np.meshgrid(t, t)
    WU, WV = np.meshgrid(w, w)
    pts = np.column_stack([(U * (1.0 - V)).ravel(), V.ravel()])
    wts = 2.0 * (WU * WV * (1.0 - V)).ravel()  # normalized so sum = 1
    return pts, wts


SOURCE_QUAD_POINTS, SOURCE_QUAD_WEIGHTS = _collapsed_gauss_rule(8)


def reference_basis(degree: int, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P1/P2 shape values (nq, nl) and reference gradients (nq, nl, 2)."""
    xi, eta = q[:, 0], q[:, 1]
    l1, l2, l3 = 1.0 - xi - eta, xi, eta
    d1 = np.array([-1.0, -1.0])
    d2 = np.array([1.0, 0.0])
    d3 = np.array([0.0, 1.0])
    if degree == 1:
        vals = np.stack([l1, l2, l3], axis=1)
        grads = np.broadcast_to(np.stack([d1, d2, d3]), (len(xi), 3, 2)).copy()
        return vals, grads
    vals = np.stack([
        l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
        4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1,
    ], axis=1)
    grads = np.empty((len(xi), 6, 2))
    grads[:, 0] = (4 * l1 - 1)[:, None] * d1
    grads[:, 1] = (4 * l2 - 1)[:, None] * d2
    grads[:, 2] = (4 * l3 - 1)[:, None] * d3
    grads[:, 3] = 4 * (l2[:, None] * d1 + l1[:, None] * d2)
    grads[:, 4] = 4 * (l3[:, None] * d2 + l2[:, None] * d3)
    grads[:, 5] = 4 * (l1[:, None] * d3 + l3[:, None] * d1)
    return vals, grads


def _geometry(mesh: FineMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-element affine maps: corner p0, jacobian J, det J (> 0)."""
    p = mesh.vertices[mesh.triangles]
    J = np.empty((mesh.n_triangles, 2, 2))
    J[:, :, 0] = p[:, 1] - p[:, 0]
    J[:, :, 1] = p[:, 2] - p[:, 0]
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    return p[:, 0], J, det


@dataclass(frozen=True)
class ElementMatrices:
    """Per-element matrices kept for subdomain re-assembly."""

    dofs: np.ndarray   # (n_elements, n_local)
    mats: np.ndarray   # (n_elements, n_local, n_local), symmetric
    n_dofs: int


def _assemble(dofs: np.ndarray, mats: np.ndarray, n: int) -> sparse.csr_matrix:
    nl = dofs.shape[1]
    rows = np.repeat(dofs, nl, axis=1).ravel()
    cols = np.tile(dofs, (1, nl)).ravel()
    A = sparse.coo_matrix((mats.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A = 0.5 * (A + A.T)  # exact structural symmetry
    return A.tocsr()


def element_mass(mesh: FineMesh, dofmap: DofMap) -> ElementMatrices:
    vals, _ = reference_basis(dofmap.degree, QUAD_POINTS)
    ref = np.einsum("q,qi,qj->ij", QUAD_WEIGHTS, vals, vals)
    _, _, det = _geometry(mesh)
    mats = 0.5 * det[:, None, None] * ref
    return ElementMatrices(dofs=dofmap.tri_dofs, mats=mats, n_dofs=dofmap.n_dofs)


def element_stiffness(mesh: FineMesh, dofmap: DofMap, spec: FieldSpec) -> ElementMatrices:
    """Element contributions of the anisotropic form a(.,.)."""
    _, grads = reference_basis(dofmap.degree, QUAD_POINTS)
    p0, J, det = _geometry(mesh)
    inv_jt = np.empty_like(J)
    inv_jt[:, 0, 0] = J[:, 1, 1]
    inv_jt[:, 0, 1] = -J[:, 1, 0]
    inv_jt[:, 1, 0] = -J[:, 0, 1]
    inv_jt[:, 1, 1] = J[:, 0, 0]
    inv_jt /= det[:, None, None]

    # physical gradients g[e,q,i,:] and quadrature points x[e,q,:]
    g = np.einsum("edc,qic->eqid", inv_jt, grads)
    x = p0[:, None, :] + np.einsum("edc,qc->eqd", J, QUAD_POINTS)
    b = eval_b(spec, x.reshape(-1, 2)).reshape(x.shape)

    w = 0.5 * det[:, None] * QUAD_WEIGHTS[None, :]
    iso = np.einsum("eq,eqid,eqjd->eij", w, g, g)
    gb = np.einsum("eqid,eqd->eqi", g, b)
    aniso = np.einsum("eq,eqi,eqj->eij", w, gb, gb)
    mats = spec.k_perp * iso + spec.k_delta * aniso
    mats = 0.5 * (mats + mats.transpose(0, 2, 1))
    return ElementMatrices(dofs=dofmap.tri_dofs, mats=mats, n_dofs=dofmap.n_dofs)


def assemble_mass(mesh: FineMesh, dofmap: DofMap) -> sparse.csr_matrix:
    """Mass matrix M with m_ij = int phi_i phi_j."""
    e = element_mass(mesh, dofmap)
    return _assemble(e.dofs, e.mats, e.n_dofs)


def assemble_stiffness(mesh: FineMesh, dofmap: DofMap, spec: FieldSpec) -> sparse.csr_matrix:
    """Anisotropic stiffness A = A_iso + A_aniso (no boundary handling).

    Symmetric positive semidefinite with constants in the kernel.
    """
    e = element_stiffness(mesh, dofmap, spec)
    return _assemble(e.dofs, e.mats, e.n_dofs)


def assemble_source(mesh: FineMesh, dofmap: DofMap, f) -> np.ndarray:
    """Load vector F_j = int f phi_j.

    ``f`` is either a callable mapping points (n, 2) -> (n,) evaluated by
    quadrature, or a nodal coefficient vector (length n_dofs), in which
    case F = M f.
    """
    if not callable(f):
        f = np.asarray(f, dtype=float)
        if f.shape != (dofmap.n_dofs,):
            raise ValueError("nodal source vector has wrong length")
        return assemble_mass(mesh, dofmap) @ f
    vals, _ = reference_basis(dofmap.degree, SOURCE_QUAD_POINTS)
    p0, J, det = _geometry(mesh)
    x = p0[:, None, :] + np.einsum("edc,qc->eqd", J, SOURCE_QUAD_POINTS)
    fv = np.asarray(f(x.reshape(-1, 2)), dtype=float).reshape(x.shape[:2])
    w = 0.5 * det[:, None] * SOURCE_QUAD_WEIGHTS[None, :]
    loc = np.einsum("eq,qi->ei", w * fv, vals)
    F = np.zeros(dofmap.n_dofs)
    np.add.at(F, dofmap.tri_dofs, loc)
    return F


# ---------------------------------------------------------------------------
# Dirichlet conditions

def apply_dirichlet(op: sparse.spmatrix, rhs: np.ndarray, g_values: np.ndarray,
                    mask: np.ndarray) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Symmetric elimination of Dirichlet dofs.

    Boundary rows and columns are zeroed with a unit diagonal, and the
    right-hand side is lifted so the interior solution matches the
    constrained problem; boundary entries of the result carry g.
    """
    op_bc = eliminate_operator(op, mask)
    g_b = np.where(mask, g_values, 0.0)
    rhs_bc = rhs - op @ g_b
    rhs_bc[mask] = g_values[mask]
    return op_bc, rhs_bc


def eliminate_operator(op: sparse.spmatrix, mask: np.ndarray) -> sparse.csr_matrix:
    """Zero boundary rows/columns of a symmetric operator, unit diagonal."""
    keep = sparse.diags((~mask).astype(float))
    out = keep @ op @ keep + sparse.diags(mask.astype(float))
    return out.tocsr()


def zero_boundary(op: sparse.spmatrix, mask: np.ndarray) -> sparse.csr_matrix:
    """Zero boundary rows/columns without touching the diagonal block."""
    keep = sparse.diags((~mask).astype(float))
    return (keep @ op @ keep).tocsr()


# ---------------------------------------------------------------------------
# transient problem

@dataclass
class TransientProblem:
    """Backward-Euler heat problem on the assembled fine system.

    ``g_values`` is a full-length vector whose boundary entries carry the
    Dirichlet data; ``T0`` must agree with it there.
    """

    M: sparse.csr_matrix
    A: sparse.csr_matrix
    F: np.ndarray
    T0: np.ndarray
    g_values: np.ndarray
    boundary: np.ndarray
    tau: float
    n_steps: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("time step must be positive")
        if self.n_steps < 1:
            raise ValueError("need at least one time step")
        mism = np.max(np.abs(self.T0[self.boundary] - self.g_values[self.boundary]),
                      initial=0.0)
        scale = max(1.0, np.max(np.abs(self.T0), initial=0.0))
        if mism > 1e-10 * scale:
            raise ValueError("initial data does not satisfy the boundary values")

    @property
    def n_dofs(self) -> int:
        return self.T0.shape[0]


def transient_operators(problem: TransientProblem):
    """BC-eliminated step operators (Q_bc, M_step, F_step).

    Per step the right-hand side is (1/tau) M_step T_prev + F_step, with
    M_step the mass matrix with boundary rows/columns zeroed and F_step
    the lifted load (boundary entries carry g), so that
    Q_bc T_n = rhs reproduces the eliminated backward-Euler update.
    """
    Q = (1.0 / problem.tau) * problem.M + problem.A
    Q_bc = eliminate_operator(Q, problem.boundary)
    M_step = zero_boundary(problem.M, problem.boundary)
    g_b = np.where(problem.boundary, problem.g_values, 0.0)
    F_step = problem.F - problem.A @ g_b
    F_step[problem.boundary] = problem.g_values[problem.boundary]
    return Q_bc, M_step, F_step


def backward_euler_step(Q_bc, M_step, F_step, T_prev: np.ndarray, tau: float,
                        linear_solver) -> np.ndarray:
    """One implicit step: solve Q T_n = (1/tau) M T_prev + F."""
    rhs = (1.0 / tau) * (M_step @ T_prev) + F_step
    return linear_solver(rhs)


def transient_solve(problem: TransientProblem, linear_solver=None) -> np.ndarray:
    """Run all time steps; returns the trajectory (n_steps+1, n_dofs).

    ``linear_solver`` maps a right-hand side to a solution for the fixed
    eliminated operator; the default is a sparse LU factorization.
    """
    Q_bc, M_step, F_step = transient_operators(problem)
    if linear_solver is None:
        lu = spla.splu(Q_bc.tocsc())
        linear_solver = lu.solve
    traj = np.empty((problem.n_steps + 1, problem.n_dofs))
    traj[0] = problem.T0
    for n in range(problem.n_steps):
        traj[n + 1] = backward_euler_step(Q_bc, M_step, F_step, traj[n],
                                          problem.tau, linear_solver)
    return traj


# ---------------------------------------------------------------------------
# default data: Gaussian bump with counter-forcing source

def gaussian_bump(center=(0.5, 0.5), sigma=0.2):
    """Initial temperature T0 = exp(-|x-c|^2 / sigma^2) and its Laplacian."""
    cx, cy = center

    def t0(p):
        p = np.atleast_2d(p)
        r2 = (p[:, 0] - cx) ** 2 + (p[:, 1] - cy) ** 2
        return np.exp(-r2 / sigma ** 2)

    def lap(p):
        p = np.atleast_2d(p)
        r2 = (p[:, 0] - cx) ** 2 + (p[:, 1] - cy) ** 2
        return np.exp(-r2 / sigma ** 2) * (4.0 * r2 / sigma ** 4 - 4.0 / sigma ** 2)

    return t0, lap


def heat_problem(mesh: FineMesh, dofmap: DofMap, spec: FieldSpec, tau: float,
                 n_steps: int, center=(0.5, 0.5), sigma=0.2) -> TransientProblem:
    """Assemble the benchmark heat problem.

    T0 is a Gaussian bump, the source f = k_perp * Laplacian(T0) acts as
    a counter-forcing, and the Dirichlet data g is the trace of T0 so
    the initial state is compatible.
    """
    t0, lap = gaussian_bump(center, sigma)
    M = assemble_mass(mesh, dofmap)
    A = assemble_stiffness(mesh, dofmap, spec)
    F = assemble_source(mesh, dofmap, lambda p: spec.k_perp * lap(p))
    T0 = t0(dofmap.coords)
    return TransientProblem(M=M, A=A, F=F, T0=T0, g_values=T0.copy(),
                            boundary=dofmap.boundary, tau=tau, n_steps=n_steps)
