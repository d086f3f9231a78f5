"""Structured coarse/fine grids on the unit square.

The coarse grid is a tensor-product quad partition of [0,1]^2.  The fine
grid refines every coarse cell into r x r squares and splits each square
into two triangles along the (lower-left, upper-right) diagonal, so the
fine triangulation conforms to all coarse cell edges by construction.
Around every coarse vertex x_i we collect the adjacent coarse cells into
a subdomain, and the bilinear hat function centered at x_i acts as the
partition-of-unity weight on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class CoarseGrid:
    """Axis-aligned quad partition of the unit square.

    Attributes
    ----------
    nx, ny : int
        Cell counts per axis; the mesh size is hx = 1/nx, hy = 1/ny.
    vertices : ndarray, shape ((nx+1)*(ny+1), 2)
        Vertex coordinates, lexicographic (x fastest).
    cells : ndarray, shape (nx*ny, 4)
        Counterclockwise vertex indices per quad cell.
    """

    nx: int
    ny: int
    vertices: np.ndarray
    cells: np.ndarray

    @property
    def n_vertices(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def hx(self) -> float:
        return 1.0 / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @property
    def h(self) -> float:
        """Coarse mesh size H (largest cell edge)."""
        return max(self.hx, self.hy)

    def vertex_index(self, ix: int, iy: int) -> int:
        return iy * (self.nx + 1) + ix

    def cells_around_vertex(self, k: int) -> list[int]:
        """Cell ids of the coarse cells sharing vertex k (1, 2 or 4)."""
        ix = k % (self.nx + 1)
        iy = k // (self.nx + 1)
        out = []
        for cy in (iy - 1, iy):
            for cx in (ix - 1, ix):
                if 0 <= cx < self.nx and 0 <= cy < self.ny:
                    out.append(cy * self.nx + cx)
        return out

    def cell_vertex_ids(self, c: int) -> np.ndarray:
        return self.cells[c]


@dataclass(frozen=True)
class FineMesh:
    """Conforming triangulation of the unit square.

    Attributes
    ----------
    r : int
        Fine squares per coarse cell edge.
    vertices : ndarray (n_vertices, 2)
    triangles : ndarray (n_triangles, 3)
        Vertex indices, counterclockwise.
    edges : ndarray (n_edges, 2)
        Unique edges as sorted vertex pairs.
    tri_edges : ndarray (n_triangles, 3)
        Global edge index of the local edges (0,1), (1,2), (2,0).
    tri_coarse : ndarray (n_triangles,)
        Id of the coarse cell containing each triangle.
    """

    r: int
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    tri_coarse: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True)
class DofMap:
    """Lagrange degree-of-freedom numbering for P1 or P2 elements.

    P1 dofs sit at mesh vertices; P2 adds one dof per edge midpoint,
    numbered after all vertex dofs, so n_dofs = n_vertex + n_edge.
    """

    degree: int
    coords: np.ndarray        # (n_dofs, 2)
    n_vertex: int
    n_edge: int
    boundary: np.ndarray      # (n_dofs,) bool
    tri_dofs: np.ndarray      # (n_triangles, 3 or 6) global dof ids

    @property
    def n_dofs(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class Subdomain:
    """Coarse cells around one coarse vertex with their fine dofs.

    The local-to-global dof map is the sorted ``dofs`` array itself;
    positions in it are the local indices.
    """

    index: int                # coarse vertex id
    vertex: np.ndarray        # (2,) coordinates of x_i
    coarse_cells: tuple       # adjacent coarse cell ids (1, 2 or 4)
    triangles: np.ndarray     # fine triangle ids inside the subdomain
    dofs: np.ndarray          # sorted global dof ids

    @property
    def n_dofs(self) -> int:
        return self.dofs.shape[0]

    def restrict(self, v: np.ndarray) -> np.ndarray:
        """Pick the local values of a global dof vector."""
        return v[self.dofs]

    def local_of_global(self, global_ids: np.ndarray) -> np.ndarray:
        """Local indices of the given global dof ids (must be members)."""
        pos = np.searchsorted(self.dofs, global_ids)
        if np.any(self.dofs[pos] != global_ids):
            raise ValueError("dof not contained in subdomain")
        return pos


def _coarse_grid(nx: int, ny: int) -> CoarseGrid:
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    cells = np.empty((nx * ny, 4), dtype=np.int64)
    for cy in range(ny):
        for cx in range(nx):
            v00 = cy * (nx + 1) + cx
            cells[cy * nx + cx] = (v00, v00 + 1, v00 + nx + 2, v00 + nx + 1)
    return CoarseGrid(nx=nx, ny=ny, vertices=vertices, cells=cells)


def _fine_mesh(nx: int, ny: int, r: int) -> FineMesh:
    nxf, nyf = nx * r, ny * r
    xs = np.linspace(0.0, 1.0, nxf + 1)
    ys = np.linspace(0.0, 1.0, nyf + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    sq_i, sq_j = np.meshgrid(np.arange(nxf), np.arange(nyf))
    sq_i, sq_j = sq_i.ravel(), sq_j.ravel()
    v00 = sq_j * (nxf + 1) + sq_i
    v10 = v00 + 1
    v01 = v00 + nxf + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nxf * nyf, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    coarse = (sq_j // r) * nx + (sq_i // r)
    tri_coarse = np.repeat(coarse, 2)

    # unique edges from sorted local pairs
    pairs = np.concatenate([
        triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]],
    ])
    pairs = np.sort(pairs, axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    nt = triangles.shape[0]
    tri_edges = np.column_stack([inverse[:nt], inverse[nt:2 * nt], inverse[2 * nt:]])

    return FineMesh(r=r, vertices=vertices, triangles=triangles, edges=edges,
                    tri_edges=tri_edges, tri_coarse=tri_coarse)


def _on_boundary(points: np.ndarray) -> np.ndarray:
    x, y = points[:, 0], points[:, 1]
    return ((np.abs(x) < BOUNDARY_TOL) | (np.abs(x - 1.0) < BOUNDARY_TOL)
            | (np.abs(y) < BOUNDARY_TOL) | (np.abs(y - 1.0) < BOUNDARY_TOL))


def _dof_map(fm: FineMesh, degree: int) -> DofMap:
    if degree == 1:
        coords = fm.vertices.copy()
        tri_dofs = fm.triangles.copy()
        n_edge = 0
    else:
        midpoints = 0.5 * (fm.vertices[fm.edges[:, 0]] + fm.vertices[fm.edges[:, 1]])
        coords = np.vstack([fm.vertices, midpoints])
        tri_dofs = np.hstack([fm.triangles, fm.n_vertices + fm.tri_edges])
        n_edge = fm.n_edges
    return DofMap(degree=degree, coords=coords, n_vertex=fm.n_vertices,
                  n_edge=n_edge, boundary=_on_boundary(coords), tri_dofs=tri_dofs)


def build_grids(nx: int, ny: int, r: int, degree: int) -> tuple[CoarseGrid, FineMesh, DofMap]:
    """Build a conforming coarse/fine grid pair with its dof numbering.

    Parameters
    ----------
    nx, ny : int
        Coarse cells per axis (H = 1/nx along x).
    r : int
        Fine squares per coarse cell edge; each square yields 2 triangles.
    degree : int
        Lagrange element degree, 1 or 2.

    Returns
    -------
    (CoarseGrid, FineMesh, DofMap)
    """
    for name, v in (("nx", nx), ("ny", ny), ("r", r)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree!r}")
    cg = _coarse_grid(int(nx), int(ny))
    fm = _fine_mesh(int(nx), int(ny), int(r))
    dm = _dof_map(fm, int(degree))
    return cg, fm, dm


def subdomains(cg: CoarseGrid, fm: FineMesh, dm: DofMap) -> list[Subdomain]:
    """One subdomain per coarse vertex, in coarse vertex order.

    Every fine triangle belongs to exactly one coarse cell, so a
    subdomain's triangles (and dofs) are the union over its adjacent
    coarse cells.  The union of all subdomain dof sets covers every dof.
    """
    cell_tris = [[] for _ in range(cg.n_cells)]
    for t, c in enumerate(fm.tri_coarse):
        cell_tris[c].append(t)
    cell_tris = [np.array(ts, dtype=np.int64) for ts in cell_tris]

    out = []
    for k in range(cg.n_vertices):
        cells = cg.cells_around_vertex(k)
        tris = np.concatenate([cell_tris[c] for c in cells])
        tris.sort()
        dofs = np.unique(dm.tri_dofs[tris].ravel())
        out.append(Subdomain(index=k, vertex=cg.vertices[k], coarse_cells=tuple(cells),
                             triangles=tris, dofs=dofs))
    return out


def partition_of_unity(cg: CoarseGrid, i: int, points: np.ndarray) -> np.ndarray:
    """Bilinear hat weight of coarse vertex i at the given points.

    Piecewise bilinear on the coarse cells, 1 at x_i, 0 at every other
    coarse vertex and outside the closure of the subdomain; the weights
    of all coarse vertices sum to 1 everywhere in [0,1]^2.

    Parameters
    ----------
    points : ndarray, shape (n, 2) or (2,)

    Returns
    -------
    ndarray of weights in [0, 1] (scalar input gives scalar output).
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    xi, yi = cg.vertices[i]
    wx = np.clip(1.0 - np.abs(p[:, 0] - xi) / cg.hx, 0.0, None)
    wy = np.clip(1.0 - np.abs(p[:, 1] - yi) / cg.hy, 0.0, None)
    w = wx * wy
    if np.asarray(points).ndim == 1:
        return w[0]
    return w


def mesh_summary(cg: CoarseGrid, fm: FineMesh, dm: DofMap) -> dict:
    """Size counters for run reports."""
    return {
        "coarse_nx": cg.nx,
        "coarse_ny": cg.ny,
        "coarse_cells": cg.n_cells,
        "coarse_vertices": cg.n_vertices,
        "refinement": fm.r,
        "fine_cells": fm.n_triangles,
        "fine_vertices": fm.n_vertices,
        "fine_edges": fm.n_edges,
        "degree": dm.degree,
        "n_dofs": dm.n_dofs,
    }
