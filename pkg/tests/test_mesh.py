import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisomg.mesh import build_grids, partition_of_unity, subdomains


def test_smallest_grid():
    cg, fm, dm = build_grids(1, 1, 1, 1)
    assert fm.n_vertices == 4
    assert fm.n_triangles == 2
    assert dm.n_dofs == 4


def test_p2_counts_2x2_r2():
    # hand count on the 32-triangle mesh: 5x5 vertices, 20+20+16 edges
    cg, fm, dm = build_grids(2, 2, 2, 2)
    assert fm.n_triangles == 32
    assert dm.n_vertex == 25
    assert dm.n_edge == 56
    assert dm.n_dofs == 81


def test_p2_dof_accounting_production_scale():
    # P2 dof count is vertices + facets; tally from a production-size
    # triangulation (Euler characteristic V - E + F = 1 checks the tally).
    vertices, facets, cells = 50_547, 150_838, 100_292
    assert vertices - facets + cells == 1
    assert vertices + facets == 201_385


@settings(max_examples=25, deadline=None)
@given(nx=st.integers(1, 4), ny=st.integers(1, 4), r=st.integers(1, 4),
       degree=st.sampled_from([1, 2]))
def test_count_formulas(nx, ny, r, degree):
    cg, fm, dm = build_grids(nx, ny, r, degree)
    nxf, nyf = nx * r, ny * r
    assert cg.n_vertices == (nx + 1) * (ny + 1)
    assert fm.n_vertices == (nxf + 1) * (nyf + 1)
    assert fm.n_triangles == 2 * nxf * nyf
    n_edges = (nxf + 1) * nyf + (nyf + 1) * nxf + nxf * nyf
    assert fm.n_edges == n_edges
    if degree == 1:
        assert dm.n_dofs == fm.n_vertices
    else:
        assert dm.n_dofs == fm.n_vertices + fm.n_edges


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_grids(0, 1, 1, 1)
    with pytest.raises(ValueError):
        build_grids(1, 1, 0, 2)
    with pytest.raises(ValueError):
        build_grids(1, 1, 1, 3)


def test_cells_cover_domain():
    cg, fm, dm = build_grids(3, 2, 2, 1)
    # quad areas sum to 1
    v = cg.vertices[cg.cells]
    areas = (v[:, 1, 0] - v[:, 0, 0]) * (v[:, 3, 1] - v[:, 0, 1])
    assert np.isclose(areas.sum(), 1.0, atol=1e-14)
    # triangle areas sum to 1, all positive orientation
    p = fm.vertices[fm.triangles]
    det = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
           - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    assert np.all(det > 0)
    assert np.isclose(det.sum() / 2.0, 1.0, atol=1e-14)


def test_edges_shared_by_at_most_two_triangles():
    cg, fm, dm = build_grids(2, 2, 2, 1)
    count = np.zeros(fm.n_edges, dtype=int)
    for e in fm.tri_edges.ravel():
        count[e] += 1
    assert set(np.unique(count)) <= {1, 2}
    # edges used once lie on the domain boundary
    once = np.where(count == 1)[0]
    mids = 0.5 * (fm.vertices[fm.edges[once, 0]] + fm.vertices[fm.edges[once, 1]])
    on_bnd = ((np.abs(mids) < 1e-12) | (np.abs(mids - 1.0) < 1e-12)).any(axis=1)
    assert on_bnd.all()


def test_fine_conforms_to_coarse_edges():
    # every fine vertex coordinate on a coarse line x=k/nx is exact
    cg, fm, dm = build_grids(3, 3, 4, 1)
    for t, c in zip(fm.triangles, fm.tri_coarse):
        cx, cy = c % cg.nx, c // cg.nx
        pts = fm.vertices[t]
        assert np.all(pts[:, 0] >= cx * cg.hx - 1e-14)
        assert np.all(pts[:, 0] <= (cx + 1) * cg.hx + 1e-14)
        assert np.all(pts[:, 1] >= cy * cg.hy - 1e-14)
        assert np.all(pts[:, 1] <= (cy + 1) * cg.hy + 1e-14)


def test_subdomain_counts():
    cg, fm, dm = build_grids(1, 1, 1, 1)
    subs = subdomains(cg, fm, dm)
    assert len(subs) == 4
    for s in subs:
        assert len(s.coarse_cells) == 1
        assert s.n_dofs == dm.n_dofs  # each covers the whole domain

    cg, fm, dm = build_grids(10, 10, 1, 1)
    assert len(subdomains(cg, fm, dm)) == 121

    cg, fm, dm = build_grids(3, 3, 2, 1)
    subs = subdomains(cg, fm, dm)
    interior = subs[cg.vertex_index(1, 1)]
    assert len(interior.coarse_cells) == 4
    corner = subs[cg.vertex_index(0, 0)]
    assert len(corner.coarse_cells) == 1
    edge = subs[cg.vertex_index(1, 0)]
    assert len(edge.coarse_cells) == 2


@pytest.mark.parametrize("degree", [1, 2])
def test_subdomain_dofs_tile_all_dofs(degree):
    cg, fm, dm = build_grids(3, 3, 2, degree)
    subs = subdomains(cg, fm, dm)
    counts = np.zeros(dm.n_dofs, dtype=int)
    for s in subs:
        counts[s.dofs] += 1
    assert np.all(counts >= 1)
    # dofs strictly inside one coarse cell belong to exactly 4 subdomains
    # (one per vertex of that cell); coarse-edge/vertex dofs belong to more
    x = dm.coords * cg.nx  # coarse-cell coordinates
    interior = (np.abs(x - np.round(x)) > 1e-12).all(axis=1)
    assert np.all(counts[interior] == 4)
    assert interior.any()
    assert np.all(counts <= 9)


def test_local_to_global_injective():
    cg, fm, dm = build_grids(2, 2, 2, 2)
    for s in subdomains(cg, fm, dm):
        assert len(np.unique(s.dofs)) == len(s.dofs)
        loc = s.local_of_global(s.dofs[::3])
        assert np.array_equal(s.dofs[loc], s.dofs[::3])


def test_partition_of_unity_values():
    cg, fm, dm = build_grids(4, 4, 2, 1)
    i = cg.vertex_index(2, 2)
    assert partition_of_unity(cg, i, cg.vertices[i]) == 1.0
    for j in range(cg.n_vertices):
        if j != i:
            assert partition_of_unity(cg, i, cg.vertices[j]) == 0.0
    # midpoint of an adjacent coarse edge
    mid = cg.vertices[i] + np.array([cg.hx / 2, 0.0])
    assert np.isclose(partition_of_unity(cg, i, mid), 0.5, atol=1e-14)


def test_partition_of_unity_sums_to_one():
    cg, fm, dm = build_grids(3, 4, 2, 2)
    rng = np.random.default_rng(7)
    pts = rng.random((50, 2))
    total = np.zeros(50)
    for i in range(cg.n_vertices):
        total += partition_of_unity(cg, i, pts)
    assert np.allclose(total, 1.0, atol=1e-14)
    # and at every dof coordinate
    total = np.zeros(dm.n_dofs)
    for i in range(cg.n_vertices):
        total += partition_of_unity(cg, i, dm.coords)
    assert np.allclose(total, 1.0, atol=1e-12)


def test_partition_of_unity_gradient_bound():
    # finite-difference gradient; componentwise |grad chi| <= 1/H
    cg, fm, dm = build_grids(4, 4, 3, 1)
    rng = np.random.default_rng(3)
    pts = 0.02 + 0.96 * rng.random((200, 2))
    h = 1e-7
    bound = 1.0 / min(cg.hx, cg.hy)
    for i in range(cg.n_vertices):
        for dim in range(2):
            step = np.zeros(2)
            step[dim] = h
            gp = (partition_of_unity(cg, i, pts + step)
                  - partition_of_unity(cg, i, pts - step)) / (2 * h)
            assert np.max(np.abs(gp)) <= bound * (1.0 + 1e-6)
