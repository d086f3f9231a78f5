"""File writers: legacy VTK, Matrix Market, CSV and JSON.

All writers format numbers explicitly so that repeated runs with the
same inputs produce byte-identical files; anything time-dependent
belongs in the separate timing files, never here.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sparse

from .mesh import FineMesh


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_vtk(path, fm: FineMesh, point_data: dict | None = None) -> None:
    """Legacy ASCII VTK unstructured grid of the fine triangulation.

    ``point_data`` maps names to per-vertex arrays; nodal fields with
    more entries than vertices (P2 coefficients) are truncated to the
    vertex block, which is exact for Lagrange dofs.
    """
    nv = fm.n_vertices
    nt = fm.n_triangles
    lines = ["# vtk DataFile Version 3.0", "anisomg field export", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    for p in fm.vertices:
        lines.append(f"{_fmt(p[0])} {_fmt(p[1])} 0")
    lines.append(f"CELLS {nt} {4 * nt}")
    for t in fm.triangles:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    lines.append(f"CELL_TYPES {nt}")
    lines.extend(["5"] * nt)
    if point_data:
        lines.append(f"POINT_DATA {nv}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.ndim == 1:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(_fmt(v) for v in values[:nv])
            else:
                lines.append(f"VECTORS {name} double")
                for row in values[:nv]:
                    lines.append(f"{_fmt(row[0])} {_fmt(row[1])} 0")
    Path(path).write_text("\n".join(lines) + "\n")


def write_matrix_market(path, mat: sparse.spmatrix) -> None:
    scipy.io.mmwrite(str(path), sparse.coo_matrix(mat))


def write_vector(path, v: np.ndarray) -> None:
    """Whitespace-separated text, one entry per line."""
    Path(path).write_text("\n".join(f"{x:.17g}" for x in np.asarray(v).ravel()) + "\n")


def read_vector(path) -> np.ndarray:
    return np.loadtxt(path, ndmin=1)


def write_csv(path, columns: list[str], rows: list[list[str]]) -> None:
    """CSV with pre-formatted cells (callers own the number formats)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def write_eigenvalue_csv(path, results) -> None:
    """Per-subdomain eigenvalue table (one row per eigenpair)."""
    rows = []
    for res in results:
        for j, lam in enumerate(res.eigenvalues):
            rows.append([str(res.index), str(j + 1), f"{lam:.12e}"])
    write_csv(path, ["subdomain", "mode", "eigenvalue"], rows)
