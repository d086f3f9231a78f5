"""Normalized magnetic fields b = B/|B| and anisotropic conductivities.

Fields come from 2D stream functions (B = curl(psi z), i.e. field lines
are level sets of psi), from a constant direction, or from a user table
sampled on a uniform lattice.  Three built-in stream functions cover the
benchmark topologies:

* ``island``        psi = sin(pi x) sin(pi y); one island of closed
                    nested field lines around (1/2, 1/2).
* ``double_island`` psi = sin(2 pi x) sin(pi y); two side-by-side
                    islands of closed lines.
* ``open_mixed``    psi = (y-1/2)^2/2 + eps cos(2 pi x); a thin island
                    chain around y = 1/2 with most field lines running
                    open from boundary to boundary.

These are qualitative stand-ins: the production benchmark fields behind
the original data are not published in analytic form, so the presets are
chosen to reproduce the closed/closed/mixed line topologies that the
accuracy and solver behavior depend on.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

STREAM_KINDS = ("island", "double_island", "open_mixed", "radial")
FIELD_KINDS = STREAM_KINDS + ("constant", "table")


@dataclass(frozen=True)
class FieldSpec:
    """Magnetic field shape plus the conductivity pair (k_par, k_perp).

    ``eval_b`` returns the unit vector B/|B| wherever |B| exceeds
    ``null_tol`` and the zero vector at field nulls, which makes the
    diffusion tensor locally isotropic there.
    """

    kind: str
    k_perp: float = 1.0
    k_par: float = 1.0
    params: tuple = ()
    null_tol: float = 1e-12
    table: np.ndarray | None = dataclasses.field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if not self.k_perp > 0:
            raise ValueError("k_perp must be positive")
        if self.k_par < self.k_perp:
            raise ValueError("k_par must be >= k_perp")
        if self.kind == "table" and self.table is None:
            raise ValueError("table kind requires a table array")

    @property
    def k_delta(self) -> float:
        """Anisotropic conductivity excess k_par - k_perp."""
        return self.k_par - self.k_perp

    @property
    def ratio(self) -> float:
        return self.k_par / self.k_perp

    def with_anisotropy(self, ratio: float, k_perp: float | None = None) -> "FieldSpec":
        """Same field shape with k_par = ratio * k_perp."""
        kp = self.k_perp if k_perp is None else k_perp
        return dataclasses.replace(self, k_perp=kp, k_par=ratio * kp)


@dataclass(frozen=True)
class AnisotropySweep:
    """Ordered list of k_par/k_perp ratios for parameter sweeps."""

    ratios: tuple

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=float)
        if r.size == 0 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("ratios must be positive and strictly increasing")


def _raw_field(spec: FieldSpec, p: np.ndarray) -> np.ndarray:
    """Unnormalized B at points p (n, 2); B = (dpsi/dy, -dpsi/dx)."""
    x, y = p[:, 0], p[:, 1]
    out = np.empty_like(p)
    if spec.kind == "island":
        out[:, 0] = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
        out[:, 1] = -np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
    elif spec.kind == "double_island":
        out[:, 0] = np.pi * np.sin(2 * np.pi * x) * np.cos(np.pi * y)
        out[:, 1] = -2 * np.pi * np.cos(2 * np.pi * x) * np.sin(np.pi * y)
    elif spec.kind == "open_mixed":
        eps = spec.params[0] if spec.params else 0.01
        out[:, 0] = y - 0.5
        out[:, 1] = 2 * np.pi * eps * np.sin(2 * np.pi * x)
    elif spec.kind == "radial":
        out[:, 0] = 2.0 * (y - 0.5)
        out[:, 1] = -2.0 * (x - 0.5)
    elif spec.kind == "constant":
        bx, by = spec.params
        out[:, 0] = bx
        out[:, 1] = by
    elif spec.kind == "table":
        out[:] = _interp_table(spec.table, p)
    else:  # pragma: no cover - guarded in __post_init__
        raise ValueError(spec.kind)
    return out


def _interp_table(table: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a (ny+1, nx+1, 2) lattice of B samples."""
    ny1, nx1, _ = table.shape
    nx, ny = nx1 - 1, ny1 - 1
    fx = np.clip(p[:, 0], 0.0, 1.0) * nx
    fy = np.clip(p[:, 1], 0.0, 1.0) * ny
    ix = np.minimum(fx.astype(int), nx - 1)
    iy = np.minimum(fy.astype(int), ny - 1)
    tx = (fx - ix)[:, None]
    ty = (fy - iy)[:, None]
    v00 = table[iy, ix]
    v10 = table[iy, ix + 1]
    v01 = table[iy + 1, ix]
    v11 = table[iy + 1, ix + 1]
    return ((1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10
            + (1 - tx) * ty * v01 + tx * ty * v11)


def eval_b(spec: FieldSpec, points: np.ndarray) -> np.ndarray:
    """Normalized field direction b = B/|B| at the given points.

    Returns unit vectors, or the zero vector within ``spec.null_tol``
    of a field null.  Accepts a single point (2,) or an array (n, 2).
    """
    single = np.asarray(points).ndim == 1
    p = np.atleast_2d(np.asarray(points, dtype=float))
    B = _raw_field(spec, p)
    mag = np.linalg.norm(B, axis=1)
    b = np.zeros_like(B)
    mask = mag > spec.null_tol
    b[mask] = B[mask] / mag[mask, None]
    return b[0] if single else b


def builtin_fields(ratio: float = 1e6, k_perp: float = 1.0) -> tuple[FieldSpec, FieldSpec, FieldSpec]:
    """The three benchmark field presets at a given anisotropy ratio.

    Returns (island, double_island, open_mixed): closed nested lines,
    two islands of closed lines, and a mixed field where most lines run
    from boundary to boundary.
    """
    k_par = ratio * k_perp
    return (
        FieldSpec(kind="island", k_perp=k_perp, k_par=k_par),
        FieldSpec(kind="double_island", k_perp=k_perp, k_par=k_par),
        FieldSpec(kind="open_mixed", k_perp=k_perp, k_par=k_par, params=(0.01,)),
    )


def load_table_field(path, k_perp: float = 1.0, k_par: float = 1.0) -> FieldSpec:
    """Read a whitespace table of B samples: header 'nx ny', then
    (nx+1)*(ny+1) rows 'Bx By' in row-major order (x fastest)."""
    with open(path) as fh:
        nx, ny = (int(t) for t in fh.readline().split())
        data = np.loadtxt(fh)
    if data.shape != ((nx + 1) * (ny + 1), 2):
        raise ValueError(f"expected {(nx + 1) * (ny + 1)} rows of 'Bx By' in {path}")
    table = data.reshape(ny + 1, nx + 1, 2)
    return FieldSpec(kind="table", k_perp=k_perp, k_par=k_par, table=table)
