"""Tensor grids and their discrete operators.

Two layouts: a 1-D radial mesh on a ball (profiles u(r), Hessian eigenvalues
u'' and u'/r), and a uniform n-D lattice on a box. Interior second derivatives
are centered; the boundary normal derivative uses the documented 3-point
one-sided closure (3 u0 - 4 u1 + u2) / (2 h) along the inward grid line.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class RadialGrid:
    dim: int  # ambient space dimension
    R: float
    M: int  # intervals; M + 1 nodes
    r: np.ndarray = field(repr=False)
    h: float = 0.0

    @property
    def npoints(self):
        return self.M + 1

    @property
    def points(self):
        return self.r[:, None]

    @property
    def boundary_mask(self):
        mask = np.zeros(self.npoints, dtype=bool)
        mask[-1] = True
        return mask


def radial_grid(R, M, dim):
    if M < 4:
        raise ValueError("need at least 4 intervals")
    r = np.linspace(0.0, R, M + 1)
    return RadialGrid(dim=dim, R=float(R), M=int(M), r=r, h=float(R) / M)


def radial_spectra(grid, values):
    """Hessian eigenvalue profiles at the M equation nodes (0 .. M-1).

    Row i holds [u'', u'/r * (dim-1)]; at the center the mirror closure
    u(-r) = u(r) gives u'' = 2 (u1 - u0) / h^2 and the tangential ratio
    tends to u''(0).
    """
    u = np.asarray(values, dtype=np.float64)
    h = grid.h
    out = np.empty((grid.M, grid.dim))
    out[0, :] = 2.0 * (u[1] - u[0]) / (h * h)
    i = np.arange(1, grid.M)
    upp = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h)
    ratio = (u[i + 1] - u[i - 1]) / (2.0 * h) / grid.r[i]
    out[1:, 0] = upp
    out[1:, 1:] = ratio[:, None]
    return out


def radial_boundary_derivative(grid, values):
    u = np.asarray(values, dtype=np.float64)
    return (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * grid.h)


@dataclass(frozen=True)
class BoxGrid:
    dim: int
    shape: tuple
    spacings: np.ndarray = field(repr=False)
    lo: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)  # (P, dim)
    interior_flat: np.ndarray = field(repr=False)
    boundary_flat: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)  # (P, dim), zero rows interior
    dnu_rows: np.ndarray = field(repr=False)
    dnu_cols: np.ndarray = field(repr=False)
    dnu_vals: np.ndarray = field(repr=False)
    dnu: sp.csr_matrix = field(repr=False)

    @property
    def npoints(self):
        return self.points.shape[0]

    @property
    def h(self):
        return float(self.spacings.max())

    @property
    def boundary_mask(self):
        mask = np.zeros(self.npoints, dtype=bool)
        mask[self.boundary_flat] = True
        return mask


def box_grid(extents, nodes, center=None):
    """Uniform lattice on an axis-aligned box, nodes per axis >= 5."""
    extents = np.asarray(extents, dtype=np.float64)
    dim = extents.size
    if np.isscalar(nodes):
        nodes = (int(nodes),) * dim
    shape = tuple(int(nc) for nc in nodes)
    if len(shape) != dim or min(shape) < 5:
        raise ValueError("need at least 5 nodes per axis")
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
    lo = center - extents / 2.0
    spacings = extents / (np.array(shape) - 1.0)
    axes = [lo[c] + spacings[c] * np.arange(shape[c]) for c in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    P = points.shape[0]

    ids = np.arange(P).reshape(shape)
    core = tuple(slice(1, -1) for _ in range(dim))
    interior_flat = ids[core].ravel()
    interior_mask = np.zeros(P, dtype=bool)
    interior_mask[interior_flat] = True
    boundary_flat = np.where(~interior_mask)[0]

    strides = np.array([int(np.prod(shape[c + 1 :])) for c in range(dim)])

    counts = np.zeros(P)
    faces = []
    for c in range(dim):
        for side in (0, 1):
            sel = [slice(None)] * dim
            sel[c] = 0 if side == 0 else shape[c] - 1
            flat = ids[tuple(sel)].ravel()
            faces.append((c, side, flat))
            counts[flat] += 1.0

    normals = np.zeros((P, dim))
    rows, cols, vals = [], [], []
    for c, side, flat in faces:
        sgn = -1.0 if side == 0 else 1.0
        scale = sgn / np.sqrt(counts[flat])
        normals[flat, c] = scale
        step = strides[c] if side == 0 else -strides[c]
        # normal derivative contribution nu_c * (inward one-sided derivative);
        # the orientation signs collapse to (3, -4, 1)/(2 h sqrt(cnt)) along
        # the inward grid line on both sides
        for offset, coeff in ((0, 3.0), (1, -4.0), (2, 1.0)):
            rows.append(flat)
            cols.append(flat + offset * step)
            vals.append(coeff / (np.sqrt(counts[flat]) * 2.0 * spacings[c]))
    dnu_rows = np.concatenate(rows)
    dnu_cols = np.concatenate(cols)
    dnu_vals = np.concatenate(vals)
    dnu = sp.csr_matrix((dnu_vals, (dnu_rows, dnu_cols)), shape=(P, P))

    return BoxGrid(
        dim=dim, shape=shape, spacings=spacings, lo=lo, points=points,
        interior_flat=interior_flat, boundary_flat=boundary_flat,
        normals=normals, dnu_rows=dnu_rows, dnu_cols=dnu_cols,
        dnu_vals=dnu_vals, dnu=dnu,
    )


def box_hessians(grid, values):
    """Centered discrete Hessians at the interior nodes, shape (Pi, n, n)."""
    U = np.asarray(values, dtype=np.float64).reshape(grid.shape)
    n = grid.dim
    core = tuple(slice(1, -1) for _ in range(n))
    Pi = grid.interior_flat.size
    H = np.empty((Pi, n, n))

    def shifted(offsets):
        sel = list(core)
        for c, off in offsets:
            sel[c] = slice(1 + off, (-1 + off) or None)
        return U[tuple(sel)]

    mid = U[core]
    for c in range(n):
        hc = grid.spacings[c]
        d2 = (shifted([(c, 1)]) - 2.0 * mid + shifted([(c, -1)])) / (hc * hc)
        H[:, c, c] = d2.ravel()
        for d in range(c + 1, n):
            hd = grid.spacings[d]
            mixed = (
                shifted([(c, 1), (d, 1)])
                - shifted([(c, 1), (d, -1)])
                - shifted([(c, -1), (d, 1)])
                + shifted([(c, -1), (d, -1)])
            ) / (4.0 * hc * hd)
            H[:, c, d] = mixed.ravel()
            H[:, d, c] = H[:, c, d]
    return H


def box_interior_stencil(grid):
    """Static column layout of the interior Jacobian rows.

    Returns (cols, slots) where cols has shape (Pi, nstencil) and a map from
    stencil slot to its role; values are filled per state from the operator
    gradient at each node.
    """
    n = grid.dim
    strides = np.array([int(np.prod(grid.shape[c + 1 :])) for c in range(n)])
    base = grid.interior_flat
    cols = [base]  # slot 0: center
    roles = [("center", 0, 0)]
    for c in range(n):
        cols.append(base + strides[c])
        roles.append(("axis+", c, c))
        cols.append(base - strides[c])
        roles.append(("axis-", c, c))
    for c in range(n):
        for d in range(c + 1, n):
            sc, sd = strides[c], strides[d]
            cols.append(base + sc + sd)
            roles.append(("mixed++", c, d))
            cols.append(base - sc - sd)
            roles.append(("mixed--", c, d))
            cols.append(base + sc - sd)
            roles.append(("mixed+-", c, d))
            cols.append(base - sc + sd)
            roles.append(("mixed-+", c, d))
    return np.stack(cols, axis=1), roles


def box_interior_values(grid, F, roles, extra_diag=None):
    """Stencil weights for the linearized interior rows given the per-node
    gradient matrices F (Pi, n, n)."""
    Pi = F.shape[0]
    nslots = len(roles)
    vals = np.empty((Pi, nslots))
    for slot, (kind, c, d) in enumerate(roles):
        hc = grid.spacings[c]
        hd = grid.spacings[d]
        if kind == "center":
            diag = -2.0 * (F[:, range(grid.dim), range(grid.dim)]
                           / grid.spacings[None, :] ** 2).sum(axis=1)
            if extra_diag is not None:
                diag = diag + extra_diag
            vals[:, slot] = diag
        elif kind in ("axis+", "axis-"):
            vals[:, slot] = F[:, c, c] / (hc * hc)
        elif kind in ("mixed++", "mixed--"):
            vals[:, slot] = F[:, c, d] / (2.0 * hc * hd)
        else:  # mixed+- / mixed-+
            vals[:, slot] = -F[:, c, d] / (2.0 * hc * hd)
    return vals
