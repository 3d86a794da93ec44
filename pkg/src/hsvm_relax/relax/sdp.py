"""Shor relaxation of the first-order soft-margin HSVM.

The decision variables are the entries of the coupling block
``Z = [[1, w^T], [w, W]]`` (one variable per lower-triangle entry, in svec
order) followed by the slacks ``xi``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..conic import ConeSpec, ConicProblem, _tri, tri_size
from ..manifold import jacobian_exp0
from ..problem import SQRT2, signed_data


class AssemblyError(ValueError):
    pass


class _Rows:
    """Accumulate sparse constraint rows block by block."""

    def __init__(self):
        self.r, self.c, self.v = [], [], []
        self.b = []

    def add(self, cols, vals, rhs=0.0):
        i = len(self.b)
        self.r.extend([i] * len(cols))
        self.c.extend(cols)
        self.v.extend(vals)
        self.b.append(rhs)
        return i

    def matrix(self, ncols):
        return sp.csc_matrix((self.v, (self.r, self.c)), shape=(len(self.b), ncols))


class SdpLayout:
    """Variable positions of the Shor program for ambient dimension ``dim``."""

    def __init__(self, dim: int, n: int, n_aux: int = 0):
        self.dim = dim  # d + 1
        self.order = dim + 1
        rows, cols, scale = _tri(self.order)
        self.entry_rows, self.entry_cols, self.entry_scale = rows, cols, scale
        self.pos = {}
        for k, (r, c) in enumerate(zip(rows, cols)):
            self.pos[(r, c)] = k
            self.pos[(c, r)] = k
        self.nz = tri_size(self.order)
        self.n = n
        self.xi0 = self.nz
        self.aux0 = self.nz + n
        self.nvars = self.nz + n + n_aux

    def w_index(self, j: int) -> int:
        return self.pos[(j + 1, 0)]

    def W_index(self, j: int, k: int) -> int:
        return self.pos[(j + 1, k + 1)]

    def names(self) -> list[str]:
        out = [f"Z[{r},{c}]" for r, c in zip(self.entry_rows, self.entry_cols)]
        out += [f"xi[{i}]" for i in range(self.n)]
        out += [f"t[{k}]" for k in range(self.nvars - self.aux0)]
        return out

    def block(self, x) -> np.ndarray:
        Z = np.zeros((self.order, self.order))
        vals = np.asarray(x)[: self.nz]
        Z[self.entry_rows, self.entry_cols] = vals
        Z[self.entry_cols, self.entry_rows] = vals
        return Z

    def unpack(self, x):
        """Return ``(W, w, xi)`` from a primal vector."""
        Z = self.block(x)
        return Z[1:, 1:], Z[1:, 0], np.asarray(x)[self.xi0 : self.xi0 + self.n]


def _check_view(view):
    pts = np.asarray(view.points)
    if pts.ndim != 2 or len(view.y) != len(pts):
        raise AssemblyError("points and labels disagree in length")
    if len(pts) < 1:
        raise AssemblyError("need at least one sample")


def _assemble(view, C: float, rho: float | None):
    _check_view(view)
    pts = np.asarray(view.points, dtype=float)
    n, dim = pts.shape
    d = dim - 1
    robust = rho is not None
    lay = SdpLayout(dim, n, n * d if robust else 0)
    B = signed_data(pts, view.y)  # rows y_i G x_i
    w_cols = [lay.w_index(j) for j in range(dim)]
    diag_cols = [lay.W_index(j, j) for j in range(dim)]
    gdiag = np.ones(dim)
    gdiag[0] = -1.0

    c = np.zeros(lay.nvars)
    c[diag_cols] = 0.5 * gdiag
    c[lay.xi0 : lay.xi0 + n] = C

    zero, nonneg = _Rows(), _Rows()
    zero.add([lay.pos[(0, 0)]], [1.0], 1.0)
    for i in range(n):
        nonneg.add([lay.xi0 + i], [-1.0])
    for i in range(n):
        cols = w_cols + [lay.xi0 + i]
        vals = list(B[i]) + [-SQRT2]
        if robust:
            aux = [lay.aux0 + i * d + k for k in range(d)]
            cols += aux
            vals += [rho] * d
        nonneg.add(cols, vals, -1.0)
    nonneg.add(diag_cols, list(-gdiag))
    if robust:
        # t_ik >= +-((G J_i)^T w)_k
        for i in range(n):
            GJ = jacobian_exp0(pts[i]).copy()
            GJ[0] *= -1.0
            for k in range(d):
                t = lay.aux0 + i * d + k
                nonneg.add(w_cols + [t], list(GJ[:, k]) + [-1.0])
                nonneg.add(w_cols + [t], list(-GJ[:, k]) + [-1.0])
    A_psd = sp.csc_matrix(
        (-lay.entry_scale, (np.arange(lay.nz), np.arange(lay.nz))), shape=(lay.nz, lay.nvars)
    )
    A = sp.vstack([zero.matrix(lay.nvars), nonneg.matrix(lay.nvars), A_psd]).tocsc()
    b = np.concatenate([zero.b, nonneg.b, np.zeros(lay.nz)])
    cones = ConeSpec(zero=len(zero.b), nonneg=len(nonneg.b), psd=(lay.order,))
    return ConicProblem(c, A, b, cones, lay.names(), lay), lay


def assemble_sdp(view, C: float) -> ConicProblem:
    """Conic form of the Shor relaxation; variable positions live in ``.layout``."""
    return _assemble(view, C, None)[0]


def assemble_robust_sdp(view, C: float, rho: float) -> ConicProblem:
    """Shor relaxation with the linearized l_inf tangent-space uncertainty.

    Each margin row gains ``rho * sum_k t_ik`` with ``t_ik >= |((G J_i)^T w)_k|``
    where ``J_i`` is the Jacobian of ``exp0`` at ``log0(x_i)``.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return _assemble(view, C, float(rho))[0]
