"""Sparse moment relaxation with star-shaped correlated sparsity.

Each sample ``i`` owns the variable group ``q_i = (w_0, ..., w_d, xi_i)`` and
its own truncated moment sequence. Group 0 is the anchor carrying the
``w^T G w >= 0`` localizer; every other group is tied to it through equality
rows on the moment-matrix positions generated by ``w`` alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..conic import ConeSpec, ConicProblem, _tri
from ..problem import SQRT2, signed_data
from .basis import MonomialBasis, TMSIndex, localizer_degree, monomials, poly_degree, unit
from .sdp import AssemblyError, _check_view


@dataclass
class MomentBlock:
    """Layout of one group's moment matrix and localizers in the conic program."""

    group: int
    z_offset: int
    moment_row: int  # first cone row of the moment matrix svec
    localizers: list  # (name, order, first cone row or nonneg row)


@dataclass
class SparsityPlan:
    groups: list[tuple[int, ...]]  # global variable ids per group
    variables: list[str]  # global variable names
    basis: MonomialBasis  # local basis shared by all groups
    tms: TMSIndex
    binding_index_set: list[tuple[int, int]]
    anchor_group: int
    blocks: list[MomentBlock]
    kappa: int
    penalty: str

    @property
    def tms_length(self) -> int:
        return len(self.tms)

    def group_tms(self, x, i: int) -> np.ndarray:
        off = self.blocks[i].z_offset
        return np.asarray(x)[off : off + len(self.tms)]

    def moment_matrix(self, x, i: int | None = None) -> np.ndarray:
        g = self.anchor_group if i is None else i
        return self.tms.moment_matrix(self.group_tms(x, g))

    def w_positions(self, dim: int) -> list[int]:
        """Basis positions of the first-degree ``w`` monomials (row 0 read-off)."""
        nv = len(self.basis.variables)
        return [self.basis.entries.index(unit(nv, j)) for j in range(dim)]


def _shared_positions(basis, local_shared: set[int]):
    """Upper-triangle positions whose row and column monomials use only shared variables."""
    only = [
        k for k, a in enumerate(basis.entries)
        if all(a[j] == 0 for j in range(len(a)) if j not in local_shared)
    ]
    return [(k, l) for i, k in enumerate(only) for l in only[i:] if (k, l) != (0, 0)]


class _Builder:
    def __init__(self):
        self.zero_r, self.zero_c, self.zero_v, self.zero_b = [], [], [], []
        self.nn_r, self.nn_c, self.nn_v, self.nn_b = [], [], [], []
        self.psd_r, self.psd_c, self.psd_v = [], [], []
        self.psd_orders = []
        self.psd_rows = 0

    def zero(self, cols, vals, rhs=0.0):
        i = len(self.zero_b)
        self.zero_r += [i] * len(cols)
        self.zero_c += list(cols)
        self.zero_v += list(vals)
        self.zero_b.append(rhs)

    def nonneg(self, cols, vals, rhs=0.0):
        i = len(self.nn_b)
        self.nn_r += [i] * len(cols)
        self.nn_c += list(cols)
        self.nn_v += list(vals)
        self.nn_b.append(rhs)
        return i

    def psd(self, order: int, entries):
        """``entries``: (row, col, var, coeff) with row <= col, building matrix ``L(x)``.

        The cone slack is ``s = svec(L(x))`` which in ``A x + s = b`` form means
        ``A = -svec-coefficients`` and ``b = 0``.
        """
        rows, cols, scale = _tri(order)
        pos = {(int(c), int(r)): k for k, (r, c) in enumerate(zip(rows, cols))}
        start = self.psd_rows
        for i, j, var, coef in entries:
            k = pos[(i, j)]
            self.psd_r.append(start + k)
            self.psd_c.append(var)
            self.psd_v.append(-coef * scale[k])
        self.psd_rows += len(rows)
        self.psd_orders.append(order)
        return start

    def build(self, c):
        n = len(c)
        Z = sp.csc_matrix((self.zero_v, (self.zero_r, self.zero_c)), shape=(len(self.zero_b), n))
        N = sp.csc_matrix((self.nn_v, (self.nn_r, self.nn_c)), shape=(len(self.nn_b), n))
        P = sp.csc_matrix((self.psd_v, (self.psd_r, self.psd_c)), shape=(self.psd_rows, n))
        A = sp.vstack([Z, N, P]).tocsc()
        b = np.concatenate([self.zero_b, self.nn_b, np.zeros(self.psd_rows)])
        cones = ConeSpec(zero=len(self.zero_b), nonneg=len(self.nn_b), psd=tuple(self.psd_orders))
        return A, b, cones


def _margin_poly(row, nv: int, xi: int, penalty: str):
    """``g = -row^T w - 1 + sqrt2 xi [- xi^2/2 + sqrt2 xi^3/6]`` as a polynomial."""
    zero = (0,) * nv
    g = {zero: -1.0}
    for j, r in enumerate(row):
        if r != 0:
            g[unit(nv, j)] = -float(r)
    g[unit(nv, xi)] = SQRT2
    if penalty == "taylor3":
        g[unit(nv, xi, 2)] = -0.5
        g[unit(nv, xi, 3)] = SQRT2 / 6.0
    return g


def assemble_sparse_moment(view, C: float, kappa: int = 2, penalty: str = "taylor1",
                           radius: float | None = None):
    """Build the sparse moment program; returns ``(ConicProblem, SparsityPlan)``.

    With ``radius`` set, every group also carries the ball localizer
    ``radius^2 - |w|^2 - xi_i^2 >= 0``.
    """
    if kappa < 2:
        raise ValueError("relaxation order kappa must be >= 2")
    if penalty not in ("taylor1", "taylor3"):
        raise ValueError("penalty must be 'taylor1' or 'taylor3'")
    _check_view(view)
    pts = np.asarray(view.points, dtype=float)
    n, dim = pts.shape
    rows = signed_data(pts, view.y)
    nv = dim + 1  # w_0..w_d, xi
    xi = dim
    names = tuple([f"w{j}" for j in range(dim)] + ["xi"])
    basis = MonomialBasis(names, kappa)
    tms = TMSIndex(nv, kappa)
    T = len(tms)
    midx = tms.moment_index()
    order = basis.size
    B = _shared_positions(basis, set(range(dim)))
    gdiag = np.ones(dim)
    gdiag[0] = -1.0

    c = np.zeros(n * T)
    bld = _Builder()
    blocks = []
    # pin the constant moment of every group
    for i in range(n):
        bld.zero([i * T + tms.pos[(0,) * nv]], [1.0], 1.0)
    for i in range(1, n):
        for k, l in B:
            a = midx[k, l]
            bld.zero([i * T + a, a], [1.0, -1.0])

    wGw = {unit(nv, j, 2): gdiag[j] for j in range(dim)}
    for i in range(n):
        off = i * T
        # objective split: (1/2n) w^T G w + C xi_i
        for j in range(dim):
            c[off + tms.pos[unit(nv, j, 2)]] += gdiag[j] / (2.0 * n)
        c[off + tms.pos[unit(nv, xi)]] += C

        r, cc = np.triu_indices(order)
        start = bld.psd(order, [(a, b_, off + midx[a, b_], 1.0) for a, b_ in zip(r, cc)])
        locs = []
        cons = [("xi", {unit(nv, xi): 1.0}), ("margin", _margin_poly(rows[i], nv, xi, penalty))]
        if i == 0:
            cons.append(("wGw", wGw))
        if radius is not None:
            ball = {(0,) * nv: float(radius) ** 2}
            for j in range(nv):
                ball[unit(nv, j, 2)] = -1.0
            cons.append(("ball", ball))
        for name, g in cons:
            s = localizer_degree(kappa, poly_degree(g))
            terms = tms.localizer_terms(g, s)
            size = len(monomials(nv, s))
            if size == 1:
                cols = [off + t[2] for t in terms]
                vals = [-t[3] for t in terms]
                locs.append((name, 1, bld.nonneg(cols, vals)))
            else:
                locs.append((name, size, ("psd", bld.psd(size, [(a, b_, off + p, v) for a, b_, p, v in terms]))))
        blocks.append(MomentBlock(group=i, z_offset=off, moment_row=start, localizers=locs))

    A, b, cones = bld.build(c)
    var_names = [f"z{i}[{nm}]" for i in range(n) for nm in _tms_names(tms, names)]
    plan = SparsityPlan(
        groups=[tuple(range(dim)) + (dim + i,) for i in range(n)],
        variables=[f"w{j}" for j in range(dim)] + [f"xi{i}" for i in range(n)],
        basis=basis,
        tms=tms,
        binding_index_set=B,
        anchor_group=0,
        blocks=blocks,
        kappa=kappa,
        penalty=penalty,
    )
    return ConicProblem(c, A, b, cones, var_names, plan), plan


def _tms_names(tms, names):
    from .basis import monomial_name

    return [monomial_name(a, names) for a in tms.monos]


def assemble_dense_moment(view, C: float, kappa: int = 2):
    """Moment relaxation over all variables at once (tiny instances only).

    Returns ``(ConicProblem, TMSIndex)``; variables are ``(w, xi_1..xi_n)``.
    """
    if kappa < 2:
        raise ValueError("relaxation order kappa must be >= 2")
    _check_view(view)
    pts = np.asarray(view.points, dtype=float)
    n, dim = pts.shape
    if n > 8:
        raise AssemblyError("dense moment relaxation is limited to n <= 8")
    rows = signed_data(pts, view.y)
    nv = dim + n
    tms = TMSIndex(nv, kappa)
    midx = tms.moment_index()
    order = midx.shape[0]
    gdiag = np.ones(dim)
    gdiag[0] = -1.0
    c = np.zeros(len(tms))
    for j in range(dim):
        c[tms.pos[unit(nv, j, 2)]] += 0.5 * gdiag[j]
    for i in range(n):
        c[tms.pos[unit(nv, dim + i)]] += C
    bld = _Builder()
    bld.zero([tms.pos[(0,) * nv]], [1.0], 1.0)
    r, cc = np.triu_indices(order)
    bld.psd(order, [(a, b_, midx[a, b_], 1.0) for a, b_ in zip(r, cc)])
    cons = []
    for i in range(n):
        cons.append({unit(nv, dim + i): 1.0})
        g = {(0,) * nv: -1.0, unit(nv, dim + i): SQRT2}
        for j, v in enumerate(rows[i]):
            if v != 0:
                g[unit(nv, j)] = -float(v)
        cons.append(g)
    cons.append({unit(nv, j, 2): gdiag[j] for j in range(dim)})
    for g in cons:
        s = localizer_degree(kappa, poly_degree(g))
        terms = tms.localizer_terms(g, s)
        size = len(monomials(nv, s))
        if size == 1:
            bld.nonneg([t[2] for t in terms], [-t[3] for t in terms])
        else:
            bld.psd(size, terms)
    A, b, cones = bld.build(c)
    return ConicProblem(c, A, b, cones, None, tms), tms



def ball_radius(w, view, factor: float = 3.0) -> float:
    """Radius for the ball localizer around a feasible reference separator.

    ``factor * sqrt(1 + |w|^2 + max_i xi_i(w)^2)`` so that the lifted point of
    ``w`` with its minimal slacks lies inside the ball. The sparse moment
    program without a ball is not compact and its infimum is in general not
    attained.
    """
    from ..problem import min_slack

    w = np.asarray(w, dtype=float)
    xi = np.atleast_1d(min_slack(w, view.points, view.y))
    return factor * float(np.sqrt(1.0 + w @ w + float(np.max(xi)) ** 2))
