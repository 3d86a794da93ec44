"""First-order conic solver on the homogeneous self-dual embedding.

Solves ``min c^T x  s.t.  A x + s = b,  s in K`` where ``K`` is a product of
a zero cone, a nonnegative orthant and PSD cones given in scaled-vectorized
(svec) form. The iteration is operator splitting on the self-dual embedding
with over-relaxation, Ruiz equilibration, one cached factorization of the
linear system, and safeguarded Anderson acceleration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
STATUSES = ("optimal", "max_iters", "primal_infeasible_cert", "dual_infeasible_cert")


class NumericError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# svec / smat


@lru_cache(maxsize=None)
def _tri(n: int):
    # column-major lower triangle == row-major upper triangle, transposed
    cols, rows = np.triu_indices(n)
    scale = np.where(rows == cols, 1.0, SQRT2)
    return rows, cols, scale


def tri_size(n: int) -> int:
    return n * (n + 1) // 2


def tri_order(k: int) -> int:
    n = int(round((math.sqrt(8 * k + 1) - 1) / 2))
    if tri_size(n) != k:
        raise ValueError(f"length {k} is not a triangular number")
    return n


def svec(M) -> np.ndarray:
    """Lower triangle, column by column, off-diagonals scaled by sqrt(2)."""
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    rows, cols, scale = _tri(M.shape[-1])
    return M[..., rows, cols] * scale


def smat(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = tri_order(v.shape[-1])
    rows, cols, scale = _tri(n)
    M = np.zeros(v.shape[:-1] + (n, n))
    vals = v / scale
    M[..., rows, cols] = vals
    M[..., cols, rows] = vals
    return M


def project_psd(M) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (works on stacks of matrices)."""
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    try:
        lam, U = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    lam = np.maximum(lam, 0.0)
    return (U * lam[..., None, :]) @ np.swapaxes(U, -1, -2)


# ---------------------------------------------------------------------------
# problem containers


@dataclass(frozen=True)
class ConeSpec:
    zero: int = 0
    nonneg: int = 0
    psd: tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return self.zero + self.nonneg + sum(tri_size(n) for n in self.psd)

    def psd_offsets(self) -> list[int]:
        out, off = [], self.zero + self.nonneg
        for n in self.psd:
            out.append(off)
            off += tri_size(n)
        return out


@dataclass
class ConicProblem:
    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: ConeSpec
    var_names: list[str] | None = None
    layout: object = None  # assembly metadata used for extraction

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.A = sp.csc_matrix(self.A, dtype=float)
        m, n = self.A.shape
        if n != self.c.size:
            raise ValueError(f"A has {n} columns but c has {self.c.size} entries")
        if m != self.cones.dim or m != self.b.size:
            raise ValueError(f"A has {m} rows, b has {self.b.size}, cones need {self.cones.dim}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class ConicSolution:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    status: str
    primal_res: float
    dual_res: float
    gap_res: float
    iters: int
    objective: float
    dual_objective: float = math.nan
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# cone projections


class _Cones:
    """Precomputed block layout for fast projections."""

    def __init__(self, cones: ConeSpec):
        self.spec = cones
        self.z = cones.zero
        self.l = cones.nonneg
        groups: dict[int, list[int]] = {}
        for n, off in zip(cones.psd, cones.psd_offsets()):
            groups.setdefault(n, []).append(off)
        self.groups = []
        for n, offs in sorted(groups.items()):
            k = tri_size(n)
            idx = np.asarray(offs)[:, None] + np.arange(k)[None, :]
            self.groups.append((n, idx))

    def _psd(self, out, s):
        for n, idx in self.groups:
            if n == 1:
                out[idx] = np.maximum(s[idx], 0.0)
            else:
                out[idx] = svec(project_psd(smat(s[idx])))

    def project(self, s):
        out = np.empty_like(s)
        out[: self.z] = 0.0
        z, l = self.z, self.z + self.l
        out[z:l] = np.maximum(s[z:l], 0.0)
        self._psd(out, s)
        return out

    def project_dual(self, s):
        out = np.empty_like(s)
        out[: self.z] = s[: self.z]
        z, l = self.z, self.z + self.l
        out[z:l] = np.maximum(s[z:l], 0.0)
        self._psd(out, s)
        return out

    def block_ids(self) -> np.ndarray:
        """Label rows so that rows of one PSD block share a label."""
        m = self.spec.dim
        ids = np.arange(m)
        for _, idx in self.groups:
            for row in idx:
                ids[row] = row[0]
        return ids


def project_cone(s, cones: ConeSpec) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.size != cones.dim:
        raise ValueError(f"vector of length {s.size} does not match cone dimension {cones.dim}")
    return _Cones(cones).project(s)


def project_dual_cone(s, cones: ConeSpec) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.size != cones.dim:
        raise ValueError(f"vector of length {s.size} does not match cone dimension {cones.dim}")
    return _Cones(cones).project_dual(s)


# ---------------------------------------------------------------------------
# solver


def _ruiz(A: sp.csc_matrix, block_ids: np.ndarray, sweeps: int = 10):
    m, n = A.shape
    D = np.ones(m)
    E = np.ones(n)
    work = A.copy()
    for _ in range(sweeps):
        absA = abs(work)
        rn = np.asarray(absA.max(axis=1).todense()).ravel()
        # rows in one PSD block must share a scale so the cone is preserved
        blk = np.zeros(m)
        np.maximum.at(blk, block_ids, rn)
        rn = blk[block_ids]
        cn = np.asarray(absA.max(axis=0).todense()).ravel()
        rn = np.clip(rn, 1e-4, 1e4)
        cn = np.clip(cn, 1e-4, 1e4)
        dr = 1.0 / np.sqrt(rn)
        dc = 1.0 / np.sqrt(cn)
        D *= dr
        E *= dc
        work = sp.diags(dr) @ work @ sp.diags(dc)
    return sp.csc_matrix(work), D, E


class _Anderson:
    """Type-II Anderson acceleration with a sliding memory."""

    def __init__(self, dim: int, memory: int, reg: float = 1e-10):
        self.mem = memory
        self.reg = reg
        self.dF = np.zeros((dim, memory))
        self.dG = np.zeros((dim, memory))
        self.count = 0
        self.prev_f = None
        self.prev_g = None

    def reset(self):
        self.count = 0
        self.prev_f = None
        self.prev_g = None

    def step(self, f, g):
        if self.prev_f is not None:
            col = (self.count - 1) % self.mem
            self.dF[:, col] = f - self.prev_f
            self.dG[:, col] = g - self.prev_g
        self.prev_f = f.copy()
        self.prev_g = g.copy()
        self.count += 1
        k = min(self.count - 1, self.mem)
        if k == 0:
            return None
        Y = self.dG[:, :k]
        YtY = Y.T @ Y
        lam = self.reg * (np.trace(YtY) / k + 1e-300)
        try:
            gamma = np.linalg.solve(YtY + lam * np.eye(k), Y.T @ g)
        except np.linalg.LinAlgError:
            return None
        out = f - self.dF[:, :k] @ gamma
        if not np.all(np.isfinite(out)):
            return None
        return out


class ConicSolver:
    """Workspace holding the equilibrated data and the cached factorization.

    The iteration is Douglas-Rachford splitting on the self-dual embedding
    ``0 in M u + N_C(u)`` in the diagonal metric ``R = diag(rho_x I, r_y, 1)``:

        u_lin = (R + M)^{-1} R w
        u     = Pi_C(2 u_lin - w)
        w    <- w + alpha (u - u_lin)

    Equality rows get a 1000x smaller ``r_y`` so they are enforced harder.
    Reuse one instance to solve the same problem repeatedly without
    refactorizing.
    """

    def __init__(
        self,
        problem: ConicProblem,
        alpha: float = 1.5,
        scale: float = 0.1,
        rho_x: float = 1e-6,
        ruiz_sweeps: int = 10,
        anderson: int = 10,
        check_every: int = 10,
        infeas_tol: float = 1e-9,
        adaptive_scale: bool = True,
    ):
        m, n = problem.shape
        if m == 0 or n == 0:
            raise ValueError("structurally empty conic problem")
        self.p = problem
        self.m, self.n = m, n
        self.alpha = alpha
        self.rho_x = rho_x
        self.anderson = anderson
        self.check_every = check_every
        self.infeas_tol = infeas_tol
        self.adaptive = adaptive_scale
        self.cones = _Cones(problem.cones)

        Ahat, D, E = _ruiz(problem.A, self.cones.block_ids(), ruiz_sweeps)
        bh = D * problem.b
        ch = E * problem.c
        self.sb = 1.0 / max(np.linalg.norm(bh), 1e-6)
        self.sc = 1.0 / max(np.linalg.norm(ch), 1e-6)
        self.A = Ahat.tocsr()
        self.AT = Ahat.T.tocsr()
        self.AtA_cache = None
        self.D, self.E = D, E
        self.bh = bh * self.sb
        self.ch = ch * self.sc
        self.h = np.concatenate([self.ch, self.bh])
        self.factorizations = 0
        self._set_scale(scale)

    def _set_scale(self, scale: float):
        self.scale = scale
        ry = np.full(self.m, 1.0 / scale)
        ry[: self.cones.z] /= 1000.0
        self.ry = ry
        self.R = np.concatenate([np.full(self.n, self.rho_x), ry, [1.0]])
        K = (self.AT @ sp.diags(1.0 / ry) @ self.A).tocsc() + self.rho_x * sp.identity(self.n, format="csc")
        try:
            self._lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise NumericError(f"factorization failed: {exc}") from exc
        self.factorizations += 1
        gx, gy = self._msolve(self.ch, self.bh)
        self.g = np.concatenate([gx, gy])
        self.denom = 1.0 + self.h @ self.g

    def _msolve(self, r1, r2):
        # [[rho_x I, A^T], [-A, diag(ry)]] [x; y] = [r1; r2]
        x = self._lu.solve(r1 - self.AT @ (r2 / self.ry))
        y = (r2 + self.A @ x) / self.ry
        return x, y

    def _lin(self, w):
        n, m = self.n, self.m
        r = self.R * w
        px, py = self._msolve(r[:n], r[n : n + m])
        p = np.concatenate([px, py])
        tau = (r[-1] + self.h @ p) / self.denom
        out = np.empty_like(w)
        out[: n + m] = p - self.g * tau
        out[-1] = tau
        return out

    def _proj_C(self, u):
        n, m = self.n, self.m
        out = u.copy()
        out[n : n + m] = self.cones.project_dual(u[n : n + m])
        out[-1] = max(u[-1], 0.0)
        return out

    def _step(self, w):
        """One DR pass; returns ``(u_lin, u, v)``."""
        ul = self._lin(w)
        q = 2.0 * ul - w
        u = self._proj_C(q)
        v = self.R * (u - q)
        return ul, u, v

    def _fixed_point(self, w):
        ul, u, v = self._step(w)
        return w + self.alpha * (u - ul), u, v

    def _residuals(self, u, v):
        p = self.p
        n, m = self.n, self.m
        xh, yh, tau = u[:n], u[n : n + m], u[-1]
        sh, kappa = v[n : n + m], v[-1]
        res = {"tau": tau, "kappa": kappa}
        x_raw = self.E * xh / self.sb
        y_raw = self.D * yh / self.sc
        s_raw = sh / self.D / self.sb
        if tau > 0:
            x, y, s = x_raw / tau, y_raw / tau, s_raw / tau
            cx, by = p.c @ x, p.b @ y
            pr = np.linalg.norm(p.A @ x + s - p.b) / (1 + np.linalg.norm(p.b))
            dr = np.linalg.norm(p.A.T @ y + p.c) / (1 + np.linalg.norm(p.c))
            res.update(x=x, y=y, s=s, cx=cx, by=by, pres=pr, dres=dr,
                       gap=abs(cx + by) / (1 + abs(cx) + abs(by)))
        by_raw = p.b @ y_raw
        if by_raw < 0:
            res["pinf"] = np.linalg.norm(p.A.T @ y_raw) / -by_raw
        cx_raw = p.c @ x_raw
        if cx_raw < 0:
            res["dinf"] = np.linalg.norm(p.A @ x_raw + s_raw) / -cx_raw
        return res

    def solve(self, eps: float = 1e-7, max_iters: int = 100000) -> ConicSolution:
        N = self.n + self.m + 1
        w = np.zeros(N)
        w[-1] = 1.0
        aa = _Anderson(N, self.anderson) if self.anderson else None
        f, u, v = self._fixed_point(w)
        g = f - w
        gnorm = np.linalg.norm(g)
        best = None
        accepted = rejected = 0
        status = "max_iters"
        last_rescale = 0
        it = 0
        while it < max_iters:
            it += 1
            if aa is not None:
                cand = aa.step(f, g)
                if cand is not None:
                    f_c, u_c, v_c = self._fixed_point(cand)
                    g_c = f_c - cand
                    gn_c = np.linalg.norm(g_c)
                    if gn_c <= gnorm:
                        w, f, u, v, g, gnorm = cand, f_c, u_c, v_c, g_c, gn_c
                        accepted += 1
                    else:
                        aa.reset()
                        rejected += 1
                        cand = None
                if cand is None:
                    w = f
                    f, u, v = self._fixed_point(w)
                    g = f - w
                    gnorm = np.linalg.norm(g)
            else:
                w = f
                f, u, v = self._fixed_point(w)
                g = f - w
                gnorm = np.linalg.norm(g)
            if it % self.check_every and it != max_iters:
                continue
            r = self._residuals(u, v)
            if "pres" in r:
                score = max(r["pres"], r["dres"], r["gap"])
                if best is None or score < best[0]:
                    best = (score, r)
                if score <= eps:
                    status = "optimal"
                    break
                if self.adaptive and it - last_rescale >= 100:
                    ratio = math.sqrt(max(r["pres"], 1e-300) / max(r["dres"], 1e-300))
                    if ratio > 5 or ratio < 0.2:
                        # rescale the metric to balance primal and dual progress;
                        # keep the same point u by mapping w through the new metric
                        new = min(max(self.scale * ratio, 1e-6), 1e6)
                        w = self._remap(u, v, new)
                        if aa is not None:
                            aa.reset()
                        f, u, v = self._fixed_point(w)
                        g = f - w
                        gnorm = np.linalg.norm(g)
                        last_rescale = it
            stalled = r["tau"] < 1e-6 * max(r["kappa"], 1e-12)
            if stalled and r.get("pinf", math.inf) <= self.infeas_tol:
                status = "primal_infeasible_cert"
                break
            if stalled and r.get("dinf", math.inf) <= self.infeas_tol:
                status = "dual_infeasible_cert"
                break
        info = {"aa_accepted": accepted, "aa_rejected": rejected,
                "factorizations": self.factorizations, "scale": self.scale}
        r = best[1] if best is not None else self._residuals(u, v)
        if "x" not in r:
            nan = math.nan
            return ConicSolution(np.full(self.n, nan), np.full(self.m, nan), np.full(self.m, nan),
                                 status, math.inf, math.inf, math.inf, it, nan, nan, info)
        return ConicSolution(
            x=r["x"], y=r["y"], s=r["s"], status=status,
            primal_res=float(r["pres"]), dual_res=float(r["dres"]), gap_res=float(r["gap"]),
            iters=it, objective=float(r["cx"]), dual_objective=float(-r["by"]), info=info,
        )

    def _remap(self, u, v, scale):
        # at a fixed point w = u + R^{-1} v; rebuild w for the new metric
        self._set_scale(scale)
        return u + v / self.R


IPM_MAX_ITERS = 300


def solve(problem: ConicProblem, eps: float = 1e-7, max_iters: int = 100000,
          method: str = "admm", **kwargs) -> ConicSolution:
    """Solve ``problem`` to relative accuracy ``eps``.

    Parameters
    ----------
    method : {"admm", "ipm"}
        ``"admm"`` runs the first-order splitting solver. ``"ipm"`` runs a
        primal-dual interior-point method, which is far faster and more
        accurate on the moment relaxations; its iteration count is capped at
        ``IPM_MAX_ITERS``. Both return the best iterate seen when ``eps`` is
        not reached, with status ``max_iters``.
    """
    if method == "admm":
        return ConicSolver(problem, **kwargs).solve(eps=eps, max_iters=max_iters)
    if method != "ipm":
        raise ValueError(f"unknown conic method {method!r}")
    m, n = problem.shape
    if m == 0 or n == 0:
        raise ValueError("structurally empty conic problem")
    from ._ipm import InteriorPoint

    ip = InteriorPoint(problem.c, problem.A, problem.b, problem.cones, **kwargs)
    r = ip.solve(eps=eps, max_iters=min(max_iters, IPM_MAX_ITERS))
    return ConicSolution(
        x=r["x"], y=r["y"], s=r["s"], status=r["status"],
        primal_res=r["pres"], dual_res=r["dres"], gap_res=r["gap"], iters=r["iters"],
        objective=r["cx"], dual_objective=-r["by"], info={"reason": ip.reason},
    )


def kkt_residuals(problem: ConicProblem, sol: ConicSolution) -> tuple[float, float, float]:
    """Recompute the three termination residuals from scratch."""
    p = problem
    pres = np.linalg.norm(p.A @ sol.x + sol.s - p.b) / (1 + np.linalg.norm(p.b))
    dres = np.linalg.norm(p.A.T @ sol.y + p.c) / (1 + np.linalg.norm(p.c))
    cx, by = p.c @ sol.x, p.b @ sol.y
    gap = abs(cx + by) / (1 + abs(cx) + abs(by))
    return float(pres), float(dres), float(gap)


def dump_problem(problem: ConicProblem, path) -> None:
    """Write ``(c, A, b, cones)`` as a plain-text sparse-triplet file.

    Layout::

        cones <zero> <nonneg> <psd orders...>
        shape <m> <n>
        c <j> <value>          (one line per nonzero)
        b <i> <value>          (one line per nonzero)
        A <i> <j> <value>      (one line per nonzero)

    Indices are 0-based; PSD rows follow the svec convention of :func:`svec`.
    """
    p = problem
    coo = p.A.tocoo()
    lines = [
        "cones " + " ".join(str(v) for v in (p.cones.zero, p.cones.nonneg, *p.cones.psd)),
        f"shape {p.A.shape[0]} {p.A.shape[1]}",
    ]
    lines += [f"c {j} {float(v)!r}" for j, v in enumerate(p.c) if v != 0]
    lines += [f"b {i} {float(v)!r}" for i, v in enumerate(p.b) if v != 0]
    order = np.lexsort((coo.col, coo.row))
    lines += [f"A {coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}" for k in order]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_problem(path) -> ConicProblem:
    zero = nonneg = 0
    psd: tuple[int, ...] = ()
    m = n = 0
    c_items, b_items, a_items = [], [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "cones":
            vals = [int(t) for t in tok[1:]]
            zero, nonneg, psd = vals[0], vals[1], tuple(vals[2:])
        elif tok[0] == "shape":
            m, n = int(tok[1]), int(tok[2])
        elif tok[0] == "c":
            c_items.append((int(tok[1]), float(tok[2])))
        elif tok[0] == "b":
            b_items.append((int(tok[1]), float(tok[2])))
        elif tok[0] == "A":
            a_items.append((int(tok[1]), int(tok[2]), float(tok[3])))
        else:
            raise ValueError(f"unknown record {tok[0]!r}")
    c = np.zeros(n)
    b = np.zeros(m)
    for j, v in c_items:
        c[j] = v
    for i, v in b_items:
        b[i] = v
    if a_items:
        r, cidx, v = zip(*a_items)
    else:
        r, cidx, v = (), (), ()
    A = sp.csc_matrix((v, (r, cidx)), shape=(m, n))
    return ConicProblem(c, A, b, ConeSpec(zero, nonneg, psd))
