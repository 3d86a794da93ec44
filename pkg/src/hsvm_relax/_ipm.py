"""Primal-dual interior-point backend for the conic problems of ``conic``.

Path following with Nesterov-Todd scaling and Mehrotra predictor-corrector
steps on ``min c^T x  s.t.  A_z x = b_z,  G x + s = h,  s in K`` where ``K``
is the nonnegative orthant times PSD blocks.

Equality rows that fix a variable (``a x_i = b``) or identify two variables
(``a x_i - a x_j = 0``) are removed by substitution before the iteration;
this covers the pinning and sparse-binding rows of the moment relaxation and
leaves a positive definite, arrow-structured Newton matrix. Their multipliers
are recovered afterwards by least squares.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

_REG = 1e-15
_PROX = 0.0
_STEP = 0.99
_STALL = 25
_MAX_NORM = 1e12
_REFINE = 2


def _svec_idx(p):
    cols, rows = np.triu_indices(p)
    scale = np.where(rows == cols, 1.0, math.sqrt(2.0))
    return rows, cols, scale


def _smat(v, p):
    rows, cols, scale = _svec_idx(p)
    M = np.zeros(v.shape[:-1] + (p, p))
    vals = v / scale
    M[..., rows, cols] = vals
    M[..., cols, rows] = vals
    return M


def _svec(M):
    rows, cols, scale = _svec_idx(M.shape[-1])
    return 0.5 * (M[..., rows, cols] + M[..., cols, rows]) * scale


def _dedupe_rows(Az, bz):
    """Indices of the first occurrence of every distinct equality row."""
    Az = sp.csr_matrix(Az)
    Az.sort_indices()
    seen = set()
    keep = []
    for i in range(Az.shape[0]):
        lo, hi = Az.indptr[i], Az.indptr[i + 1]
        key = (Az.indices[lo:hi].tobytes(), Az.data[lo:hi].tobytes(), float(bz[i]))
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return np.asarray(keep, dtype=int)


class _Presolve:
    """Substitution ``x = P xr + x0`` removing fixing and identification rows."""

    def __init__(self, Az: sp.csr_matrix, bz: np.ndarray, n: int):
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        fixes, rest, elim = [], [], []
        for i in range(Az.shape[0]):
            lo, hi = Az.indptr[i], Az.indptr[i + 1]
            idx, val = Az.indices[lo:hi], Az.data[lo:hi]
            if len(idx) == 1 and val[0] != 0:
                fixes.append((i, int(idx[0]), bz[i] / val[0]))
            elif len(idx) == 2 and bz[i] == 0 and val[0] == -val[1] and val[0] != 0:
                a, b = find(int(idx[0])), find(int(idx[1]))
                if a != b:
                    parent[max(a, b)] = min(a, b)
                    elim.append(i)
                else:
                    rest.append(i)  # closes a cycle; kept as an explicit row
            else:
                rest.append(i)
        value = {}
        for i, j, v in fixes:
            r = find(j)
            if r not in value:
                value[r] = v
                elim.append(i)
            else:
                rest.append(i)
        roots = np.array([find(i) for i in range(n)], dtype=int)
        free_roots = sorted({int(r) for r in roots if int(r) not in value})
        col = {r: k for k, r in enumerate(free_roots)}
        self.x0 = np.array([value.get(int(r), 0.0) for r in roots])
        rows = [i for i in range(n) if int(roots[i]) in col]
        cols = [col[int(roots[i])] for i in rows]
        self.P = sp.csc_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, len(free_roots)))
        self.elim = np.asarray(sorted(elim), dtype=int)
        self.rest = np.asarray(sorted(rest), dtype=int)


class _FacialReduction:
    """Drop PSD rows and columns that every dual-feasible slack must leave at zero.

    A variable with zero cost whose only appearance is a diagonal entry
    ``(e, e)`` of a PSD block, entering with a negative coefficient, can grow
    without bound at no cost. Its dual constraint forces ``Z_ee = 0``, so row
    and column ``e`` of ``Z`` vanish on the whole dual feasible set. Removing
    them leaves the optimal value unchanged and restores strict feasibility of
    the dual. The deleted diagonal variables are refilled afterwards through a
    Schur complement so that the full block is PSD again.
    """

    def __init__(self, G: sp.csr_matrix, c: np.ndarray, Az: sp.csr_matrix, nl: int, orders,
                 enabled: bool = True):
        m, n = G.shape
        G = sp.csr_matrix(G)
        G.eliminate_zeros()
        Gc = G.tocsc()
        offsets = []
        off = nl
        for p in orders:
            offsets.append(off)
            off += p * (p + 1) // 2
        # PSD row -> (block, r, c)
        row_blk = np.full(m, -1)
        row_r = np.zeros(m, dtype=int)
        row_c = np.zeros(m, dtype=int)
        for b, (p, o) in enumerate(zip(orders, offsets)):
            rows, cols, _ = _svec_idx(p)
            k = rows.size
            row_blk[o : o + k] = b
            row_r[o : o + k] = rows
            row_c[o : o + k] = cols
        in_eq = np.diff(Az.tocsc().indptr) > 0 if Az.shape[0] else np.zeros(n, dtype=bool)
        active = np.ones(m, dtype=bool)
        alive = [np.ones(p, dtype=bool) for p in orders]
        lonely = {}
        changed = enabled
        while changed:
            changed = False
            cnt = np.bincount(G[active].indices, minlength=n)
            cand = np.flatnonzero((cnt == 1) & ~in_eq & (c == 0))
            for j in cand:
                if j in lonely:
                    continue
                idx = Gc.indices[Gc.indptr[j] : Gc.indptr[j + 1]]
                val = Gc.data[Gc.indptr[j] : Gc.indptr[j + 1]]
                sel = active[idx] & (val != 0)
                if sel.sum() != 1:
                    continue
                r, a = int(idx[sel][0]), float(val[sel][0])
                b = row_blk[r]
                if b < 0 or row_r[r] != row_c[r] or a >= 0:
                    continue
                e = row_r[r]
                lonely[int(j)] = (int(b), int(e), a)
                alive[b][e] = False
                o = offsets[b]
                k = orders[b] * (orders[b] + 1) // 2
                blk = slice(o, o + k)
                active[blk] &= (row_r[blk] != e) & (row_c[blk] != e)
                changed = True
        cnt = np.bincount(G[active].indices, minlength=n)
        free = (cnt == 0) & ~in_eq & (c == 0)
        keep = np.ones(n, dtype=bool)
        keep[list(lonely)] = False
        keep &= ~free
        # new row order: nonneg rows, then each surviving block in svec order
        row_map = [np.arange(nl)]
        new_orders = []
        for b, (p, o) in enumerate(zip(orders, offsets)):
            I = np.flatnonzero(alive[b])
            if I.size == 0:
                continue
            pos = np.zeros((p, p), dtype=int)
            rows, cols, _ = _svec_idx(p)
            pos[rows, cols] = np.arange(rows.size)
            pos[cols, rows] = np.arange(rows.size)
            r2, c2, _ = _svec_idx(I.size)
            row_map.append(o + pos[I[r2], I[c2]])
            new_orders.append(int(I.size))
        self.row_map = np.concatenate(row_map).astype(int)
        self.keep = np.flatnonzero(keep)
        self.orders = tuple(new_orders)
        self.lonely = lonely
        self.G1 = G
        self.offsets = offsets
        self.orders1 = tuple(orders)
        self.alive = alive
        self.n1 = n
        self.m1 = m
        self.active = bool(lonely)

    def lift_x(self, x2, h1):
        x1 = np.zeros(self.n1)
        x1[self.keep] = x2
        if not self.lonely:
            return x1
        by_block: dict[int, list] = {}
        for j, (b, e, a) in self.lonely.items():
            by_block.setdefault(b, []).append((e, j, a))
        for b, items in by_block.items():
            p, o = self.orders1[b], self.offsets[b]
            k = p * (p + 1) // 2
            M = _smat(h1[o : o + k] - self.G1[o : o + k] @ x1, p)
            I = np.flatnonzero(self.alive[b])
            D = np.array([e for e, _, _ in items])
            if I.size:
                lam, U = np.linalg.eigh(M[np.ix_(I, I)])
                tol = 1e-12 * max(float(np.abs(lam).max()), 1.0)
                inv = np.where(lam > tol, 1.0 / np.where(lam > tol, lam, 1.0), 0.0)
                B = U.T @ M[np.ix_(I, D)]
                S = B.T @ (inv[:, None] * B)
            else:
                S = np.zeros((D.size, D.size))
            need = float(np.linalg.eigvalsh(S - M[np.ix_(D, D)])[-1])
            tau = max(need, 0.0) * (1 + 1e-9) + 1e-12
            for e, j, a in items:
                x1[j] += tau / (-a)
        return x1


class _PsdGroup:
    """PSD blocks of one order, handled as a batch."""

    def __init__(self, p, offsets, G: sp.csr_matrix):
        self.p = p
        k = p * (p + 1) // 2
        self.rows = np.asarray(offsets)[:, None] + np.arange(k)[None, :]
        cols_list = [np.unique(G[r].indices) for r in self.rows]
        nb = len(offsets)
        width = max((c.size for c in cols_list), default=0)
        self.colpad = np.zeros((nb, width), dtype=int)
        self.mask = np.zeros((nb, width), dtype=bool)
        self.Gm = np.zeros((nb, width, p, p))
        for b, (r, cols) in enumerate(zip(self.rows, cols_list)):
            if cols.size == 0:
                continue
            sub = G[r][:, cols].toarray()
            self.colpad[b, : cols.size] = cols
            self.mask[b, : cols.size] = True
            self.Gm[b, : cols.size] = _smat(sub.T, p)
        m2 = self.mask[:, :, None] & self.mask[:, None, :]
        self.h_rows = np.repeat(self.colpad[:, :, None], width, axis=2)[m2]
        self.h_cols = np.repeat(self.colpad[:, None, :], width, axis=1)[m2]
        self.h_mask = m2

    def scaling(self, s, z):
        p = self.p
        Ls = np.linalg.cholesky(_smat(s[self.rows], p))
        Lz = np.linalg.cholesky(_smat(z[self.rows], p))
        _, sig, Vt = np.linalg.svd(np.swapaxes(Lz, -1, -2) @ Ls)
        R = (Ls @ np.swapaxes(Vt, -1, -2)) / np.sqrt(sig)[:, None, :]
        return R, np.linalg.inv(R), sig

    def hessian_values(self, Rinv):
        T = Rinv[:, None] @ self.Gm @ np.swapaxes(Rinv, -1, -2)[:, None]
        Tv = _svec(T) * self.mask[..., None]
        return (Tv @ np.swapaxes(Tv, -1, -2))[self.h_mask]


class InteriorPoint:
    """One-shot solver object; call :meth:`solve` once."""

    def __init__(self, c, A, b, cones, facial_reduction: bool = False):
        A = sp.csr_matrix(A, dtype=float)
        b = np.asarray(b, dtype=float)
        self.A_full, self.b_full = A, b
        self.c_full = np.asarray(c, dtype=float)
        nz, nl = cones.zero, cones.nonneg
        self.nz_full, self.nl = nz, nl
        Az, bz = A[:nz], b[:nz]
        keep = _dedupe_rows(Az, bz)
        self.Az_keep, self.bz_keep, self.keep = Az[keep], bz[keep], keep
        self.pre = _Presolve(self.Az_keep, self.bz_keep, A.shape[1])
        P, x0 = self.pre.P, self.pre.x0
        G = A[nz:]
        self.G_full = G.tocsr()
        self.G1 = (G @ P).tocsr()
        self.h1 = b[nz:] - G @ x0
        Ar = self.Az_keep[self.pre.rest]
        Az1 = (Ar @ P).tocsr()
        self.bz = self.bz_keep[self.pre.rest] - Ar @ x0
        c1 = P.T @ self.c_full
        self.fr = _FacialReduction(self.G1, c1, Az1, nl, cones.psd, facial_reduction)
        fr = self.fr
        self.G = self.G1[fr.row_map][:, fr.keep].tocsr()
        self.h = self.h1[fr.row_map]
        self.Az = Az1[:, fr.keep].tocsr()
        self.c = c1[fr.keep]
        self.n = fr.keep.size
        self.cones_full = cones
        self.GT = self.G.T.tocsr()
        self.AzT = self.Az.T.tocsr()
        self.Gl = self.G[:nl]
        groups: dict[int, list[int]] = {}
        off = nl
        for p in fr.orders:
            groups.setdefault(p, []).append(off)
            off += p * (p + 1) // 2
        self.groups = [_PsdGroup(p, offs, self.G) for p, offs in sorted(groups.items())]
        self.nu = nl + sum(fr.orders)
        self.e = self._identity()
        self.reason = ""
        self.prox = _PROX

    # -- cone algebra (lam is blockwise diagonal) -----------------------------

    def _identity(self):
        e = np.zeros(self.G.shape[0])
        e[: self.nl] = 1.0
        for g in self.groups:
            rows, cols, _ = _svec_idx(g.p)
            e[g.rows[:, rows == cols]] = 1.0
        return e

    def _lam_vec(self, lam):
        v = np.zeros(self.G.shape[0])
        v[: self.nl] = lam["l"]
        for g, sig in zip(self.groups, lam["s"]):
            rows, cols, _ = _svec_idx(g.p)
            v[g.rows[:, rows == cols]] = sig
        return v

    def _jprod(self, u, v):
        out = np.empty_like(u)
        l = self.nl
        out[:l] = u[:l] * v[:l]
        for g in self.groups:
            UV = _smat(u[g.rows], g.p) @ _smat(v[g.rows], g.p)
            out[g.rows] = _svec(0.5 * (UV + np.swapaxes(UV, -1, -2)))
        return out

    def _lam_inv(self, lam, v):
        out = np.empty_like(v)
        l = self.nl
        out[:l] = v[:l] / lam["l"]
        for g, sig in zip(self.groups, lam["s"]):
            V = _smat(v[g.rows], g.p)
            out[g.rows] = _svec(2.0 * V / (sig[:, :, None] + sig[:, None, :]))
        return out

    def _max_step(self, lam, d):
        """Largest ``a`` with ``lam + a d`` in the cone."""
        amax = math.inf
        l = self.nl
        if l:
            neg = d[:l] < 0
            if neg.any():
                amax = min(amax, float(np.min(-lam["l"][neg] / d[:l][neg])))
        for g, sig in zip(self.groups, lam["s"]):
            isq = 1.0 / np.sqrt(sig)
            D = _smat(d[g.rows], g.p) * isq[:, :, None] * isq[:, None, :]
            mn = float(np.linalg.eigvalsh(D)[:, 0].min())
            if mn < 0:
                amax = min(amax, -1.0 / mn)
        return amax

    def _scaling(self, s, z):
        l = self.nl
        scal = {"d": np.sqrt(s[:l] / z[:l]), "R": [], "Rinv": []}
        lam = {"l": np.sqrt(s[:l] * z[:l]), "s": []}
        for g in self.groups:
            R, Rinv, sig = g.scaling(s, z)
            scal["R"].append(R)
            scal["Rinv"].append(Rinv)
            lam["s"].append(sig)
        scal["lam"] = lam
        return scal

    def _apply(self, scal, u, kind):
        """``W u``, ``W^T u`` or ``(W^T W)^{-1} u`` blockwise."""
        out = np.empty_like(u)
        l = self.nl
        d = scal["d"]
        out[:l] = u[:l] / d**2 if kind == "winv2" else u[:l] * d
        for g, R, Rinv in zip(self.groups, scal["R"], scal["Rinv"]):
            U = _smat(u[g.rows], g.p)
            if kind == "w":
                M = np.swapaxes(R, -1, -2) @ U @ R
            elif kind == "wt":
                M = R @ U @ np.swapaxes(R, -1, -2)
            else:
                Q = np.swapaxes(Rinv, -1, -2) @ Rinv
                M = Q @ U @ Q
            out[g.rows] = _svec(M)
        return out

    # -- Newton system --------------------------------------------------------

    def _factor(self, scal):
        n, mz = self.n, self.Az.shape[0]
        H = (self.Gl.T @ sp.diags(1.0 / scal["d"] ** 2) @ self.Gl).tocoo()
        rr, cc, vv = [H.row], [H.col], [H.data]
        for g, Rinv in zip(self.groups, scal["Rinv"]):
            rr.append(g.h_rows)
            cc.append(g.h_cols)
            vv.append(g.hessian_values(Rinv))
        Hs = sp.csc_matrix(
            (np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))), shape=(n, n)
        )
        reg = _REG * max(float(np.abs(Hs.diagonal()).max(initial=0.0)), 1.0)
        # primal regularization damps drift along zero-cost recession directions;
        # it only alters the search direction, never the residual equations
        Hs = (Hs + self.prox * sp.identity(n, format="csc")).tocsc()
        if mz:
            K0 = sp.bmat([[Hs, self.AzT], [self.Az, None]], format="csc")
            K = K0 + sp.diags(np.concatenate([np.full(n, reg), np.full(mz, -reg)]), format="csc")
            lu = spla.splu(K, permc_spec="COLAMD")
        else:
            K0 = Hs
            K = (Hs + reg * sp.identity(n, format="csc")).tocsc()
            lu = spla.splu(
                K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )

        def reduced(r1, r2):
            rhs = np.concatenate([r1, r2])
            sol = lu.solve(rhs)
            for _ in range(4):
                sol = sol + lu.solve(rhs - K0 @ sol)
            return sol[:n], sol[n:]

        def base(bx, by, bzr):
            t = self._apply(scal, bzr, "winv2")
            dx, dy = reduced(bx + self.GT @ t, by)
            dz = self._apply(scal, self.G @ dx - bzr, "winv2")
            return dx, dy, dz

        def solver(bx, by, bzr):
            # [0 Az^T G^T; Az 0 0; G 0 -W^T W] [dx dy dz] = [bx by bzr]
            dx, dy, dz = base(bx, by, bzr)
            # refine on the unreduced system: the assembled Hessian loses
            # accuracy when the scaling is ill-conditioned
            for _ in range(_REFINE):
                wz = self._apply(scal, self._apply(scal, dz, "w"), "wt")
                e1 = bx - self.AzT @ dy - self.GT @ dz
                e2 = by - self.Az @ dx
                e3 = bzr - self.G @ dx + wz
                cx, cy, cz = base(e1, e2, e3)
                dx, dy, dz = dx + cx, dy + cy, dz + cz
            return dx, dy, dz

        return solver

    def _min_eig(self, v):
        out = math.inf
        if self.nl:
            out = float(v[: self.nl].min())
        for g in self.groups:
            out = min(out, float(np.linalg.eigvalsh(_smat(v[g.rows], g.p))[:, 0].min()))
        return out

    def _initial_point(self):
        """Least-norm primal and dual points shifted into the cone interior."""
        l = self.nl
        eye = [np.broadcast_to(np.eye(g.p), (g.rows.shape[0], g.p, g.p)) for g in self.groups]
        scal = {"d": np.ones(l), "R": eye, "Rinv": eye}
        e = self.e
        try:
            solver = self._factor(scal)
            x, _, zx = solver(np.zeros(self.n), self.bz, self.h)
            s = -zx
            _, y, z = solver(-self.c, np.zeros(self.Az.shape[0]), np.zeros_like(self.h))
        except (np.linalg.LinAlgError, RuntimeError):
            return np.zeros(self.n), np.zeros(self.Az.shape[0]), e.copy(), e.copy()
        for v in (s, z):
            a = -self._min_eig(v)
            if a >= -1e-8 * max(1.0, float(np.linalg.norm(v))):
                v += (1.0 + max(a, 0.0)) * e
        return x, y, s, z

    # -- main loop ------------------------------------------------------------

    def solve(self, eps: float = 1e-8, max_iters: int = 200) -> dict:
        c, h, bz, e = self.c, self.h, self.bz, self.e
        x, y, s, z = self._initial_point()
        best = None
        status = "max_iters"
        self.reason = "max_iters"
        stall = 0
        mu_low = math.inf
        it = 0
        for it in range(1, max_iters + 1):
            rx = self.AzT @ y + self.GT @ z + c
            ry = self.Az @ x - bz
            rz = self.G @ x + s - h
            full = self._expand(x, y, s, z)
            score = max(full["pres"], full["dres"], full["gap"])
            mu = float(s @ z) / self.nu
            if best is None or score < best[0]:
                best = (score, full)
                stall, mu_low = 0, mu
            elif mu < 0.9 * mu_low:
                # residuals flat but the path is still being followed
                stall, mu_low = 0, mu
            else:
                stall += 1
            if score <= eps:
                status = "optimal"
                self.reason = "converged"
                break
            if stall >= _STALL:
                self.reason = "stall"
                break
            if np.linalg.norm(x) > _MAX_NORM:
                self.reason = "diverging"
                break
            try:
                scal = self._scaling(s, z)
                solver = self._factor(scal)
            except (np.linalg.LinAlgError, RuntimeError) as exc:
                self.reason = f"linear algebra: {exc}"
                break
            lam = scal["lam"]
            lam_v = self._lam_vec(lam)
            lamsq = self._jprod(lam_v, lam_v)

            def direction(dsc):
                lz = self._lam_inv(lam, dsc)
                dx, dy, dz = solver(-rx, -ry, -rz - self._apply(scal, lz, "wt"))
                wdz = self._apply(scal, dz, "w")
                return dx, dy, dz, lz - wdz, wdz

            # predictor
            _, _, _, dsa, dza = direction(-lamsq)
            a_aff = min(1.0, self._max_step(lam, dsa), self._max_step(lam, dza))
            gap_aff = float((lam_v + a_aff * dsa) @ (lam_v + a_aff * dza))
            sigma = min(1.0, max(0.0, gap_aff / max(float(lam_v @ lam_v), 1e-300))) ** 3
            # corrector
            dx, dy, dz, ds_t, dz_t = direction(-lamsq - self._jprod(dsa, dza) + sigma * mu * e)
            alpha = min(1.0, _STEP * min(self._max_step(lam, ds_t), self._max_step(lam, dz_t)))
            if not np.isfinite(alpha) or alpha < 1e-12:
                self.reason = "step"
                break
            x = x + alpha * dx
            y = y + alpha * dy
            s = s + alpha * self._apply(scal, ds_t, "wt")
            z = z + alpha * dz
        out = best[1]
        out["status"] = status
        out["iters"] = it
        return out

    def _project(self, v):
        out = v.copy()
        l = self.nl
        out[:l] = np.maximum(v[:l], 0.0)
        off = l
        for p in self.cones_full.psd:
            k = p * (p + 1) // 2
            lam, U = np.linalg.eigh(_smat(v[off : off + k], p))
            out[off : off + k] = _svec((U * np.maximum(lam, 0.0)) @ U.T)
            off += k
        return out

    def _expand(self, xr, yr, s, z) -> dict:
        """Map a reduced iterate to the original problem and measure residuals."""
        pre, fr = self.pre, self.fr
        x1 = fr.lift_x(xr, self.h1)
        z1 = np.zeros(fr.m1)
        z1[fr.row_map] = z
        z = z1
        x = pre.P @ x1 + pre.x0
        yk = np.zeros(len(self.keep))
        yk[pre.rest] = yr
        if pre.elim.size:
            # multipliers of the substituted rows: Az_e^T y_e = -(c + G^T z + Az_r^T y_r)
            r = self.c_full + self.G_full.T @ z + self.Az_keep.T @ yk
            Ae = self.Az_keep[pre.elim]
            ye = spla.lsqr(Ae.T, -r, atol=1e-15, btol=1e-15, iter_lim=10 * Ae.shape[0] + 100)[0]
            yk[pre.elim] = ye
        yz = np.zeros(self.nz_full)
        yz[self.keep] = yk
        yf = np.concatenate([yz, z])
        A, b, c = self.A_full, self.b_full, self.c_full
        sf = b - A @ x
        sf[: self.nz_full] = 0.0
        sf[self.nz_full :] = self._project(sf[self.nz_full :])
        pres = np.linalg.norm(A @ x + sf - b) / (1 + np.linalg.norm(b))
        dres = np.linalg.norm(A.T @ yf + c) / (1 + np.linalg.norm(c))
        cx, by = float(c @ x), float(b @ yf)
        gap = abs(cx + by) / (1 + abs(cx) + abs(by))
        return dict(x=x, y=yf, s=sf, pres=float(pres), dres=float(dres), gap=float(gap), cx=cx, by=by)
