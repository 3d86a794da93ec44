"""Recover separators from relaxation solutions and test flatness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from ..conic import ConicSolution
from ..problem import taylor1_objective
from .sdp import SdpLayout

SOURCES = ("eigendirection", "gaussian_randomization", "scaled_column", "nominal", "moment_readoff")
N_RANDOM = 10
COLUMN_TOL = 1e-9
FLAT_TOL = 1e-6


class ExtractionError(RuntimeError):
    """No candidate is feasible; ``candidates`` holds the best-effort list."""

    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = candidates


class InfeasibleRelaxation(RuntimeError):
    pass


@dataclass(frozen=True)
class ExtractionCandidate:
    w: np.ndarray
    source: str
    f_hat: float


def p_star(solution: ConicSolution) -> float:
    """Relaxation optimum reported by the solver (summed group objectives for moments)."""
    if solution.status in ("primal_infeasible_cert", "dual_infeasible_cert"):
        raise InfeasibleRelaxation(f"solver returned {solution.status}")
    return float(solution.objective)


def _candidate(w, source, view, C) -> ExtractionCandidate:
    w = np.asarray(w, dtype=float).copy()
    f = taylor1_objective(w, view, C) if np.all(np.isfinite(w)) else math.inf
    return ExtractionCandidate(w, source, f)


def _eigendirection(M):
    lam, U = np.linalg.eigh(M)
    v = math.sqrt(max(lam[-1], 0.0)) * U[:, -1]
    return v, -v


def _select(cands):
    finite = [c for c in cands if math.isfinite(c.f_hat)]
    if not finite:
        raise ExtractionError("no extracted candidate is feasible", cands)
    # stable: first candidate wins ties
    best = min(range(len(finite)), key=lambda k: (finite[k].f_hat, k))
    return finite[best].w.copy(), cands


def sdp_candidates(W, w, view, C, seed: int = 0) -> list[ExtractionCandidate]:
    W = 0.5 * (np.asarray(W, dtype=float) + np.asarray(W, dtype=float).T)
    w = np.asarray(w, dtype=float)
    out = [_candidate(v, "eigendirection", view, C) for v in _eigendirection(W)]
    cov = W - np.outer(w, w)
    lam, U = np.linalg.eigh(0.5 * (cov + cov.T))
    root = U * np.sqrt(np.maximum(lam, 0.0))
    rng = np.random.default_rng(seed)
    for z in rng.standard_normal((N_RANDOM, w.size)):
        out.append(_candidate(w + root @ z, "gaussian_randomization", view, C))
    for j in range(w.size):
        if abs(w[j]) > COLUMN_TOL:
            out.append(_candidate(W[:, j] / w[j], "scaled_column", view, C))
    out.append(_candidate(w, "nominal", view, C))
    return out


def extract_sdp(sol: ConicSolution, view, C: float, seed: int = 0):
    """Best feasible separator among the standard rounding candidates.

    Returns ``(w, candidates)``; raises :class:`ExtractionError` when every
    candidate violates ``w^T G w >= 0``.
    """
    pts = np.asarray(view.points)
    lay = SdpLayout(pts.shape[1], len(pts))
    W, w, _ = lay.unpack(sol.x)
    return _select(sdp_candidates(W, w, view, C, seed))


def extract_moment(sol: ConicSolution, plan, view, C: float):
    """Read ``w`` off the anchor moment matrix, with eigendirection fallbacks."""
    dim = np.asarray(view.points).shape[1]
    M = plan.moment_matrix(sol.x)
    pos = plan.w_positions(dim)
    w = M[0, pos]
    cands = [_candidate(w, "moment_readoff", view, C)]
    top = M[np.ix_([0] + pos, [0] + pos)]
    for v in _eigendirection(top):
        cands.append(_candidate(v[1:], "eigendirection", view, C))
    return _select(cands)


def _group_vars(order: int, kappa: int) -> int:
    m = 1
    while comb(m + kappa, kappa) < order:
        m += 1
    if comb(m + kappa, kappa) != order:
        raise ValueError(f"order {order} is not a moment-matrix size for kappa={kappa}")
    return m


def _rank(M) -> int:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > FLAT_TOL * sv[0]))


def flat_extension_check(M, kappa: int):
    """Compare the numerical ranks of ``M_{kappa-1}`` and ``M_kappa``.

    Returns ``("flat" | "not_flat", (rank_low, rank_full))``.
    """
    if kappa < 2:
        raise ValueError("kappa must be >= 2")
    M = np.asarray(M, dtype=float)
    m = _group_vars(M.shape[0], kappa)
    k = comb(m + kappa - 1, kappa - 1)
    ranks = (_rank(M[:k, :k]), _rank(M))
    return ("flat" if ranks[0] == ranks[1] else "not_flat"), ranks
