"""Projected gradient descent baseline with a tangent-space warm start."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .manifold import log0
from .problem import HsvmConfig, TrainReport, objective, signed_data, taylor1_objective


@dataclass(frozen=True)
class PgdConfig:
    C: float = 1.0
    lr: float = 1e-3
    epochs: int = 2000
    seed: int = 0
    eps_proj: float = 1e-8
    warm_epochs: int = 500
    warm_lr: float = 1e-2
    warm_reg: float = 1e-2

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def default_separator(dim: int) -> np.ndarray:
    w = np.zeros(dim)
    w[1] = 1.0
    return w


def project_feasible(w, eps_proj: float = 1e-8) -> np.ndarray:
    """Nearest point of ``{|w_0| <= ||w_1:||}`` in the Euclidean norm.

    Points with ``w^T G w >= -eps_proj`` are returned unchanged.
    """
    w = np.asarray(w, dtype=float).copy()
    a = abs(w[0])
    r = float(np.linalg.norm(w[1:]))
    if r * r - a * a >= -eps_proj:
        return w
    sign = 1.0 if w[0] >= 0 else -1.0
    if r == 0.0:
        out = np.zeros_like(w)
        out[0] = sign * a / 2.0
        out[1] = a / 2.0
        return out
    t = (a + r) / 2.0
    out = np.empty_like(w)
    out[0] = sign * t
    out[1:] = w[1:] * (t / r)
    return out


def euclidean_warmstart(view, cfg: PgdConfig | None = None) -> np.ndarray:
    """Hinge-loss linear separator on ``log0`` features, lifted to the ambient space.

    The tangent classifier ``sign(u . v + b)`` matches ``sign(w * x)`` near the
    origin for ``w = (b, -u)``.
    """
    cfg = cfg or PgdConfig()
    pts = np.asarray(view.points, dtype=float)
    y = np.asarray(view.y, dtype=float)
    if not view.two_sided:
        return default_separator(pts.shape[1])
    V = log0(pts)
    n, d = V.shape
    u = np.zeros(d)
    b = 0.0
    for _ in range(cfg.warm_epochs):
        active = y * (V @ u + b) < 1.0
        gu = cfg.warm_reg * u - (y[active, None] * V[active]).sum(axis=0) / n
        gb = -y[active].sum() / n
        u -= cfg.warm_lr * gu
        b -= cfg.warm_lr * gb
    return project_feasible(np.concatenate([[b], -u]), cfg.eps_proj)


def grad_objective(w, view, C: float) -> np.ndarray:
    """Gradient of ``1/2 w^T G w + C sum l(z_i)`` with the arcsinh hinge ``l``."""
    w = np.asarray(w, dtype=float)
    rows = signed_data(view.points, view.y)
    g = w.copy()
    g[0] = -g[0]
    if C == 0:
        return g
    z = -(rows @ w)
    dl = np.where(z < 1.0, -1.0 / np.sqrt(1.0 + z * z), 0.0)
    return g + C * (dl @ -rows)


def exact_objective(w, view, C: float) -> float:
    return objective(w, view, HsvmConfig(C=C, penalty="exact")).total


def pgd_train(view, cfg: PgdConfig, w0=None) -> TrainReport:
    """Full-batch projected gradient descent returning the best iterate seen."""
    t0 = time.perf_counter()
    w = euclidean_warmstart(view, cfg) if w0 is None else project_feasible(w0, cfg.eps_proj)
    best_w, best_f = w.copy(), exact_objective(w, view, cfg.C)
    history = np.empty(cfg.epochs + 1)
    history[0] = best_f
    for k in range(cfg.epochs):
        w = project_feasible(w - cfg.lr * grad_objective(w, view, cfg.C), cfg.eps_proj)
        f = exact_objective(w, view, cfg.C)
        if f < best_f:
            best_w, best_f = w.copy(), f
        history[k + 1] = best_f
    return TrainReport(
        method="pgd", w=best_w, f_hat=taylor1_objective(best_w, view, cfg.C),
        seconds=time.perf_counter() - t0,
        info={"exact_objective": best_f, "best_history": history},
    )
