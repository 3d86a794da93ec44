"""Binary training front door shared by the multiclass schemes and the CLI."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .conic import solve
from .pgd import PgdConfig, default_separator, pgd_train, project_feasible
from .problem import TrainReport, subopt_gap, taylor1_objective
from .relax import (
    ExtractionCandidate,
    ExtractionError,
    InfeasibleRelaxation,
    assemble_sdp,
    assemble_sparse_moment,
    ball_radius,
    extract_moment,
    extract_sdp,
    flat_extension_check,
    p_star,
)

METHODS = ("pgd", "sdp", "moment")


def default_eps() -> float:
    return float(os.environ.get("HSVM_SOLVER_EPS", "1e-8"))


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    kappa: int = 2
    eps: float | None = None  # None: HSVM_SOLVER_EPS or 1e-8
    solver: str = "ipm"  # conic backend for the relaxations
    seed: int = 0
    radius_factor: float | None = 3.0  # None: moment program without a ball
    pgd_lr: float = 1e-3
    pgd_epochs: int = 2000

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("C must be nonnegative")
        if self.kappa < 2:
            raise ValueError("kappa must be >= 2")

    @property
    def solver_eps(self) -> float:
        return default_eps() if self.eps is None else float(self.eps)


def _sdp(view, cfg: TrainConfig):
    prob = assemble_sdp(view, cfg.C)
    sol = solve(prob, eps=cfg.solver_eps, method=cfg.solver)
    return prob, sol


def _failed(method, view, cfg, t0, status, p=None):
    w = default_separator(np.asarray(view.points).shape[1])
    return TrainReport(method=method, w=w, f_hat=taylor1_objective(w, view, cfg.C), p_star=p,
                       seconds=time.perf_counter() - t0, status=status)


def _finish(method, view, cfg, t0, sol, extract, extra=None):
    try:
        p = p_star(sol)
    except InfeasibleRelaxation:
        return _failed(method, view, cfg, t0, sol.status)
    try:
        w, cands = extract()
        win = min((c for c in cands if math.isfinite(c.f_hat)), key=lambda c: c.f_hat)
    except ExtractionError as exc:
        win = _projected_winner(exc.candidates, view, cfg.C)
        if win is None:
            return _failed(method, view, cfg, t0, "extraction_failed", p)
        w = win.w
    status = "ok" if sol.status == "optimal" else f"solver_{sol.status}"
    info = {"solver_status": sol.status, "iters": sol.iters,
            "residual": max(sol.primal_res, sol.dual_res, sol.gap_res)}
    info.update(extra or {})
    return TrainReport(
        method=method, w=w, f_hat=win.f_hat, p_star=p, eta=subopt_gap(win.f_hat, p),
        seconds=time.perf_counter() - t0, source=win.source, status=status, info=info,
    )


def _projected_winner(cands, view, C):
    """Best candidate after projecting each onto ``w^T G w >= 0``, or None."""
    best = None
    for c in cands:
        if not np.all(np.isfinite(c.w)):
            continue
        w = project_feasible(c.w, 0.0)
        f = taylor1_objective(w, view, C)
        if math.isfinite(f) and (best is None or f < best.f_hat):
            best = ExtractionCandidate(w, c.source + "_projected", f)
    return best


def train_sdp(view, cfg: TrainConfig) -> TrainReport:
    t0 = time.perf_counter()
    _, sol = _sdp(view, cfg)
    return _finish("sdp", view, cfg, t0, sol, lambda: extract_sdp(sol, view, cfg.C, cfg.seed))


def reference_separator(view, cfg: TrainConfig) -> np.ndarray:
    """Best of the Shor extraction and the gradient baseline under taylor1."""
    refs = [pgd_train(view, _pgd_config(cfg)).w]
    _, sol = _sdp(view, cfg)
    try:
        refs.append(extract_sdp(sol, view, cfg.C, cfg.seed)[0])
    except (ExtractionError, ValueError):
        pass
    return min(refs, key=lambda w: taylor1_objective(w, view, cfg.C))


def train_moment(view, cfg: TrainConfig) -> TrainReport:
    t0 = time.perf_counter()
    radius = None
    if cfg.radius_factor is not None:
        radius = ball_radius(reference_separator(view, cfg), view, cfg.radius_factor)
    prob, plan = assemble_sparse_moment(view, cfg.C, cfg.kappa, radius=radius)
    sol = solve(prob, eps=cfg.solver_eps, method=cfg.solver)
    rep = _finish("moment", view, cfg, t0, sol, lambda: extract_moment(sol, plan, view, cfg.C),
                  {"radius": radius})
    if np.all(np.isfinite(sol.x)):
        rep = replace(rep, flat=flat_extension_check(plan.moment_matrix(sol.x), cfg.kappa)[0])
    return rep


def _pgd_config(cfg: TrainConfig) -> PgdConfig:
    return PgdConfig(C=cfg.C, lr=cfg.pgd_lr, epochs=cfg.pgd_epochs, seed=cfg.seed)


def train_pgd(view, cfg: TrainConfig) -> TrainReport:
    return pgd_train(view, _pgd_config(cfg))


def train_binary(view, method: str, cfg: TrainConfig) -> TrainReport:
    if method == "pgd":
        return train_pgd(view, cfg)
    if method == "sdp":
        return train_sdp(view, cfg)
    if method == "moment":
        return train_moment(view, cfg)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
