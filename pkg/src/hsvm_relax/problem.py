"""Soft-margin HSVM objective, its polynomial surrogates and the gap."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

SQRT2 = math.sqrt(2.0)
ASINH1 = math.asinh(1.0)
PENALTIES = ("exact", "taylor1", "taylor3")
_CUBIC_CAP = 100.0


@dataclass(frozen=True)
class HsvmConfig:
    C: float = 1.0
    penalty: str = "taylor1"
    feasibility_tol: float = 1e-8

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("C must be nonnegative")
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}")


@dataclass(frozen=True)
class ObjectiveReport:
    margin_term: float
    penalty_term: float
    total: float
    slacks: np.ndarray

    @property
    def annotations(self) -> dict:
        """Counts of samples by slack band: wide margin, thin margin, misclassified."""
        xi = self.slacks
        return {
            "wide": int(np.sum(xi <= 0)),
            "thin": int(np.sum((xi > 0) & (xi <= 1 / SQRT2))),
            "wrong_side": int(np.sum(xi > 1 / SQRT2)),
        }


def signed_data(points, y) -> np.ndarray:
    """Rows ``y_i * G x_i``; the margin constraint reads ``rows @ w <= sqrt2 xi - 1``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = pts.copy()
    g[:, 0] *= -1.0
    return np.asarray(y, dtype=float)[:, None] * g


def score(w, x, y) -> float | np.ndarray:
    """``-(y G x)^T w``, i.e. ``y (w * x)``."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    prod = x[..., 0] * w[0] - x[..., 1:] @ w[1:]
    out = np.asarray(y, dtype=float) * prod
    return float(out) if np.ndim(out) == 0 else out


def hinge_arcsinh(z) -> float | np.ndarray:
    out = np.maximum(0.0, ASINH1 - np.arcsinh(z))
    return float(out) if np.ndim(out) == 0 else out


def g_penalty(xi) -> float | np.ndarray:
    """``sinh(asinh(1) - xi)`` written as a sum of exponentials."""
    xi = np.asarray(xi, dtype=float)
    out = (1 - SQRT2) / 2 * np.exp(xi) + (1 + SQRT2) / 2 * np.exp(-xi)
    return float(out) if np.ndim(out) == 0 else out


def taylor3_rhs(xi):
    return 1.0 - SQRT2 * xi + xi**2 / 2.0 - SQRT2 * xi**3 / 6.0


def _slack3(s: float) -> float:
    if s >= 1.0:
        return 0.0
    f = lambda t: taylor3_rhs(t) - s  # strictly decreasing in t
    if f(_CUBIC_CAP) > 0:
        return math.inf
    return brentq(f, 0.0, _CUBIC_CAP, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def min_slack(w, x, y, order: int = 1) -> float | np.ndarray:
    """Smallest nonnegative slack satisfying the order-1 or order-3 margin constraint.

    Returns ``inf`` for order 3 when no root exists below the cap of 100.
    """
    if order not in (1, 3):
        raise ValueError("order must be 1 or 3")
    s = np.asarray(score(w, x, y), dtype=float)
    if order == 1:
        out = np.maximum(0.0, (1.0 - s) / SQRT2)
    else:
        out = np.vectorize(_slack3, otypes=[float])(s)
    return float(out) if np.ndim(out) == 0 else out


def margin_term(w) -> float:
    w = np.asarray(w, dtype=float)
    return 0.5 * float(w[1:] @ w[1:] - w[0] ** 2)


def objective(w, view, cfg: HsvmConfig) -> ObjectiveReport:
    w = np.asarray(w, dtype=float)
    m = margin_term(w)
    if cfg.penalty == "exact":
        slacks = np.atleast_1d(hinge_arcsinh(score(w, view.points, view.y)))
    else:
        order = 1 if cfg.penalty == "taylor1" else 3
        slacks = np.atleast_1d(min_slack(w, view.points, view.y, order))
    pen = cfg.C * float(np.sum(slacks)) if cfg.C else 0.0
    return ObjectiveReport(m, pen, m + pen, slacks)


def taylor1_objective(w, view, C: float, tol: float = 1e-8) -> float:
    """The first-order surrogate objective, ``inf`` off the feasible set."""
    if not is_feasible(w, tol):
        return math.inf
    return objective(w, view, HsvmConfig(C=C, penalty="taylor1")).total


def subopt_gap(f_hat: float, p_star: float) -> float:
    return abs(f_hat - p_star) / (1.0 + abs(p_star) + abs(f_hat))


def is_feasible(w, tol: float = 1e-8) -> bool:
    w = np.asarray(w, dtype=float)
    return bool(w[1:] @ w[1:] - w[0] ** 2 >= -tol)


@dataclass
class TrainReport:
    """Outcome of one binary training run.

    ``p_star``, ``eta`` and ``flat`` are ``None`` for methods without a
    relaxation.
    """

    method: str
    w: np.ndarray
    f_hat: float  # taylor1 objective of w
    p_star: float | None = None
    eta: float | None = None
    seconds: float = 0.0
    source: str | None = None
    flat: str | None = None
    status: str = "ok"
    info: dict | None = None

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None else float(v)

        return {
            "method": self.method,
            "w": [float(v) for v in self.w],
            "f_hat": num(self.f_hat),
            "p_star": num(self.p_star),
            "eta": num(self.eta),
            "seconds": float(self.seconds),
            "source": self.source,
            "flat": self.flat,
            "status": self.status,
        }
