"""Lorentz-model primitives.

Points live on the upper sheet of the hyperboloid ``x * x = 1, x0 > 0`` in
ambient coordinates of length ``d + 1``. Tangent vectors at the origin are
stored intrinsically (length ``d``); their ambient lift is ``(0, v)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MANIFOLD_TOL = 1e-6
_SERIES_CUTOFF = 1e-8


class DimensionError(ValueError):
    pass


class DomainError(ValueError):
    pass


class InvalidSeparatorError(ValueError):
    pass


def metric(dim: int) -> np.ndarray:
    """Diagonal matrix ``G = diag(-1, 1, ..., 1)`` of order ``dim``."""
    g = np.ones(dim)
    g[0] = -1.0
    return np.diag(g)


def minkowski(x, y) -> float | np.ndarray:
    """Minkowski product ``x0*y0 - sum_i xi*yi`` along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError(f"length mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    if x.shape[-1] < 2:
        raise DimensionError("Minkowski product needs vectors of length >= 2")
    out = x[..., 0] * y[..., 0] - np.sum(x[..., 1:] * y[..., 1:], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def origin(d: int) -> np.ndarray:
    o = np.zeros(d + 1)
    o[0] = 1.0
    return o


def on_manifold(x, tol: float = MANIFOLD_TOL) -> bool | np.ndarray:
    x = np.asarray(x, dtype=float)
    ok = (np.abs(minkowski(x, x) - 1.0) <= tol) & (x[..., 0] > 0)
    return bool(ok) if np.ndim(ok) == 0 else ok


def lift(spatial) -> np.ndarray:
    """Recompute ``x0 = sqrt(1 + |x_r|^2)`` from spatial coordinates."""
    spatial = np.asarray(spatial, dtype=float)
    x0 = np.sqrt(1.0 + np.sum(spatial**2, axis=-1, keepdims=True))
    return np.concatenate([x0, spatial], axis=-1)


def exp0(v) -> np.ndarray:
    """Exponential map at the origin; accepts a single vector or a stack."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DomainError("tangent vector has non-finite entries")
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    small = r < _SERIES_CUTOFF
    safe_r = np.where(small, 1.0, r)
    # sinh(r)/r -> 1 + r^2/6 near zero
    ratio = np.where(small, 1.0 + r**2 / 6.0, np.sinh(safe_r) / safe_r)
    return np.concatenate([np.cosh(r), ratio * v], axis=-1)


def log0(x, tol: float = MANIFOLD_TOL) -> np.ndarray:
    """Inverse of :func:`exp0`."""
    x = np.asarray(x, dtype=float)
    x0 = x[..., :1]
    if np.any(x0 < 1.0 - tol):
        raise DomainError("time-like coordinate below 1; point is off the manifold")
    xr = x[..., 1:]
    s = np.linalg.norm(xr, axis=-1, keepdims=True)
    # arcsinh of the spatial norm is better conditioned than arccosh(x0) near 0
    r = np.arcsinh(s)
    small = s < _SERIES_CUTOFF
    safe_s = np.where(small, 1.0, s)
    ratio = np.where(small, 1.0 - s**2 / 6.0, r / safe_s)
    return ratio * xr


def decide(w, x) -> int | np.ndarray:
    """Label +1 where ``w * x > 0`` and -1 otherwise (ties go to -1)."""
    prod = minkowski(w, x)
    lab = np.where(np.asarray(prod) > 0, 1, -1)
    return int(lab) if np.ndim(lab) == 0 else lab


def stereographic(x) -> np.ndarray:
    """Project Lorentz points into the open Poincare ball."""
    x = np.asarray(x, dtype=float)
    return x[..., 1:] / (1.0 + x[..., :1])


def inverse_stereographic(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    n2 = np.sum(p**2, axis=-1, keepdims=True)
    return np.concatenate([(1.0 + n2), 2.0 * p], axis=-1) / (1.0 - n2)


@dataclass(frozen=True)
class Circle:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class LineThroughOrigin:
    normal: np.ndarray


def boundary_to_poincare(w, tol: float = 1e-9) -> Circle | LineThroughOrigin:
    """Geometry of the decision geodesic ``w * x = 0`` in the Poincare disk."""
    w = np.asarray(w, dtype=float)
    if w.shape != (3,):
        raise DimensionError("boundary export is defined for d = 2 only")
    if minkowski(w, w) >= 0:
        raise InvalidSeparatorError("w * w >= 0: hyperplane misses the manifold")
    if abs(w[0]) > tol:
        center = w[1:] / w[0]
        radius = float(np.sqrt(np.sum(w[1:] ** 2) / w[0] ** 2 - 1.0))
        return Circle(center=center, radius=radius)
    return LineThroughOrigin(normal=w[1:].copy())


def boundary_points(w, num: int = 64, extent: float = 3.0) -> np.ndarray:
    """Sample Lorentz points on the geodesic ``w * x = 0`` for ``d = 2``.

    The geodesic is the hyperboloid cut by the plane with Euclidean normal
    ``G w``; it is parameterized by a unit time-like vector ``p`` and a unit
    space-like vector ``q`` spanning that plane, ``x(t) = cosh t p + sinh t q``.
    """
    w = np.asarray(w, dtype=float)
    if minkowski(w, w) >= 0:
        raise InvalidSeparatorError("w * w >= 0: hyperplane misses the manifold")
    wr = w[1:]
    # foot of the geodesic: closest point to the origin, then a direction along it
    u = wr / np.linalg.norm(wr)
    a = w[0] / np.linalg.norm(wr)  # |a| < 1
    rho = np.arctanh(a)
    p = np.array([np.cosh(rho), *(np.sinh(rho) * u)])
    perp = np.array([-u[1], u[0]])
    q = np.array([0.0, *perp])
    t = np.linspace(-extent, extent, num)[:, None]
    return np.cosh(t) * p + np.sinh(t) * q


def jacobian_exp0(x) -> np.ndarray:
    """Jacobian of ``exp0`` at ``v = log0(x)``, shape ``(d + 1, d)``."""
    x = np.asarray(x, dtype=float)
    v = log0(x)
    d = v.shape[0]
    r = np.linalg.norm(v)
    if r < _SERIES_CUTOFF:
        return np.vstack([np.zeros((1, d)), np.eye(d)])
    top = np.sinh(r) / r * v
    coef = np.cosh(r) / r**2 - np.sinh(r) / r**3
    lower = coef * np.outer(v, v) + np.sinh(r) / r * np.eye(d)
    return np.vstack([top[None, :], lower])
