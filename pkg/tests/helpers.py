"""Instance builders and independent lifts used as test oracles."""

import math

import numpy as np

from hsvm_relax.data import binary_view
from hsvm_relax.manifold import exp0
from hsvm_relax.problem import min_slack


def random_view(n, seed, scale=1.0, d=2):
    """Two tangent-space Gaussian blobs lifted to the manifold, both labels present."""
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    centers = rng.standard_normal((2, d))
    V = np.where(y[:, None] > 0, centers[0], centers[1]) + scale * rng.standard_normal((n, d))
    return binary_view(exp0(V), y)


def symmetric_pair():
    """x+- = exp0(+-2 e1) with labels +-1."""
    return binary_view(exp0(np.array([[2.0, 0.0], [-2.0, 0.0]])), [1, -1])


def random_feasible_w(rng, dim=3):
    w = rng.standard_normal(dim)
    r = np.linalg.norm(w[1:])
    if abs(w[0]) > r:
        w[0] = math.copysign(r * rng.random(), w[0])
    return w


def sdp_lift(w, view):
    """Primal vector of the Shor program at the rank-one point (w, xi(w)).

    The program's variables are the raw lower-triangle entries of
    ``[[1, w^T], [w, w w^T]]`` in column-major order, then the slacks.
    """
    w = np.asarray(w, dtype=float)
    v = np.concatenate([[1.0], w])
    xi = np.atleast_1d(min_slack(w, view.points, view.y))
    cols, rows = np.triu_indices(v.size)
    return np.concatenate([np.outer(v, v)[rows, cols], xi])


def moment_lift(w, view, plan):
    """Per-group truncated moment sequences of the Dirac measure at (w, xi_i(w))."""
    w = np.asarray(w, dtype=float)
    xi = np.atleast_1d(min_slack(w, view.points, view.y))
    out = []
    for i in range(len(xi)):
        q = np.concatenate([w, [xi[i]]])
        out.append([float(np.prod(q ** np.asarray(a))) for a in plan.tms.monos])
    return np.concatenate(out)
