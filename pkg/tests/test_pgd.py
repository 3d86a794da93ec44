import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_view, symmetric_pair
from hsvm_relax.data import binary_view
from hsvm_relax.manifold import decide, exp0
from hsvm_relax.pgd import (
    PgdConfig,
    default_separator,
    euclidean_warmstart,
    exact_objective,
    grad_objective,
    pgd_train,
    project_feasible,
)
from hsvm_relax.problem import signed_data


def test_project_example():
    np.testing.assert_allclose(project_feasible([2.0, 1.0, 0.0]), [1.5, 1.5, 0.0], rtol=1e-15)


def test_project_matches_grid_oracle():
    # nearest point of {|a| <= |b|} to (2, 1) in the plane
    g = np.linspace(-4, 4, 1601)
    A, B = np.meshgrid(g, g, indexing="ij")
    ok = np.abs(A) <= np.abs(B)
    dist = np.where(ok, (A - 2) ** 2 + (B - 1) ** 2, np.inf)
    k = np.unravel_index(np.argmin(dist), dist.shape)
    assert abs(A[k] - 1.5) <= 5e-3 and abs(B[k] - 1.5) <= 5e-3


def test_project_zero_spatial_part():
    np.testing.assert_array_equal(project_feasible([-2.0, 0.0, 0.0]), [-1.0, 1.0, 0.0])


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=5))
def test_project_properties(w):
    w = np.asarray(w)
    p = project_feasible(w, 0.0)
    assert np.linalg.norm(p[1:]) >= abs(p[0]) - 1e-12 * (1 + abs(p[0]))
    if np.linalg.norm(w[1:]) ** 2 >= w[0] ** 2:
        np.testing.assert_array_equal(p, w)
    np.testing.assert_allclose(project_feasible(p), p, rtol=1e-15)
    # the default tolerance leaves nearly feasible points alone
    q = project_feasible(w)
    assert q[1:] @ q[1:] - q[0] ** 2 >= -1e-8


def test_warmstart_single_class_default():
    view = binary_view(exp0(np.zeros((3, 2))), [1, 1, 1])
    np.testing.assert_array_equal(euclidean_warmstart(view), default_separator(3))


def test_warmstart_separable_tangent_data():
    rng = np.random.default_rng(0)
    V = rng.uniform(-1.5, 1.5, (200, 2))
    # a line through the origin keeps the lifted classifier representable
    u = np.array([1.0, -0.6])
    margin = V @ u
    keep = np.abs(margin) > 0.2
    V, y = V[keep], np.where(margin[keep] > 0, 1, -1)
    view = binary_view(exp0(V), y)
    w = euclidean_warmstart(view)
    assert np.mean(decide(w, view.points) == y) >= 0.9
    assert w[1:] @ w[1:] - w[0] ** 2 >= 0
    np.testing.assert_array_equal(w, euclidean_warmstart(view))


def test_warmstart_always_feasible():
    for seed in range(10):
        w = euclidean_warmstart(random_view(20, seed))
        assert w[1:] @ w[1:] - w[0] ** 2 >= -1e-12


def test_grad_examples():
    view = random_view(10, 1)
    w = np.array([0.3, -0.2, 0.9])
    np.testing.assert_array_equal(grad_objective(w, view, 0.0), [-0.3, -0.2, 0.9])
    # large positive scores: inactive hinge
    rows = signed_data(view.points, view.y)
    w_big = -rows.sum(0)
    w_big *= 50 / np.min(-(rows @ w_big)) if np.min(-(rows @ w_big)) > 0 else 1
    z = -(rows @ w_big)
    if np.all(z > 1):
        g = w_big.copy()
        g[0] = -g[0]
        np.testing.assert_array_equal(grad_objective(w_big, view, 1.0), g)


def test_grad_inactive_hinge_constructed():
    view = symmetric_pair()
    w = np.array([0.0, -3.0, 0.0])  # scores y (w * x) = 3 sinh 2 > 1
    np.testing.assert_array_equal(grad_objective(w, view, 5.0), [0.0, -3.0, 0.0])


def _fd_grad(w, view, C, h=1e-6):
    g = np.zeros_like(w)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        g[j] = (exact_objective(w + e, view, C) - exact_objective(w - e, view, C)) / (2 * h)
    return g


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(2)
    checked = 0
    while checked < 100:
        view = random_view(int(rng.integers(2, 15)), int(rng.integers(0, 10**6)))
        w = rng.standard_normal(3)
        C = float(rng.choice([0.1, 1.0, 10.0]))
        z = -(signed_data(view.points, view.y) @ w)
        if np.any(np.abs(z - 1) < 1e-4):
            continue
        g, fd = grad_objective(w, view, C), _fd_grad(w, view, C)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))
        checked += 1


def test_pgd_stationary_start_unchanged():
    # C = 0: gradient G w vanishes at w = 0, which is feasible
    view = random_view(6, 3)
    rep = pgd_train(view, PgdConfig(C=0.0, epochs=50), w0=np.zeros(3))
    np.testing.assert_array_equal(rep.w, np.zeros(3))


def test_pgd_best_seen_properties():
    view = random_view(20, 4)
    cfg = PgdConfig(C=1.0, epochs=300)
    rep = pgd_train(view, cfg)
    hist = rep.info["best_history"]
    assert np.all(np.diff(hist) <= 0)
    assert hist[-1] == rep.info["exact_objective"] == exact_objective(rep.w, view, 1.0)
    assert rep.info["exact_objective"] <= exact_objective(euclidean_warmstart(view, cfg), view, 1.0)
    assert rep.w[1:] @ rep.w[1:] - rep.w[0] ** 2 >= -1e-8


def test_pgd_deterministic():
    view = random_view(15, 5)
    a = pgd_train(view, PgdConfig(C=10.0, epochs=200))
    b = pgd_train(view, PgdConfig(C=10.0, epochs=200))
    np.testing.assert_array_equal(a.w, b.w)


def test_pgd_symmetric_pair_accuracy():
    view = symmetric_pair()
    rep = pgd_train(view, PgdConfig(C=10.0))
    np.testing.assert_array_equal(decide(rep.w, view.points), view.y)


def test_pgd_config_validation():
    with pytest.raises(ValueError):
        PgdConfig(lr=0)
    with pytest.raises(ValueError):
        PgdConfig(epochs=0)
