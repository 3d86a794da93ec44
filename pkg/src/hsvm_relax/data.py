"""Datasets on the Lorentz model: synthetic generation, CSV I/O and folds."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .manifold import MANIFOLD_TOL, exp0, lift, minkowski


class DataValidationError(ValueError):
    """Raised when a dataset row violates the manifold or schema contract."""


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray  # (n, d + 1)
    labels: np.ndarray  # (n,) integer class ids

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        labs = np.asarray(self.labels).astype(int)
        if pts.ndim != 2 or pts.shape[1] < 2:
            raise DataValidationError("points must be a 2-D array with >= 2 columns")
        if len(pts) != len(labs) or len(pts) == 0:
            raise DataValidationError("points and labels must be non-empty and equal length")
        if np.any(labs < 0):
            raise DataValidationError("class ids must be >= 0")
        bad = np.flatnonzero((np.abs(minkowski(pts, pts) - 1.0) > MANIFOLD_TOL) | (pts[:, 0] <= 0))
        if bad.size:
            raise DataValidationError(f"row {bad[0]}: point is off the manifold")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)

    @property
    def d(self) -> int:
        return self.points.shape[1] - 1

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.points[idx], self.labels[idx])


@dataclass(frozen=True)
class BinaryView:
    """A +/-1 relabelling of (a subset of) a dataset."""

    points: np.ndarray
    y: np.ndarray
    index: np.ndarray = field(default=None)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.points.shape[1] - 1

    @property
    def two_sided(self) -> bool:
        return bool(np.any(self.y > 0) and np.any(self.y < 0))


def one_vs_rest(ds: Dataset, target: int) -> BinaryView:
    y = np.where(ds.labels == target, 1, -1)
    view = BinaryView(ds.points, y, np.arange(ds.n))
    if not view.two_sided:
        warnings.warn(f"one-vs-rest view for class {target} has a single sign", stacklevel=2)
    return view


def one_vs_one(ds: Dataset, pos: int, neg: int) -> BinaryView:
    idx = np.flatnonzero((ds.labels == pos) | (ds.labels == neg))
    y = np.where(ds.labels[idx] == pos, 1, -1)
    view = BinaryView(ds.points[idx], y, idx)
    if not view.two_sided:
        warnings.warn(f"one-vs-one view ({pos}, {neg}) has a single sign", stacklevel=2)
    return view


def binary_view(points, y) -> BinaryView:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.atleast_1d(np.asarray(y)).astype(int)
    if set(np.unique(y)) - {-1, 1}:
        raise ValueError("binary labels must be +1 or -1")
    return BinaryView(points, y, np.arange(len(y)))


def gen_gaussian(K: int, s: float, n_per_class: int, d: int, seed: int) -> Dataset:
    """Gaussian mixture in the tangent space at the origin, lifted by ``exp0``.

    Each class draws its center and samples from its own stream seeded by
    ``(seed, class_id)``, so class ``k`` is identical for every ``K > k``.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    if s <= 0:
        raise ValueError("scale must be positive")
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    pts, labs = [], []
    for k in range(K):
        rng = np.random.default_rng([seed, k])
        center = rng.standard_normal(d)
        tangent = center + s * rng.standard_normal((n_per_class, d))
        pts.append(exp0(tangent))
        labs.append(np.full(n_per_class, k))
    return Dataset(np.vstack(pts), np.concatenate(labs))


def load_csv(path, renormalize: bool = False) -> Dataset:
    """Read ``label,x0,...,xd`` rows; a non-numeric first row is a header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise DataValidationError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 3:
        raise DataValidationError(f"{path}: need a label and at least two coordinates")
    labels, coords = [], []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataValidationError(f"row {i}: expected {width} fields, got {len(row)}")
        try:
            lab = float(row[0])
            vals = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise DataValidationError(f"row {i}: {exc}") from None
        if lab != int(lab):
            raise DataValidationError(f"row {i}: label {row[0]!r} is not an integer")
        labels.append(int(lab))
        coords.append(vals)
    pts = np.asarray(coords)
    if renormalize:
        pts = lift(pts[:, 1:])
    else:
        gap = np.abs(minkowski(pts, pts) - 1.0)
        bad = np.flatnonzero((gap > MANIFOLD_TOL) | (pts[:, 0] <= 0))
        if bad.size:
            i = bad[0]
            raise DataValidationError(f"row {i}: |x*x - 1| = {gap[i]:.3g} exceeds {MANIFOLD_TOL}")
    return Dataset(pts, np.asarray(labels))


def save_csv(ds: Dataset, path) -> None:
    path = Path(path)
    header = ["label"] + [f"x{j}" for j in range(ds.d + 1)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for lab, pt in zip(ds.labels, ds.points):
            writer.writerow([int(lab)] + [repr(float(v)) for v in pt])


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test

    def __iter__(self):
        for f in range(self.k):
            yield self.split(f)


def stratified_kfold(labels, k: int, seed: int) -> FoldPlan:
    """Shuffle each class, then deal its members into folds of near-equal size.

    Remainders go to the lowest-index folds first.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    assign = np.full(len(labels), -1)
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            warnings.warn(
                f"class {cls} has {len(members)} < {k} members; some folds will lack it",
                stacklevel=2,
            )
        members = rng.permutation(members)
        base, rem = divmod(len(members), k)
        sizes = [base + (1 if f < rem else 0) for f in range(k)]
        assign[members] = np.repeat(np.arange(k), sizes)
    return FoldPlan(k=k, assignments=assign, seed=seed)


def gen_subtree(n: int = 80, positive_fraction: float = 0.1, step: float = 1.0,
                jitter: float = 0.05, seed: int = 0) -> Dataset:
    """A random tree embedded in the hyperbolic plane; one subtree is class 1.

    Nodes are grown breadth first with 2 to 4 children each until ``n`` nodes
    exist. Each node owns an angular sector split evenly among its children
    and sits at tangent radius ``step * depth`` in the middle of its sector,
    plus a small Gaussian jitter. Class 1 is the subtree (rooted below the
    root) whose size is closest to ``positive_fraction * n``.
    """
    if n < 4:
        raise ValueError("n must be >= 4")
    rng = np.random.default_rng(seed)
    parent, depth, lo, hi = [-1], [0], [0.0], [2 * np.pi]
    children: list[list[int]] = [[]]
    head = 0
    while len(parent) < n:
        k = int(rng.integers(2, 5))
        width = (hi[head] - lo[head]) / k
        for j in range(k):
            if len(parent) == n:
                break
            parent.append(head)
            depth.append(depth[head] + 1)
            lo.append(lo[head] + j * width)
            hi.append(lo[head] + (j + 1) * width)
            children.append([])
            children[head].append(len(parent) - 1)
        head += 1
    size = np.ones(n, dtype=int)
    for v in range(n - 1, 0, -1):
        size[parent[v]] += size[v]
    target = positive_fraction * n
    root = min(range(1, n), key=lambda v: (abs(size[v] - target), v))
    labels = np.zeros(n, dtype=int)
    stack = [root]
    while stack:
        v = stack.pop()
        labels[v] = 1
        stack.extend(children[v])
    theta = (np.asarray(lo) + np.asarray(hi)) / 2.0
    r = step * np.asarray(depth, dtype=float)
    tangent = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    tangent += jitter * rng.standard_normal(tangent.shape)
    return Dataset(exp0(tangent), labels)
