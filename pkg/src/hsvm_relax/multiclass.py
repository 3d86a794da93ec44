"""Platt-scaled one-vs-rest, voting one-vs-one and classification metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .data import Dataset, one_vs_one, one_vs_rest
from .manifold import minkowski
from .train import TrainConfig, train_binary

SCHEMES = ("ovr", "ovo")


class TrainingError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Platt scaling


@dataclass(frozen=True)
class PlattModel:
    A: float
    B: float

    def predict_proba(self, scores) -> np.ndarray:
        """``P(y = 1 | f) = 1 / (1 + exp(A f + B))``, evaluated without overflow."""
        t = self.A * np.asarray(scores, dtype=float) + self.B
        out = np.empty_like(t)
        pos = t >= 0
        e = np.exp(-t[pos])
        out[pos] = e / (1.0 + e)
        out[~pos] = 1.0 / (1.0 + np.exp(t[~pos]))
        return np.clip(out, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)


def _platt_loss(A, B, f, t):
    z = A * f + B
    # sum of t z + log(1 + exp(-z)), written stably
    return float(np.sum(t * z + np.logaddexp(0.0, -z)))


def platt_fit(scores, labels, max_iter: int = 100, tol: float = 1e-10) -> PlattModel:
    """Newton's method with backtracking on the smoothed logistic likelihood."""
    f = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    n_pos = int(np.sum(y > 0))
    n_neg = int(np.sum(y <= 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("Platt scaling needs both labels")
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(y > 0, hi, lo)
    A, B = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = _platt_loss(A, B, f, t)
    sigma = 1e-12
    for _ in range(max_iter):
        z = A * f + B
        p = 1.0 / (1.0 + np.exp(np.clip(z, -700, 700)))  # P(y=1)
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + float(np.sum(f * f * d2))
        h22 = sigma + float(np.sum(d2))
        h21 = float(np.sum(f * d2))
        d1 = t - p
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < tol and abs(g2) < tol:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            nA, nB = A + step * dA, B + step * dB
            nf = _platt_loss(nA, nB, f, t)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step /= 2.0
        else:
            break
    return PlattModel(float(A), float(B))


# ---------------------------------------------------------------------------
# multiclass models


@dataclass
class MulticlassModel:
    scheme: str
    classes: np.ndarray
    separators: list  # one w per binary model
    pairs: list = field(default_factory=list)  # ovo (pos, neg) class ids
    platt: list = field(default_factory=list)  # ovr calibration per class
    reports: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "classes": [int(c) for c in self.classes],
            "separators": [[float(v) for v in w] for w in self.separators],
            "pairs": [[int(a), int(b)] for a, b in self.pairs],
            "platt": [[m.A, m.B] for m in self.platt],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MulticlassModel":
        return cls(
            scheme=d["scheme"], classes=np.asarray(d["classes"], dtype=int),
            separators=[np.asarray(w, dtype=float) for w in d["separators"]],
            pairs=[tuple(p) for p in d.get("pairs", [])],
            platt=[PlattModel(*ab) for ab in d.get("platt", [])],
        )


def _train(view, method, cfg, tag):
    try:
        return train_binary(view, method, cfg)
    except Exception as exc:  # annotate with the class id and re-raise
        raise TrainingError(f"{tag}: {exc}") from exc


def ovr_train(ds: Dataset, method: str, cfg: TrainConfig) -> MulticlassModel:
    classes = ds.classes
    if classes.size < 2:
        raise ValueError("one-vs-rest needs at least two classes")
    seps, platt, reps = [], [], []
    for k in classes:
        view = one_vs_rest(ds, int(k))
        rep = _train(view, method, cfg, f"class {int(k)}")
        scores = minkowski(rep.w, view.points)
        seps.append(rep.w)
        platt.append(platt_fit(scores, view.y))
        reps.append(rep)
    return MulticlassModel("ovr", classes, seps, platt=platt, reports=reps)


def ovr_probabilities(model: MulticlassModel, points) -> np.ndarray:
    cols = [m.predict_proba(minkowski(w, points)) for w, m in zip(model.separators, model.platt)]
    return np.column_stack(cols)


def ovr_predict(model: MulticlassModel, points) -> np.ndarray:
    # argmax returns the first maximum, i.e. the lowest class id on ties
    return model.classes[np.argmax(ovr_probabilities(model, points), axis=1)]


def ovo_train(ds: Dataset, method: str, cfg: TrainConfig) -> MulticlassModel:
    classes = ds.classes
    if classes.size < 2:
        raise ValueError("one-vs-one needs at least two classes")
    seps, pairs, reps = [], [], []
    for a, b in combinations(classes, 2):
        view = one_vs_one(ds, int(a), int(b))
        rep = _train(view, method, cfg, f"pair ({int(a)}, {int(b)})")
        seps.append(rep.w)
        pairs.append((int(a), int(b)))
        reps.append(rep)
    return MulticlassModel("ovo", classes, seps, pairs=pairs, reports=reps)


def ovo_votes(model: MulticlassModel, points):
    """Vote counts and summed winning margins ``|w * x|`` per class."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    K = model.classes.size
    col = {int(c): j for j, c in enumerate(model.classes)}
    votes = np.zeros((len(pts), K), dtype=int)
    margin = np.zeros((len(pts), K))
    rows = np.arange(len(pts))
    for w, (a, b) in zip(model.separators, model.pairs):
        s = minkowski(w, pts)
        win = np.where(s > 0, col[a], col[b])
        votes[rows, win] += 1
        margin[rows, win] += np.abs(s)
    return votes, margin


def ovo_predict(model: MulticlassModel, points) -> np.ndarray:
    votes, margin = ovo_votes(model, points)
    top = votes == votes.max(axis=1, keepdims=True)
    key = np.where(top, margin, -np.inf)
    # ties in margin fall to the first (lowest) class id
    return model.classes[np.argmax(key, axis=1)]


def train(ds: Dataset, method: str, cfg: TrainConfig, scheme: str = "ovr") -> MulticlassModel:
    if scheme == "ovr":
        return ovr_train(ds, method, cfg)
    if scheme == "ovo":
        return ovo_train(ds, method, cfg)
    raise ValueError(f"unknown scheme {scheme!r}")


def predict(model: MulticlassModel, points) -> np.ndarray:
    return ovr_predict(model, points) if model.scheme == "ovr" else ovo_predict(model, points)


# ---------------------------------------------------------------------------
# metrics


def accuracy(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth differ in length")
    return float(np.mean(pred == truth)) if truth.size else 0.0


def weighted_f1(pred, truth) -> float:
    """Support-weighted mean of per-class F1 over the classes present in ``truth``."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth differ in length")
    if truth.size == 0:
        return 0.0
    total = 0.0
    for c in np.unique(truth):
        tp = np.sum((pred == c) & (truth == c))
        fp = np.sum((pred == c) & (truth != c))
        fn = np.sum((pred != c) & (truth == c))
        f1 = 2.0 * tp / (2.0 * tp + fp + fn) if tp else 0.0
        total += f1 * np.sum(truth == c)
    return float(total / truth.size)


@dataclass
class Metrics:
    accuracy: float
    weighted_f1: float
    per_fold: list = field(default_factory=list)
    accuracy_std: float = 0.0
    weighted_f1_std: float = 0.0

    @classmethod
    def aggregate(cls, folds: list[tuple[float, float]]) -> "Metrics":
        a = np.array([f[0] for f in folds], dtype=float)
        f = np.array([f[1] for f in folds], dtype=float)
        return cls(float(a.mean()), float(f.mean()), list(folds), float(a.std()), float(f.std()))
