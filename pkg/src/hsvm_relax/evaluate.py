"""Stratified k-fold evaluation producing per-fold training records."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .data import Dataset, stratified_kfold
from .multiclass import TrainingError, accuracy, predict, train, weighted_f1
from .problem import subopt_gap
from .train import METHODS, TrainConfig


def _mean(values):
    vals = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.mean(vals)) if vals else None


def fold_record(ds: Dataset, train_idx, test_idx, method: str, cfg: TrainConfig,
                scheme: str, fold: int) -> dict:
    """Train on one fold and score both splits.

    ``f_hat`` and ``p_star`` are means over the binary subproblems and
    ``eta`` is the gap between those means, so it can be recomputed from the
    record. A training failure yields a record with ``status`` set and the
    metric fields left empty.
    """
    t0 = time.perf_counter()
    tr, te = ds.subset(train_idx), ds.subset(test_idx)
    head = {
        "method": method,
        "C": float(cfg.C),
        "kappa": int(cfg.kappa) if method == "moment" else None,
        "fold": int(fold),
        "scheme": scheme,
    }
    try:
        model = train(tr, method, cfg, scheme)
    except (TrainingError, ValueError) as exc:
        empty = dict.fromkeys(("train_accuracy", "test_accuracy", "train_weighted_f1",
                               "test_weighted_f1", "loss", "p_star", "f_hat", "eta"))
        return {**head, **empty, "seconds": time.perf_counter() - t0, "source": [], "flat": [],
                "status": f"error: {exc}", "binary": [], "model": None}
    p_tr, p_te = predict(model, tr.points), predict(model, te.points)
    reps = model.reports
    binary = [r.to_dict() for r in reps]
    statuses = sorted({r.status for r in reps})
    f_hat = _mean([r.f_hat for r in reps])
    p = _mean([r.p_star for r in reps])
    rec = {
        **head,
        "train_accuracy": accuracy(p_tr, tr.labels),
        "test_accuracy": accuracy(p_te, te.labels),
        "train_weighted_f1": weighted_f1(p_tr, tr.labels),
        "test_weighted_f1": weighted_f1(p_te, te.labels),
        "loss": f_hat,
        "p_star": p,
        "f_hat": f_hat,
        "eta": None if p is None or f_hat is None else subopt_gap(f_hat, p),
        "seconds": time.perf_counter() - t0,
        "source": [r.source for r in reps],
        "flat": [r.flat for r in reps],
        "status": "ok" if statuses == ["ok"] else ",".join(s for s in statuses if s != "ok"),
        "binary": binary,
        "model": model.to_dict(),
    }
    return rec


def cross_validate(ds: Dataset, methods, C_values, cfg: TrainConfig, scheme: str = "ovr",
                   folds: int = 5, seed: int = 0, jobs: int = 1) -> list[dict]:
    """Records for every (method, C, fold) in a fixed order.

    With ``jobs > 1`` the tasks run on a thread pool; results are still
    returned in task order.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    plan = stratified_kfold(ds.labels, folds, seed)
    tasks = []
    for method in methods:
        for C in C_values:
            c = replace(cfg, C=float(C), seed=seed)
            for f, (tr, te) in enumerate(plan):
                tasks.append((tr, te, method, c, f))

    def run(task):
        tr, te, method, c, f = task
        return fold_record(ds, tr, te, method, c, scheme, f)

    if jobs <= 1:
        return [run(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, tasks))


def summarize(records: list[dict]) -> dict:
    """Mean and standard deviation of the fold metrics per (method, C)."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r["method"], r["C"]), []).append(r)
    out = {}
    for (method, C), rs in groups.items():
        row = {}
        for key in ("train_accuracy", "test_accuracy", "train_weighted_f1", "test_weighted_f1"):
            v = np.array([r[key] for r in rs if r[key] is not None], dtype=float)
            row[key] = float(v.mean()) if v.size else math.nan
            row[key + "_std"] = float(v.std()) if v.size else math.nan
        row["eta"] = _mean([r["eta"] for r in rs])
        row["folds"] = len(rs)
        out[(method, C)] = row
    return out
