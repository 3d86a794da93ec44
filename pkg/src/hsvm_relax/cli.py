"""Command-line front end: ``hsvm gen | train | boundary | compare``.

Exit codes: 0 success (possibly with warnings), 2 usage or configuration
error, 3 data validation error, 4 internal numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conic import NumericError
from .data import DataValidationError, gen_gaussian, gen_subtree, load_csv, save_csv
from .evaluate import cross_validate, summarize
from .manifold import InvalidSeparatorError, boundary_to_poincare, stereographic
from .multiclass import SCHEMES, MulticlassModel, train
from .train import METHODS, TrainConfig, default_eps

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
F1_NOTE = "weighted F1: support-weighted mean of per-class F1 (table captions elsewhere say micro)"


class ConfigError(ValueError):
    pass


def _csv_list(text: str, cast, field: str) -> list:
    try:
        out = [cast(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"--{field}: cannot parse {text!r}") from None
    if not out:
        raise ConfigError(f"--{field}: empty list")
    return out


def _dump(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _clean(v):
    """JSON-safe copy: non-finite floats become null."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    if args.kind == "gaussian":
        if args.classes < 2 or args.scale <= 0 or args.per_class < 1 or args.dim < 1:
            raise ConfigError("--classes >= 2, --scale > 0, --per-class >= 1, --dim >= 1 required")
        ds = gen_gaussian(args.classes, args.scale, args.per_class, args.dim, args.seed)
    else:
        ds = gen_subtree(n=args.n, positive_fraction=args.positive_fraction, seed=args.seed)
    save_csv(ds, args.out)
    print(f"wrote {ds.n} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train


def _train_config(args) -> tuple[dict, TrainConfig]:
    methods = _csv_list(args.method, str, "method")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"--method: unknown {bad}; choose from {list(METHODS)}")
    Cs = _csv_list(args.C, float, "C")
    if any(c < 0 for c in Cs):
        raise ConfigError("--C: values must be nonnegative")
    if args.folds < 2:
        raise ConfigError("--folds must be >= 2")
    if args.kappa < 2:
        raise ConfigError("--kappa must be >= 2")
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    eps = args.eps if args.eps is not None else default_eps()
    if not eps > 0:
        raise ConfigError("--eps must be positive")
    cfg = TrainConfig(kappa=args.kappa, eps=eps, solver=args.solver, seed=args.seed)
    echo = {
        "data": str(args.data), "methods": methods, "C": Cs, "scheme": args.scheme,
        "folds": args.folds, "seed": args.seed, "kappa": args.kappa, "eps": eps,
        "solver": args.solver,
    }
    return echo, cfg


def cmd_train(args) -> int:
    echo, cfg = _train_config(args)
    ds = load_csv(args.data)
    records = cross_validate(ds, echo["methods"], echo["C"], cfg, echo["scheme"],
                             echo["folds"], echo["seed"], args.jobs)
    warnings = 0
    for r in records:
        if r["status"] != "ok":
            warnings += 1
        if not args.timing:
            r["seconds"] = None
            for b in r["binary"]:
                b["seconds"] = None
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config": echo,
        "metric_note": F1_NOTE,
        "warnings": warnings,
        "records": records,
    }
    _dump(_clean(doc), args.out)
    if args.save_model:
        models = {}
        for m in echo["methods"]:
            c = TrainConfig(C=echo["C"][0], kappa=cfg.kappa, eps=cfg.eps, solver=cfg.solver,
                            seed=cfg.seed)
            models[m] = train(ds, m, c, echo["scheme"]).to_dict()
        _dump(_clean({"schema_version": SCHEMA_VERSION, "data": str(args.data),
                      "C": echo["C"][0], "models": models}), args.save_model)
    if warnings:
        print(f"warning: {warnings} record(s) carry a non-ok status", file=sys.stderr)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# boundary


BOUNDARY_HEADER = ["row", "model", "classifier", "shape", "cx", "cy", "r", "nx", "ny",
                   "px", "py", "label"]


def boundary_rows(models: dict, points, labels) -> list[list]:
    rows = []
    for name in sorted(models):
        model = MulticlassModel.from_dict(models[name])
        for k, w in enumerate(model.separators):
            if w.shape != (3,):
                raise DataValidationError("boundary export needs d = 2")
            try:
                b = boundary_to_poincare(w)
            except InvalidSeparatorError:
                rows.append(["boundary", name, k, "none"] + [""] * 8)
                continue
            if hasattr(b, "radius"):
                rows.append(["boundary", name, k, "circle", repr(float(b.center[0])),
                             repr(float(b.center[1])), repr(b.radius), "", "", "", "", ""])
            else:
                rows.append(["boundary", name, k, "line", "", "", "", repr(float(b.normal[0])),
                             repr(float(b.normal[1])), "", "", ""])
    P = stereographic(points)
    for p, lab in zip(P, labels):
        rows.append(["point", "", "", "", "", "", "", "", "", repr(float(p[0])),
                     repr(float(p[1])), int(lab)])
    return rows


def cmd_boundary(args) -> int:
    try:
        art = json.loads(Path(args.model).read_text(encoding="utf-8"))
        models = art["models"]
    except (OSError, ValueError, KeyError) as exc:
        raise DataValidationError(f"{args.model}: not a model artifact ({exc})") from None
    ds = load_csv(args.data or art["data"])
    if ds.d != 2:
        raise DataValidationError(f"boundary export needs d = 2, data has d = {ds.d}")
    rows = boundary_rows(models, ds.points, ds.labels)
    with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(BOUNDARY_HEADER)
        wr.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare


def _load_metrics(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataValidationError(f"{path}: unreadable metrics file ({exc})") from None
    ver = str(doc.get("schema_version", ""))
    if ver.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise DataValidationError(f"{path}: unsupported schema version {ver!r}")
    if not isinstance(doc.get("records"), list) or "config" not in doc:
        raise DataValidationError(f"{path}: missing records or config")
    need = ("method", "C", "test_accuracy", "test_weighted_f1", "eta")
    for r in doc["records"]:
        if any(k not in r for k in need):
            raise DataValidationError(f"{path}: record lacks one of {need}")
    return doc


def compare_table(docs: list[dict]) -> tuple[list[str], list[list]]:
    """Rows per (dataset, C); columns per method plus a best-method column."""
    by_key: dict = {}
    methods: list[str] = []
    for doc in docs:
        data = doc["config"].get("data", "?")
        for (m, C), row in summarize(doc["records"]).items():
            by_key.setdefault((data, C), {})[m] = row
            if m not in methods:
                methods.append(m)
    header = ["dataset", "C"]
    for m in methods:
        header += [f"{m}_acc", f"{m}_f1"]
        if m != "pgd":
            header.append(f"{m}_eta")
    if len(methods) > 1:
        header.append("best")
    rows = []
    for (data, C), per in sorted(by_key.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        row = [data, f"{C:g}"]
        for m in methods:
            r = per.get(m)
            if r is None:
                row += ["", ""] + ([""] if m != "pgd" else [])
                continue
            row.append(f"{r['test_accuracy']:.4f} +- {r['test_accuracy_std']:.4f}")
            row.append(f"{r['test_weighted_f1']:.4f} +- {r['test_weighted_f1_std']:.4f}")
            if m != "pgd":
                row.append("" if r["eta"] is None else f"{r['eta']:.4g}")
        if len(methods) > 1:
            present = [m for m in methods if m in per]
            # best by mean test F1, then accuracy; earlier method wins exact ties
            best = max(present, key=lambda m: (per[m]["test_weighted_f1"],
                                               per[m]["test_accuracy"], -present.index(m)))
            row.append(best)
        rows.append(row)
    return header, rows


def cmd_compare(args) -> int:
    docs = [_load_metrics(p) for p in args.inputs]
    header, rows = compare_table(docs)
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    for line in [header] + rows:
        print("  ".join(str(x).ljust(w) for x, w in zip(line, widths)))
    if args.out:
        with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            wr.writerows(rows)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hsvm", description="Hyperbolic SVM training and relaxations")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    g.add_argument("--kind", choices=("gaussian", "subtree"), default="gaussian")
    g.add_argument("--classes", type=int, default=2)
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--per-class", type=int, default=100)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--n", type=int, default=80, help="subtree: number of nodes")
    g.add_argument("--positive-fraction", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="cross-validated training and evaluation")
    t.add_argument("--data", required=True)
    t.add_argument("--method", default="pgd,sdp,moment")
    t.add_argument("--C", default="1")
    t.add_argument("--scheme", choices=SCHEMES, default="ovr")
    t.add_argument("--folds", type=int, default=5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--kappa", type=int, default=2)
    t.add_argument("--eps", type=float, default=None)
    t.add_argument("--solver", choices=("ipm", "admm"), default="ipm")
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--timing", action="store_true", help="record wall-clock seconds")
    t.add_argument("--save-model", default=None)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("boundary", help="export Poincare-disk boundary geometry")
    b.add_argument("--model", required=True)
    b.add_argument("--data", default=None)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_boundary)

    c = sub.add_parser("compare", help="tabulate one or more metrics files")
    c.add_argument("inputs", nargs="+")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
