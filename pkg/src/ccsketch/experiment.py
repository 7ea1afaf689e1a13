"""Parameter sweeps over (estimator, delta, k) emitting one CSV row per cell.

Config (JSON)::

    {
      "target": "moment",              # or "entropy"
      "vector": {"profile": "A", "d": 16384, "seed": 0},   # or {"path": "...", "index": 0}
      "deltas": [0.2, 0.1, 0.01],
      "ks": [3, 10, 100, 1000],
      "estimators": ["new", "gm", "hm", "min", "sym"],
      "trials": 10000,
      "seed": 0,
      "via": "tsallis",
      "base": 2,
      "workers": 1
    }

Missing keys take the defaults in :data:`DEFAULTS`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .errors import ConfigurationError
from .estimators import Estimator
from .oracle import WORD_PROFILES, MCConfig, profile_vector, run_mc
from .sketch import SparseVector

DEFAULT_DELTAS = (0.2, 0.1) + tuple(10.0**-e for e in range(2, 11))
DEFAULTS = {
    "target": "moment",
    "vector": {"profile": "A", "d": 16384, "seed": 0},
    "deltas": list(DEFAULT_DELTAS),
    "ks": [3, 10, 100, 1000],
    "estimators": [e.value for e in Estimator],
    "trials": 10_000,
    "seed": 0,
    "via": "tsallis",
    "base": 2.0,
    "workers": 1,
}

COLUMNS = (
    "target", "vector", "estimator", "delta", "k",
    "trials", "truth", "mean", "normalized_mse", "normalized_bias", "normalized_var",
    "theo_rel_var", "median_abs_error", "failures",
    "status",
)


@dataclass(frozen=True)
class Cell:
    estimator: str
    delta: float
    k: int


def load_config(source) -> dict:
    """Merge a JSON config (path, JSON text or dict) over :data:`DEFAULTS`."""
    if isinstance(source, dict):
        raw = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"experiment config is not valid JSON: {exc}") from exc
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown experiment keys: {sorted(unknown)}")
    cfg = {**DEFAULTS, **raw}
    if cfg["target"] not in ("moment", "entropy"):
        raise ConfigurationError(f"unknown target {cfg['target']!r}")
    for d in cfg["deltas"]:
        if not 0 < float(d) < 1:
            raise ConfigurationError(f"delta must lie in (0, 1), got {d!r}")
    for k in cfg["ks"]:
        if int(k) < 1:
            raise ConfigurationError(f"k must be positive, got {k!r}")
    for e in cfg["estimators"]:
        Estimator(e)
    if int(cfg["trials"]) < 100:
        raise ConfigurationError("trials must be at least 100")
    return cfg


def resolve_vector(spec: dict) -> SparseVector:
    if "path" in spec:
        from .corpus import ingest_corpus

        vectors = ingest_corpus(spec["path"])
        return vectors[int(spec.get("index", 0))]
    name = spec.get("profile", "A")
    if name not in WORD_PROFILES:
        raise ConfigurationError(f"unknown profile {name!r}; choose from {sorted(WORD_PROFILES)}")
    return profile_vector(name, d=int(spec.get("d", 16384)), seed=int(spec.get("seed", 0)))


def cells(cfg: dict) -> list[Cell]:
    return [
        Cell(e, float(d), int(k))
        for e in cfg["estimators"]
        for d in cfg["deltas"]
        for k in cfg["ks"]
    ]


def _run_cell(args):
    cfg, vector, cell = args
    row = {"target": cfg["target"], "vector": vector.name, "estimator": cell.estimator,
           "delta": cell.delta, "k": cell.k, "trials": int(cfg["trials"])}
    est = Estimator(cell.estimator)
    if cell.k < 2 and est in (Estimator.GM, Estimator.HM, Estimator.SYMMETRIC_GM):
        return {**row, "status": "skipped"}
    try:
        rep = run_mc(MCConfig(
            vector, cell.k, cell.delta, est, int(cfg["trials"]), int(cfg["seed"]),
            target=cfg["target"], via=cfg["via"], base=float(cfg["base"]),
        ))
    except (ArithmeticError, ValueError) as exc:
        return {**row, "status": f"error:{type(exc).__name__}"}
    if "failed" in rep.flags:
        status = "failed"
    elif "unstable" in rep.flags:
        status = "unstable"
    elif rep.failures:
        status = "partial"
    elif not math.isfinite(rep.normalized_mse):
        status = "overflow"
    else:
        status = "ok"
    return {
        **row,
        "truth": rep.truth, "mean": rep.mean,
        "normalized_mse": rep.normalized_mse, "normalized_bias": rep.normalized_bias,
        "normalized_var": rep.normalized_var, "theo_rel_var": rep.theo_rel_var,
        "median_abs_error": rep.median_abs_error, "failures": rep.failures,
        "status": status,
    }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def run_experiment(config) -> list[dict]:
    cfg = load_config(config)
    vector = resolve_vector(cfg["vector"])
    jobs = [(cfg, vector, c) for c in cells(cfg)]
    workers = int(cfg["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, jobs))  # map keeps cell order
    return [_run_cell(j) for j in jobs]


def rows_to_csv(rows, out=None) -> str:
    buf = out if out is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue() if out is None else ""
