"""Run an experiment: dispatch trials, isolate failures, summarize, write files."""

from __future__ import annotations

import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..concentration import Z95, wilson_interval
from ..errors import DeformedIIDError
from .config import ExperimentConfig
from .experiments import REGISTRY
from .io import _write_text, emit_csv, json_text

__all__ = ["ExperimentReport", "run", "run_trial", "summarize_records"]


def run_trial(cfg: ExperimentConfig, i: int) -> dict:
    """One trial; library errors are recorded instead of propagated."""
    try:
        rec = REGISTRY[cfg.experiment].trial(cfg, i)
    except (DeformedIIDError, np.linalg.LinAlgError) as exc:
        return {"trial": i, "status": "failed", "error": f"{type(exc).__name__}: {exc}",
                "error_trace": traceback.format_exc(limit=3)}
    return {"trial": i, "status": "ok", **rec}


def _is_number(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, (bool, np.bool_))


def summarize_records(records: list[dict]) -> dict:
    """mean, std, n and a 95% interval for every scalar field of the ok trials.

    Booleans get a Wilson interval on the success fraction; numbers a normal
    interval on the mean.
    """
    ok = [r for r in records if r.get("status") == "ok"]
    keys = sorted({k for r in ok for k, v in r.items()
                   if not k.startswith("_") and k != "trial" and (_is_number(v) or isinstance(v, (bool, np.bool_)))})
    out = {}
    for key in keys:
        vals = [r[key] for r in ok if _is_number(r.get(key)) or isinstance(r.get(key), (bool, np.bool_))]
        if not vals:
            continue
        n = len(vals)
        if all(isinstance(v, (bool, np.bool_)) for v in vals):
            successes = int(sum(bool(v) for v in vals))
            lo, hi = wilson_interval(successes, n)
            mean = successes / n
            std = math.sqrt(mean * (1 - mean))
        else:
            x = np.asarray(vals, dtype=float)
            mean = float(x.mean())
            std = float(x.std(ddof=1)) if n > 1 else 0.0
            half = Z95 * std / math.sqrt(n)
            lo, hi = mean - half, mean + half
        out[key] = {"mean": mean, "std": std, "n": n, "ci_lo": lo, "ci_hi": hi}
    return out


def _public(rec: dict) -> dict:
    return {k: v for k, v in rec.items() if not k.startswith("_")}


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    records: list
    summary: dict
    criteria: list
    artifacts: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    @property
    def failed_trials(self) -> int:
        return sum(1 for r in self.records if r.get("status") != "ok")

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.criteria)

    def to_dict(self, include_wall_time: bool = True) -> dict:
        out = {"experiment": self.experiment, "config": self.config,
               "trials": [_public(r) for r in self.records], "failed_trials": self.failed_trials,
               "summary": self.summary, "derived": self.derived, "criteria": self.criteria, "passed": self.passed,
               "artifacts": list(self.artifacts)}
        if include_wall_time:
            out["wall_time_s"] = self.wall_time_s
        return out

    def content_json(self) -> str:
        """Serialized report without the wall-time field; deterministic for a fixed config."""
        return json_text(self.to_dict(include_wall_time=False))


def _dispatch(cfg: ExperimentConfig, n: int, threads: int) -> list[dict]:
    if threads <= 1 or n <= 1:
        return [run_trial(cfg, i) for i in range(n)]
    with ProcessPoolExecutor(max_workers=min(threads, n)) as pool:
        return list(pool.map(run_trial, [cfg] * n, range(n), chunksize=max(1, n // (4 * threads))))


def run(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Execute every trial of ``cfg`` and, if ``cfg.output_dir`` is set, write
    ``report_<experiment>.json``, ``trials_<experiment>.csv`` and any artifacts."""
    start = time.perf_counter()
    exp = REGISTRY[cfg.experiment]
    n = exp.units(cfg)
    records = sorted(_dispatch(cfg, n, int(threads)), key=lambda r: r["trial"])
    ok = [r for r in records if r["status"] == "ok"]
    summary = summarize_records(records)
    criteria: list = []
    artifacts: list = []
    extra: dict = {}
    if ok:
        extra, criteria = exp.criteria(cfg, ok)
        artifacts = exp.artifacts(cfg, ok)
    elif n:
        criteria = [{"name": "successful_trials", "value": 0.0, "lo": 1.0, "hi": None, "passed": False,
                     "detail": f"all {n} trials failed"}]
    written = [name for name, _ in artifacts]
    report = ExperimentReport(experiment=cfg.experiment, config=cfg.to_dict(), records=records,
                              summary=summary, criteria=criteria, artifacts=written, derived=extra)
    report.wall_time_s = time.perf_counter() - start
    if cfg.output_dir:
        write_report(report, cfg.output_dir, artifacts)
    return report


def write_report(report: ExperimentReport, out_dir: str, artifacts=()) -> list[str]:
    paths = []
    for name, text in artifacts:
        path = os.path.join(out_dir, name)
        _write_text(path, text)
        paths.append(path)
    json_path = os.path.join(out_dir, f"report_{report.experiment}.json")
    _write_text(json_path, json_text(report.to_dict()))
    csv_path = os.path.join(out_dir, f"trials_{report.experiment}.csv")
    emit_csv(report.to_dict(), csv_path)
    return [json_path, csv_path, *paths]
