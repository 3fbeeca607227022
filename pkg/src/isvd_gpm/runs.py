"""Writing continual-run artifacts and aggregating them into sweep tables."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plots
from .config import RunConfig
from .harness.continual import RunReport, run_sequence
from .harness.tasks import make_tasks

log = logging.getLogger(__name__)

REPORT_FILE = "report.json"
SUMMARY_COLUMNS = ["run_dir", "projection", "gamma_th", "a_metric", "fm", "seeds"]


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _mode_name(project: bool) -> str:
    return "on" if project else "off"


def _summarize(cfg: RunConfig, runs: list[tuple[str, RunReport]]) -> list[dict]:
    out = []
    for mode in sorted({m for m, _ in runs}):
        reps = [r for m, r in runs if m == mode]
        fms = [r.forgetting for r in reps]
        out.append({
            "projection": mode,
            "gamma_th": cfg.harness.gamma_th,
            "a_metric": float(np.mean([r.a_metric for r in reps])),
            "fm": None if any(f is None for f in fms) else float(np.mean(fms)),
            "seeds": [r.seed for r in reps],
            "a_metric_per_seed": [r.a_metric for r in reps],
            "fm_per_seed": fms,
        })
    return out


def continual_run(cfg: RunConfig, out_dir, make_plots: bool = True) -> dict:
    """Run every (projection mode, seed) pair and write the report files.

    The report is rewritten after each finished run, so a training failure
    still leaves the completed runs on disk before the error propagates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs: list[tuple[str, RunReport]] = []
    doc = {
        "kind": "continual-run",
        "suite": cfg.suite,
        "seeds": list(cfg.seeds),
        "projection": cfg.projection,
        "config": cfg.harness.to_dict(),
        "status": "running",
        "runs": [],
        "summary": [],
    }
    try:
        for seed in cfg.seeds:
            tasks = make_tasks(cfg.harness.tasks, seed)
            for project in cfg.projection_modes():
                rep = run_sequence(replace(cfg.harness, project=project), seed, tasks)
                mode = _mode_name(project)
                runs.append((mode, rep))
                log.info("seed %d projection %s: A=%.4f FM=%s", seed, mode, rep.a_metric, rep.forgetting)
                dense = rep.metric_table.to_dense()
                t = dense.shape[0]
                write_csv(out / f"metric_table_{mode}_seed{seed}.csv",
                          ["step", *(f"task_{i + 1}" for i in range(t))],
                          [[b + 1, *("" if np.isnan(v) else repr(float(v)) for v in dense[b])]
                           for b in range(t)])
                if make_plots:
                    plots.metric_table(dense, f"projection {mode}, seed {seed}",
                                       out / f"metric_table_{mode}_seed{seed}.png")
                doc["runs"].append({"projection": mode, **rep.to_dict()})
                doc["summary"] = _summarize(cfg, runs)
                write_json(out / REPORT_FILE, doc)
    except Exception as exc:
        doc["status"] = "failed"
        doc["error"] = str(exc)
        write_json(out / REPORT_FILE, doc)
        raise
    doc["status"] = "ok"
    write_json(out / REPORT_FILE, doc)
    write_csv(out / "summary.csv", ["projection", "gamma_th", "a_metric", "fm", "seeds"],
              [[s["projection"], s["gamma_th"], s["a_metric"], "" if s["fm"] is None else s["fm"],
                ";".join(map(str, s["seeds"]))] for s in doc["summary"]])
    return doc


def collect_reports(run_dirs) -> tuple[list[dict], list[str]]:
    """Summary rows from every readable run dir, plus a list of problems.

    Rows are sorted by ``gamma_th`` (then projection mode, then directory).
    """
    rows, problems = [], []
    for d in run_dirs:
        path = Path(d) / REPORT_FILE
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            summary = doc["summary"]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            problems.append(f"{path}: {exc}")
            continue
        if not summary:
            problems.append(f"{path}: no completed runs")
            continue
        for s in summary:
            rows.append({
                "run_dir": os.fspath(d),
                "projection": s["projection"],
                "gamma_th": float(s["gamma_th"]),
                "a_metric": float(s["a_metric"]),
                "fm": None if s["fm"] is None else float(s["fm"]),
                "seeds": list(s["seeds"]),
            })
    rows.sort(key=lambda r: (r["gamma_th"], r["projection"], r["run_dir"]))
    return rows, problems


def write_summary(rows: list[dict], out_dir, make_plots: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "summary.csv"
    write_csv(path, SUMMARY_COLUMNS,
              [[r["run_dir"], r["projection"], r["gamma_th"], r["a_metric"],
                "" if r["fm"] is None else r["fm"], ";".join(map(str, r["seeds"]))] for r in rows])
    if make_plots and rows:
        plots.gamma_sweep(rows, out / "gamma_sweep.png")
    return path
