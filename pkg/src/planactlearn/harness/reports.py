"""CSV and JSON report writers, and replay from raw run logs."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from planactlearn.harness.suites import AggregateRow, aggregate

TABLE = "table1.csv"
TRACE = "trace.json"
SCALING = "scaling.csv"
RUNS = "runs.jsonl"
TIMING = "timing.jsonl"


def fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{float(v):.6g}"


def sig6(v):
    """Round to 6 significant digits for JSON output; NaN becomes null."""
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return float(f"{float(v):.6g}")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_table(rows: list[AggregateRow], path: Path) -> None:
    _write_csv(
        path,
        ["alpha", "beta", "epsilon", "S", "lrn", "G"],
        [[fmt(r.alpha), fmt(r.beta), fmt(r.epsilon), fmt(r.states), fmt(r.lrn), fmt(r.goal_pct)] for r in rows],
    )


def trace_entries(records: list[dict]) -> list[dict]:
    out = []
    for r in records:
        tr = r.get("trace") or {"step": [], "n_states": [], "divergence": [], "stderr": []}
        out.append(
            {
                "alpha": sig6(r["alpha"]),
                "beta": sig6(r["beta"]),
                "epsilon": sig6(r["epsilon"]),
                "rep": r["rep"],
                "seed": r["seed"],
                "step": tr["step"],
                "n_states": tr["n_states"],
                "divergence": [sig6(v) for v in tr["divergence"]],
                "stderr": [sig6(v) for v in tr["stderr"]],
            }
        )
    return out


def write_trace(records: list[dict], path: Path) -> None:
    path.write_text(json.dumps(trace_entries(records), indent=1, sort_keys=True) + "\n")


def scaling_rows(records: list[dict]) -> list[tuple[int, float, int]]:
    """Mean loop seconds for every |S| observed, pooled over runs."""
    pooled: dict[int, list[float]] = {}
    for r in records:
        for n, t in r.get("loop_times", []):
            pooled.setdefault(int(n), []).append(float(t))
    return [(n, float(np.mean(v)), len(v)) for n, v in sorted(pooled.items())]


def write_scaling(records: list[dict], path: Path) -> None:
    _write_csv(path, ["S", "seconds", "loops"], [[n, fmt(t), k] for n, t, k in scaling_rows(records)])


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares y = a x + b; returns (a, b, R^2)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float(((y - (a * x + b)) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


def binned_means(xs, ys, bins: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Means of ``xs`` and ``ys`` within equal-width bins over the ``xs`` range."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    edges = np.linspace(x.min(), x.max(), bins + 1)
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1)
    keep = np.flatnonzero(np.bincount(idx, minlength=bins))
    counts = np.bincount(idx, minlength=bins)[keep]
    bx = np.bincount(idx, weights=x, minlength=bins)[keep] / counts
    by = np.bincount(idx, weights=y, minlength=bins)[keep] / counts
    return bx, by


def scaling_fit(records: list[dict], bins: int = 20) -> tuple[float, float, float]:
    """Linear fit of loop seconds against |S| over binned per-loop times."""
    pts = [(n, t) for r in records for n, t in r.get("loop_times", [])]
    if len(pts) < 2:
        raise ValueError("need at least two timed loops")
    xs, ys = zip(*pts)
    return linear_fit(*binned_means(xs, ys, bins))


def write_raw(records: list[dict], out: Path) -> None:
    """Raw logs: deterministic fields in runs.jsonl, wall-clock timings in timing.jsonl."""
    with open(out / RUNS, "w") as fh:
        for r in records:
            fh.write(json.dumps({k: v for k, v in r.items() if k != "loop_times"}, sort_keys=True) + "\n")
    with open(out / TIMING, "w") as fh:
        for r in records:
            fh.write(json.dumps({"rep": r["rep"], "seed": r["seed"], "loop_times": r.get("loop_times", [])}) + "\n")


def emit_reports(rows: list[AggregateRow], records: list[dict], out, raw: bool = True) -> dict[str, Path]:
    if not records:
        raise ValueError("no results to report")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in (TABLE, TRACE, SCALING)}
    write_table(rows, paths[TABLE])
    write_trace(records, paths[TRACE])
    write_scaling(records, paths[SCALING])
    if raw:
        write_raw(records, out)
        paths[RUNS] = out / RUNS
        paths[TIMING] = out / TIMING
    return paths


def load_records(src) -> list[dict]:
    src = Path(src)
    records = [json.loads(line) for line in (src / RUNS).read_text().splitlines() if line]
    timing_path = src / TIMING
    if timing_path.exists():
        timing = [json.loads(line) for line in timing_path.read_text().splitlines() if line]
        if len(timing) != len(records):
            raise ValueError("timing log does not match run log")
        for r, t in zip(records, timing):
            r["loop_times"] = t["loop_times"]
    return records


def replay(src, out=None) -> dict[str, Path]:
    """Re-emit the reports from the raw logs in ``src``."""
    records = load_records(src)
    return emit_reports(aggregate(records), records, out if out is not None else src, raw=out is not None)
