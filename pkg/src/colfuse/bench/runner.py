"""Benchmark runner: repeated cold-start query executions with trace
capture, plus human and machine-readable reports."""

from __future__ import annotations

import json
import statistics
import time

from .. import engine
from ..db import Database
from ..iosim import IoConfig
from . import queries

DEFAULT_REPETITIONS = 10

REPORT_FIELDS = (
    "query", "mode", "rep", "wall_ms", "pass_launches", "bytes_read",
    "intermediate_bytes", "barrier_count", "rows",
)


def run_once(db_dir, query_id, mode, workers=engine.DEFAULT_EXEC_WORKERS,
             io_workers=None, io_config=None, scratch_bytes=engine.DEFAULT_SCRATCH_BYTES,
             work_mem_bytes=engine.DEFAULT_WORK_MEM_BYTES, params=None):
    """One cold-start execution: the database (and with it every iosim
    buffer) is opened fresh, so nothing carries over between runs."""
    query = queries.get_query(query_id, **(params or {}))
    with Database(db_dir) as db:
        t0 = time.perf_counter()
        result = engine.run_query(
            db, query, mode, workers=workers, io_workers=io_workers,
            io_config=io_config or IoConfig(), scratch_bytes=scratch_bytes,
            work_mem_bytes=work_mem_bytes,
        )
        wall_ms = (time.perf_counter() - t0) * 1e3
    return result, wall_ms


def run_bench(db_dir, query_id, modes=("fused", "staged"),
              repetitions=DEFAULT_REPETITIONS, warmup=1, **kwargs):
    """Rows of measurements, one per (mode, repetition).

    Modes are interleaved within each repetition so slow machine drift
    hits all modes alike, after ``warmup`` untimed runs per mode."""
    rows = []
    for mode in modes:
        for _ in range(warmup):
            run_once(db_dir, query_id, mode, **kwargs)
    for rep in range(repetitions):
        for mode in modes:
            result, wall_ms = run_once(db_dir, query_id, mode, **kwargs)
            rows.append({
                "query": query_id,
                "mode": mode,
                "rep": rep,
                "wall_ms": wall_ms,
                "pass_launches": result.stats["pass_launches"],
                "bytes_read": result.stats["bytes_read"],
                "intermediate_bytes": sum(t.intermediate_bytes for t in result.traces),
                "barrier_count": result.stats["barrier_count"],
                "rows": len(result.rows),
            })
    return rows


def summarize(rows):
    """Per-mode means (wall time averaged over all trials) and
    fused/staged ratios."""
    by_mode = {}
    for r in rows:
        by_mode.setdefault(r["mode"], []).append(r)
    summary = {}
    for mode, rs in by_mode.items():
        summary[mode] = {
            "runs": len(rs),
            "wall_ms_mean": statistics.fmean(r["wall_ms"] for r in rs),
            "pass_launches": rs[0]["pass_launches"],
            "bytes_read": rs[0]["bytes_read"],
        }
    if "fused" in summary and "staged" in summary:
        f, s = summary["fused"], summary["staged"]
        summary["ratios"] = {
            "launch_fused_over_staged": f["pass_launches"] / s["pass_launches"],
            "launch_staged_over_fused": s["pass_launches"] / f["pass_launches"],
            "wall_staged_over_fused": s["wall_ms_mean"] / f["wall_ms_mean"],
        }
    return summary


def machine_report(rows):
    """One JSON object per line, stable field order."""
    return "\n".join(
        json.dumps({k: r[k] for k in REPORT_FIELDS}) for r in rows
    )


def human_report(rows, summary):
    lines = []
    header = "%-6s %-7s %4s %12s %9s %12s %14s" % (
        "query", "mode", "rep", "wall_ms", "launches", "bytes_read", "intermediates")
    lines.append(header)
    lines.append("-" * len(header))
    for r in rows:
        lines.append("%-6s %-7s %4d %12.3f %9d %12d %14d" % (
            r["query"], r["mode"], r["rep"], r["wall_ms"],
            r["pass_launches"], r["bytes_read"], r["intermediate_bytes"]))
    lines.append("")
    for mode in ("fused", "staged"):
        if mode in summary:
            s = summary[mode]
            lines.append(
                "%-7s mean wall %10.3f ms over %d runs, %d launches, %d bytes read"
                % (mode, s["wall_ms_mean"], s["runs"], s["pass_launches"],
                   s["bytes_read"]))
    if "ratios" in summary:
        r = summary["ratios"]
        lines.append(
            "ratios  launches fused/staged %.3f   wall staged/fused %.3f"
            % (r["launch_fused_over_staged"], r["wall_staged_over_fused"]))
    return "\n".join(lines)
