"""CSV and markdown output for benchmark reports."""

import csv
import math

from .suite import COLUMNS, METRICS, RunReport

__all__ = ["emit_report", "read_report_csv", "orderings", "markdown_summary"]

_INT_COLS = {"outer_iters", "total_fp_iters"}
_FLOAT_COLS = {"mean_fpi_per_outer", "final_delta", "final_dual_value", "wall_ms"}


def _write_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, extrasaction="ignore")
        w.writeheader()
        for r in report.rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def read_report_csv(path):
    """Parse a CSV written by :func:`emit_report` back into a report."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = dict(rec)
            for k in _INT_COLS:
                row[k] = int(row[k])
            for k in _FLOAT_COLS:
                row[k] = float(row[k])
            rows.append(row)
    return RunReport(rows)


def orderings(report):
    """Iteration-count comparisons between PG and the inexact variants.

    Returns a list of ``(description, holds)`` pairs for the algorithms
    present in the report.
    """
    agg = report.aggregates()
    out = []
    if "PG" not in agg:
        return out
    pg = agg["PG"]
    for name, a in agg.items():
        if name in ("PG", "PSG", "reference") or a["runs"] == 0 or pg["runs"] == 0:
            continue
        out.append((f"per-outer FPIs: PG > {name}",
                    pg["mean_fpi_per_outer"] > a["mean_fpi_per_outer"]))
        out.append((f"outer iterations: PG < {name}",
                    pg["outer_iters"] < a["outer_iters"]))
    return out


def _fmt(v):
    if isinstance(v, float) and math.isnan(v):
        return "-"
    return f"{v:.1f}" if isinstance(v, float) else str(v)


def markdown_summary(report):
    agg = report.aggregates()
    lines = ["# Benchmark summary", ""]
    if report.meta:
        lines += [", ".join(f"{k}: {v}" for k, v in report.meta.items()), ""]
    lines += ["| algorithm | admitted/runs | outer iterations | per-iteration FPIs "
              "| total FPIs | wall ms |",
              "|---|---|---|---|---|---|"]
    for name, a in agg.items():
        lines.append(f"| {name} | {a['runs']}/{a['total']} | {_fmt(a['outer_iters'])} | "
                     f"{_fmt(a['mean_fpi_per_outer'])} | {_fmt(a['total_fp_iters'])} | "
                     f"{_fmt(a['wall_ms'])} |")
    ords = orderings(report)
    if ords:
        lines += ["", "## Orderings", ""]
        lines += [f"- {'**holds**' if ok else 'fails'}: {desc}" for desc, ok in ords]
    return "\n".join(lines) + "\n"


def _write_aggregates_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "runs", "total"] + METRICS)
        for name, a in report.aggregates().items():
            w.writerow([name, a["runs"], a["total"]] + [repr(a[m]) for m in METRICS])


def emit_report(report, path, format="csv"):
    """Write `report` to `path`.

    ``format="csv"`` writes one row per run; ``"aggregates"`` writes the
    per-algorithm means; ``"markdown"`` (or ``"md"``) writes the summary.
    """
    try:
        if format == "csv":
            _write_csv(report, path)
        elif format == "aggregates":
            _write_aggregates_csv(report, path)
        elif format in ("markdown", "md", "markdown-summary"):
            with open(path, "w") as fh:
                fh.write(markdown_summary(report))
        else:
            raise ValueError(f"unknown report format {format!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path
