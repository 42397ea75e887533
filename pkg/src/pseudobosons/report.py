"""Serialization of suite reports: JSON, CSV, Markdown and plot data.

In JSON every floating-point value is written as a decimal string with 17
significant digits so that reading it back reproduces the exact double.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .verify import CheckResult, Report

SCHEMA_VERSION = 1
FILENAMES = {"json": "report.json", "csv": "report.csv", "md": "report.md", "plot": "plot_data.csv"}


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _encode_scalar(x):
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    return fmt_float(x)


def _encode_index(idx):
    if isinstance(idx, tuple):
        return [_encode_index(i) for i in idx]
    return idx


def _decode_index(idx):
    if isinstance(idx, list):
        return tuple(_decode_index(i) for i in idx)
    return idx


def _decode_param(x):
    return float(x) if isinstance(x, str) else x


def report_to_dict(r: Report) -> dict:
    return {
        "model": r.model,
        "params": {k: _encode_scalar(v) for k, v in r.params.items()},
        "nmax": r.nmax,
        "error": r.error,
        "pass": r.passed,
        "timings": {k: fmt_float(v) for k, v in r.timings.items()},
        "results": [
            {
                "name": c.name,
                "max_abs_deviation": fmt_float(c.max_abs_deviation),
                "tolerance": fmt_float(c.tolerance),
                "pass": c.passed,
                "details": [{"index": _encode_index(i), "deviation": fmt_float(d)} for i, d in c.details],
                "parts": {k: {"deviation": fmt_float(d), "tolerance": fmt_float(t)} for k, (d, t) in c.parts.items()},
                "series": {k: [fmt_float(x) for x in v] for k, v in c.series.items()},
            }
            for c in r.results
        ],
    }


def report_from_dict(d: dict) -> Report:
    results = [
        CheckResult(
            c["name"],
            float(c["max_abs_deviation"]),
            float(c["tolerance"]),
            [(_decode_index(e["index"]), float(e["deviation"])) for e in c["details"]],
            {k: (float(p["deviation"]), float(p["tolerance"])) for k, p in c["parts"].items()},
            {k: [float(x) for x in v] for k, v in c["series"].items()},
        )
        for c in d["results"]
    ]
    params = {k: _decode_param(v) for k, v in d["params"].items()}
    timings = {k: float(v) for k, v in d["timings"].items()}
    return Report(d["model"], params, d["nmax"], results, timings, d["error"])


def dumps_reports(reports: Sequence[Report]) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "pass": all(r.passed for r in reports),
        "failures": sum(r.failures for r in reports),
        "runs": [report_to_dict(r) for r in reports],
    }
    return json.dumps(doc, indent=1)


def loads_reports(text: str) -> list[Report]:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return [report_from_dict(d) for d in doc["runs"]]


def _param_label(params: dict) -> str:
    return ";".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in params.items())


def reports_csv(reports: Sequence[Report]) -> str:
    """One row per check per run point."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "model", "params", "nmax", "check", "pass", "max_abs_deviation", "tolerance", "seconds", "error"])
    for i, r in enumerate(reports):
        for c in r.results:
            w.writerow([
                i, r.model, _param_label(r.params), r.nmax, c.name, int(c.passed),
                fmt_float(c.max_abs_deviation), fmt_float(c.tolerance),
                f"{r.timings.get(c.name, math.nan):.3f}", r.error or "",
            ])
    return buf.getvalue()


def plot_data_csv(reports: Sequence[Report]) -> str:
    """Long-format sequences: quasi-basis partial-sum deviations and ``g_n`` growth."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "model", "params", "check", "series", "n", "value"])
    for i, r in enumerate(reports):
        for c in r.results:
            if c.name not in ("quasi_basis", "riesz_growth"):
                continue
            for key, seq in c.series.items():
                for n, val in enumerate(seq):
                    w.writerow([i, r.model, _param_label(r.params), c.name, key, n, fmt_float(val)])
    return buf.getvalue()


def reports_markdown(reports: Sequence[Report]) -> str:
    """Pass/fail summary with one table per model."""
    lines = ["# Pseudo-boson verification report", ""]
    total = sum(r.failures for r in reports)
    lines.append(f"{len(reports)} run point(s), {total} failure(s).")
    by_model: dict[str, list[tuple[int, Report]]] = {}
    for i, r in enumerate(reports):
        by_model.setdefault(r.model, []).append((i, r))
    for model, runs in by_model.items():
        lines += ["", f"## {model}", "", "| run | params | nmax | check | result | max deviation | tolerance |",
                  "|---|---|---|---|---|---|---|"]
        for i, r in runs:
            for c in r.results:
                lines.append(
                    f"| {i} | {_param_label(r.params)} | {r.nmax} | {c.name} | {'PASS' if c.passed else 'FAIL'} "
                    f"| {c.max_abs_deviation:.3e} | {c.tolerance:.1e} |"
                )
        errors = [(i, r.error) for i, r in runs if r.error]
        if errors:
            lines.append("")
            lines += [f"- run {i}: {e}" for i, e in errors]
    return "\n".join(lines) + "\n"


def emit_report(reports: Sequence[Report], out_dir: str | Path, formats: Iterable[str] = ("json",)) -> list[Path]:
    """Write the requested formats (plus plot data) to ``out_dir``; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    writers = {"json": dumps_reports, "csv": reports_csv, "md": reports_markdown}
    paths = []
    for fmt in formats:
        path = out / FILENAMES[fmt]
        path.write_text(writers[fmt](reports))
        paths.append(path)
    path = out / FILENAMES["plot"]
    path.write_text(plot_data_csv(reports))
    paths.append(path)
    return paths
