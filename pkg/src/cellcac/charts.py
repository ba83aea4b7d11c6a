"""Line charts rendered from sweep CSV files.

Reads the CSV format written by the sweep runners (tolerating the '#'
summary comments an alpha scan appends) and draws one line per selected
series into a standalone vector file. Rendering is a pure consumer of
the CSV: a chart that fails to render leaves the data untouched.

A series names a policy and a metric, as "<policy label>:<metric>" with
an optional "@<alpha>" qualifier after the label when several acceptance
factors share one policy label, e.g.

    acceptance-guard(130,100,110)@0.5:p_block

With no explicit selection, every (policy, alpha) pair in the file is
drawn against the p_block metric.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ConfigError, ParameterError

METRICS = ("p_block", "p_drop", "sim_p_block", "sim_p_drop")

_X_LABEL = "new-call arrival rate (calls/s)"


def _read_rows(csv_path: Path) -> list[dict]:
    try:
        with open(csv_path, "r", newline="", encoding="utf-8") as handle:
            data_lines = [line for line in handle if line.strip() and not line.startswith("#")]
    except OSError as err:
        raise ConfigError(f"{csv_path}: {err}") from None
    reader = csv.DictReader(data_lines)
    if reader.fieldnames is None:
        raise ConfigError(f"{csv_path}: empty CSV")
    missing = {"lambda_n", "policy", "alpha"} - set(reader.fieldnames)
    if missing:
        raise ConfigError(f"{csv_path}: not a sweep CSV, missing columns {sorted(missing)}")
    return list(reader)


def _series_key(row: dict) -> tuple[str, str]:
    return row["policy"], row.get("alpha") or ""


def _parse_selection(token: str) -> tuple[str, str | None, str]:
    """Split 'label[@alpha]:metric' into its parts."""
    head, sep, metric = token.rpartition(":")
    if not sep or not head or not metric:
        raise ParameterError(
            f"series {token!r} must look like 'policy-label:metric' "
            f"with metric one of {'/'.join(METRICS)}"
        )
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r} in series {token!r}; expected one of {METRICS}")
    label, at, alpha = head.partition("@")
    return label, (alpha if at else None), metric


def render_chart(
    csv_path: Path | str,
    out_path: Path | str,
    series: list[str] | None = None,
    log_y: bool = False,
    title: str | None = None,
) -> Path:
    """Draw the selected series from a sweep CSV into a vector file.

    The output format follows the file suffix (.svg or .pdf). Rows whose
    status is not ok, or whose metric cell is empty, are skipped, so a
    sweep with failed points still charts its healthy ones.
    """
    csv_path = Path(csv_path)
    out_path = Path(out_path)
    if out_path.suffix.lower() not in (".svg", ".pdf"):
        raise ParameterError(
            f"chart output must end in .svg or .pdf for a vector file, got {out_path.name!r}"
        )
    rows = _read_rows(csv_path)
    if not rows:
        raise ConfigError(f"{csv_path}: no data rows")
    available = sorted({_series_key(row) for row in rows})

    if series is None:
        selections = [(label, alpha if alpha else None, "p_block") for label, alpha in available]
    else:
        if not series:
            raise ParameterError("series selection must not be empty")
        selections = [_parse_selection(token) for token in series]

    figure, axes = plt.subplots(figsize=(7.0, 4.5), constrained_layout=True)
    try:
        metrics_used = []
        for label, alpha, metric in selections:
            picked = [
                row
                for row in rows
                if row["policy"] == label
                and (alpha is None or (row.get("alpha") or "") == alpha)
                and row.get(metric)
                and row.get("status", "ok").startswith("ok")
            ]
            if not picked:
                known = ", ".join(
                    f"{lab}@{alp}" if alp else lab for lab, alp in available
                )
                raise ParameterError(
                    f"series {label!r}"
                    + (f" @ alpha={alpha}" if alpha is not None else "")
                    + f" with metric {metric!r} matches no rows; file has: {known}"
                )
            picked.sort(key=lambda row: float(row["lambda_n"]))
            xs = [float(row["lambda_n"]) for row in picked]
            ys = [float(row[metric]) for row in picked]
            name = label if alpha is None else f"{label} alpha={alpha}"
            axes.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, label=f"{name} {metric}")
            metrics_used.append(metric)
        axes.set_xlabel(_X_LABEL)
        axes.set_ylabel(" / ".join(sorted(set(metrics_used))))
        if log_y:
            axes.set_yscale("log")
        if title:
            axes.set_title(title)
        axes.grid(True, which="both", alpha=0.3)
        axes.legend(fontsize="small")
        figure.savefig(out_path)
    finally:
        plt.close(figure)
    return out_path
