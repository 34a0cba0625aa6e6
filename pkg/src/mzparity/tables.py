"""Machine-readable result tables (CSV or JSON) with a reproducibility header.

Every table carries the tool version, the pinned RNG algorithm, the seed,
and a compact JSON echo of the fully materialized config, which is enough
to reproduce the run bit-exactly.  Tables contain no timestamps: two
invocations with identical config and seed must produce byte-identical
output.

CSV dialect: comma separated, '.' decimal point, no thousands separators,
newline-terminated rows, '#'-prefixed metadata lines before the header.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import RunConfig
from .detector import RNG_ALGORITHM
from .estimation import ResolutionWindowError, resolution_1e
from .runner import ScanResult, SweepResult, min_finite_uncertainty, snl_reference
from .core import ObservableKind


@dataclass
class ResultTable:
    """An ordered set of columns plus reproducibility metadata."""

    table: str
    columns: list[str]
    rows: list[list]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".12g")


def _parse_cell(text: str):
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def base_metadata(config: RunConfig | None, table: str) -> dict:
    meta = {"table": table, "tool": "mzparity", "version": __version__,
            "rng": RNG_ALGORITHM}
    if config is not None:
        meta["seed"] = config.seed
        meta["config"] = config.to_dict()
    return meta


def to_csv_text(table: ResultTable) -> str:
    out = io.StringIO()
    for key, value in table.metadata.items():
        if isinstance(value, dict):
            value = json.dumps(value, separators=(",", ":"))
        out.write(f"# {key} = {value}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_format_cell(v) for v in row])
    return out.getvalue()


def to_json_text(table: ResultTable) -> str:
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return bool(v)
        if isinstance(v, (int, np.integer)):
            return int(v)
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v

    doc = {
        "metadata": table.metadata,
        "columns": table.columns,
        "rows": [[cell(v) for v in row] for row in table.rows],
    }
    return json.dumps(doc, indent=2) + "\n"


def from_csv_text(text: str) -> ResultTable:
    metadata: dict = {}
    lines = text.splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        key, _, value = line[1:].partition("=")
        key, value = key.strip(), value.strip()
        if value.startswith("{"):
            metadata[key] = json.loads(value)
        else:
            metadata[key] = value
    reader = csv.reader(lines[body_start:])
    header = next(reader)
    rows = [[_parse_cell(c) for c in row] for row in reader if row]
    return ResultTable(table=str(metadata.get("table", "")), columns=header,
                       rows=rows, metadata=metadata)


def from_json_text(text: str) -> ResultTable:
    doc = json.loads(text)
    meta = doc.get("metadata", {})
    return ResultTable(table=str(meta.get("table", "")), columns=doc["columns"],
                       rows=doc["rows"], metadata=meta)


def read_table(path: str) -> ResultTable:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return from_json_text(text)
    return from_csv_text(text)


def write_table(table: ResultTable, path: str | None, fmt: str) -> None:
    """Render and write a table; existing files are never left half-written."""
    text = to_json_text(table) if fmt == "json" else to_csv_text(table)
    if path is None:
        sys.stdout.write(text)
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


SCAN_COLUMNS = ["phi_rad", "mean_detected", "parity_est", "parity_err",
                "parity_analytic", "p0_est", "p0_err", "p0_analytic", "shots"]


def scan_table(result: ScanResult, config: RunConfig | None) -> ResultTable:
    rows = [
        [result.phis[i], result.mean_detected[i],
         result.parity_value[i], result.parity_err[i], result.parity_analytic[i],
         result.p0_value[i], result.p0_err[i], result.p0_analytic[i],
         result.spec.shots_per_point]
        for i in range(result.phis.size)
    ]
    return ResultTable(table="scan", columns=SCAN_COLUMNS, rows=rows,
                       metadata=base_metadata(config, "scan"))


SWEEP_COLUMNS = ["n_mean", "parity_height", "parity_height_err",
                 "p0_height", "p0_height_err",
                 "parity_width_rad", "p0_width_rad",
                 "parity_res_x", "p0_res_x",
                 "parity_min_dphi_rad", "p0_min_dphi_rad",
                 "parity_sens_x", "p0_sens_x",
                 "snl_dphi_rad", "shots"]


def sweep_table(result: SweepResult, config: RunConfig | None) -> ResultTable:
    two_pi = 2.0 * math.pi
    rows = []
    for i, nbar in enumerate(result.photon_numbers):
        rows.append([
            nbar,
            result.parity_height[i], result.parity_height_err[i],
            result.p0_height[i], result.p0_height_err[i],
            result.parity_width[i], result.p0_width[i],
            two_pi / result.parity_width[i], two_pi / result.p0_width[i],
            result.parity_min_dphi[i], result.p0_min_dphi[i],
            two_pi / result.parity_min_dphi[i], two_pi / result.p0_min_dphi[i],
            result.snl_dphi[i],
            result.scans[i].spec.shots_per_point,
        ])
    return ResultTable(table="sweep", columns=SWEEP_COLUMNS, rows=rows,
                       metadata=base_metadata(config, "sweep"))


ANALYZE_COLUMNS = ["phi_rad", "parity_dphi_rad", "parity_divergent",
                   "p0_dphi_rad", "p0_divergent"]


def analyze_table(phis, parity_values, p0_values, metadata: dict,
                  mean_photons: float | None) -> ResultTable:
    """Phase-uncertainty table for an existing scan, plus summary metadata."""
    from .estimation import uncertainty_curve

    phis = np.asarray(phis, dtype=float)
    zero_limit = math.nan
    if mean_photons is not None and mean_photons > 0:
        zero_limit = snl_reference(mean_photons)

    curves = {
        ObservableKind.PARITY: np.asarray(parity_values, dtype=float),
        ObservableKind.ZERO_PHOTON: np.asarray(p0_values, dtype=float),
    }
    per_point = {}
    for kind, values in curves.items():
        name = "parity" if kind is ObservableKind.PARITY else "p0"
        delta, divergent = uncertainty_curve(phis, values, kind, zero_limit)
        per_point[name] = (delta, divergent)
        try:
            width = resolution_1e(phis, values)
            metadata[f"{name}_width_rad"] = _format_cell(width)
            metadata[f"{name}_res_x"] = _format_cell(2.0 * math.pi / width)
        except ResolutionWindowError:
            metadata[f"{name}_width_rad"] = "nan"
        try:
            best = min_finite_uncertainty(phis, values, kind, zero_limit)
            metadata[f"{name}_min_dphi_rad"] = _format_cell(best)
            metadata[f"{name}_sens_x"] = _format_cell(2.0 * math.pi / best)
        except ValueError:
            metadata[f"{name}_min_dphi_rad"] = "nan"

    rows = []
    for i in range(phis.size):
        rows.append([
            phis[i],
            per_point["parity"][0][i], bool(per_point["parity"][1][i]),
            per_point["p0"][0][i], bool(per_point["p0"][1][i]),
        ])
    return ResultTable(table="analyze", columns=ANALYZE_COLUMNS, rows=rows,
                       metadata=metadata)


FIT_COLUMNS = ["observable", "visibility", "dark_mean", "residual_norm", "n_points"]


def fit_table(fits, metadata: dict) -> ResultTable:
    rows = [[fit.kind.value, fit.visibility, fit.dark_mean, fit.residual_norm, n]
            for fit, n in fits]
    return ResultTable(table="fit-heights", columns=FIT_COLUMNS, rows=rows,
                       metadata=metadata)
