"""CSV and JSON artifact writers.

Floats are written with ``repr``, the shortest decimal string that round-trips
to the same IEEE-754 double, so identical runs produce identical bytes.
"""

import csv
import json
import math
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from src.montecarlo import CurveResult, ExperimentResult
from src.schemes.audit import AuditReport
from src.solution import PrecodingSolution

PACKAGE_NAME = "secure-slp-precoding"


def package_version() -> str:
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return "0+unknown"


def format_number(value) -> str:
    """Format one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def format_curve(curve: CurveResult) -> list[list[str]]:
    """Header row plus one row per grid point."""
    if not curve.rows:
        return [[curve.x_name]]
    header = list(curve.rows[0].keys())
    return [header] + [[format_number(row.get(key)) for key in header] for row in curve.rows]


def format_precoder(solution: PrecodingSolution) -> list[list[str]]:
    """One row per antenna, columns w_i then p as interleaved real/imag parts."""
    W = solution.W
    K = W.shape[1] - 1
    names = [f"w{i}" for i in range(K)] + ["p"]
    header = ["antenna"] + [f"{name}_{part}" for name in names for part in ("re", "im")]
    rows = [header]
    for n in range(W.shape[0]):
        cells = [str(n)]
        for value in W[n]:
            cells += [format_number(float(value.real)), format_number(float(value.imag))]
        rows.append(cells)
    return rows


def slugify(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in label).strip("_")


class ReportWriter:
    """Writes run artifacts into one output directory."""

    def __init__(self, out_dir: Path):
        """Initialize with the output directory (created if missing)."""
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def _write_rows(self, name: str, rows: list[list[str]]) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="", encoding="utf-8") as f:
            csv.writer(f, lineterminator="\n").writerows(rows)
        self.written.append(path)
        return path

    def write_json(self, name: str, data: dict) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
        self.written.append(path)
        return path

    def write_curve(self, curve: CurveResult, prefix: str) -> Path:
        return self._write_rows(f"{prefix}_{slugify(curve.label)}.csv", format_curve(curve))

    def write_result(self, result: ExperimentResult, prefix: str, metadata: dict) -> list[Path]:
        """Write every curve, the constellation dump and the metadata sidecar."""
        paths = [self.write_curve(curve, prefix) for curve in result.curves]
        if result.constellation_rows:
            dump = CurveResult(label="constellation", x_name="use", rows=result.constellation_rows)
            paths.append(self.write_curve(dump, prefix))
        sidecar = {
            **metadata,
            "version": package_version(),
            "audit_failures": result.audit_failures,
            "infeasible": result.infeasible,
            "curves": [curve.label for curve in result.curves],
        }
        if result.timing is not None:
            sidecar["timing"] = result.timing.summary()
        paths.append(self.write_json(f"{prefix}_metadata.json", sidecar))
        return paths

    def write_solution(self, solution: PrecodingSolution, audit: AuditReport, metadata: dict) -> list[Path]:
        """Write the precoder CSV and a JSON with thresholds, power and the audit."""
        csv_path = self._write_rows("solution.csv", format_precoder(solution))
        json_path = self.write_json("solution.json", {
            **metadata,
            "version": package_version(),
            "solution": solution.summary(),
            "audit": {"passed": audit.passed, "failures": audit.failures},
        })
        return [csv_path, json_path]


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")
