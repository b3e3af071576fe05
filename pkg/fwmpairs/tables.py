"""Tabular presentation of driver results: DataFrames, CSV/JSON files and console summaries."""
from __future__ import annotations

import json
import math
import os
from typing import Any, Iterable, Optional

import numpy as np
import pandas as pd

from . import config as C
from .counting import MetricsRecord
from .harness import CheckRow, ScanResult, ScanRow


def _format_float(value: float | int | None, *, decimals: int = 2, suffix: str = "", style: str = "f") -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return "—"
    return f"{value:.{decimals}{style}}{suffix}"


def _rates(prefix: str, m: Optional[MetricsRecord]) -> dict[str, float]:
    if m is None:
        return {}
    return {
        f"{prefix}_D_s_Hz": m.D_s, f"{prefix}_D_s_sigma_Hz": m.sigma_D_s,
        f"{prefix}_D_i_Hz": m.D_i, f"{prefix}_D_i_sigma_Hz": m.sigma_D_i,
        f"{prefix}_D_c_Hz": m.D_c, f"{prefix}_D_c_sigma_Hz": m.sigma_D_c,
        f"{prefix}_D_a_Hz": m.D_a, f"{prefix}_D_a_sigma_Hz": m.sigma_D_a,
        f"{prefix}_contrast": m.contrast, f"{prefix}_contrast_sigma": m.sigma_contrast,
        f"{prefix}_R_s": m.R_s, f"{prefix}_R_i": m.R_i,
    }


def _zwm(prefix: str, records: dict[str, MetricsRecord]) -> dict[str, float]:
    if not records:
        return {}
    cross, self_s, self_i = records["cross"], records["self_signal"], records["self_idler"]
    return {
        f"{prefix}_D_c_Hz": cross.D_c,
        f"{prefix}_D_a_Hz": cross.D_a,
        f"{prefix}_self_s_contrast": self_s.contrast,
        f"{prefix}_self_s_contrast_sigma": self_s.sigma_contrast,
        f"{prefix}_self_i_contrast": self_i.contrast,
        f"{prefix}_self_i_contrast_sigma": self_i.sigma_contrast,
        f"{prefix}_V_Hz": cross.V,
        f"{prefix}_sigma_V_Hz": cross.sigma_V,
        f"{prefix}_V_over_sigma": cross.V_over_sigma,
    }


def _row_values(kind: str, row: ScanRow) -> dict[str, float]:
    if kind == "scan-spectrum":
        values = {"offset_nm": row.axis / C.NM, **row.extras}
    else:
        values = {"power_mW": row.axis / C.MW, "seconds": row.seconds}
    if kind == "zwm-test":
        values.update(_zwm("an", row.analytic))
        values.update(_zwm("mc", row.mc))
    else:
        values.update(_rates("an", row.analytic.get("cross")))
        values.update(_rates("mc", row.mc.get("cross")))
    values["pulses"] = row.pulses
    return values


COLUMNS = {
    "sweep-power": C.SWEEP_COLUMNS,
    "scan-spectrum": C.SCAN_COLUMNS,
    "zwm-test": C.ZWM_COLUMNS,
}


def result_columns(result: ScanResult) -> list[str]:
    columns = COLUMNS[result.kind]
    if result.analytic_only:
        columns = [c for c in columns if c != "pulses" and not c.startswith("mc_")]
    return list(columns)


def make_result_table(result: ScanResult) -> pd.DataFrame:
    """One row per axis point, fixed column order for the result kind."""
    columns = result_columns(result)
    records = [_row_values(result.kind, row) for row in result.rows]
    table = pd.DataFrame.from_records(records)
    table = table.reindex(columns=columns)
    if "pulses" in table.columns:
        table["pulses"] = table["pulses"].astype("int64")
    return table


def make_calibration_table(rows: Iterable[CheckRow]) -> pd.DataFrame:
    table = pd.DataFrame([r._asdict() for r in rows], columns=["quantity", "model", "reference"])
    with np.errstate(divide="ignore", invalid="ignore"):
        table["ratio"] = table["model"] / table["reference"]
    return table


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_table(table: pd.DataFrame, path: str) -> None:
    table.to_csv(path, index=False, na_rep="nan", lineterminator="\n")


def write_result(result: ScanResult, output_dir: str) -> tuple[str, str]:
    """<kind>.csv plus a <kind>.json sidecar with provenance and fits."""
    os.makedirs(output_dir, exist_ok=True)
    csv_path = os.path.join(output_dir, f"{result.kind}.csv")
    json_path = os.path.join(output_dir, f"{result.kind}.json")
    write_table(make_result_table(result), csv_path)
    meta = {"kind": result.kind, **result.provenance, "fits": result.fits}
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


# -----------------------------
# Console summaries
# -----------------------------
def summary_lines(result: ScanResult) -> list[str]:
    lines = []
    for row in result.rows:
        an = row.analytic["cross"]
        mc = row.mc.get("cross")
        if result.kind == "scan-spectrum":
            head = f"offset {row.axis / C.NM:+.2f} nm  weight {_format_float(row.extras.get('weight'), decimals=3)}"
        else:
            head = f"P {row.axis / C.MW:.3f} mW  T {row.seconds:g} s"
        parts = [head, f"C/A {_format_float(an.contrast, decimals=1)}"]
        if result.kind == "zwm-test":
            parts.append(f"V/σ {_format_float(an.V_over_sigma, decimals=1)}")
        else:
            parts.append(f"D_c {_format_float(an.D_c / C.KHZ, decimals=3, suffix=' kHz')}")
        if mc is not None:
            parts.append(f"MC C/A {_format_float(mc.contrast, decimals=1)}")
            if result.kind == "zwm-test":
                parts.append(f"MC V/σ {_format_float(mc.V_over_sigma, decimals=1)}")
        lines.append("  ".join(parts))
    for name, fit in result.fits.items():
        if isinstance(fit, dict):
            if "error" in fit:
                lines.append(f"{name}: fit failed ({fit['error']})")
            else:
                lines.append(f"{name}: center {_format_float(fit['center'], decimals=3)} nm, "
                             f"FWHM {_format_float(fit['fwhm'], decimals=3)} nm")
        else:
            lines.append(f"{name}: {_format_float(fit, decimals=3)}")
    return lines


def calibration_lines(table: pd.DataFrame) -> list[str]:
    width = max(len(q) for q in table["quantity"])
    lines = [f"{'quantity':<{width}}  {'model':>12}  {'reference':>12}"]
    for _, r in table.iterrows():
        lines.append(
            f"{r['quantity']:<{width}}  {_format_float(r['model'], decimals=5, style='g'):>12}  "
            f"{_format_float(r['reference'], decimals=5, style='g'):>12}"
        )
    return lines
