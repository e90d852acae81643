"""Deterministic CSV/JSON result emission.

Data columns are formatted with a fixed float representation so repeated
runs of the same resolved configuration produce byte-identical CSV files;
wall-clock timings live only in the JSON metadata sidecar, next to the
resolved parameter snapshot and its hash.
"""

from __future__ import annotations

import hashlib
import json
import os

FLOAT_FORMAT = "%.12g"


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if isinstance(value, complex):
        return (FLOAT_FORMAT + "%+gj") % (value.real, value.imag)
    return str(value)


def collect_fields(rows: list[dict]) -> list[str]:
    """Stable column order: first-seen order across rows."""
    fields: list[str] = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    return fields


def write_csv(path: str, rows: list[dict], fields: list[str] | None = None) -> None:
    fields = fields or collect_fields(rows)
    lines = [",".join(fields)]
    for row in rows:
        lines.append(",".join(_format_cell(row.get(f)) for f in fields))
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def snapshot_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_metadata(path: str, payload: dict) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=str)
        handle.write("\n")


def write_outputs(output_dir: str, stem: str, rows: list[dict],
                  resolved_config_text: str, metadata: dict) -> dict:
    """Write the CSV, the resolved-config snapshot and the JSON sidecar.

    Returns the paths written.  ``metadata`` may carry timings and validity
    flags; the snapshot hash covers only the resolved configuration so that
    timing fields never break reproducibility checks.
    """
    os.makedirs(output_dir, exist_ok=True)
    csv_path = os.path.join(output_dir, f"{stem}.csv")
    meta_path = os.path.join(output_dir, f"{stem}_metadata.json")
    config_path = os.path.join(output_dir, "resolved_config.ini")
    write_csv(csv_path, rows)
    with open(config_path, "w") as handle:
        handle.write(resolved_config_text)
    payload = dict(metadata)
    payload["config_snapshot_sha256"] = snapshot_hash(resolved_config_text)
    payload["csv_file"] = os.path.basename(csv_path)
    write_metadata(meta_path, payload)
    return {"csv": csv_path, "metadata": meta_path, "config": config_path}
