"""Parsers for the pdmplab file contracts.

Density CSV: '#'-prefixed key=value metadata lines (box, cells and state
are mandatory), a header row, then one `cell_index_1,..,cell_index_d,value`
row per cell.  Reports and summaries are plain JSON.  This package never
recomputes physics: every number it draws or annotates comes straight
from these files.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["FileContractError", "read_density_csv", "read_json_report"]


class FileContractError(ValueError):
    pass


def read_density_csv(path):
    """Returns (values ndarray, metadata dict)."""
    meta = {}
    rows = []
    try:
        fh = open(path)
    except OSError as exc:
        raise FileContractError(f"cannot read density CSV: {exc}") from exc
    with fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val
            elif not line.startswith("cell_index"):
                rows.append(line.split(","))
    for key in ("box", "cells", "state"):
        if key not in meta:
            raise FileContractError(f"density CSV missing metadata key '{key}'")
    try:
        cells = json.loads(meta["cells"])
        box = json.loads(meta["box"])
    except json.JSONDecodeError as exc:
        raise FileContractError(f"unparseable metadata: {exc}") from exc
    if not rows:
        raise FileContractError("density CSV has no data rows")
    values = np.zeros(cells)
    for parts in rows:
        if len(parts) != len(cells) + 1:
            raise FileContractError(f"bad row width: {parts!r}")
        idx = tuple(int(p) for p in parts[:-1])
        values[idx] = float(parts[-1])
    meta["box_parsed"] = box
    meta["cells_parsed"] = cells
    return values, meta


def read_json_report(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise FileContractError(f"cannot read report: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileContractError(f"malformed JSON in {path}: {exc}") from exc
