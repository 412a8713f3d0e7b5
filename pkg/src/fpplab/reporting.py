"""Deterministic CSV and manifest emission.

CSV files follow RFC 4180 quoting with '.' as the decimal separator and 17
significant digits for reals, so reruns with equal configuration produce
byte-identical bodies.  Every run writes a JSON manifest echoing the full
configuration, the seed-derivation rule, and the list of produced files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from typing import Dict, Iterable, List, Sequence

from . import groups
from .stats import SEED_RULE

TOOL_VERSION = "0.1.0"


def fmt(value) -> str:
    """Canonical cell formatting: 17 significant digits for reals."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def element_str(spec: groups.GroupSpec, g: tuple) -> str:
    """Human-readable element cell: space-joined coordinates or letters."""
    if spec.kind in (groups.LATTICE, groups.HEISENBERG):
        return " ".join(str(c) for c in g)
    if spec.kind == groups.TREE:
        return "-".join(str(c) for c in g) if g else "e"
    return f"({element_str(spec.left, g[0])}|{element_str(spec.right, g[1])})"


def element_key_hex(spec: groups.GroupSpec, g: tuple) -> str:
    return groups.encode(spec, g).hex()


def config_hash(echo: Dict) -> str:
    """Reproducible digest of the inputs that determine the results."""
    material = {k: v for k, v in echo.items() if k not in ("out", "workers")}
    blob = json.dumps(material, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_manifest(path: str, *, experiment: str, echo: Dict, summary: Dict,
                   outputs: List[str], wall_time_s: float) -> str:
    manifest = {
        "experiment": experiment,
        "tool_version": TOOL_VERSION,
        "config": echo,
        "input_hash": config_hash(echo),
        "seed_rule": SEED_RULE,
        "wall_time_s": wall_time_s,
        "summary": summary,
        "outputs": sorted(outputs),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(value):
    import numpy as np
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)
