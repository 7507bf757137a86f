"""JSON serialization, text tables and run manifests."""

from __future__ import annotations

import dataclasses
import datetime as _dt
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__, _rng

SCHEMA_VERSION = 1


def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj, indent=2) -> str:
    return json.dumps(to_jsonable(obj), indent=indent, sort_keys=False)


def format_table(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for i, r in enumerate(cells):
        lines.append("  ".join(c.rjust(w) if i and col else c.ljust(w)
                               for col, (c, w) in enumerate(zip(r, widths))).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _cell(v) -> str:
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "yes" if v else "no"
    if isinstance(v, (float, np.floating)):
        if math.isinf(v):
            return "inf"
        return f"{v:.6g}"
    return str(v)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, argv, config: dict, seed, inputs=()) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "run_manifest",
        "tool": "rocketlab",
        "version": __version__,
        "rng": _rng.describe(),
        "subcommand": command,
        "argv": list(argv),
        "config": to_jsonable(config),
        "seed": seed,
        "inputs": {str(p): file_digest(p) for p in inputs if Path(p).is_file()},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
