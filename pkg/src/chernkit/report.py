"""Machine-readable reports: JSON with a versioned schema, CSV eigenvalue tables.

Everything that varies between identical runs (wall-clock timestamp and
runtimes) lives under the top-level ``"generated"`` key, so two reports of
the same configuration compare equal once that key is dropped.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import json
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = "1.0"
VOLATILE_KEY = "generated"


def to_jsonable(x: Any) -> Any:
    """Convert numpy scalars/arrays, complex numbers and dataclasses to JSON types.

    Complex values become ``{"re": ..., "im": ...}``.
    """
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        if hasattr(x, "as_dict"):
            return to_jsonable(x.as_dict())
        return to_jsonable(dataclasses.asdict(x))
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return {"re": to_jsonable(x.real.tolist()), "im": to_jsonable(x.imag.tolist())}
        return to_jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _float(x.real), "im": _float(x.imag)}
    if isinstance(x, (float, np.floating)):
        return _float(x)
    return x


def _float(v) -> float | str:
    v = float(v)
    if v != v or v in (float("inf"), float("-inf")):
        return str(v)
    return v + 0.0  # normalises -0.0


@dataclass
class Report:
    command: str
    config: dict
    results: dict = field(default_factory=dict)
    cases: list = field(default_factory=list)
    exit_code: int = 0
    timings: dict = field(default_factory=dict)
    timestamp: str = ""

    def as_dict(self) -> dict:
        from . import __version__

        counts: dict[str, int] = {}
        for c in self.cases:
            counts[c["verdict"]] = counts.get(c["verdict"], 0) + 1
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "chernkit", "version": __version__},
            "command": self.command,
            "config": to_jsonable(self.config),
            "results": to_jsonable(self.results),
            "cases": to_jsonable(self.cases),
            "summary": {"counts": dict(sorted(counts.items())), "exit_code": self.exit_code},
            VOLATILE_KEY: {"timestamp": self.timestamp or now_iso(),
                           "runtime_seconds": to_jsonable(self.timings)},
        }


def now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def dumps(report: Report | dict) -> str:
    d = report.as_dict() if isinstance(report, Report) else report
    return json.dumps(d, sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_volatile(d: dict) -> dict:
    return {k: v for k, v in d.items() if k != VOLATILE_KEY}


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def emit_report(report: Report, out_dir, csv_tables: dict | None = None) -> list:
    """Write ``report.json`` and any CSV tables ``{name: (header, rows)}`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    p = os.path.join(out_dir, "report.json")
    with open(p, "w", encoding="utf-8") as fh:
        fh.write(dumps(report))
    paths.append(p)
    for name, (header, rows) in sorted((csv_tables or {}).items()):
        q = os.path.join(out_dir, f"{name}.csv")
        write_csv(q, header, rows)
        paths.append(q)
    return paths
