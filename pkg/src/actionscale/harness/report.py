"""Run records, order-independent aggregation, and deterministic emission."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field


@dataclass
class RunReport:
    """Everything a sweep produced: config echo, per-trial records, stats.

    Records are ordered by (cell index, trial index); aggregates are
    recomputed from the records on demand so nothing can drift.
    """

    config: dict
    axis_names: list[str]
    records: list[dict] = field(default_factory=list)

    def cells(self) -> dict:
        """Group record indices by their sweep-axis values."""
        grouped: dict[tuple, list[int]] = {}
        for i, rec in enumerate(self.records):
            key = tuple(rec.get(f"axis.{name}") for name in self.axis_names)
            grouped.setdefault(key, []).append(i)
        return grouped

    def aggregates(self) -> list[dict]:
        """Per-cell mean/min/max of every numeric field, skipping failed
        trials; plus counts. Independent of record order within a cell."""
        out = []
        for key, idxs in self.cells().items():
            recs = [self.records[i] for i in idxs]
            ok = [r for r in recs
                  if not r.get("skipped") and not r.get("failure")]
            cell: dict = {f"axis.{n}": v for n, v in zip(self.axis_names, key)}
            cell["trials"] = len(recs)
            cell["completed"] = len(ok)
            numeric: dict[str, list[float]] = {}
            for r in ok:
                for k, v in r.items():
                    if k.startswith("axis."):
                        continue
                    if isinstance(v, bool):
                        numeric.setdefault(k, []).append(1.0 if v else 0.0)
                    elif isinstance(v, (int, float)) and v == v:  # skip NaN
                        numeric.setdefault(k, []).append(float(v))
            for k in sorted(numeric):
                vals = numeric[k]
                cell[f"{k}.mean"] = sum(vals) / len(vals)
                cell[f"{k}.min"] = min(vals)
                cell[f"{k}.max"] = max(vals)
            out.append(cell)
        return out

    def fieldnames(self) -> list[str]:
        names: list[str] = []
        for rec in self.records:
            for key in rec:
                if key not in names:
                    names.append(key)
        return names

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        names = self.fieldnames()
        writer.writerow(names)
        for rec in self.records:
            writer.writerow([_cell_text(rec.get(k)) for k in names])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "config": self.config,
            "axes": self.axis_names,
            "n_records": len(self.records),
            "n_failures": sum(1 for r in self.records if r.get("failure")),
            "n_skipped": sum(1 for r in self.records if r.get("skipped")),
            "aggregates": self.aggregates(),
        }

    def to_summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True,
                          default=str) + "\n"


def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
