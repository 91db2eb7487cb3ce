"""Per-iteration training records, written as JSON lines and exported to CSV."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import pandas as pd

from meshvr.bundle.tables import write_csv_stable

LOG_COLUMNS = [
    "stage",
    "iteration",
    "total",
    "ldmk",
    "lap",
    "mask",
    "color",
    "tv",
    "s",
    "lr_vertices",
    "n_valid",
    "rollback",
    "wall_time",
]

# wall_time differs between otherwise identical runs
DETERMINISTIC_COLUMNS = [c for c in LOG_COLUMNS if c != "wall_time"]


@dataclass
class TrainLog:
    records: list[dict[str, Any]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: Mapping[str, Any]) -> None:
        rec = {k: record.get(k) for k in LOG_COLUMNS}
        unknown = sorted(set(record) - set(LOG_COLUMNS))
        if unknown:
            raise ValueError(f"TrainLog: unknown record fields {unknown}")
        last = self.last(rec["stage"])
        if last is not None and int(rec["iteration"]) <= int(last["iteration"]):
            raise ValueError(
                f"TrainLog: iteration {rec['iteration']} of stage {rec['stage']} is not after {last['iteration']}"
            )
        self.records.append(rec)

    def last(self, stage: Optional[str] = None) -> Optional[dict[str, Any]]:
        for rec in reversed(self.records):
            if stage is None or rec["stage"] == stage:
                return rec
        return None

    def stage_records(self, stage: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["stage"] == stage]

    def series(self, stage: str, column: str) -> list[float]:
        return [float(r[column]) for r in self.stage_records(stage) if r[column] is not None]

    def truncate(self, stage: str, iteration: int) -> None:
        """Drop records of `stage` at or after `iteration` (used when rolling back)."""
        self.records = [r for r in self.records if not (r["stage"] == stage and int(r["iteration"]) >= iteration)]

    def copy(self) -> "TrainLog":
        return TrainLog([dict(r) for r in self.records])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=LOG_COLUMNS)

    def write_jsonl(self, path: Path) -> None:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w", encoding="utf-8", newline="\n") as f:
            for rec in self.records:
                f.write(json.dumps(rec, sort_keys=True) + "\n")

    def write_csv(self, path: Path) -> None:
        write_csv_stable(Path(path), self.to_frame())

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, Any]]) -> "TrainLog":
        log = cls()
        for r in records:
            log.append(r)
        return log

    @classmethod
    def read_jsonl(cls, path: Path) -> "TrainLog":
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"training log not found: {p}")
        rows = []
        for n, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ValueError(f"{p}:{n}: invalid JSON ({e})") from e
        return cls.from_records(rows)


__all__ = ["DETERMINISTIC_COLUMNS", "LOG_COLUMNS", "TrainLog"]
