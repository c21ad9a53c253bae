"""Append-only trial log: one JSON object per line, one line per evaluation."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional

WALL_TIME_FIELDS = ("wall_time",)


@dataclass
class TrialRecord:
    run_id: str
    algorithm: str
    seed: int
    generation: int
    slot: int
    genes: list[float]
    hp: Optional[dict]
    fitness: Optional[float]
    status: str
    eval_seed: int
    wall_time: float

    def to_line(self) -> str:
        d = asdict(self)
        if d["fitness"] is not None and not math.isfinite(d["fitness"]):
            d["fitness"] = None
        return json.dumps(d, sort_keys=True, allow_nan=False)

    @classmethod
    def from_line(cls, line: str) -> "TrialRecord":
        return cls(**json.loads(line))


class TrialLog:
    def __init__(self, path):
        self.path = Path(path)

    def append(self, record: TrialRecord) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(record.to_line() + "\n")
            fh.flush()

    def read(self) -> list[TrialRecord]:
        """All complete records; a torn final line from a crash is skipped."""
        if not self.path.exists():
            return []
        out = []
        for line in self.path.read_text(encoding="utf-8").splitlines(keepends=True):
            if not line.endswith("\n"):
                break
            try:
                out.append(TrialRecord.from_line(line))
            except (ValueError, TypeError):
                break
        return out

    def keep_runs(self, run_ids: Iterable[str]) -> int:
        """Rewrite the log keeping only records of ``run_ids``; returns records dropped."""
        keep = set(run_ids)
        records = self.read()
        kept = [r for r in records if r.run_id in keep]
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text("".join(r.to_line() + "\n" for r in kept), encoding="utf-8")
        os.replace(tmp, self.path)
        return len(records) - len(kept)


def strip_wall_time(text: str) -> str:
    """Log text with wall-time fields removed, for determinism comparisons."""
    lines = []
    for line in text.splitlines():
        d = json.loads(line)
        for k in WALL_TIME_FIELDS:
            d.pop(k, None)
        lines.append(json.dumps(d, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")
