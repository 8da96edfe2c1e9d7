"""Structured run telemetry: one canonical JSON object per line.

Records carry no wall-clock fields, so a run log is byte-reproducible for a
fixed config and seed.
"""

from __future__ import annotations

import json
import os

__all__ = ["RunLog"]


class RunLog:
    """Collects telemetry records; optionally mirrors them to a JSONL file."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.records: list[dict] = []
        self._fh = open(path, "w", encoding="utf-8") if path is not None else None

    def emit(self, record: dict) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            self._fh.write("\n")
            self._fh.flush()

    __call__ = emit

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "RunLog":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
