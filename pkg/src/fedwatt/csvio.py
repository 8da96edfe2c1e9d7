"""CSV persistence for household series.

File contract (bit-exact): UTF-8, header ``timestamp,aggregate,<name>...``,
decimal point ``.``, newline ``\\n``, no quoting and no thousands separators.
Values are written with the shortest decimal representation that parses back
to the identical float, so a write/read round trip is exact.
"""

from __future__ import annotations

import os

import numpy as np

from .data import HouseholdSeries
from .errors import ValidationError

__all__ = ["read_csv", "write_csv"]


def _format_value(v: float) -> str:
    return repr(float(v))


def write_csv(series: HouseholdSeries, path: str | os.PathLike) -> None:
    """Write one household to ``path``; columns are timestamp, aggregate, appliances."""
    for name in series.appliance_names:
        if "," in name or "\n" in name or "\r" in name:
            raise ValidationError(f"appliance name {name!r} not representable in CSV")
    lines = ["timestamp,aggregate," + ",".join(series.appliance_names)]
    app = series.appliance_matrix
    for i in range(len(series)):
        row = [str(int(series.timestamps[i])), _format_value(series.aggregate[i])]
        row.extend(_format_value(app[j, i]) for j in range(app.shape[0]))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str | os.PathLike) -> HouseholdSeries:
    """Parse a household CSV; errors name the offending line (1-based)."""
    if not os.path.exists(path):
        raise ValidationError(f"no such file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty file")
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "timestamp" or header[1] != "aggregate":
        raise ValidationError(
            f"{path}: line 1: header must be 'timestamp,aggregate,<appliance>...', "
            f"got {lines[0]!r}"
        )
    names = tuple(header[2:])
    n_cols = len(header)
    timestamps: list[int] = []
    aggregate: list[float] = []
    channels: list[list[float]] = [[] for _ in names]
    prev_ts: int | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != n_cols:
            raise ValidationError(
                f"{path}: line {lineno}: expected {n_cols} columns, got {len(fields)}"
            )
        try:
            ts = int(fields[0])
        except ValueError:
            raise ValidationError(
                f"{path}: line {lineno}: bad timestamp {fields[0]!r}"
            ) from None
        if prev_ts is not None and ts <= prev_ts:
            raise ValidationError(
                f"{path}: line {lineno}: timestamp {ts} does not increase past {prev_ts}"
            )
        prev_ts = ts
        try:
            values = [float(f) for f in fields[1:]]
        except ValueError:
            raise ValidationError(
                f"{path}: line {lineno}: unparsable numeric value in {line!r}"
            ) from None
        timestamps.append(ts)
        aggregate.append(values[0])
        for j, v in enumerate(values[1:]):
            channels[j].append(v)
    if not timestamps:
        raise ValidationError(f"{path}: no data rows")
    interval = int(timestamps[1] - timestamps[0]) if len(timestamps) > 1 else 1
    return HouseholdSeries(
        household_id=os.path.splitext(os.path.basename(path))[0],
        timestamps=np.asarray(timestamps, dtype=np.int64),
        aggregate=np.asarray(aggregate),
        appliances=tuple((name, np.asarray(channels[j])) for j, name in enumerate(names)),
        sample_interval=interval,
    )
