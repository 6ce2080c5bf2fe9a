"""Reading and cleaning event-based detector exports."""

from __future__ import annotations

import csv
import io
import logging
import os
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from typing import IO, Iterable, List, NamedTuple, Tuple, Union

from .model import VehicleRecord

logger = logging.getLogger(__name__)

#: Vehicles strictly longer than this count as two passenger cars.
HEAVY_VEHICLE_LENGTH = 9.0


class SchemaError(ValueError):
    """The input header does not match the expected columns."""


@dataclass(frozen=True)
class EventFormat:
    """Column names of a raw event export."""

    timestamp: str = "timestamp"
    lane: str = "lane"
    speed: str = "speed_kmh"
    length: str = "length_m"
    valid: str = "valid"

    @property
    def columns(self) -> Tuple[str, ...]:
        return (self.timestamp, self.lane, self.speed, self.length, self.valid)


DEFAULT_FORMAT = EventFormat()


class ParsedEvents(NamedTuple):
    records: List[VehicleRecord]
    malformed: int


class FilterSummary(NamedTuple):
    kept: int
    invalid: int
    implausible: int
    duplicates: int

    @property
    def rejected(self) -> int:
        return self.invalid + self.implausible + self.duplicates


def _open_text(source) -> Tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8")), False
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary file object
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def _parse_row(row, idx) -> VehicleRecord:
    speed = float(row[idx[2]])
    length = float(row[idx[3]])
    valid = row[idx[4]].strip()
    if valid not in ("0", "1"):
        raise ValueError(f"valid flag must be 0 or 1, got {valid!r}")
    if speed < 0 or length < 0:
        raise ValueError("negative speed or length")
    return VehicleRecord(
        timestamp=datetime.fromisoformat(row[idx[0]].strip()),
        lane=int(row[idx[1]]),
        speed=speed,
        length=length,
        valid=valid == "1",
    )


def parse_events(source: Union[str, os.PathLike, IO, bytes],
                 fmt: EventFormat = DEFAULT_FORMAT) -> ParsedEvents:
    """Parse a raw event CSV into vehicle records.

    Rows that cannot be converted (wrong field count, unparseable values,
    negative speed or length) are skipped and counted in ``malformed``.

    Raises
    ------
    OSError
        If the source cannot be read.
    SchemaError
        If a required column is missing from the header.
    """
    fh, owned = _open_text(source)
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError("missing header row")
        header = [h.strip() for h in header]
        for col in fmt.columns:
            if col not in header:
                raise SchemaError(f"missing column {col!r}")
        idx = [header.index(col) for col in fmt.columns]
        records, malformed = [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            try:
                if len(row) != len(header):
                    raise ValueError(f"expected {len(header)} fields, got {len(row)}")
                records.append(_parse_row(row, idx))
            except ValueError as exc:
                malformed += 1
                logger.debug("line %d malformed: %s", lineno, exc)
    finally:
        if owned:
            fh.close()
    if malformed:
        logger.warning("%d malformed rows skipped", malformed)
    return ParsedEvents(records, malformed)


def filter_events(records: Iterable[VehicleRecord], max_speed: float = 250.0,
                  max_length: float = 30.0) -> Tuple[List[VehicleRecord], FilterSummary]:
    """Drop invalid, implausible and duplicate detections.

    Records are sorted by timestamp first. A record is rejected, in this
    order of precedence, when the detector flagged it invalid, when speed or
    length is non-positive or above the cap, or when an identical
    ``(timestamp, lane, speed, length)`` tuple was already kept.
    """
    ordered = sorted(records, key=lambda r: r.timestamp)
    kept, seen = [], set()
    reasons = Counter()
    for rec in ordered:
        if not rec.valid:
            reasons["invalid"] += 1
        elif not (0 < rec.speed <= max_speed and 0 < rec.length <= max_length):
            reasons["implausible"] += 1
        else:
            key = (rec.timestamp, rec.lane, rec.speed, rec.length)
            if key in seen:
                reasons["duplicates"] += 1
            else:
                seen.add(key)
                kept.append(rec)
    return kept, FilterSummary(len(kept), reasons["invalid"], reasons["implausible"],
                               reasons["duplicates"])


def pce_of(record: VehicleRecord) -> int:
    """Passenger car equivalents of one vehicle: 2 above 9 m, else 1."""
    return 2 if record.length > HEAVY_VEHICLE_LENGTH else 1
