"""CSV readers and writers for event logs and count series.

Event-log files carry the header ``day,category,impostor,malware,spam,phish``;
count-series files carry ``day,count``.  Both are UTF-8 with LF line endings.
"""
from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .series import SCORE_MAX, SCORE_NAMES, CountSeries, EventLog

EVENT_HEADER = ("day", "category") + SCORE_NAMES
COUNT_HEADER = ("day", "count")


def _parse_int(text, what, line):
    try:
        return int(text.strip())
    except (ValueError, AttributeError):
        raise ParseError(f"{what} is not an integer: {text!r}", line) from None


def read_event_log(path, origin_date: str | None = None) -> EventLog:
    days, cats, scores = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != EVENT_HEADER:
            raise ParseError(f"expected header {','.join(EVENT_HEADER)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(EVENT_HEADER):
                raise ParseError(f"expected {len(EVENT_HEADER)} fields, got {len(row)}", lineno)
            day = _parse_int(row[0], "day", lineno)
            if day < 0:
                raise ValidationError(f"line {lineno}: day index {day} is negative")
            sc = [_parse_int(v, name, lineno) for v, name in zip(row[2:], SCORE_NAMES)]
            for v, name in zip(sc, SCORE_NAMES):
                if not 0 <= v <= SCORE_MAX:
                    raise ValidationError(f"line {lineno}: {name} score {v} outside [0, {SCORE_MAX}]")
            days.append(day)
            cats.append(row[1])
            scores.append(sc)
    return EventLog(days, cats, scores if scores else np.zeros((0, 4)), origin_date=origin_date)


def write_event_log(log: EventLog, path) -> None:
    """Write records in stored order; reading the file back reproduces ``log``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVENT_HEADER)
        for day, cat, sc in zip(log.days.tolist(), log.categories, log.scores.tolist()):
            writer.writerow([day, cat, *sc])


def read_count_series(path, label: str | None = None) -> CountSeries:
    """Read a ``day,count`` file.  Rows may be unsorted; missing days become zeros."""
    pairs = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != COUNT_HEADER:
            raise ParseError("expected header day,count", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
            day = _parse_int(row[0], "day", lineno)
            count = _parse_int(row[1], "count", lineno)
            if count < 0:
                raise ValidationError(f"line {lineno}: negative count {count}")
            if day in pairs:
                raise ParseError(f"duplicate day {day}", lineno)
            pairs[day] = count
    if not pairs:
        raise ParseError("count series file has no rows", 2)
    lo, hi = min(pairs), max(pairs)
    values = np.zeros(hi - lo + 1, dtype=np.int64)
    for day, count in pairs.items():
        values[day - lo] = count
    name = label if label is not None else Path(path).stem
    return CountSeries(values, start_day=lo, label=name, provenance={"source": os.fspath(path)})


def write_count_series(series: CountSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COUNT_HEADER)
        for day, count in zip(series.days.tolist(), series.values.tolist()):
            writer.writerow([day, count])
