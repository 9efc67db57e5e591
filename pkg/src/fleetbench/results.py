"""CSV wire format for benchmark records and the site registry.

Files are UTF-8 with LF line endings and RFC 4180 quoting. One row carries
one metric value; node inventory is carried in the same format with
``metric=inventory``, the field name in ``kind`` and the text in ``note``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterable, Optional

log = logging.getLogger(__name__)

HEADER = ("hostname", "site", "timestamp", "metric", "class", "kind",
          "value", "unit", "status", "note")
REGISTRY_HEADER = ("site", "jobslots", "middleware")

UNITS = ("ns", "MBps", "bytes")
STATUSES = ("ok", "missing")
INVENTORY = "inventory"

METRIC_UNITS = {
    "op_latency": ("ns",),
    "bogomflops": ("ns",),
    "mem_latency": ("ns",),
    "stream_lat": ("ns",),
    "stream2_lat": ("ns",),
    "stream_bw": ("MBps",),
    "stream2_bw": ("MBps",),
    "cache_level": ("bytes",),
    INVENTORY: ("",),
}

TIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class RecordError(ValueError):
    pass


class RowError(ValueError):
    """A malformed CSV row. ``row`` counts the header as row 1."""

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class RegistryError(ValueError):
    pass


class DuplicateSite(RegistryError):
    pass


class NonNumericJobslots(RegistryError):
    pass


def format_float(v: float) -> str:
    return "%.9g" % v


def format_time(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(TIME_FORMAT)


def parse_time(text: str) -> datetime:
    return datetime.strptime(text, TIME_FORMAT).replace(tzinfo=timezone.utc)


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class BenchmarkRecord:
    hostname: str
    site: str
    timestamp: datetime
    metric: str
    klass: str
    kind: str
    value: Optional[float]
    unit: str
    status: str = "ok"
    note: str = ""

    def __post_init__(self):
        ts = self.timestamp
        if ts.tzinfo is None:
            raise RecordError("timestamp must be timezone-aware")
        object.__setattr__(self, "timestamp",
                           ts.astimezone(timezone.utc).replace(microsecond=0))
        for name in ("hostname", "site", "metric", "klass", "kind", "unit", "note"):
            if "\x00" in getattr(self, name):
                raise RecordError(f"{name} contains NUL")
        if self.status not in STATUSES:
            raise RecordError(f"status {self.status!r} not in {STATUSES}")
        allowed = METRIC_UNITS.get(self.metric, UNITS)
        if self.unit not in allowed:
            raise RecordError(f"unit {self.unit!r} does not fit metric {self.metric!r}")
        if self.value is not None:
            object.__setattr__(self, "value", float(self.value))
        if self.status == "missing" and self.value is not None:
            raise RecordError("a missing record carries no value")
        if self.status == "ok" and self.metric != INVENTORY:
            if self.value is None or math.isnan(self.value):
                raise RecordError(f"ok record for {self.metric!r} needs a value")
            if math.isinf(self.value) and self.metric != "cache_level":
                raise RecordError("only cache_level capacities may be unbounded")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.metric, self.klass, self.kind)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def with_site(self, site: str) -> "BenchmarkRecord":
        return replace(self, site=site)

    def row(self) -> list[str]:
        value = "" if self.value is None else format_float(self.value)
        return [self.hostname, self.site, format_time(self.timestamp), self.metric,
                self.klass, self.kind, value, self.unit, self.status, self.note]


def _field(text: str) -> str:
    # csv.writer with an LF terminator leaves a lone CR unquoted, which the
    # reader then takes for a line break; quote by the RFC 4180 rule instead
    if any(c in text for c in ',"\r\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def write_rows(header: Iterable[str], rows: Iterable[Iterable[str]]) -> str:
    """RFC 4180 CSV with LF line endings."""
    out = [",".join(_field(h) for h in header)]
    out += [",".join(_field(f) for f in row) for row in rows]
    return "\n".join(out) + "\n"


def read_text(path) -> str:
    """File contents with line endings untouched (quoted fields may hold CR)."""
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def encode_csv(records: Iterable[BenchmarkRecord]) -> str:
    return write_rows(HEADER, (r.row() for r in records))


def _record_from_row(fields: dict[str, str]) -> BenchmarkRecord:
    try:
        ts = parse_time(fields["timestamp"])
    except ValueError:
        raise RecordError(f"bad timestamp {fields['timestamp']!r}") from None
    raw = fields["value"]
    if raw == "":
        value = None
    else:
        try:
            value = float(raw)
        except ValueError:
            raise RecordError(f"non-numeric value {raw!r}") from None
    return BenchmarkRecord(fields["hostname"], fields["site"], ts, fields["metric"],
                           fields["class"], fields["kind"], value, fields["unit"],
                           fields["status"], fields["note"])


def decode_csv(text: str, strict: bool = True,
               errors: Optional[list[RowError]] = None) -> list[BenchmarkRecord]:
    """Parse records written by :func:`encode_csv`.

    Columns are matched by header name; unknown extra columns are ignored
    with a warning. In strict mode the first bad row raises
    :class:`RowError`; otherwise bad rows are skipped and appended to
    ``errors`` when a list is given.
    """
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows, None)
    except csv.Error as exc:
        raise RowError(1, str(exc)) from None
    if header is None:
        return []
    missing = [h for h in HEADER if h not in header]
    if missing:
        raise RowError(1, f"header lacks columns {missing}")
    extra = [h for h in header if h not in HEADER]
    if extra:
        log.warning("ignoring unknown columns %s", extra)
    index = {h: header.index(h) for h in HEADER}
    out = []
    rowno = 1
    while True:
        rowno += 1
        try:
            row = next(rows)
        except StopIteration:
            break
        except csv.Error as exc:
            row = None
            reason = str(exc)
        try:
            if row is None:
                raise RecordError(reason)
            if len(row) != len(header):
                raise RecordError(f"expected {len(header)} fields, got {len(row)}")
            out.append(_record_from_row({h: row[i] for h, i in index.items()}))
        except RecordError as exc:
            err = RowError(rowno, str(exc))
            if strict:
                raise err from None
            if errors is not None:
                errors.append(err)
    return out


@dataclass(frozen=True)
class SiteRegistryEntry:
    site: str
    jobslots: int
    middleware: str = ""


def load_registry(text: str) -> list[SiteRegistryEntry]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None or tuple(h.strip() for h in header) != REGISTRY_HEADER:
        raise RegistryError(f"registry header must be {','.join(REGISTRY_HEADER)}")
    entries, seen = [], set()
    for rowno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise RegistryError(f"row {rowno}: expected 3 fields")
        site, slots, middleware = (f.strip() for f in row)
        if site in seen:
            raise DuplicateSite(f"row {rowno}: duplicate site {site!r}")
        if not re.fullmatch(r"[0-9]+", slots):
            raise NonNumericJobslots(f"row {rowno}: jobslots {slots!r} is not a count")
        seen.add(site)
        entries.append(SiteRegistryEntry(site, int(slots), middleware))
    return entries


def encode_registry(entries: Iterable[SiteRegistryEntry]) -> str:
    return write_rows(REGISTRY_HEADER, ([e.site, str(e.jobslots), e.middleware]
                                        for e in entries))
