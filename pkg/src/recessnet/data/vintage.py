"""Real-time data vintages and their on-disk CSV representation."""

import csv
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, ParseError, SchemaError, VintageGapError
from ..months import format_month, parse_month
from .catalog import Frequency
from .labels import known_announcements
from .transforms import aggregate_daily_to_monthly

VINTAGE_HEADER = ["series", "obs_month", "value"]
_VINTAGE_NAME = re.compile(r"^(\d{4}-\d{2})\.csv$")


@dataclass
class VintageFrame:
    """One real-time snapshot.

    ``series`` maps an abbreviation to ``(months, values)`` arrays; months
    are strictly increasing ordinals, all earlier than ``vintage_date``.
    """

    vintage_date: int
    series: dict
    announcements: list = field(default_factory=list)

    def __post_init__(self):
        for name, (months, values) in self.series.items():
            months = np.asarray(months, dtype=int)
            if len(months) != len(values):
                raise DataError(f"{name}: months and values differ in length")
            if len(months) and np.any(np.diff(months) <= 0):
                raise DataError(f"{name}: observation months must be strictly increasing")
            if len(months) and months[-1] >= self.vintage_date:
                raise DataError(
                    f"{name}: observation {format_month(months[-1])} is not earlier than "
                    f"vintage {format_month(self.vintage_date)}"
                )

    @property
    def label(self):
        return format_month(self.vintage_date)

    def truncated(self, vintage_date, announcements=None):
        """The same data as seen at an earlier ``vintage_date`` (no revisions)."""
        series = {}
        for name, (months, values) in self.series.items():
            keep = np.asarray(months) < vintage_date
            series[name] = (np.asarray(months)[keep], np.asarray(values)[keep])
        anns = announcements if announcements is not None else self.announcements
        return VintageFrame(vintage_date, series, known_announcements(anns, vintage_date))


def read_vintage_csv(path, vintage_date=None, catalog=None, announcements=()):
    """Parse one vintage file (header ``series,obs_month,value``).

    Daily series (per ``catalog``, or rows dated ``YYYY-MM-DD``) are averaged
    into months. Blank values are treated as gaps.
    """
    if vintage_date is None:
        m = _VINTAGE_NAME.match(os.path.basename(path))
        if m is None:
            raise ParseError(path, 0, "vintage file name must be YYYY-MM.csv")
        vintage_date = parse_month(m.group(1))
    daily = {s.abbreviation for s in catalog or () if s.native_frequency is Frequency.Daily}
    rows = defaultdict(list)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != VINTAGE_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(VINTAGE_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise ParseError(path, lineno, f"expected 3 fields, got {len(rec)}")
            name, date, value = (r.strip() for r in rec)
            if value == "" or value == ".":
                continue
            try:
                month = parse_month(date)
                val = float(value)
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            rows[name].append((lineno, date, month, val))

    series = {}
    for name, recs in rows.items():
        if name in daily or any(len(d) > 7 for _, d, _, _ in recs):
            pairs = aggregate_daily_to_monthly((m, v) for _, _, m, v in recs)
        else:
            recs.sort(key=lambda r: r[2])
            for a, b in zip(recs, recs[1:]):
                if a[2] == b[2]:
                    raise ParseError(path, b[0], f"duplicate month {b[1]} for {name}")
            pairs = [(m, v) for _, _, m, v in recs]
        months = np.array([p[0] for p in pairs], dtype=int)
        values = np.array([p[1] for p in pairs], dtype=float)
        if len(months) and months[-1] >= vintage_date:
            raise DataError(
                f"{path}: {name} has observation {format_month(months[-1])} at or after "
                f"the vintage date {format_month(vintage_date)}"
            )
        series[name] = (months, values)
    return VintageFrame(vintage_date, series, known_announcements(announcements, vintage_date))


def write_vintage_csv(path, frame, digits=17):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(VINTAGE_HEADER) + "\n")
        for name in sorted(frame.series):
            months, values = frame.series[name]
            for m, v in zip(months, values):
                fh.write(f"{name},{format_month(m)},{float(v):.{digits}g}\n")


class VintageArchive:
    """Ordered collection of vintages, keyed by vintage month.

    Frames are either supplied in memory or loaded lazily from a directory
    of ``YYYY-MM.csv`` files.
    """

    def __init__(self, frames=None, paths=None, catalog=None, announcements=()):
        self._frames = dict(frames or {})
        self._paths = dict(paths or {})
        self.catalog = catalog
        self.announcements = list(announcements)

    @classmethod
    def from_directory(cls, directory, catalog=None, announcements=()):
        if not os.path.isdir(directory):
            raise DataError(f"vintage directory not found: {directory}")
        paths = {}
        for name in sorted(os.listdir(directory)):
            m = _VINTAGE_NAME.match(name)
            if m:
                paths[parse_month(m.group(1))] = os.path.join(directory, name)
        if not paths:
            raise DataError(f"no vintage files (YYYY-MM.csv) in {directory}")
        return cls(paths=paths, catalog=catalog, announcements=announcements)

    @property
    def dates(self):
        return sorted(set(self._frames) | set(self._paths))

    def __contains__(self, date):
        return date in self._frames or date in self._paths

    def __len__(self):
        return len(self.dates)

    def get(self, date):
        if date in self._frames:
            return self._frames[date]
        if date in self._paths:
            frame = read_vintage_csv(
                self._paths[date], date, catalog=self.catalog, announcements=self.announcements
            )
            self._frames[date] = frame
            return frame
        raise VintageGapError(f"no vintage available for {format_month(date)}")

    def latest(self):
        return self.get(self.dates[-1])


class LaggedArchive(VintageArchive):
    """Revision-free vintages cut from one complete dataset.

    The vintage dated ``V`` holds every observation up to ``V - lag`` and
    the announcements public at ``V``. Frames are built on demand.
    """

    def __init__(self, series, announcements, first, last, lag=2, catalog=None):
        super().__init__(catalog=catalog, announcements=announcements)
        self.series = {k: (np.asarray(m, dtype=int), np.asarray(v, dtype=float))
                       for k, (m, v) in series.items()}
        self.first = int(first)
        self.last = int(last)
        self.lag = int(lag)

    @property
    def dates(self):
        return list(range(self.first, self.last + 1))

    def __contains__(self, date):
        return self.first <= date <= self.last

    def get(self, date):
        if date not in self:
            raise VintageGapError(f"no vintage available for {format_month(date)}")
        cut = date - self.lag
        series = {}
        for name, (months, values) in self.series.items():
            keep = months <= cut
            series[name] = (months[keep], values[keep])
        return VintageFrame(date, series, known_announcements(self.announcements, date))


def check_catalog_coverage(frame, catalog, source=""):
    """Schema check: vintage series and catalog entries must coincide."""
    names = {s.abbreviation for s in catalog}
    extra = sorted(set(frame.series) - names)
    if extra:
        raise SchemaError(f"{source or frame.label}: series {', '.join(extra)} not in catalog")
    missing = sorted(names - set(frame.series))
    if missing:
        raise SchemaError(f"{source or frame.label}: catalog series {', '.join(missing)} absent")
