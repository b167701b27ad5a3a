"""Real-time recession indicator built from dated turning-point announcements."""

import csv
import enum
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..errors import InconsistentAnnouncementsError, ParseError
from ..months import format_month, parse_month


class TurningPoint(enum.Enum):
    Peak = "peak"
    Trough = "trough"


@dataclass(frozen=True, order=True)
class BusinessCycleAnnouncement:
    turning_point_month: int
    kind: TurningPoint
    announcement_month: int

    def __post_init__(self):
        if self.announcement_month < self.turning_point_month:
            raise InconsistentAnnouncementsError(
                f"{self.kind.value} {format_month(self.turning_point_month)} announced "
                f"before it happened ({format_month(self.announcement_month)})"
            )


def known_announcements(announcements, vintage_date):
    """Announcements public at ``vintage_date``, sorted by turning point."""
    known = [a for a in announcements if a.announcement_month <= vintage_date]
    return sorted(known, key=lambda a: a.turning_point_month)


def check_alternation(announcements):
    ordered = sorted(announcements, key=lambda a: a.turning_point_month)
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.kind is cur.kind:
            raise InconsistentAnnouncementsError(
                f"consecutive {cur.kind.value}s at {format_month(prev.turning_point_month)} "
                f"and {format_month(cur.turning_point_month)}"
            )
    return ordered


def build_realtime_labels(announcements, vintage_date, months, peak_inclusive=False):
    """Recession indicator for ``months`` as it could be known at ``vintage_date``.

    A month is a recession month when the most recent public turning point
    before it is a peak; the state persists until a later turning point is
    announced. The trough month itself counts as recession. By default the
    peak month does not (``peak_inclusive`` flips that).
    """
    check_alternation(announcements)
    known = known_announcements(announcements, vintage_date)
    months = np.asarray(months, dtype=int)
    if not known:
        return np.zeros(len(months), dtype=int)
    # before the first known turning point the economy is in the opposite state
    state_before = 1 if known[0].kind is TurningPoint.Trough else 0
    labels = np.full(len(months), state_before, dtype=int)
    for a in known:
        if a.kind is TurningPoint.Peak:
            after = months >= a.turning_point_month if peak_inclusive else months > a.turning_point_month
            labels[after] = 1
        else:
            labels[months > a.turning_point_month] = 0
    return labels


def _read_announcements(text, source):
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
        "turning_point",
        "kind",
        "announced",
    ]:
        raise ParseError(source, 1, "expected header 'turning_point,kind,announced'")
    out = []
    for lineno, row in enumerate(reader, start=2):
        try:
            out.append(
                BusinessCycleAnnouncement(
                    turning_point_month=parse_month(row["turning_point"]),
                    kind=TurningPoint(row["kind"].strip().lower()),
                    announcement_month=parse_month(row["announced"]),
                )
            )
        except (ValueError, AttributeError, TypeError) as exc:
            if isinstance(exc, InconsistentAnnouncementsError):
                raise
            raise ParseError(source, lineno, str(exc)) from None
    return check_alternation(out)


def load_announcements(path=None):
    """Read an announcements CSV; ``None`` loads the bundled 1980-2021 dates."""
    if path is None:
        text = resources.files(__package__).joinpath("nber_announcements.csv").read_text("utf-8")
        return _read_announcements(text, "<bundled announcements>")
    with open(path, encoding="utf-8", newline="") as fh:
        return _read_announcements(fh.read(), path)


def write_announcements(path, announcements):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("turning_point,kind,announced\n")
        for a in sorted(announcements, key=lambda a: a.turning_point_month):
            fh.write(
                f"{format_month(a.turning_point_month)},{a.kind.value},"
                f"{format_month(a.announcement_month)}\n"
            )
