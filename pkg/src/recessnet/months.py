"""Calendar months as plain integers (``year * 12 + month - 1``)."""

import re

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_DAY_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


def parse_month(text):
    """Parse ``YYYY-MM`` (or ``YYYY-MM-DD``, day ignored) into a month ordinal."""
    text = text.strip()
    m = _MONTH_RE.match(text) or _DAY_RE.match(text)
    if m is None:
        raise ValueError(f"not a month: {text!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {text!r}")
    return year * 12 + month - 1


def format_month(ordinal):
    year, month = divmod(int(ordinal), 12)
    return f"{year:04d}-{month + 1:02d}"


def month_range(first, last):
    """Inclusive range of month ordinals."""
    return list(range(first, last + 1))
