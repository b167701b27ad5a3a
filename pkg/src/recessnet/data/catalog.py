"""Predictor catalog: one :class:`SeriesSpec` per input series."""

import csv
import enum
from dataclasses import dataclass
from importlib import resources

from ..errors import ParseError, SchemaError


class Category(enum.Enum):
    Output = "Output"
    Income = "Income"
    Prices = "Prices"
    LaborMarket = "LaborMarket"
    HousingMarket = "HousingMarket"
    MoneyCredit = "MoneyCredit"
    FinancialMarket = "FinancialMarket"


class Transform(enum.Enum):
    PercentChange = "PercentChange"
    FirstDifference = "FirstDifference"
    LogGrowth = "LogGrowth"


class Frequency(enum.Enum):
    Daily = "Daily"
    Monthly = "Monthly"
    Quarterly = "Quarterly"


# lower-case / spaced spellings seen in source tables
_ALIASES = {
    "percent change": "PercentChange",
    "percentchange": "PercentChange",
    "first-order difference": "FirstDifference",
    "first difference": "FirstDifference",
    "firstdifference": "FirstDifference",
    "log growth rate": "LogGrowth",
    "log growth": "LogGrowth",
    "loggrowth": "LogGrowth",
}


def _parse_transform(text):
    key = text.strip()
    return Transform(_ALIASES.get(key.lower(), key))


@dataclass(frozen=True)
class SeriesSpec:
    abbreviation: str
    category: Category
    transform: Transform
    native_frequency: Frequency
    description: str = ""
    seasonally_adjusted: bool = True


def load_catalog(path=None):
    """Read a catalog CSV; ``None`` loads the bundled 25-series default."""
    if path is None:
        text = resources.files(__package__).joinpath("catalog.csv").read_text("utf-8")
        source = "<bundled catalog>"
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
        source = path
    reader = csv.DictReader(text.splitlines())
    required = {"abbreviation", "category", "transform", "frequency"}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        raise ParseError(source, 1, f"catalog header must contain {sorted(required)}")
    specs = []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        try:
            spec = SeriesSpec(
                abbreviation=row["abbreviation"].strip(),
                category=Category(row["category"].strip()),
                transform=_parse_transform(row["transform"]),
                native_frequency=Frequency(row["frequency"].strip()),
                description=(row.get("description") or "").strip(),
                seasonally_adjusted=(row.get("seasonally_adjusted") or "true").strip().lower()
                != "false",
            )
        except (ValueError, AttributeError) as exc:
            raise ParseError(source, lineno, str(exc)) from None
        if spec.abbreviation in seen:
            raise SchemaError(f"duplicate series {spec.abbreviation!r} in catalog")
        seen.add(spec.abbreviation)
        specs.append(spec)
    return specs
