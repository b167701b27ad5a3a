"""Vintage loading, stationarity transforms, frequency conversion, imputation,
standardization and real-time recession labels."""

from .catalog import Category, Frequency, SeriesSpec, Transform, load_catalog
from .impute import impute_knn
from .labels import (
    BusinessCycleAnnouncement,
    TurningPoint,
    build_realtime_labels,
    load_announcements,
    write_announcements,
)
from .panel import PanelDataset, StandardizationStats, build_panel, standardize
from .spline import NaturalCubicSpline, interpolate_quarterly_to_monthly
from .transforms import aggregate_daily_to_monthly, transform_series
from .vintage import (
    LaggedArchive,
    VintageArchive,
    VintageFrame,
    check_catalog_coverage,
    read_vintage_csv,
    write_vintage_csv,
)

__all__ = [
    "BusinessCycleAnnouncement",
    "Category",
    "Frequency",
    "LaggedArchive",
    "NaturalCubicSpline",
    "PanelDataset",
    "SeriesSpec",
    "StandardizationStats",
    "Transform",
    "TurningPoint",
    "VintageArchive",
    "VintageFrame",
    "aggregate_daily_to_monthly",
    "build_panel",
    "build_realtime_labels",
    "check_catalog_coverage",
    "impute_knn",
    "interpolate_quarterly_to_monthly",
    "load_announcements",
    "load_catalog",
    "read_vintage_csv",
    "standardize",
    "transform_series",
    "write_announcements",
    "write_vintage_csv",
]
