"""Figure generation for swarmsafe experiment outputs (CSV/JSON only)."""

from .figures import plot_scatter, plot_timeseries
from .io import FormatError, read_manifest, read_snapshots, read_table

__all__ = [
    "FormatError",
    "plot_scatter",
    "plot_timeseries",
    "read_manifest",
    "read_snapshots",
    "read_table",
]
