"""Tables, SVG charts and the per-run artifact manifest."""

from fleetbench.report.svg import (EmptyDistribution, HistogramSpec, PieSpec, Wedge,
                                   histogram_spec, nearest_rank, pie_spec, render_bars,
                                   render_histogram, render_pie)
from fleetbench.report.tables import BEST, MISSING, Table, key_label, render_table
from fleetbench.report.writer import (MANIFEST, ReportRun, load_aggregate_dir, report_from_dir,
                                      write_report)

__all__ = [
    "BEST", "MANIFEST", "MISSING", "EmptyDistribution", "HistogramSpec", "PieSpec", "ReportRun",
    "Table", "Wedge", "histogram_spec", "key_label", "load_aggregate_dir", "nearest_rank",
    "pie_spec", "render_bars", "render_histogram", "render_pie", "render_table",
    "report_from_dir", "write_report",
]
