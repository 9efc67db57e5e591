"""Write one report run: tables, pies, histograms, jobslot chart and a manifest."""

from __future__ import annotations

import csv
import io
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from fleetbench.aggregate import (FleetDistribution, MetricKey, SiteReport, REPORTS_HEADER,
                                  decode_distributions, decode_site_reports, rank_sites)
from fleetbench.report.svg import (histogram_spec, pie_spec, render_bars, render_histogram,
                                   render_pie)
from fleetbench.report.tables import Table, key_label, render_table
from fleetbench.results import (INVENTORY, BenchmarkRecord, decode_csv, format_float, read_text,
                                write_rows, write_text)

TABLE_FAMILIES = ("op_latency", "bogomflops", "mem_latency", "stream_bw", "stream_lat",
                  "stream2_bw", "stream2_lat")
HISTOGRAM_FAMILIES = ("op_latency", "bogomflops", "stream_bw", "stream_lat",
                      "stream2_bw", "stream2_lat")
MANIFEST = "index.csv"

# file names inside an aggregate output directory
STATS_FILE = "site_stats.csv"
REPORTS_FILE = "site_reports.csv"
DIST_FILE = "distributions.csv"
RECORDS_FILE = "records.csv"


def slug(*parts: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", "_".join(p for p in parts if p)).strip("_")


def _sort_key(key: MetricKey):
    metric, klass, kind = key
    return (metric, klass, int(kind) if kind.isdigit() else 0, kind)


@dataclass
class ReportRun:
    outdir: Path
    artifacts: list[tuple[str, str, str]] = field(default_factory=list)

    def write(self, name: str, kind: str, title: str, files: Mapping[str, str]) -> None:
        for ext, text in files.items():
            write_text(self.outdir / f"{name}.{ext}", text)
            self.artifacts.append((f"{name}.{ext}", kind, title))

    def write_manifest(self) -> Path:
        path = self.outdir / MANIFEST
        write_text(path, write_rows(("artifact", "kind", "title"), sorted(self.artifacts)))
        return path


def _dist_text(d: FleetDistribution) -> str:
    lines = [f"{d.attribute} ({d.weighting})"]
    lines += [f"  {cat}: {share * 100:.1f}%" for cat, share in d.shares.items()]
    return "\n".join(lines) + "\n"


def ranking_table(reports: Sequence[SiteReport], keys: Iterable[MetricKey]) -> Table:
    rows = []
    for key in keys:
        try:
            order = rank_sites(reports, key)
        except KeyError:
            continue
        by_site = {r.site: r for r in reports}
        for rank, site in enumerate(order, start=1):
            s = by_site[site].stats.get(key)
            rows.append([key_label(key), str(rank), site,
                         format_float(s.mean) if s else "", s.unit if s else ""])
    return Table("Site ranking per metric (best first)",
                 ["metric", "rank", "site", "mean", "unit"], rows)


def write_report(outdir: str | Path, reports: Sequence[SiteReport],
                 distributions: Sequence[FleetDistribution],
                 records: Sequence[BenchmarkRecord] = (),
                 jobslots: Optional[Mapping[str, int]] = None,
                 bins: int = 10, zoom_percentile: float = 90.0) -> ReportRun:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    run = ReportRun(outdir)
    reports = sorted(reports, key=lambda r: r.site)

    all_keys = sorted({k for r in reports for k in r.stats}, key=_sort_key)
    for family in TABLE_FAMILIES:
        keys = [k for k in all_keys if k[0] == family]
        if not keys:
            continue
        table = render_table(reports, keys, caption=f"{family}: per-site mean ± stddev")
        run.write(f"table_{family}", "table", table.caption,
                  {"txt": table.to_text(), "csv": table.to_csv()})
    if reports and all_keys:
        ranking = ranking_table(reports, all_keys)
        run.write("ranking", "table", ranking.caption,
                  {"txt": ranking.to_text(), "csv": ranking.to_csv()})

    for d in distributions:
        if not d.shares:
            continue
        spec = pie_spec(d)
        data = write_rows(("category", "share", "angle_degrees"),
                          ([w.label, format_float(w.share), format_float(w.angle_degrees)]
                           for w in spec.wedges))
        run.write(slug("pie", d.attribute, d.weighting), "pie", spec.title,
                  {"svg": render_pie(spec), "csv": data, "txt": _dist_text(d)})

    values: dict[MetricKey, list[float]] = defaultdict(list)
    units: dict[MetricKey, str] = {}
    for r in records:
        if r.ok and r.metric in HISTOGRAM_FAMILIES and r.metric != INVENTORY:
            values[r.key].append(r.value)
            units[r.key] = r.unit
    for key in sorted(values, key=_sort_key):
        vals = values[key]
        variants = [(None, "")]
        zoomed = histogram_spec(vals, bins, zoom_percentile)
        if zoomed.overflow:
            variants.append((zoom_percentile, "zoom"))
        for pct, suffix in variants:
            title = f"{key_label(key)} per node{' (zoomed)' if suffix else ''}"
            spec = histogram_spec(vals, bins, pct, title)
            data = write_rows(("lo", "hi", "count"),
                              ([format_float(spec.edges[i]), format_float(spec.edges[i + 1]),
                                str(c)] for i, c in enumerate(spec.counts)))
            text = f"{title}\n" + "".join(
                f"  [{spec.edges[i]:.4g}, {spec.edges[i + 1]:.4g}]: {c}\n"
                for i, c in enumerate(spec.counts))
            if spec.overflow:
                text += f"  above {spec.zoom_upper:.4g}: {spec.overflow}\n"
            run.write(slug("hist", *key, suffix), "histogram", title,
                      {"svg": render_histogram(spec, unit=units[key]), "csv": data, "txt": text})

    if jobslots:
        items = sorted(jobslots.items())
        title = "Jobslots per site"
        run.write("jobslots", "bars", title, {
            "svg": render_bars(items, title, "slots"),
            "csv": write_rows(("site", "jobslots"), ([s, str(n)] for s, n in items)),
            "txt": title + "\n" + "".join(f"  {s}: {n}\n" for s, n in items),
        })
    run.write_manifest()
    return run


def load_aggregate_dir(path: str | Path):
    """Read what ``aggregate`` wrote: (reports, distributions, records, jobslots)."""
    path = Path(path)
    reports_text = read_text(path / REPORTS_FILE)
    reports = decode_site_reports(read_text(path / STATS_FILE), reports_text)
    dists = decode_distributions(read_text(path / DIST_FILE))
    records_path = path / RECORDS_FILE
    records = decode_csv(read_text(records_path)) if records_path.exists() else []
    jobslots = {}
    for row in csv.DictReader(io.StringIO(reports_text), fieldnames=None):
        if row.get(REPORTS_HEADER[5]):
            jobslots[row["site"]] = int(row[REPORTS_HEADER[5]])
    return reports, dists, records, jobslots


def report_from_dir(aggregate_dir: str | Path, outdir: str | Path, bins: int = 10,
                    zoom_percentile: float = 90.0) -> ReportRun:
    reports, dists, records, jobslots = load_aggregate_dir(aggregate_dir)
    return write_report(outdir, reports, dists, records, jobslots, bins, zoom_percentile)
