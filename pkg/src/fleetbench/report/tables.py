"""Per-site comparison tables with best-value markers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from fleetbench.aggregate import MetricKey, SiteReport
from fleetbench.results import write_rows

MISSING = "—"
BEST = "*"


@dataclass
class Table:
    caption: str
    headers: list[str]
    rows: list[list[str]]
    footer: list[str] = field(default_factory=list)
    best: dict[str, list[str]] = field(default_factory=dict)  # column header -> best sites

    def __post_init__(self):
        for row in self.rows + ([self.footer] if self.footer else []):
            if len(row) != len(self.headers):
                raise ValueError(f"row {row!r} does not match {len(self.headers)} columns")

    def to_csv(self) -> str:
        return write_rows(self.headers, self.rows + ([self.footer] if self.footer else []))

    def to_text(self) -> str:
        body = self.rows + ([self.footer] if self.footer else [])
        widths = [max(len(c) for c in col) for col in zip(self.headers, *body)]

        def line(cells):
            return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

        rule = "  ".join("-" * w for w in widths)
        out = [self.caption, "", line(self.headers), rule]
        out += [line(r) for r in self.rows]
        if self.footer:
            out += [rule, line(self.footer)]
        return "\n".join(out) + "\n"


def key_label(key: MetricKey) -> str:
    return "/".join(part for part in key if part)


def _cell(stats) -> str:
    return f"{stats.mean:.4g} ± {stats.stddev:.2g} (n={stats.count})"


def render_table(reports: Sequence[SiteReport], keys: Sequence[MetricKey],
                 caption: str = "") -> Table:
    """One row per site, one column per metric key.

    The best site in each column (lowest mean for ns metrics, highest for
    MBps) is marked with ``*`` and named in the footer. Sites lacking a key
    get ``—`` and are not considered for best.
    """
    if not reports:
        raise ValueError("need at least one site")
    reports = sorted(reports, key=lambda r: r.site)
    headers = ["site"] + [key_label(k) for k in keys]
    winners: dict[MetricKey, list[str]] = {}
    for k in keys:
        having = [r for r in reports if k in r.stats]
        if not having:
            winners[k] = []
            continue
        higher = having[0].stats[k].unit == "MBps"
        means = [r.stats[k].mean for r in having]
        target = max(means) if higher else min(means)
        winners[k] = [r.site for r in having if r.stats[k].mean == target]
    rows = []
    for r in reports:
        row = [r.site]
        for k in keys:
            if k not in r.stats:
                row.append(MISSING)
                continue
            cell = _cell(r.stats[k])
            row.append(f"{cell} {BEST}" if r.site in winners[k] else cell)
        rows.append(row)
    footer = ["best"] + [";".join(winners[k]) or MISSING for k in keys]
    unit = ""
    for r in reports:
        for k in keys:
            if k in r.stats:
                unit = r.stats[k].unit
                break
        if unit:
            break
    caption = caption or f"Per-site means ({unit}); {BEST} marks the best site"
    return Table(caption, headers, rows, footer,
                 {key_label(k): winners[k] for k in keys})
