"""Per-site statistics, homogeneity checks and fleet-wide distributions.

A *metric key* is ``(metric, class, kind)``. Fleet distributions come in two
weightings: ``per_site`` gives every measured site one vote, ``per_job``
weights each site by its jobslot count.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from fleetbench.inventory import inventory_attributes
from fleetbench.results import (INVENTORY, BenchmarkRecord, SiteRegistryEntry, format_float,
                                write_rows)

MetricKey = tuple[str, str, str]

DEFAULT_CV_THRESHOLD = 0.05
HOMOGENEITY_METRICS = ("op_latency", "stream_bw", "stream2_bw")
PER_SITE = "per_site"
PER_JOB = "per_job"
ATTRIBUTES = ("cpu_model", "cpu_vendor", "cpu_count", "kernel_base", "kernel_version",
              "kernel_smp", "distro", "middleware")


class AggregateError(Exception):
    pass


class EmptyFleet(AggregateError):
    pass


class UnknownMetricKey(AggregateError, KeyError):
    pass


@dataclass(frozen=True)
class SiteStats:
    site: str
    key: MetricKey
    unit: str
    count: int
    mean: float
    stddev: float
    min: float
    max: float

    @property
    def cv(self) -> float:
        return self.stddev / self.mean


@dataclass
class SiteReport:
    site: str
    nodes: int
    stats: dict[MetricKey, SiteStats]
    homogeneous: bool
    cv_worst: float
    cv_threshold: float = DEFAULT_CV_THRESHOLD


@dataclass
class FleetDistribution:
    attribute: str
    weighting: str
    shares: dict[str, float]
    warnings: list[str] = field(default_factory=list)


# -- grouping ---------------------------------------------------------------------

def group_by_site(records: Iterable[BenchmarkRecord],
                  host_sites: Optional[Mapping[str, str]] = None
                  ) -> tuple[dict[str, list[BenchmarkRecord]], list[BenchmarkRecord]]:
    """Partition records by site; returns ``(groups, quarantine)``.

    A record's own site field wins; an empty one is resolved through
    ``host_sites``. Records that resolve to no site are quarantined.
    """
    host_sites = host_sites or {}
    groups: dict[str, list[BenchmarkRecord]] = defaultdict(list)
    quarantine = []
    for r in records:
        site = r.site or host_sites.get(r.hostname, "")
        if not site:
            quarantine.append(r)
            continue
        groups[site].append(r if r.site == site else r.with_site(site))
    return dict(sorted(groups.items())), quarantine


# -- statistics -------------------------------------------------------------------

def _numeric(records: Iterable[BenchmarkRecord]) -> Iterable[BenchmarkRecord]:
    return (r for r in records if r.ok and r.metric != INVENTORY and r.value is not None)


def site_stats(records: Iterable[BenchmarkRecord], site: Optional[str] = None) -> list[SiteStats]:
    """count/mean/sample stddev/min/max per metric key, over ``ok`` values.

    Uses Welford's single-pass update; stddev is 0 for a single value.
    """
    acc: dict[MetricKey, list] = {}
    for r in _numeric(records):
        a = acc.get(r.key)
        v = r.value
        if a is None:
            acc[r.key] = [r.site if site is None else site, r.unit, 1, v, 0.0, v, v]
            continue
        a[2] += 1
        delta = v - a[3]
        a[3] += delta / a[2]
        a[4] += delta * (v - a[3])
        a[5] = min(a[5], v)
        a[6] = max(a[6], v)
    out = []
    for key in sorted(acc):
        s, unit, n, mean, m2, lo, hi = acc[key]
        sd = math.sqrt(m2 / (n - 1)) if n > 1 else 0.0
        out.append(SiteStats(s, key, unit, n, mean, sd, lo, hi))
    return out


def homogeneity_check(stats: Iterable[SiteStats],
                      cv_threshold: float = DEFAULT_CV_THRESHOLD) -> tuple[bool, float]:
    """Worst coefficient of variation over the op-latency and bandwidth keys."""
    if not cv_threshold > 0:
        raise ValueError("cv_threshold must be > 0")
    cvs = [s.cv for s in stats if s.key[0] in HOMOGENEITY_METRICS and s.mean != 0]
    worst = max(cvs, default=0.0)
    return worst <= cv_threshold, worst


def site_report(site: str, records: Sequence[BenchmarkRecord],
                cv_threshold: float = DEFAULT_CV_THRESHOLD) -> SiteReport:
    stats = site_stats(records, site)
    homogeneous, worst = homogeneity_check(stats, cv_threshold)
    nodes = len({r.hostname for r in records})
    return SiteReport(site, nodes, {s.key: s for s in stats}, homogeneous, worst, cv_threshold)


def projection_sample_size(jobslots: int) -> int:
    """Nodes to sample at a site: ceil(sqrt(jobslots)) clamped to [3, 10]."""
    if jobslots < 0:
        raise ValueError("jobslots must be >= 0")
    if jobslots == 0:
        return 0
    r = math.isqrt(jobslots)
    if r * r < jobslots:
        r += 1
    return min(max(r, 3), 10)


# -- distributions ----------------------------------------------------------------

def representative_value(values: Iterable[str]) -> tuple[str, bool]:
    """Modal value; ties go to the lexicographically smallest and are flagged."""
    counts = Counter(values)
    if not counts:
        raise ValueError("no values")
    top = max(counts.values())
    winners = sorted(v for v, c in counts.items() if c == top)
    return winners[0], len(winners) > 1


def _ordered(shares: Mapping[str, float]) -> dict[str, float]:
    return dict(sorted(shares.items(), key=lambda kv: (-kv[1], kv[0])))


def fleet_distribution(site_values: Mapping[str, str],
                       registry: Mapping[str, SiteRegistryEntry] | Iterable[SiteRegistryEntry],
                       weighting: str, attribute: str = "") -> FleetDistribution:
    """Share of each category across sites, unweighted or jobslot-weighted.

    Under ``per_job`` a site missing from the registry is excluded with a
    warning rather than given a default weight.
    """
    if not isinstance(registry, Mapping):
        registry = {e.site: e for e in registry}
    warnings = []
    if weighting == PER_SITE:
        counts = Counter(site_values.values())
        total = sum(counts.values())
        if not total:
            raise EmptyFleet(f"{attribute}: no sites")
        shares = {c: n / total for c, n in counts.items()}
    elif weighting == PER_JOB:
        slots: Counter = Counter()
        for site in sorted(site_values):
            entry = registry.get(site)
            if entry is None:
                warnings.append(f"site {site} missing from registry; excluded from per_job")
                continue
            slots[site_values[site]] += entry.jobslots
        total = sum(slots.values())
        if not total:
            raise EmptyFleet(f"{attribute}: no jobslots among measured sites")
        shares = {c: n / total for c, n in slots.items() if n}
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return FleetDistribution(attribute, weighting, _ordered(shares), warnings)


def site_attribute_values(groups: Mapping[str, Sequence[BenchmarkRecord]], attribute: str,
                          registry: Mapping[str, SiteRegistryEntry]
                          ) -> tuple[dict[str, str], list[str]]:
    """Representative value of ``attribute`` per site, plus tie warnings."""
    values, warnings = {}, []
    for site, records in groups.items():
        if attribute == "middleware":
            entry = registry.get(site)
            values[site] = (entry.middleware if entry and entry.middleware else "unknown")
            continue
        per_host = inventory_attributes(records)
        node_values = [attrs[attribute] for attrs in per_host.values() if attribute in attrs]
        if not node_values:
            continue
        value, tied = representative_value(node_values)
        if tied:
            warnings.append(f"site {site}: tie for {attribute}, picked {value!r}")
        values[site] = value
    return values, warnings


def rank_sites(reports: Iterable[SiteReport], key: MetricKey,
               direction: Optional[str] = None) -> list[str]:
    """Sites ordered by the mean of ``key``; sites lacking it go last.

    ``direction`` defaults from the unit: ascending for ns, descending for MBps.
    """
    reports = list(reports)
    having = [r for r in reports if key in r.stats]
    if not having:
        raise UnknownMetricKey(key)
    if direction is None:
        direction = "descending" if having[0].stats[key].unit == "MBps" else "ascending"
    if direction not in ("ascending", "descending"):
        raise ValueError(f"bad direction {direction!r}")
    sign = -1.0 if direction == "descending" else 1.0
    ranked = sorted(having, key=lambda r: (sign * r.stats[key].mean, r.site))
    lacking = sorted(r.site for r in reports if key not in r.stats)
    return [r.site for r in ranked] + lacking


# -- CSV outputs ------------------------------------------------------------------

STATS_HEADER = ("site", "metric", "class", "kind", "unit", "count", "mean", "stddev",
                "min", "max")
REPORTS_HEADER = ("site", "nodes", "homogeneous", "cv_worst", "cv_threshold", "jobslots",
                  "sample_target")
DIST_HEADER = ("attribute", "weighting", "category", "share")


def encode_site_stats(reports: Iterable[SiteReport]) -> str:
    rows = []
    for rep in reports:
        for s in rep.stats.values():
            rows.append([s.site, *s.key, s.unit, str(s.count), format_float(s.mean),
                         format_float(s.stddev), format_float(s.min), format_float(s.max)])
    return write_rows(STATS_HEADER, rows)


def encode_site_reports(reports: Iterable[SiteReport],
                        registry: Mapping[str, SiteRegistryEntry]) -> str:
    rows = []
    for rep in reports:
        entry = registry.get(rep.site)
        slots = "" if entry is None else str(entry.jobslots)
        target = "" if entry is None else str(projection_sample_size(entry.jobslots))
        rows.append([rep.site, str(rep.nodes), "true" if rep.homogeneous else "false",
                     format_float(rep.cv_worst), format_float(rep.cv_threshold), slots, target])
    return write_rows(REPORTS_HEADER, rows)


def encode_distributions(dists: Iterable[FleetDistribution]) -> str:
    rows = [[d.attribute, d.weighting, cat, format_float(share)]
            for d in dists for cat, share in d.shares.items()]
    return write_rows(DIST_HEADER, rows)


def _rows(text: str, header: Sequence[str]) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames[:len(header)]) != tuple(header):
        raise AggregateError(f"expected header {','.join(header)}")
    return list(reader)


def decode_site_reports(stats_text: str, reports_text: str) -> list[SiteReport]:
    stats: dict[str, dict[MetricKey, SiteStats]] = defaultdict(dict)
    for row in _rows(stats_text, STATS_HEADER):
        key = (row["metric"], row["class"], row["kind"])
        stats[row["site"]][key] = SiteStats(
            row["site"], key, row["unit"], int(row["count"]), float(row["mean"]),
            float(row["stddev"]), float(row["min"]), float(row["max"]))
    return [SiteReport(row["site"], int(row["nodes"]), stats.get(row["site"], {}),
                       row["homogeneous"] == "true", float(row["cv_worst"]),
                       float(row["cv_threshold"]))
            for row in _rows(reports_text, REPORTS_HEADER)]


def decode_distributions(text: str) -> list[FleetDistribution]:
    out: dict[tuple[str, str], FleetDistribution] = {}
    for row in _rows(text, DIST_HEADER):
        k = (row["attribute"], row["weighting"])
        if k not in out:
            out[k] = FleetDistribution(k[0], k[1], {})
        out[k].shares[row["category"]] = float(row["share"])
    return list(out.values())


@dataclass
class CampaignAggregate:
    reports: list[SiteReport]
    distributions: list[FleetDistribution]
    quarantine: list[BenchmarkRecord]
    registry: dict[str, SiteRegistryEntry]
    warnings: list[str]
    records: list[BenchmarkRecord]


def aggregate_campaign(records: Iterable[BenchmarkRecord],
                       registry: Iterable[SiteRegistryEntry],
                       host_sites: Optional[Mapping[str, str]] = None,
                       cv_threshold: float = DEFAULT_CV_THRESHOLD,
                       attributes: Sequence[str] = ATTRIBUTES) -> CampaignAggregate:
    reg = {e.site: e for e in registry}
    groups, quarantine = group_by_site(records, host_sites)
    warnings = []
    if quarantine:
        hosts = sorted({r.hostname for r in quarantine})
        warnings.append(f"{len(quarantine)} record(s) with no site quarantined: {hosts}")
    unregistered = sorted(s for s in groups if s not in reg)
    if unregistered:
        warnings.append(f"sites missing from registry: {unregistered}")
    reports = [site_report(site, recs, cv_threshold) for site, recs in groups.items()]
    for rep in reports:
        if not rep.homogeneous:
            warnings.append(f"site {rep.site} is heterogeneous (cv_worst="
                            f"{format_float(rep.cv_worst)})")
    dists = []
    weightings = (PER_SITE, PER_JOB)
    if groups and not any(s in reg for s in groups):
        weightings = (PER_SITE,)
        warnings.append("no measured site is registered; per_job distributions skipped")
    for attribute in attributes:
        values, ties = site_attribute_values(groups, attribute, reg)
        warnings += ties
        for weighting in weightings:
            try:
                d = fleet_distribution(values, reg, weighting, attribute)
            except EmptyFleet as exc:
                warnings.append(f"{attribute}/{weighting}: {exc}")
                continue
            dists.append(d)
    # one warning per unregistered site is enough; drop the per-attribute repeats
    warnings += sorted({w for d in dists for w in d.warnings})
    kept = [r for recs in groups.values() for r in recs]
    return CampaignAggregate(reports, dists, quarantine, reg, warnings, kept)
