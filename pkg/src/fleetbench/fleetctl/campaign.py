"""Campaign steps behind the CLI: bench runs, job plans, inbox collection, aggregation."""

from __future__ import annotations

import logging
import shlex
import socket
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

from fleetbench.aggregate import (CampaignAggregate, aggregate_campaign, encode_distributions,
                                  encode_site_reports, encode_site_stats)
from fleetbench.fleetctl.config import CampaignConfig
from fleetbench.microbench import SyntheticCosts, run_full_suite
from fleetbench.report.writer import DIST_FILE, RECORDS_FILE, REPORTS_FILE, STATS_FILE
from fleetbench.results import (BenchmarkRecord, RowError, decode_csv, encode_csv, load_registry,
                                read_text, write_rows, write_text)
from fleetbench.timing import Harness

log = logging.getLogger(__name__)

MERGED_FILE = "merged.csv"
INGEST_FILE = "ingest.csv"
SITES_FILE = "ingest_sites.csv"
FILE_STAMP = "%Y%m%dT%H%M%SZ"


# -- bench -----------------------------------------------------------------------

def make_harness(cfg: CampaignConfig) -> tuple[Harness, Callable[[], datetime]]:
    """The harness for ``cfg`` and a matching record-timestamp source.

    Under the mock clock timestamps are ``epoch + clock reading`` so repeated
    runs are byte-identical.
    """
    if cfg.clock == "mock":
        harness = Harness.mock(SyntheticCosts(), cfg.mock_step_ns, cfg.plan)
        clock = harness.clock
        return harness, lambda: cfg.epoch + timedelta(microseconds=clock.reading_ns / 1000)
    harness = Harness.real(cfg.plan)
    harness.plan.check(harness.profile)
    return harness, lambda: datetime.now(timezone.utc)


def run_bench(cfg: CampaignConfig, outdir: Path, site: str = "",
              inventory: Sequence[BenchmarkRecord] = (),
              hostname: Optional[str] = None) -> Path:
    """Run the suite once and write ``<hostname>-<timestamp>.csv`` into ``outdir``."""
    harness, stamp = make_harness(cfg)
    if hostname is None:
        hostname = cfg.hostname or (inventory[0].hostname if inventory else socket.gethostname())
    started = stamp()
    records = run_full_suite(cfg.suite, harness, hostname=hostname, site=site, stamp=stamp)
    inventory = [r if r.site or not site else r.with_site(site) for r in inventory]
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{hostname}-{started.astimezone(timezone.utc).strftime(FILE_STAMP)}.csv"
    write_text(path, encode_csv(list(inventory) + records))
    return path


# -- job plan ----------------------------------------------------------------------

@dataclass
class JobPlan:
    """The commands one remote job runs: probe, then bench, leaving one CSV."""

    site: str = ""
    seed: Optional[int] = None
    config_text: str = ""
    launcher: str = "fleetbench"

    def commands(self) -> list[str]:
        site = f" --site {shlex.quote(self.site)}" if self.site else ""
        seed = f" --seed {self.seed}" if self.seed is not None else ""
        conf = ' --config "$WORK/fleetbench.ini"' if self.config_text else ""
        return [
            f'$FLEETBENCH probe{conf}{site} --out "$WORK/inventory.csv"',
            f'$FLEETBENCH bench{conf}{site}{seed} --inventory "$WORK/inventory.csv" '
            f'--out "$RESULTS"',
        ]

    def script(self) -> str:
        lines = [
            "#!/bin/sh",
            "# fleetbench job: probe the node, run the suite, leave one CSV in $RESULTS",
            "# usage: sh job.sh [results-dir]",
            "set -eu",
            f'FLEETBENCH="${{FLEETBENCH:-{self.launcher}}}"',
            'RESULTS="${1:-.}"',
            'mkdir -p "$RESULTS"',
            'WORK="$(mktemp -d)"',
            "trap 'rm -rf \"$WORK\"' EXIT",
        ]
        if self.config_text:
            body = self.config_text if self.config_text.endswith("\n") else self.config_text + "\n"
            lines += ["cat > \"$WORK/fleetbench.ini\" <<'FLEETBENCH_INI'",
                      body + "FLEETBENCH_INI"]
        lines += self.commands()
        return "\n".join(lines) + "\n"


# -- collect -----------------------------------------------------------------------

@dataclass
class FileOutcome:
    name: str
    status: str  # ok | skipped_rows | rejected
    rows_ok: int = 0
    skipped: list[RowError] = field(default_factory=list)
    reason: str = ""

    def row(self) -> list[str]:
        detail = self.reason or "; ".join(f"row {e.row}: {e.reason}" for e in self.skipped)
        return [self.name, self.status, str(self.rows_ok), str(len(self.skipped)), detail]


@dataclass
class IngestReport:
    files: list[FileOutcome]
    site_nodes: dict[str, set[str]]
    site_records: dict[str, int]
    unresolved: int
    warnings: list[str]

    @property
    def rejected_rows(self) -> int:
        return sum(len(f.skipped) for f in self.files)

    def files_csv(self) -> str:
        return write_rows(("file", "status", "rows_ok", "rows_skipped", "detail"),
                          (f.row() for f in self.files))

    def sites_csv(self) -> str:
        return write_rows(("site", "nodes", "records"),
                          ([s, str(len(self.site_nodes[s])), str(self.site_records[s])]
                           for s in sorted(self.site_nodes)))


class CollectAborted(Exception):
    def __init__(self, name: str, error: RowError):
        super().__init__(f"{name}: {error}")
        self.name, self.error = name, error


def _decode_file(path: Path, strict: bool):
    errors: list[RowError] = []
    try:
        text = read_text(path)
    except (OSError, UnicodeDecodeError) as exc:
        return path.name, None, errors, f"unreadable: {exc}"
    try:
        return path.name, decode_csv(text, strict=strict, errors=errors), errors, ""
    except RowError as exc:
        if strict:
            return path.name, None, [exc], ""
        return path.name, None, errors, str(exc)


def collect_inbox(inbox: Path, host_sites: Optional[Mapping[str, str]] = None,
                  strict: bool = False) -> tuple[list[BenchmarkRecord], IngestReport]:
    """Decode every ``*.csv`` in ``inbox`` and merge them in a stable order.

    Lenient mode skips bad rows (a bad header rejects the whole file); strict
    mode raises :class:`CollectAborted` on the first one.
    """
    host_sites = host_sites or {}
    if not inbox.is_dir():
        raise FileNotFoundError(f"inbox {inbox} is not a directory")
    paths = sorted(inbox.glob("*.csv"))
    with ThreadPoolExecutor(max_workers=4) as pool:
        decoded = list(pool.map(lambda p: _decode_file(p, strict), paths))
    merged: list[BenchmarkRecord] = []
    outcomes = []
    for name, records, errors, reason in decoded:
        if strict and errors:
            raise CollectAborted(name, errors[0])
        if records is None:
            outcomes.append(FileOutcome(name, "rejected", reason=reason))
            continue
        status = "skipped_rows" if errors else "ok"
        outcomes.append(FileOutcome(name, status, len(records), errors))
        merged += records
    resolved = []
    unresolved = 0
    for r in merged:
        if not r.site and r.hostname in host_sites:
            r = r.with_site(host_sites[r.hostname])
        unresolved += not r.site
        resolved.append(r)
    resolved.sort(key=lambda r: (r.site, r.hostname, r.timestamp, r.metric, r.klass, r.kind))
    nodes: dict[str, set[str]] = {}
    counts: dict[str, int] = {}
    for r in resolved:
        nodes.setdefault(r.site, set()).add(r.hostname)
        counts[r.site] = counts.get(r.site, 0) + 1
    warnings = []
    if not paths:
        warnings.append(f"inbox {inbox} holds no *.csv files")
    if unresolved:
        warnings.append(f"{unresolved} record(s) have no site and no hostname mapping")
    for o in outcomes:
        if o.status != "ok":
            warnings.append(f"{o.name}: {o.status} {o.row()[4]}")
    return resolved, IngestReport(outcomes, nodes, counts, unresolved, warnings)


def write_collection(outdir: Path, records: Iterable[BenchmarkRecord],
                     report: IngestReport) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    write_text(outdir / INGEST_FILE, report.files_csv())
    write_text(outdir / SITES_FILE, report.sites_csv())
    path = outdir / MERGED_FILE
    write_text(path, encode_csv(records))
    return path


# -- aggregate ---------------------------------------------------------------------

def run_aggregate(merged: Path, registry: Optional[Path], outdir: Path,
                  host_sites: Optional[Mapping[str, str]] = None, strict: bool = True,
                  cv_threshold: Optional[float] = None) -> CampaignAggregate:
    records = decode_csv(read_text(merged), strict=strict)
    entries = load_registry(read_text(registry)) if registry else []
    kwargs = {} if cv_threshold is None else {"cv_threshold": cv_threshold}
    agg = aggregate_campaign(records, entries, host_sites, **kwargs)
    if registry is None:
        agg.warnings.insert(0, "no site registry given")
    outdir.mkdir(parents=True, exist_ok=True)
    write_text(outdir / STATS_FILE, encode_site_stats(agg.reports))
    write_text(outdir / REPORTS_FILE, encode_site_reports(agg.reports, agg.registry))
    write_text(outdir / DIST_FILE, encode_distributions(agg.distributions))
    write_text(outdir / RECORDS_FILE, encode_csv(agg.records))
    return agg
