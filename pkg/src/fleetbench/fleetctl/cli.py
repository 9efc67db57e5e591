"""``fleetbench`` command line.

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from fleetbench import __version__
from fleetbench.aggregate import AggregateError
from fleetbench.fleetctl.campaign import (MERGED_FILE, CollectAborted, JobPlan, collect_inbox,
                                          run_aggregate, run_bench, write_collection)
from fleetbench.fleetctl.config import CampaignConfig, ConfigError, load_config
from fleetbench.inventory import (DirectorySource, InventoryError, LiveSource, collect_inventory,
                                  inventory_records)
from fleetbench.microbench import MicrobenchError
from fleetbench.report import report_from_dir
from fleetbench.results import RegistryError, RowError, decode_csv, encode_csv, read_text, write_text
from fleetbench.timing import TimingError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DATA_ERRORS = (ConfigError, RowError, RegistryError, AggregateError, InventoryError,
               MicrobenchError, TimingError, CollectAborted, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file (default: $FLEETBENCH_CONFIG)")
    common.add_argument("--out", help="output location for this step")
    common.add_argument("--site", default="", help="site name stamped on produced records")
    common.add_argument("--strict", action="store_true", help="abort on the first bad row")
    common.add_argument("--seed", type=int, help="override the suite seed")

    p = _Parser(prog="fleetbench", description="Benchmark, collect and report on a fleet.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("probe", parents=[common], help="print this node's inventory records")
    s.add_argument("--fixtures", metavar="DIR", help="read probe targets from DIR")
    s.add_argument("--hostname")

    s = sub.add_parser("bench", parents=[common], help="run the suite and write one CSV")
    s.add_argument("--mock", action="store_true", help="use the deterministic mock clock")
    s.add_argument("--inventory", metavar="FILE", help="probe output to include")
    s.add_argument("--hostname")

    s = sub.add_parser("plan", parents=[common], help="emit a job script")
    s.add_argument("--python", action="store_true",
                   help="launch via 'python3 -m fleetbench' instead of the console script")

    s = sub.add_parser("collect", parents=[common], help="merge an inbox of result files")
    s.add_argument("inbox", nargs="?")

    s = sub.add_parser("aggregate", parents=[common], help="site reports and distributions")
    s.add_argument("merged", nargs="?", help="merged CSV from collect")
    s.add_argument("--registry", metavar="FILE", help="site,jobslots,middleware CSV")

    s = sub.add_parser("report", parents=[common], help="tables and SVG charts")
    s.add_argument("aggregate_dir", nargs="?", help="output directory of aggregate")
    s.add_argument("--bins", type=int, default=10)
    s.add_argument("--zoom", type=float, default=90.0, metavar="PERCENTILE")
    return p


def _warn(lines):
    for line in lines:
        print(f"warning: {line}", file=sys.stderr)


def _default(explicit: Optional[str], cfg: CampaignConfig, *parts: str, what: str) -> Path:
    if explicit:
        return Path(explicit)
    if cfg.output is None:
        raise UsageError(f"no {what} given and no [campaign] output configured")
    return cfg.output.joinpath(*parts)


def cmd_probe(args, cfg: CampaignConfig) -> int:
    source = DirectorySource(args.fixtures) if args.fixtures else LiveSource()
    clock = (lambda: cfg.epoch) if cfg.clock == "mock" else None
    inv = collect_inventory(source, clock=clock, hostname=args.hostname or cfg.hostname)
    text = encode_csv(inventory_records(inv, args.site))
    if not args.out:
        sys.stdout.write(text)
        return EXIT_OK
    out = Path(args.out)
    if out.is_dir() or not out.suffix:
        out = out / "inventory.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_text(out, text)
    print(out)
    return EXIT_OK


def cmd_bench(args, cfg: CampaignConfig) -> int:
    if args.mock:
        cfg.clock = "mock"
    inventory = []
    if args.inventory:
        inventory = decode_csv(read_text(args.inventory))
    path = run_bench(cfg, Path(args.out or "."), args.site, inventory, args.hostname)
    print(path)
    return EXIT_OK


def cmd_plan(args, cfg: CampaignConfig) -> int:
    plan = JobPlan(site=args.site, seed=args.seed, config_text=cfg.text,
                   launcher="python3 -m fleetbench" if args.python else "fleetbench")
    script = plan.script()
    if args.out:
        write_text(args.out, script)
        print(args.out)
    else:
        sys.stdout.write(script)
    return EXIT_OK


def cmd_collect(args, cfg: CampaignConfig) -> int:
    inbox = Path(args.inbox) if args.inbox else cfg.inbox
    if inbox is None:
        raise UsageError("no inbox given and no [campaign] inbox configured")
    out = _default(args.out, cfg, "collected", what="--out")
    records, report = collect_inbox(inbox, cfg.host_sites, args.strict or cfg.strict)
    path = write_collection(out, records, report)
    _warn(report.warnings)
    for site in sorted(report.site_nodes):
        print(f"{site or '(no site)'}: {len(report.site_nodes[site])} node(s), "
              f"{report.site_records[site]} record(s)", file=sys.stderr)
    print(path)
    return EXIT_OK


def cmd_aggregate(args, cfg: CampaignConfig) -> int:
    merged = (Path(args.merged) if args.merged
              else _default(None, cfg, "collected", MERGED_FILE, what="merged CSV"))
    registry = Path(args.registry) if args.registry else cfg.registry
    out = _default(args.out, cfg, "aggregate", what="--out")
    agg = run_aggregate(merged, registry, out, cfg.host_sites, strict=True,
                        cv_threshold=cfg.cv_threshold)
    _warn(agg.warnings)
    print(out)
    return EXIT_OK


def cmd_report(args, cfg: CampaignConfig) -> int:
    src = (Path(args.aggregate_dir) if args.aggregate_dir
           else _default(None, cfg, "aggregate", what="aggregate directory"))
    out = _default(args.out, cfg, "report", what="--out")
    if args.bins < 1 or not 0 < args.zoom <= 100:
        raise UsageError("--bins must be >= 1 and --zoom in (0, 100]")
    run = report_from_dir(src, out, args.bins, args.zoom)
    print(f"{out}: {len(run.artifacts)} artifact(s)")
    return EXIT_OK


COMMANDS = {"probe": cmd_probe, "bench": cmd_bench, "plan": cmd_plan, "collect": cmd_collect,
            "aggregate": cmd_aggregate, "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config).with_seed(args.seed)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fleetbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"fleetbench: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
