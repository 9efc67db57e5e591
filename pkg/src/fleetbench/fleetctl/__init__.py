"""Campaign orchestration and the command line."""

from fleetbench.fleetctl.campaign import (CollectAborted, FileOutcome, IngestReport, JobPlan,
                                          collect_inbox, make_harness, run_aggregate, run_bench,
                                          write_collection)
from fleetbench.fleetctl.config import CampaignConfig, ConfigError, load_config, parse_config

__all__ = ["CampaignConfig", "CollectAborted", "ConfigError", "FileOutcome", "IngestReport",
           "JobPlan", "collect_inbox", "load_config", "make_harness", "parse_config",
           "run_aggregate", "run_bench", "write_collection"]
