"""Campaign configuration from an INI file.

Example::

    [campaign]
    registry = registry.csv
    inbox = inbox
    output = out
    strict = false
    cv_threshold = 0.05

    [suite]
    clock = mock              ; real | mock
    min_duration_ns = 10000000
    repetitions = 3
    mem_sizes = 4096, 65536, 1048576, 16777216
    mem_pattern = random_permutation
    stream_n = 1000000
    seed = 0
    mock_step_ns = 1
    epoch = 2007-05-01T12:00:00Z
    hostname = wn01          ; optional override

    [hosts]
    wn01 = SITE-A

Relative paths are resolved against the directory holding the file.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Optional

from fleetbench.aggregate import DEFAULT_CV_THRESHOLD
from fleetbench.microbench import SuiteConfig
from fleetbench.microbench.memory import RANDOM, SEQUENTIAL
from fleetbench.results import parse_time
from fleetbench.timing import MeasurePlan

ENV_VAR = "FLEETBENCH_CONFIG"
CLOCKS = ("real", "mock")
DEFAULT_EPOCH = "2007-05-01T12:00:00Z"


class ConfigError(ValueError):
    pass


@dataclass
class CampaignConfig:
    registry: Optional[Path] = None
    inbox: Optional[Path] = None
    output: Optional[Path] = None
    suite: SuiteConfig = field(default_factory=SuiteConfig)
    plan: Optional[MeasurePlan] = None  # None: the harness default
    clock: str = "real"
    mock_step_ns: float = 1.0
    epoch: datetime = field(default_factory=lambda: parse_time(DEFAULT_EPOCH))
    hostname: Optional[str] = None
    cv_threshold: float = DEFAULT_CV_THRESHOLD
    host_sites: dict[str, str] = field(default_factory=dict)
    strict: bool = False
    source: Optional[Path] = None
    text: str = ""

    def __post_init__(self):
        paths = [p.resolve() for p in (self.registry, self.inbox, self.output) if p is not None]
        if len(set(paths)) != len(paths):
            raise ConfigError("registry, inbox and output paths must be distinct")
        if self.clock not in CLOCKS:
            raise ConfigError(f"clock must be one of {CLOCKS}, got {self.clock!r}")
        if self.mock_step_ns <= 0:
            raise ConfigError("mock_step_ns must be > 0")
        if not self.cv_threshold > 0:
            raise ConfigError("cv_threshold must be > 0")
        s = self.suite
        if s.mem_pattern not in (RANDOM, SEQUENTIAL):
            raise ConfigError(f"mem_pattern must be {RANDOM} or {SEQUENTIAL}")
        if any(b <= 0 for b in s.mem_sizes) or list(s.mem_sizes) != sorted(set(s.mem_sizes)):
            raise ConfigError("mem_sizes must be positive and strictly increasing")
        if s.stride_bytes <= 0 or s.stride_bytes % 8:
            raise ConfigError("stride_bytes must be a positive multiple of 8")
        if s.mem_sweeps < 1:
            raise ConfigError("mem_sweeps must be >= 1")
        if not s.jump_ratio > 1:
            raise ConfigError("jump_ratio must be > 1")
        if not 0 < s.stream_min_n <= s.stream_n <= s.stream_max_n:
            raise ConfigError("need 0 < stream_min_n <= stream_n <= stream_max_n")
        if s.bogomflops_length < 1024:
            raise ConfigError("bogomflops_length must be >= 1024")

    def with_seed(self, seed: Optional[int]) -> "CampaignConfig":
        if seed is None:
            return self
        return replace(self, suite=replace(self.suite, seed=seed))


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def parse_config(text: str, base: Optional[Path] = None) -> CampaignConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # hostnames are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for name in cp.sections():
        if name not in ("campaign", "suite", "hosts"):
            raise ConfigError(f"unknown section [{name}]")
    base = base or Path.cwd()

    def path(key):
        v = cp.get("campaign", key, fallback="").strip()
        return (base / v) if v else None

    try:
        camp = cp["campaign"] if cp.has_section("campaign") else {}
        s = cp["suite"] if cp.has_section("suite") else {}
        known = {"clock", "min_duration_ns", "repetitions", "max_iterations", "mem_sizes",
                 "mem_pattern", "stride_bytes", "mem_sweeps", "jump_ratio", "stream_n",
                 "stream_min_n", "stream_max_n", "stream_scalar", "stream2_scalar",
                 "bogomflops_length", "seed", "mock_step_ns", "epoch", "hostname"}
        unknown = sorted(set(s) - known)
        if unknown:
            raise ConfigError(f"unknown [suite] keys {unknown}")
        defaults = SuiteConfig()
        suite = SuiteConfig(
            mem_sizes=_ints(s["mem_sizes"]) if "mem_sizes" in s else defaults.mem_sizes,
            mem_pattern=s.get("mem_pattern", defaults.mem_pattern),
            stride_bytes=int(s.get("stride_bytes", defaults.stride_bytes)),
            mem_sweeps=int(s.get("mem_sweeps", defaults.mem_sweeps)),
            jump_ratio=float(s.get("jump_ratio", defaults.jump_ratio)),
            stream_n=int(s.get("stream_n", defaults.stream_n)),
            stream_min_n=int(s.get("stream_min_n", s.get("stream_n", defaults.stream_min_n))),
            stream_max_n=int(s.get("stream_max_n", defaults.stream_max_n)),
            stream_scalar=float(s.get("stream_scalar", defaults.stream_scalar)),
            stream2_scalar=float(s.get("stream2_scalar", defaults.stream2_scalar)),
            bogomflops_length=int(s.get("bogomflops_length", defaults.bogomflops_length)),
            seed=int(s.get("seed", defaults.seed)),
        )
        plan = None
        if any(k in s for k in ("min_duration_ns", "repetitions", "max_iterations")):
            d = MeasurePlan()
            plan = MeasurePlan(int(s.get("min_duration_ns", d.min_duration_ns)),
                               int(s.get("repetitions", d.repetitions)),
                               int(s.get("max_iterations", d.max_iterations)))
        strict = cp.getboolean("campaign", "strict", fallback=False)
        return CampaignConfig(
            registry=path("registry"), inbox=path("inbox"), output=path("output"),
            suite=suite, plan=plan, clock=s.get("clock", "real").strip(),
            mock_step_ns=float(s.get("mock_step_ns", 1)),
            epoch=parse_time(s.get("epoch", DEFAULT_EPOCH).strip()),
            hostname=s.get("hostname") or None,
            cv_threshold=float(camp.get("cv_threshold", DEFAULT_CV_THRESHOLD)),
            host_sites=dict(cp["hosts"]) if cp.has_section("hosts") else {},
            strict=strict, text=text,
        )
    except ConfigError:
        raise
    except ValueError as exc:  # bad numbers, booleans, timestamps, plan
        raise ConfigError(str(exc)) from exc


def load_config(path: Optional[str | os.PathLike] = None) -> CampaignConfig:
    """Load ``path``, else the file named by ``FLEETBENCH_CONFIG``, else defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return CampaignConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    cfg = parse_config(text, path.parent)
    cfg.source = path
    return cfg
