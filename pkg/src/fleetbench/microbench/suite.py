"""Run every metric family and emit benchmark records."""

from __future__ import annotations

import logging
import socket
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Optional

from fleetbench.microbench.memory import (DEFAULT_JUMP_RATIO, DEFAULT_STRIDE, DEFAULT_SWEEPS,
                                          RANDOM, default_sizes, detect_cache_levels,
                                          memory_latency_curve)
from fleetbench.microbench.model import (MicrobenchError, NumClass, Stream2Kernel,
                                         StreamKernel, valid_combinations)
from fleetbench.microbench.ops import bogomflops, op_latency
from fleetbench.microbench.stream import (DEFAULT_N, MAX_N, STREAM2_SCALAR, STREAM_SCALAR,
                                          stream2_kernel, stream_kernel, stream_length)
from fleetbench.results import BenchmarkRecord, format_float, utc_now
from fleetbench.timing import Harness, TimingError

log = logging.getLogger(__name__)

_EXPECTED = (TimingError, MicrobenchError, MemoryError, ValueError)


@dataclass
class SuiteConfig:
    mem_sizes: list[int] = field(default_factory=default_sizes)
    mem_pattern: str = RANDOM
    stride_bytes: int = DEFAULT_STRIDE
    mem_sweeps: int = DEFAULT_SWEEPS
    jump_ratio: float = DEFAULT_JUMP_RATIO
    stream_n: int = DEFAULT_N
    stream_min_n: int = DEFAULT_N
    stream_max_n: int = MAX_N
    stream_scalar: float = STREAM_SCALAR
    stream2_scalar: float = STREAM2_SCALAR
    bogomflops_length: int = 1024
    seed: int = 0


def _meta(meta: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in meta.items())


class _Recorder:
    def __init__(self, hostname, site, stamp):
        self.hostname, self.site, self.stamp = hostname, site, stamp
        self.records: list[BenchmarkRecord] = []

    def ok(self, metric, klass, kind, value, unit, note=""):
        self.records.append(BenchmarkRecord(self.hostname, self.site, self.stamp(), metric,
                                            klass, kind, value, unit, "ok", note))

    def missing(self, metric, klass, kind, unit, reason):
        log.warning("%s %s %s missing: %s", metric, klass, kind, reason)
        self.records.append(BenchmarkRecord(self.hostname, self.site, self.stamp(), metric,
                                            klass, kind, None, unit, "missing", reason))


def _reason(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


def run_full_suite(config: SuiteConfig, harness: Harness, hostname: Optional[str] = None,
                   site: str = "", stamp: Optional[Callable[[], datetime]] = None
                   ) -> list[BenchmarkRecord]:
    """Run all metrics in sequence; a failing metric becomes a ``missing`` record."""
    rec = _Recorder(hostname or socket.gethostname(), site, stamp or utc_now)

    for num_class, kind in valid_combinations():
        try:
            m = op_latency(num_class, kind, harness)
            rec.ok("op_latency", num_class.value, kind.value, m.ns_per_op, "ns", _meta(m.meta))
        except _EXPECTED as exc:
            rec.missing("op_latency", num_class.value, kind.value, "ns", _reason(exc))

    for num_class in (NumClass.FLOAT, NumClass.DOUBLE):
        try:
            m = bogomflops(num_class, config.bogomflops_length, harness)
            rec.ok("bogomflops", num_class.value, "muladd", m.ns_per_op, "ns", _meta(m.meta))
        except _EXPECTED as exc:
            rec.missing("bogomflops", num_class.value, "muladd", "ns", _reason(exc))

    levels = None
    if not config.mem_sizes:
        rec.missing("mem_latency", config.mem_pattern, "", "ns", "empty size ladder")
    else:
        try:
            curve = memory_latency_curve(config.mem_sizes, config.mem_pattern, harness,
                                         config.stride_bytes, config.seed,
                                         config.mem_sweeps)
        except _EXPECTED as exc:
            curve = None
            rec.missing("mem_latency", config.mem_pattern, "", "ns", _reason(exc))
        if curve is not None:
            note = _meta(dict(stride=curve.stride_bytes, seed=curve.seed))
            for size, ns in curve.points:
                rec.ok("mem_latency", curve.pattern, str(size), ns, "ns", note)
            for size, reason in curve.missing:
                rec.missing("mem_latency", curve.pattern, str(size), "ns", reason)
            try:
                levels = detect_cache_levels(curve, config.jump_ratio)
            except ValueError as exc:
                rec.missing("cache_level", "", "", "bytes", _reason(exc))
            else:
                for i, (capacity, ns) in enumerate(levels.levels):
                    last = i == len(levels.levels) - 1
                    rec.ok("cache_level", "", "mem" if last else f"L{i + 1}", capacity,
                           "bytes", f"latency_ns={format_float(ns)}")

    n = stream_length(levels, config.stream_n, config.stream_max_n)
    for kernel in StreamKernel:
        _stream_records(rec, "stream", kernel.value, lambda k=kernel: stream_kernel(
            k, n, config.stream_scalar, harness, config.stream_min_n))
    for kernel in Stream2Kernel:
        _stream_records(rec, "stream2", kernel.value, lambda k=kernel: stream2_kernel(
            k, n, config.stream2_scalar, harness, config.stream_min_n))
    return rec.records


def _stream_records(rec, family, kernel, run):
    try:
        m = run()
        bw = m.bandwidth_mbps
    except (*_EXPECTED, ZeroDivisionError) as exc:
        rec.missing(f"{family}_bw", "", kernel, "MBps", _reason(exc))
        rec.missing(f"{family}_lat", "", kernel, "ns", _reason(exc))
        return
    note = _meta(m.meta)
    rec.ok(f"{family}_bw", "", kernel, bw, "MBps", note)
    rec.ok(f"{family}_lat", "", kernel, m.latency_ns, "ns", note)
