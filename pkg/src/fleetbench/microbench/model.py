"""Value types shared by the microbenchmark kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class MicrobenchError(Exception):
    pass


class InvalidCombination(MicrobenchError, ValueError):
    pass


class SizeTooSmall(MicrobenchError, ValueError):
    pass


class AllocationFailure(MicrobenchError, MemoryError):
    pass


class VerificationFailure(MicrobenchError):
    """Post-run array contents disagree with the kernel definition."""


class NumClass(str, Enum):
    INT = "int"
    INT64 = "int64"
    FLOAT = "float"
    DOUBLE = "double"

    @property
    def is_integer(self) -> bool:
        return self in (NumClass.INT, NumClass.INT64)


class OpKind(str, Enum):
    ADD = "add"
    MUL = "mul"
    DIV = "div"
    MOD = "mod"


def valid_combinations() -> list[tuple[NumClass, OpKind]]:
    """The 14 (class, operation) pairs: mod only for the integer classes."""
    return [(c, k) for c in NumClass for k in OpKind
            if k is not OpKind.MOD or c.is_integer]


class StreamKernel(str, Enum):
    COPY = "copy"
    SCALE = "scale"
    ADD = "add"
    TRIAD = "triad"

    @property
    def bytes_per_iter(self) -> int:
        return _STREAM_BYTES[self]


class Stream2Kernel(str, Enum):
    FILL = "fill"
    COPY = "copy"
    DAXPY = "daxpy"
    SUM = "sum"

    @property
    def bytes_per_iter(self) -> int:
        return _STREAM2_BYTES[self]


# arrays touched per element x 8 bytes
_STREAM_BYTES = {StreamKernel.COPY: 16, StreamKernel.SCALE: 16,
                 StreamKernel.ADD: 24, StreamKernel.TRIAD: 24}
_STREAM2_BYTES = {Stream2Kernel.FILL: 8, Stream2Kernel.COPY: 16,
                  Stream2Kernel.DAXPY: 24, Stream2Kernel.SUM: 8}


@dataclass(frozen=True)
class LatencyMeasurement:
    metric: str
    ns_per_op: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.ns_per_op) and self.ns_per_op >= 0):
            raise ValueError(f"invalid latency {self.ns_per_op!r}")


@dataclass(frozen=True)
class StreamMeasurement:
    kernel: str
    bytes_per_iter: int
    latency_ns: float
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def bandwidth_mbps(self) -> float:
        # MB = 10**6 bytes; bytes per ns * 1000 = MB/s
        return 1000.0 * self.bytes_per_iter / self.latency_ns


@dataclass(frozen=True)
class MemoryLatencyCurve:
    points: tuple[tuple[int, float], ...]
    pattern: str
    stride_bytes: int = 64
    seed: int = 0
    missing: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        sizes = [s for s, _ in self.points]
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("working-set sizes must be strictly increasing")
        for s, ns in self.points:
            if not (math.isfinite(ns) and ns > 0):
                raise ValueError(f"invalid latency {ns!r} at {s} bytes")

    @property
    def sizes(self) -> list[int]:
        return [s for s, _ in self.points]

    @property
    def latencies(self) -> list[float]:
        return [ns for _, ns in self.points]


@dataclass(frozen=True)
class CacheLevels:
    """Detected plateaus; the last level has capacity ``math.inf``."""

    levels: tuple[tuple[float, float], ...]
    boundaries: tuple[int, ...]

    def __post_init__(self):
        caps = [c for c, _ in self.levels]
        lats = [lat for _, lat in self.levels]
        if any(b <= a for a, b in zip(caps, caps[1:])):
            raise ValueError("capacities must strictly increase")
        if any(b <= a for a, b in zip(lats, lats[1:])):
            raise ValueError("latencies must strictly increase")

    @property
    def outermost_cache_bytes(self) -> int | None:
        finite = [c for c, _ in self.levels if math.isfinite(c)]
        return int(finite[-1]) if finite else None
