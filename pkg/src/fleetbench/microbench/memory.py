"""Pointer-chase memory latency and cache-level detection."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fleetbench.microbench import _kernels as K
from fleetbench.microbench.model import CacheLevels, MemoryLatencyCurve, SizeTooSmall
from fleetbench.timing import Harness, TimingError

LINK_BYTES = 8
SEQUENTIAL = "sequential_stride"
RANDOM = "random_permutation"
PATTERNS = (SEQUENTIAL, RANDOM)
DEFAULT_STRIDE = 64
DEFAULT_JUMP_RATIO = 1.5
DEFAULT_SWEEPS = 3


def default_sizes(lo: int = 1 << 10, hi: int = 64 << 20) -> list[int]:
    """Powers of two from ``lo`` to ``hi`` with 1.5x half-steps between them."""
    sizes = []
    s = lo
    while s <= hi:
        sizes.append(s)
        if s * 3 // 2 < hi:
            sizes.append(s * 3 // 2)
        s *= 2
    return sizes


@dataclass(frozen=True)
class ChaseRing:
    buffer: np.ndarray  # int64 element indices; slot i lives at element i * stride / 8
    slots: int
    stride_bytes: int
    pattern: str
    seed: int | None

    @property
    def working_set_bytes(self) -> int:
        return self.buffer.size * LINK_BYTES

    def walk(self, steps: int, start: int = 0) -> list[int]:
        """Slot numbers visited by following ``steps`` links."""
        per_slot = self.stride_bytes // LINK_BYTES
        p, out = start * per_slot, []
        for _ in range(steps):
            p = int(self.buffer[p])
            out.append(p // per_slot)
        return out


def build_chase_ring(working_set_bytes: int, pattern: str = RANDOM,
                     stride_bytes: int = DEFAULT_STRIDE, seed: int = 0) -> ChaseRing:
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}")
    if stride_bytes < LINK_BYTES or stride_bytes % LINK_BYTES:
        raise ValueError(f"stride_bytes must be a multiple of {LINK_BYTES}")
    if working_set_bytes < stride_bytes or working_set_bytes % stride_bytes:
        raise ValueError("working_set_bytes must be a positive multiple of stride_bytes")
    slots = working_set_bytes // stride_bytes
    if slots < 2:
        raise SizeTooSmall(f"{slots} slot(s); a ring needs at least 2")
    per_slot = stride_bytes // LINK_BYTES
    if pattern == RANDOM:
        rng = np.random.default_rng(seed)
        order = np.concatenate(([0], 1 + rng.permutation(slots - 1)))
    else:
        order = np.arange(slots)
        seed = None
    pos = order.astype(np.int64) * per_slot
    buf = np.zeros(working_set_bytes // LINK_BYTES, dtype=np.int64)
    buf[pos] = np.roll(pos, -1)
    return ChaseRing(buf, slots, stride_bytes, pattern, seed)


def chase_latency(ring: ChaseRing, harness: Harness) -> float:
    buf = ring.buffer
    body = lambda n: K.chase(n, buf, 0)  # noqa: E731
    timing = harness.measure(body, units_per_iter=K.UNROLL,
                             cost_key=f"mem_latency/{ring.working_set_bytes}")
    return timing.ns_per_iter / K.UNROLL


def memory_latency_curve(sizes: Sequence[int], pattern: str, harness: Harness,
                         stride_bytes: int = DEFAULT_STRIDE, seed: int = 0,
                         sweeps: int = DEFAULT_SWEEPS) -> MemoryLatencyCurve:
    """ns per dependent load at each working-set size.

    The whole ladder is walked ``sweeps`` times and each point reports the
    median over sweeps, so a burst of interference from co-located load hits
    one sample of several neighbouring points rather than all samples of one.
    A point whose ring cannot be built or whose measurement fails is
    recorded in ``missing`` and the curve continues.
    """
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    rings, failed = {}, {}
    for size in sizes:
        try:
            rings[size] = build_chase_ring(size, pattern, stride_bytes, seed)
        except (SizeTooSmall, MemoryError) as exc:
            failed[size] = f"{type(exc).__name__}: {exc}"
    samples = {size: [] for size in rings}
    for _ in range(sweeps):
        for size, ring in rings.items():
            if size in failed:
                continue
            try:
                samples[size].append(chase_latency(ring, harness))
            except TimingError as exc:
                failed[size] = f"{type(exc).__name__}: {exc}"
    points = []
    for size in sizes:
        if size in failed:
            continue
        ns = statistics.median(samples[size])
        if ns <= 0:
            failed[size] = "non-positive residual"
            continue
        points.append((size, ns))
    missing = tuple((size, failed[size]) for size in sizes if size in failed)
    return MemoryLatencyCurve(tuple(points), pattern, stride_bytes, seed, missing)


def detect_cache_levels(curve: MemoryLatencyCurve,
                        jump_ratio: float = DEFAULT_JUMP_RATIO) -> CacheLevels:
    """Split the curve into plateaus at latency jumps of at least ``jump_ratio``.

    Each plateau is one level: its latency is the plateau median and its
    capacity the last size in it, except the final plateau whose capacity is
    unbounded. A plateau whose median does not exceed the previous level's is
    merged into it.
    """
    if len(curve.points) < 4:
        raise ValueError("need at least 4 curve points")
    if not jump_ratio > 1:
        raise ValueError("jump_ratio must be > 1")
    lat = curve.latencies
    plateaus = [[0]]
    for i in range(1, len(lat)):
        if lat[i] / lat[i - 1] >= jump_ratio:
            plateaus.append([i])
        else:
            plateaus[-1].append(i)

    def median_of(p):
        return statistics.median(lat[i] for i in p)

    merging = True
    while merging:
        merging = False
        for j in range(1, len(plateaus)):
            if median_of(plateaus[j]) <= median_of(plateaus[j - 1]):
                plateaus[j - 1] += plateaus.pop(j)
                merging = True
                break
    kept = tuple(p[0] for p in plateaus[1:])

    sizes = curve.sizes
    levels = [(float(sizes[p[-1]]), median_of(p)) for p in plateaus]
    levels[-1] = (float("inf"), levels[-1][1])
    return CacheLevels(tuple(levels), kept)
