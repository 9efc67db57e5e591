"""STREAM (copy/scale/add/triad) and STREAM2 (fill/copy/daxpy/sum) passes.

One timed iteration is one full pass over the arrays, so the reported
latency is ns per element and bandwidth follows from bytes touched per
element.
"""

from __future__ import annotations

import math

import numpy as np

from fleetbench.microbench import _kernels as K
from fleetbench.microbench.model import (AllocationFailure, CacheLevels, StreamKernel,
                                         Stream2Kernel, StreamMeasurement, VerificationFailure)
from fleetbench.timing import Harness

DEFAULT_N = 1_000_000
MAX_N = 64_000_000
STREAM_SCALAR = 3.0
STREAM2_SCALAR = 0.5
# initial contents; chosen so every kernel result is exact in binary64
INIT_A, INIT_B, INIT_C = 1.0, 2.0, 3.0

_STREAM_FN = {StreamKernel.COPY: K.stream_copy, StreamKernel.SCALE: K.stream_scale,
              StreamKernel.ADD: K.stream_add, StreamKernel.TRIAD: K.stream_triad}
_STREAM2_FN = {Stream2Kernel.FILL: K.stream2_fill, Stream2Kernel.COPY: K.stream2_copy,
               Stream2Kernel.DAXPY: K.stream2_daxpy, Stream2Kernel.SUM: K.stream2_sum}


def stream_length(levels: CacheLevels | None = None, n: int = DEFAULT_N,
                  max_n: int = MAX_N) -> int:
    """Element count so each array is at least 4x the outermost detected cache."""
    outer = levels.outermost_cache_bytes if levels is not None else None
    if outer:
        n = max(n, math.ceil(4 * outer / 8))
    return min(n, max_n)


# Large arrays come back page aligned, so a load from one and a store to another
# share address bits 0..11 and the core stalls on false store-to-load
# dependencies. Each array starts at its own offset within a 4 KiB page.
PAGE = 4096
STAGGER = 1088


def _staggered(n, index):
    buf = np.empty(n + PAGE // 8, dtype=np.float64)
    skip = ((index * STAGGER - buf.ctypes.data) % PAGE) // 8
    return buf[skip:skip + n]


def _alloc(n, *values):
    try:
        arrays = [_staggered(n, i) for i in range(len(values))]
    except MemoryError as exc:
        raise AllocationFailure(f"cannot allocate {len(values)} x {n} doubles") from exc
    for arr, v in zip(arrays, values):
        arr[:] = v
    return arrays


def _check_n(n, min_n):
    if n < min_n:
        raise ValueError(f"n={n} is below the minimum of {min_n} elements")


def stream_expected(kernel: StreamKernel, a, b, c, s):
    """Post-state of (a, b, c) after any nonzero number of passes."""
    if kernel is StreamKernel.COPY:
        return a, b, a.copy()
    if kernel is StreamKernel.SCALE:
        return a, s * a, c
    if kernel is StreamKernel.ADD:
        return a, b, a + b
    return b + s * c, b, c


def stream_kernel(kernel: StreamKernel | str, n: int, s: float, harness: Harness,
                  min_n: int = DEFAULT_N) -> StreamMeasurement:
    kernel = StreamKernel(kernel)
    _check_n(n, min_n)
    a, b, c = _alloc(n, INIT_A, INIT_B, INIT_C)
    a0, b0, c0 = a.copy(), b.copy(), c.copy()
    fn = _STREAM_FN[kernel]
    s = float(s)
    timing = harness.measure(lambda p: fn(p, a, b, c, s), units_per_iter=n,
                             cost_key=f"stream/{kernel.value}")
    for name, got, want in zip("abc", (a, b, c), stream_expected(kernel, a0, b0, c0, s)):
        if not np.array_equal(got, want):
            raise VerificationFailure(f"stream {kernel.value}: array {name} mismatch")
    return StreamMeasurement(kernel.value, kernel.bytes_per_iter, timing.ns_per_iter / n,
                             meta=dict(n=n, scalar=s, iterations=timing.iterations,
                                       repetitions=len(timing.batches)))


class _Stream2Body:
    def __init__(self, fn, a, b, q):
        self.fn, self.a, self.b, self.q = fn, a, b, q
        self.passes = 0
        self.last_passes = 0
        self.last_result = None

    def __call__(self, p):
        self.passes += p
        self.last_passes = p
        self.last_result = self.fn(p, self.a, self.b, self.q)
        return self.last_result


def stream2_kernel(kernel: Stream2Kernel | str, n: int, q: float, harness: Harness,
                   min_n: int = DEFAULT_N) -> StreamMeasurement:
    kernel = Stream2Kernel(kernel)
    _check_n(n, min_n)
    q = float(q)
    if kernel is Stream2Kernel.SUM:
        a, b = _alloc(n, 0.0, INIT_B)
        a[:] = np.arange(n, dtype=np.float64)
    else:
        a, b = _alloc(n, INIT_A, INIT_B)
    a0 = a.copy()
    body = _Stream2Body(_STREAM2_FN[kernel], a, b, q)
    timing = harness.measure(body, units_per_iter=n, cost_key=f"stream2/{kernel.value}")
    _verify_stream2(kernel, body, a0, n, q)
    return StreamMeasurement(kernel.value, kernel.bytes_per_iter, timing.ns_per_iter / n,
                             meta=dict(n=n, scalar=q, iterations=timing.iterations,
                                       repetitions=len(timing.batches)))


def _verify_stream2(kernel, body, a0, n, q):
    a, b = body.a, body.b
    if kernel is Stream2Kernel.FILL:
        ok = bool(np.all(a == q))
    elif kernel is Stream2Kernel.COPY:
        ok = np.array_equal(a, b)
    elif kernel is Stream2Kernel.DAXPY:
        # repeated a += q*b; exact while the values stay small dyadics
        ok = np.array_equal(a, a0 + body.passes * (q * b))
    else:
        # the kernel returns the sum of per-pass accumulators
        closed = n * (n - 1) / 2
        ok = np.array_equal(a, a0) and body.last_result == body.last_passes * closed
    if not ok:
        raise VerificationFailure(f"stream2 {kernel.value}: post-run state mismatch")
