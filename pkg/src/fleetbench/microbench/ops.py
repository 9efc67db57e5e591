"""Arithmetic operation latency and bogomflops."""

from __future__ import annotations

import numpy as np

from fleetbench.microbench import _kernels as K
from fleetbench.microbench.model import (InvalidCombination, LatencyMeasurement, NumClass,
                                         OpKind, VerificationFailure)
from fleetbench.timing import Harness

SCALAR_TYPES = {
    NumClass.INT: np.int32,
    NumClass.INT64: np.int64,
    NumClass.FLOAT: np.float32,
    NumClass.DOUBLE: np.float64,
}

# Operand constants. The integer divide chain x -> c / x oscillates around
# sqrt(c); the remainder chain x -> c % x + k never reaches zero. Float chains
# stay near 1.5 and never approach denormals or infinity.
INT_OPERANDS = {
    NumClass.INT: dict(start=31_622, addend=3, factor=3, dividend=1_000_000_000, bias=1000),
    NumClass.INT64: dict(start=1_000_000_000, addend=3, factor=3,
                         dividend=1_000_000_000_000_000_000, bias=1000),
}
FLOAT_START = 1.5
FLOAT_ADDEND = 0.75
FLOAT_FACTOR = 1.25
FLOAT_DIVIDEND = 1.7

BOGO_Q = 0.5
BOGO_R = 0.5


def _chain_body(num_class: NumClass, kind: OpKind):
    t = SCALAR_TYPES[num_class]
    if num_class.is_integer:
        c = INT_OPERANDS[num_class]
        x0 = t(c["start"])
        if kind is OpKind.ADD:
            y = t(c["addend"])
            return lambda n: K.chain_iadd(n, x0, y)
        if kind is OpKind.MUL:
            y = t(c["factor"])
            return lambda n: K.chain_imul(n, t(1), y)
        if kind is OpKind.DIV:
            d = t(c["dividend"])
            return lambda n: K.chain_idiv(n, x0, d)
        d, b = t(c["dividend"]), t(c["bias"])
        return lambda n: K.chain_irem(n, x0, d, b)
    x0 = t(FLOAT_START)
    if kind is OpKind.ADD:
        y = t(FLOAT_ADDEND)
        return lambda n: K.chain_fadd(n, x0, y)
    if kind is OpKind.MUL:
        y = t(FLOAT_FACTOR)
        w = t(1) / y
        return lambda n: K.chain_fmul(n, x0, y, w)
    if kind is OpKind.DIV:
        d = t(FLOAT_DIVIDEND)
        return lambda n: K.chain_fdiv(n, x0, d)
    raise InvalidCombination(f"{kind.value} is undefined for {num_class.value}")


def op_latency(num_class: NumClass | str, kind: OpKind | str, harness: Harness) -> LatencyMeasurement:
    """Latency of one operation, timed as a dependent chain.

    Each result is the next operand, so superscalar overlap cannot hide the
    latency. The chain is unrolled ``UNROLL`` times per loop trip.
    """
    num_class, kind = NumClass(num_class), OpKind(kind)
    if kind is OpKind.MOD and not num_class.is_integer:
        raise InvalidCombination(f"mod is undefined for {num_class.value}")
    body = _chain_body(num_class, kind)
    key = f"op_latency/{num_class.value}/{kind.value}"
    timing = harness.measure(body, units_per_iter=K.UNROLL, cost_key=key)
    return LatencyMeasurement(key, timing.ns_per_iter / K.UNROLL, meta=dict(
        mode="chained-latency", unroll=K.UNROLL, iterations=timing.iterations,
        repetitions=len(timing.batches), clamped=timing.clamped))


def bogomflops_initial(vector_length: int, dtype) -> np.ndarray:
    # evenly spread over [0.5, 2.0]; the map x*0.5 + 0.5 keeps them there
    return np.linspace(0.5, 2.0, vector_length).astype(dtype)


def bogomflops_reference(x0: np.ndarray, passes: int, q: float = BOGO_Q,
                         r: float = BOGO_R) -> np.ndarray:
    """Scalar recomputation of ``passes`` applications of x*q + r, per element."""
    t = x0.dtype.type
    q, r = t(q), t(r)
    out = np.empty_like(x0)
    for i, v in enumerate(x0):
        v = t(v)
        for _ in range(passes):
            nxt = t(v * q + r)
            if nxt == v:
                break  # fixed point: later passes cannot change it
            v = nxt
        out[i] = v
    return out


class _BogoBody:
    def __init__(self, x, q, r):
        self.x, self.q, self.r = x, q, r
        self.passes = 0

    def __call__(self, n):
        self.passes += n
        return K.bogomflops_passes(n, self.x, self.q, self.r)


def bogomflops(num_class: NumClass | str, vector_length: int, harness: Harness,
               verify: bool = True) -> LatencyMeasurement:
    """Nanoseconds per element of x[i] = x[i]*q + r (one multiply, one add)."""
    num_class = NumClass(num_class)
    if num_class.is_integer:
        raise InvalidCombination("bogomflops is defined for float and double only")
    if vector_length < 1024:
        raise ValueError("vector_length must be >= 1024")
    t = SCALAR_TYPES[num_class]
    x0 = bogomflops_initial(vector_length, t)
    body = _BogoBody(x0.copy(), t(BOGO_Q), t(BOGO_R))
    key = f"bogomflops/{num_class.value}"
    timing = harness.measure(body, units_per_iter=vector_length, cost_key=key)
    if verify:
        expected = bogomflops_reference(x0, body.passes)
        if not np.array_equal(body.x, expected):
            raise VerificationFailure(f"bogomflops/{num_class.value}: vector mismatch")
    return LatencyMeasurement(key, timing.ns_per_iter / vector_length, meta=dict(
        vector_length=vector_length, passes=body.passes, iterations=timing.iterations,
        repetitions=len(timing.batches), clamped=timing.clamped))


def null_loop_ns(harness: Harness) -> float:
    """Per-iteration cost of a loop whose body is empty apart from a register barrier."""
    return harness.measure(K.null_loop, cost_key="null_loop").ns_per_iter
