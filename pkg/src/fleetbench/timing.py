"""Measurement harness: clocks, timer calibration and repetition control.

Every kernel in :mod:`fleetbench.microbench` is timed through
:func:`measure`. A *body* is any callable ``body(iterations) -> value`` that
performs ``iterations`` units of work and returns something derived from
that work; the returned value is handed to a sink so the work stays live.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Protocol

DEFAULT_MIN_DURATION_NS = 10_000_000
DEFAULT_REPETITIONS = 3
DEFAULT_MAX_ITERATIONS = 1 << 40


class TimingError(Exception):
    pass


class AllDeltasZero(TimingError):
    """The clock never advanced between two reads; batches must be larger."""


class BudgetExceeded(TimingError):
    pass


class PlanError(TimingError, ValueError):
    pass


class Clock(Protocol):
    def now(self) -> float: ...


class PerfCounterClock:
    """The host's monotonic high-resolution counter."""

    def now(self) -> int:
        return time.perf_counter_ns()


class MockClock:
    """Deterministic clock.

    Each call to :meth:`now` returns the current reading and then advances
    the clock by ``step_ns``. :meth:`advance` lets simulated workloads charge
    time explicitly.
    """

    def __init__(self, step_ns: float = 0, start_ns: float = 0):
        if step_ns < 0:
            raise ValueError("step_ns must be >= 0")
        self.step_ns = step_ns
        self._t = start_ns

    def now(self) -> float:
        t = self._t
        self._t += self.step_ns
        return t

    @property
    def reading_ns(self) -> float:
        """Current reading, without advancing."""
        return self._t

    def advance(self, ns: float) -> None:
        if ns < 0:
            raise ValueError("a clock cannot run backwards")
        self._t += ns


@dataclass(frozen=True)
class TimerProfile:
    resolution_ns: float
    read_overhead_ns: float

    def __post_init__(self):
        if not self.resolution_ns > 0:
            raise ValueError("resolution_ns must be > 0")
        if self.read_overhead_ns < 0:
            raise ValueError("read_overhead_ns must be >= 0")


@dataclass(frozen=True)
class MeasurePlan:
    min_duration_ns: int = DEFAULT_MIN_DURATION_NS
    repetitions: int = DEFAULT_REPETITIONS
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        if self.repetitions < 3 or self.repetitions % 2 == 0:
            raise PlanError("repetitions must be odd and >= 3")
        if self.max_iterations < 1:
            raise PlanError("max_iterations must be >= 1")
        if self.min_duration_ns <= 0:
            raise PlanError("min_duration_ns must be > 0")

    def check(self, profile: TimerProfile) -> None:
        if self.min_duration_ns < 100 * profile.resolution_ns:
            raise PlanError(
                f"min_duration_ns={self.min_duration_ns} is below 100x the timer "
                f"resolution ({profile.resolution_ns} ns)"
            )


@dataclass(frozen=True)
class Timing:
    """Outcome of one :func:`measure` call."""

    ns_per_iter: float
    iterations: int
    batches: tuple[float, ...]
    clamped: bool = False


class ValueSink:
    """Receives every body result so the timed work has an observable effect."""

    def __init__(self):
        self.last: Any = None
        self.count = 0

    def __call__(self, value: Any) -> None:
        self.last = value
        self.count += 1


def calibrate_timer(clock: Clock, samples: int = 1000) -> TimerProfile:
    """Estimate clock resolution and the cost of a single read.

    Resolution is the smallest positive delta over ``samples`` back-to-back
    read pairs; read overhead is the mean delta.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    deltas = []
    for _ in range(samples):
        a = clock.now()
        b = clock.now()
        deltas.append(b - a)
    positive = [d for d in deltas if d > 0]
    if not positive:
        raise AllDeltasZero(f"no positive delta in {samples} read pairs")
    return TimerProfile(resolution_ns=float(min(positive)),
                        read_overhead_ns=float(statistics.fmean(deltas)))


def _time_batch(clock: Clock, body: Callable[[int], Any], iterations: int,
                sink: Callable[[Any], None]) -> float:
    t0 = clock.now()
    result = body(iterations)
    t1 = clock.now()
    sink(result)
    return t1 - t0


def measure(clock: Clock, plan: MeasurePlan, body: Callable[[int], Any],
            profile: TimerProfile, sink: Optional[Callable[[Any], None]] = None) -> Timing:
    """Time ``body`` and return the median per-iteration cost.

    The iteration count doubles until one batch runs for at least
    ``plan.min_duration_ns``; then ``plan.repetitions`` batches of that size
    are timed. The clock-read overhead is subtracted once per batch. One
    untimed call comes first so JIT compilation and first-touch page faults
    stay out of the growth phase.
    """
    plan.check(profile)
    sink = sink if sink is not None else ValueSink()
    sink(body(1))
    iterations = 1
    while True:
        elapsed = _time_batch(clock, body, iterations, sink)
        if elapsed >= plan.min_duration_ns:
            break
        if iterations >= plan.max_iterations:
            raise BudgetExceeded(
                f"{iterations} iterations took {elapsed} ns, below "
                f"min_duration_ns={plan.min_duration_ns}"
            )
        iterations = min(iterations * 2, plan.max_iterations)

    clamped = False
    batches = []
    for _ in range(plan.repetitions):
        elapsed = _time_batch(clock, body, iterations, sink)
        residual = elapsed - profile.read_overhead_ns
        if residual < 0:
            residual = 0.0
            clamped = True
        batches.append(residual / iterations)
    return Timing(ns_per_iter=float(statistics.median(batches)), iterations=iterations,
                  batches=tuple(batches), clamped=clamped)


def measure_ns_per_iter(clock: Clock, plan: MeasurePlan, body: Callable[[int], Any],
                        profile: TimerProfile) -> float:
    return measure(clock, plan, body, profile).ns_per_iter


@dataclass
class Harness:
    """A clock, a plan and a calibrated profile bundled for the kernels.

    With ``cost_model`` set (mock runs only) every measured body also charges
    ``cost_model(cost_key) * units_per_iter`` nanoseconds per iteration to
    the clock, so simulated costs flow through the real measurement path.
    """

    clock: Clock
    plan: MeasurePlan
    profile: TimerProfile
    cost_model: Optional[Callable[[str], float]] = None
    sink: ValueSink = field(default_factory=ValueSink)

    @classmethod
    def real(cls, plan: Optional[MeasurePlan] = None, samples: int = 1000) -> "Harness":
        clock = PerfCounterClock()
        return cls(clock, plan or MeasurePlan(), calibrate_timer(clock, samples))

    @classmethod
    def mock(cls, cost_model: Callable[[str], float], step_ns: float = 1,
             plan: Optional[MeasurePlan] = None) -> "Harness":
        clock = MockClock(step_ns=step_ns)
        profile = calibrate_timer(clock, 100)
        return cls(clock, plan or MeasurePlan(min_duration_ns=int(1000 * step_ns)),
                   profile, cost_model=cost_model)

    @property
    def simulated(self) -> bool:
        return self.cost_model is not None

    def measure(self, body: Callable[[int], Any], units_per_iter: float = 1,
                cost_key: str = "") -> Timing:
        if self.cost_model is not None:
            body = self._charged(body, self.cost_model(cost_key) * units_per_iter)
        return measure(self.clock, self.plan, body, self.profile, self.sink)

    def _charged(self, body, ns_per_iter):
        advance = getattr(self.clock, "advance", None)
        if advance is None:
            raise TypeError("a cost model needs a clock with advance()")

        def charged(iterations):
            result = body(iterations)
            advance(ns_per_iter * iterations)
            return result

        return charged
