"""Arithmetic, memory-latency and stream microbenchmarks."""

from fleetbench.microbench.memory import (build_chase_ring, default_sizes, detect_cache_levels,
                                          memory_latency_curve)
from fleetbench.microbench.model import (AllocationFailure, CacheLevels, InvalidCombination,
                                         LatencyMeasurement, MemoryLatencyCurve, MicrobenchError,
                                         NumClass, OpKind, SizeTooSmall, Stream2Kernel,
                                         StreamKernel, StreamMeasurement, VerificationFailure,
                                         valid_combinations)
from fleetbench.microbench.ops import bogomflops, null_loop_ns, op_latency
from fleetbench.microbench.stream import stream2_kernel, stream_kernel, stream_length
from fleetbench.microbench.suite import SuiteConfig, run_full_suite
from fleetbench.microbench.synthetic import SyntheticCosts

__all__ = [
    "AllocationFailure", "CacheLevels", "InvalidCombination", "LatencyMeasurement",
    "MemoryLatencyCurve", "MicrobenchError", "NumClass", "OpKind", "SizeTooSmall",
    "Stream2Kernel", "StreamKernel", "StreamMeasurement", "SuiteConfig", "SyntheticCosts",
    "VerificationFailure", "bogomflops", "build_chase_ring", "default_sizes",
    "detect_cache_levels", "memory_latency_curve", "null_loop_ns", "op_latency",
    "run_full_suite", "stream2_kernel", "stream_kernel", "stream_length", "valid_combinations",
]
