"""Deterministic cost model for mock-clock runs.

Costs are nanoseconds per unit of work (one chained operation, one vector
element, one dependent load, one stream element). Values are small dyadic
numbers so mock measurements come out exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from fleetbench.microbench.model import StreamKernel, Stream2Kernel

KIB = 1 << 10
MIB = 1 << 20

DEFAULT_OP_NS = {
    "int": {"add": 1.0, "mul": 3.0, "div": 20.0, "mod": 24.0},
    "int64": {"add": 1.0, "mul": 3.0, "div": 40.0, "mod": 44.0},
    "float": {"add": 4.0, "mul": 4.0, "div": 12.0},
    "double": {"add": 4.0, "mul": 5.0, "div": 16.0},
}
DEFAULT_PLATEAUS = ((32 * KIB, 1.0), (2 * MIB, 5.0), (math.inf, 80.0))


@dataclass
class SyntheticCosts:
    op_ns: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_OP_NS.items()})
    bogomflops_ns: dict = field(default_factory=lambda: {"float": 2.0, "double": 2.5})
    plateaus: tuple = DEFAULT_PLATEAUS
    stream_ns_per_byte: float = 0.25
    null_loop_ns: float = 0.5

    def memory_ns(self, working_set_bytes: int) -> float:
        for capacity, ns in self.plateaus:
            if working_set_bytes <= capacity:
                return ns
        return self.plateaus[-1][1]

    def __call__(self, key: str) -> float:
        family, _, rest = key.partition("/")
        if family == "op_latency":
            cls, op = rest.split("/")
            return self.op_ns[cls][op]
        if family == "bogomflops":
            return self.bogomflops_ns[rest]
        if family == "mem_latency":
            return self.memory_ns(int(rest))
        if family == "stream":
            return StreamKernel(rest).bytes_per_iter * self.stream_ns_per_byte
        if family == "stream2":
            return Stream2Kernel(rest).bytes_per_iter * self.stream_ns_per_byte
        if family == "null_loop":
            return self.null_loop_ns
        raise KeyError(key)
