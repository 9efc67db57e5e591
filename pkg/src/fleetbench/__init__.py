"""Grid worker-node characterization: inventory probe, microbenchmarks, fleet analysis."""

__version__ = "0.1.0"
