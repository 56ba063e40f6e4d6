"""batchopt: simulation-driven Pareto search over activity batching policies."""

__version__ = "0.1.0"
