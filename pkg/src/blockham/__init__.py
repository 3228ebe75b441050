"""Random block-model graphs, edge-exposure couplings, Hamilton cycle
solvers, structural predicate checkers, and a Monte Carlo sweep harness."""

from . import exposure, harness, model, solver, stitcher, structure
from .model import (
    BlockedGraph,
    BlockPartition,
    Criticals,
    ModelParams,
    criticals,
    generate,
)

__version__ = "0.1.0"

__all__ = [
    "model",
    "exposure",
    "solver",
    "structure",
    "stitcher",
    "harness",
    "BlockPartition",
    "ModelParams",
    "Criticals",
    "BlockedGraph",
    "generate",
    "criticals",
    "__version__",
]
