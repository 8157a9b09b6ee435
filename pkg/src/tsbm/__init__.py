"""Block modelling of dynamic interaction networks with Poisson counts and exact ICL."""

__version__ = "0.1.0"

from .core import (
    InteractionTensor,
    NodePartition,
    Partition,
    Priors,
    TimeGrid,
    TimePartition,
    block_stats_a,
    block_stats_b,
    build_tensor,
    log_icl_a,
    log_icl_b,
)
from .search import FitResult, SearchConfig, SearchState, run

