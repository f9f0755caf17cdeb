"""Iterated pairwise averaging: water tanks, averaging dynamics and Robin Hood majorization."""

from .tank_core import (
    Average,
    Color,
    InvalidPartitionError,
    InvalidStepError,
    Pair,
    Strategy,
    Sweep,
    TankConfig,
    apply_matrix,
    average_partition,
    equilibrate_pair,
    is_doubly_stochastic,
    run_strategy,
    strategy_matrix,
    transferred_to_blue,
)
from .strategies import (
    default_window_width,
    greedy_optimal_strategy,
    heat_exchanger_simulate,
    moving_window_strategy,
    naive_strategy,
)

__version__ = "0.1.0"
