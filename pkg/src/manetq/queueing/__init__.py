from .kendall import INF, KendallSpec, ParseError, format_kendall, parse_kendall
from .measures import (EmptyObservation, SteadyStateEstimates, UnstableQueue,
                       check_conservation, mm1_oracle, mm1k_blocking, steady_state)
from .mm1 import QueueRun, UnsupportedDistribution, lindley_delays, simulate_kendall, simulate_queue
from .queue import FIFO, LIFO, PRIORITY, Customer, QueueStats, ServiceQueue

__all__ = [
    "INF", "KendallSpec", "ParseError", "format_kendall", "parse_kendall",
    "EmptyObservation", "SteadyStateEstimates", "UnstableQueue", "check_conservation",
    "mm1_oracle", "mm1k_blocking", "steady_state", "QueueRun", "UnsupportedDistribution",
    "lindley_delays", "simulate_kendall", "simulate_queue",
    "FIFO", "LIFO", "PRIORITY", "Customer", "QueueStats", "ServiceQueue",
]
