"""
Cross-cutting helpers: throttled logging, performance timing and atomic file writes.
"""
from .smart_logging import get_smart_logger
from .performance_monitor import monitor_performance, get_performance_stats, log_performance_summary, reset_performance_stats
from .atomic_io import atomic_write

__all__ = [
    "get_smart_logger",
    "monitor_performance",
    "get_performance_stats",
    "log_performance_summary",
    "reset_performance_stats",
    "atomic_write",
]
