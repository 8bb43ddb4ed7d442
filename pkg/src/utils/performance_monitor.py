"""
Wall-clock timing of expensive operations (training epochs, sampling, metrics).
The collected durations feed the budget record written next to training runs.
"""

import logging
import time
from functools import wraps
from typing import Dict, Any, Callable, Optional
from collections import defaultdict, deque
from datetime import datetime

logger = logging.getLogger(__name__)

SLOW_OPERATION_SECONDS = 60.0


class PerformanceMetrics:
    """Per-operation durations, call and error counts"""

    def __init__(self, max_history: int = 1000):
        self.max_history = max_history
        self.durations = defaultdict(lambda: deque(maxlen=max_history))
        self.total_seconds = defaultdict(float)
        self.call_counts = defaultdict(int)
        self.error_counts = defaultdict(int)
        self.slow_operations = deque(maxlen=100)
        self.start_time = datetime.now()

    def record(self, operation: str, duration: float, success: bool = True):
        self.durations[operation].append(duration)
        self.total_seconds[operation] += duration
        self.call_counts[operation] += 1

        if not success:
            self.error_counts[operation] += 1

        if duration > SLOW_OPERATION_SECONDS:
            self.slow_operations.append({
                'operation': operation,
                'duration': duration,
                'timestamp': datetime.now().isoformat(),
                'success': success
            })
            logger.info(f"{operation} took {duration:.1f}s")

    def get_stats(self, operation: Optional[str] = None) -> Dict[str, Any]:
        if operation:
            times = list(self.durations[operation])
            if not times:
                return {'operation': operation, 'no_data': True}

            return {
                'operation': operation,
                'call_count': self.call_counts[operation],
                'error_count': self.error_counts[operation],
                'total_seconds': self.total_seconds[operation],
                'avg_seconds': sum(times) / len(times),
                'min_seconds': min(times),
                'max_seconds': max(times),
            }

        operation_stats = {}
        for op, times in self.durations.items():
            if times:
                operation_stats[op] = {
                    'calls': self.call_counts[op],
                    'total_seconds': self.total_seconds[op],
                    'avg_seconds': sum(times) / len(times),
                    'errors': self.error_counts[op]
                }

        return {
            'uptime_seconds': (datetime.now() - self.start_time).total_seconds(),
            'total_calls': sum(self.call_counts.values()),
            'total_errors': sum(self.error_counts.values()),
            'operations': operation_stats,
            'slow_operations_count': len(self.slow_operations),
        }

    def log_summary(self):
        stats = self.get_stats()
        logger.info(f"Performance summary - uptime: {stats['uptime_seconds']:.0f}s, "
                    f"calls: {stats['total_calls']}, errors: {stats['total_errors']}")


# Global metrics instance
_metrics = PerformanceMetrics()


def monitor_performance(operation_name: Optional[str] = None):
    """
    Decorator recording the wall-clock duration of each call.

    Usage:
        @monitor_performance("train.epoch")
        def run_epoch(...):
            ...
    """

    def decorator(func: Callable) -> Callable:
        op_name = operation_name or f"{func.__module__}.{func.__name__}"

        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            start = time.perf_counter()
            success = True
            try:
                return func(*args, **kwargs)
            except Exception:
                success = False
                raise
            finally:
                _metrics.record(op_name, time.perf_counter() - start, success)

        return wrapper

    return decorator


def get_performance_stats(operation: Optional[str] = None) -> Dict[str, Any]:
    return _metrics.get_stats(operation)


def log_performance_summary():
    _metrics.log_summary()


def reset_performance_stats():
    global _metrics
    _metrics = PerformanceMetrics()
