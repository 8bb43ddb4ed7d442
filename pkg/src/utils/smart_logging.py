"""
Log throttling for long loops (training steps, sampling chains) so progress
messages appear at most once per interval per key.
"""

import logging
import time
from typing import Dict, Optional
from collections import defaultdict


class LogThrottler:
    """Throttle messages sharing a key; counts what was suppressed in between"""

    def __init__(self, default_interval: float = 10.0):
        self.default_interval = default_interval
        self.last_logged: Dict[str, float] = {}
        self.suppressed: Dict[str, int] = defaultdict(int)
        self.attempts: Dict[str, int] = defaultdict(int)

    def should_log(self, key: str, interval: Optional[float] = None) -> bool:
        """
        Decide whether a message for `key` goes out now.

        Args:
            key: Throttling key, e.g. "train.progress"
            interval: Custom interval (seconds)

        Returns:
            True if the message should be logged
        """
        now = time.monotonic()
        check_interval = self.default_interval if interval is None else interval
        self.attempts[key] += 1

        last_time = self.last_logged.get(key)
        if last_time is None or now - last_time >= check_interval:
            self.last_logged[key] = now
            return True

        self.suppressed[key] += 1
        return False

    def decorate(self, key: str, message: str) -> str:
        """Append the number of suppressed messages and reset the counter"""
        skipped = self.suppressed.pop(key, 0)
        if skipped:
            return f"{message} ({skipped} similar messages suppressed)"
        return message


class ThrottledLogger:
    """Logger wrapper whose *_throttled methods rate-limit per key"""

    def __init__(self, logger: logging.Logger, default_interval: float = 10.0):
        self.logger = logger
        self.throttler = LogThrottler(default_interval)

    def _throttled(self, level: str, key: str, message: str, interval: Optional[float]):
        full_key = f"{level.upper()}_{key}"
        if self.throttler.should_log(full_key, interval):
            getattr(self.logger, level)(self.throttler.decorate(full_key, message))

    def info_throttled(self, key: str, message: str, interval: Optional[float] = None):
        self._throttled("info", key, message, interval)

    def debug_throttled(self, key: str, message: str, interval: Optional[float] = None):
        self._throttled("debug", key, message, interval)

    def warning_throttled(self, key: str, message: str, interval: Optional[float] = None):
        self._throttled("warning", key, message, interval)


def get_smart_logger(name: str, default_interval: float = 10.0) -> ThrottledLogger:
    """Throttling wrapper around logging.getLogger(name)"""
    return ThrottledLogger(logging.getLogger(name), default_interval)
