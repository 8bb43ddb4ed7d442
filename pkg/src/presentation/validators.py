"""
CLI Validators Module
Parsing and validation of flag values that argparse cannot check on its own
"""
import logging
from typing import Callable, List, Optional, Tuple

from ..application import VALID_METRICS

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """Bad flag value; the CLI exits with status 2"""


class CliValidators:
    """Class containing validation methods"""

    @staticmethod
    def parse_list(text: str, cast: Callable = float, name: str = "list") -> List:
        """'0,0.5,1' -> [0.0, 0.5, 1.0]"""
        items = [item.strip() for item in (text or "").split(",")]
        if not text or not text.strip() or any(not item for item in items):
            raise UsageError(f"{name} must be a non-empty comma-separated list, got {text!r}")
        try:
            return [cast(item) for item in items]
        except ValueError:
            raise UsageError(f"{name}: cannot parse {text!r}")

    @staticmethod
    def validate_metrics(names: List[str]) -> Tuple[bool, str]:
        """
        Validate metric names

        Returns:
            (is_valid, error_message)
        """
        unknown = [name for name in names if name.strip().lower() not in VALID_METRICS]
        if not names:
            return False, f"no metrics given; valid names: {', '.join(VALID_METRICS)}"
        if unknown:
            return False, f"unknown metric(s) {', '.join(unknown)}; valid names: {', '.join(VALID_METRICS)}"
        return True, ""

    @staticmethod
    def validate_w_list(values: List[float]) -> Tuple[bool, str]:
        if not values:
            return False, "w list must not be empty"
        if any(w < 0 for w in values):
            return False, "guidance strengths must be >= 0"
        return True, ""

    @staticmethod
    def validate_fractions(values: List[float]) -> Tuple[bool, str]:
        if not values:
            return False, "corruption list must not be empty"
        if any(not 0.0 <= f <= 1.0 for f in values):
            return False, "corruption fractions must lie in [0, 1]"
        return True, ""

    @staticmethod
    def parse_box(text: Optional[str]) -> Optional[Tuple[int, int, int, int]]:
        """'Y0,X0,Y1,X1' (end-exclusive) -> tuple"""
        if text is None:
            return None
        values = CliValidators.parse_list(text, int, "--box")
        if len(values) != 4:
            raise UsageError("--box takes exactly four integers Y0,X0,Y1,X1")
        y0, x0, y1, x1 = values
        if not (0 <= y0 < y1 and 0 <= x0 < x1):
            raise UsageError(f"--box {text} is empty or negative")
        return y0, x0, y1, x1

    @staticmethod
    def require(check: Tuple[bool, str]) -> None:
        """Raise UsageError for a failed (is_valid, error_message) check"""
        ok, message = check
        if not ok:
            logger.debug(f"Rejected flag value: {message}")
            raise UsageError(message)
