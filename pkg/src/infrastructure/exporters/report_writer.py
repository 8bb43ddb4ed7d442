"""
Tabular and JSON outputs: sweep tables, metric reports, the training log and the budget record.
"""
import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

from ...utils.atomic_io import atomic_write

logger = logging.getLogger(__name__)


class ReportWriter:
    """Every document written here carries the config echo and the tool version"""

    def __init__(self, version: str):
        self.version = version

    def provenance(self, config_echo: str) -> Dict[str, Any]:
        return {"version": self.version, "config": json.loads(config_echo)}

    def write_json(self, payload: Dict[str, Any], path: str, config_echo: str = "{}") -> str:
        document = {**payload, "provenance": self.provenance(config_echo)}
        with atomic_write(path, mode="w", encoding="utf-8") as handle:
            json.dump(document, handle, indent=2, sort_keys=True)
            handle.write("\n")
        logger.info(f"Report written to {path}")
        return str(path)

    def write_csv(self, rows: Sequence[Dict[str, Any]], columns: List[str], path: str,
                  config_echo: str = "{}") -> str:
        """Comment lines with version and config echo precede the header row"""
        buffer = io.StringIO()
        buffer.write(f"# version: {self.version}\n")
        buffer.write(f"# config: {config_echo}\n")
        writer = csv.DictWriter(buffer, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        with atomic_write(path, mode="w", encoding="utf-8") as handle:
            handle.write(buffer.getvalue())
        logger.info(f"Table with {len(rows)} rows written to {path}")
        return str(path)


class TrainingLog:
    """Line-delimited JSON log; the first line is a provenance record"""

    def __init__(self, path: str, version: str, config_echo: str = "{}", append: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "a" if append else "w", encoding="utf-8")
        if not append or self.path.stat().st_size == 0:
            self.write({"provenance": {"version": version, "config": json.loads(config_echo)}})

    def write(self, record: Dict[str, Any]) -> None:
        self._handle.write(json.dumps(record, sort_keys=True) + "\n")
        self._handle.flush()

    def __call__(self, record: Dict[str, Any]) -> None:
        self.write(record)

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self) -> "TrainingLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_jsonl(path: str) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]
