# ============================================================================
# MODULE: CSV MANAGER
# ============================================================================
# Experiment reports: row collection, deterministic CSV writing and the
# metadata header that echoes the run configuration
# ============================================================================

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import config

HEADER_PREFIX = "# "
NOTE_PREFIX = "## "


@dataclass
class ExperimentReport:
    """Rows keyed by (n, b, x, ...) with a fixed column set."""

    columns: Tuple[str, ...]
    key_columns: Tuple[str, ...]
    rows: List[dict] = field(default_factory=list)
    metadata: List[Tuple[str, str]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def add_row(self, **values):
        unknown = set(values) - set(self.columns)
        if unknown:
            raise ValueError(f"Unknown report columns: {', '.join(sorted(unknown))}")
        self.rows.append({column: values.get(column) for column in self.columns})

    def sorted_rows(self) -> List[dict]:
        return sorted(self.rows, key=lambda row: tuple(_sort_key(row[c]) for c in self.key_columns))

    def column(self, name: str) -> list:
        return [row[name] for row in self.sorted_rows()]

    def statuses(self) -> List[str]:
        return [row.get("status") for row in self.rows]


def _sort_key(value):
    if value is None:
        return (0, 0.0, "")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (1, float(value), "")
    return (2, 0.0, str(value))


def format_value(value) -> str:
    """17 significant digits; booleans as true/false; missing or non-finite as empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return ""
        return format(value, f".{config.CSV_SIGNIFICANT_DIGITS}g")
    return str(value)


def render_report(report: ExperimentReport) -> str:
    buffer = io.StringIO()
    for key, value in report.metadata:
        buffer.write(f"{HEADER_PREFIX}{key} = {value}\n")
    for note in report.notes:
        buffer.write(f"{NOTE_PREFIX}{note}\n")

    writer = csv.DictWriter(buffer, fieldnames=list(report.columns), lineterminator="\n")
    writer.writeheader()
    for row in report.sorted_rows():
        writer.writerow({c: format_value(row[c]) for c in report.columns})
    return buffer.getvalue()


def write_report(report: ExperimentReport, path: str = None) -> str:
    """Write the report to path (stdout when None); returns the CSV text."""
    text = render_report(report)
    if path is None:
        print(text, end="")
    else:
        with open(path, 'w', newline='', encoding='utf-8') as f:
            f.write(text)
    return text


def read_header_pairs(text: str) -> List[Tuple[str, str]]:
    """The (key, value) pairs echoed in a report's metadata header."""
    pairs = []
    for line in text.splitlines():
        if line.startswith(NOTE_PREFIX):
            continue
        if not line.startswith(HEADER_PREFIX.strip()):
            break
        key, sep, value = line[len(HEADER_PREFIX):].partition(" = ")
        if sep:
            pairs.append((key.strip(), value.strip()))
    return pairs


def read_report_rows(text: str) -> List[dict]:
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(body))
