"""Parsing and validation for the benchmark harness CSV schema."""

import csv
from dataclasses import dataclass
from pathlib import Path

CSV_FIELDS = ("table", "capacity_log2", "load_factor", "read_pct", "threads",
              "rep", "duration_secs", "total_ops", "ops_per_usec")


class CsvFormatError(ValueError):
    """Malformed benchmark CSV; carries the offending 1-based line number."""

    def __init__(self, line: int, problem: str):
        super().__init__(f"line {line}: {problem}")
        self.line = line


@dataclass(frozen=True)
class ResultRow:
    """One benchmark repetition as the harness recorded it."""

    table: str
    capacity_log2: int
    load_factor: float
    read_pct: float
    threads: int
    rep: int
    duration_secs: float
    total_ops: int
    ops_per_usec: float


def sample_csv_path() -> Path:
    """Bundled example produced by a real harness sweep."""
    return Path(__file__).with_name("sample_bench.csv")


def read_rows(path) -> list[ResultRow]:
    """All data rows of a harness CSV, validated field by field.

    Raises CsvFormatError naming the first bad line; an empty file, a
    foreign header, and a header with no data rows all count as bad.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CsvFormatError(1, "empty file, expected a header row")
        if tuple(header) != CSV_FIELDS:
            raise CsvFormatError(
                1, f"header {header!r} does not match {list(CSV_FIELDS)!r}")
        rows = []
        for line, record in enumerate(reader, start=2):
            if not record:
                raise CsvFormatError(line, "blank line inside the table")
            rows.append(_parse_record(line, record))
    if not rows:
        raise CsvFormatError(2, "no data rows after the header")
    return rows


def _parse_record(line: int, record: list) -> ResultRow:
    if len(record) != len(CSV_FIELDS):
        raise CsvFormatError(
            line, f"expected {len(CSV_FIELDS)} fields, got {len(record)}")
    try:
        row = ResultRow(table=record[0],
                        capacity_log2=int(record[1]),
                        load_factor=float(record[2]),
                        read_pct=float(record[3]),
                        threads=int(record[4]),
                        rep=int(record[5]),
                        duration_secs=float(record[6]),
                        total_ops=int(record[7]),
                        ops_per_usec=float(record[8]))
    except ValueError as exc:
        raise CsvFormatError(line, str(exc)) from None
    if row.ops_per_usec <= 0:
        raise CsvFormatError(line, "ops_per_usec must be positive")
    if row.threads < 1:
        raise CsvFormatError(line, "threads must be at least 1")
    return row
