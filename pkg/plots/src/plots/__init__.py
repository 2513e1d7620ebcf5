"""Figures from benchmark harness CSV files.

The package is deliberately decoupled from the table implementations: it
reads the nine-column CSV schema the harness emits and nothing else, so
results from any machine or any run can be replotted later.
"""

from .figures import grid_series, plot_grid, plot_single_thread
from .reader import (CSV_FIELDS, CsvFormatError, ResultRow, read_rows,
                     sample_csv_path)

__all__ = [
    "CSV_FIELDS",
    "CsvFormatError",
    "ResultRow",
    "grid_series",
    "plot_grid",
    "plot_single_thread",
    "read_rows",
    "sample_csv_path",
]
