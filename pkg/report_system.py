"""
Report System - Prints experiment tables and check outcomes, and saves tables as CSV
"""

import csv
import math
import numbers
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

CSV_COLUMNS = ('quantity', 'analytic', 'simulated_mean', 'simulated_se', 'R', 'seed')


def format_number(value) -> str:
    """Nine significant digits; missing values become empty cells"""
    if value is None:
        return ''
    if isinstance(value, numbers.Integral) and not isinstance(value, bool):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return ''
    return '{:.9g}'.format(value)


@dataclass
class Row:
    """One CSV line: a quantity at one value of the sweep variable"""
    quantity: str
    sweep_value: object
    analytic: Optional[float] = None
    simulated_mean: Optional[float] = None
    simulated_se: Optional[float] = None
    R: Optional[int] = None
    seed: Optional[int] = None

    def cells(self) -> List[str]:
        return [
            self.quantity,
            format_number(self.sweep_value),
            format_number(self.analytic),
            format_number(self.simulated_mean),
            format_number(self.simulated_se),
            format_number(self.R),
            format_number(self.seed),
        ]


@dataclass
class Table:
    """Data table produced by one experiment"""
    name: str
    sweep_var: str
    rows: List[Row] = field(default_factory=list)
    notes: Dict[str, object] = field(default_factory=dict)

    def header(self) -> List[str]:
        return [CSV_COLUMNS[0], self.sweep_var] + list(CSV_COLUMNS[1:])

    def add(self, quantity: str, sweep_value, analytic=None, summary=None, name: Optional[str] = None,
            R: Optional[int] = None, seed: Optional[int] = None, mean=None, se=None) -> Row:
        """Append a row, taking mean, SE, R and seed from a simulation summary when given"""
        if summary is not None:
            key = name or quantity
            mean, se = summary.mean(key), summary.se(key)
            R, seed = summary.realizations, summary.master_seed
        row = Row(quantity, sweep_value, analytic, mean, se, R, seed)
        self.rows.append(row)
        return row


class ReportSystem:
    def __init__(self, report_config: Optional[Dict] = None):
        """Initialize the reporter with output directory and console switches"""
        report_config = report_config or {}
        self.out_dir = report_config.get('out', 'results')
        self.console_enabled = report_config.get('console', True)
        self.quiet = report_config.get('quiet', False)
        self.file_enabled = report_config.get('file', True)

    def _format_row(self, table: Table, row: Row) -> str:
        parts = [f"{row.quantity:>14s}  {table.sweep_var}={format_number(row.sweep_value):<10s}"]
        if row.analytic is not None:
            parts.append(f"analytic={format_number(row.analytic)}")
        if row.simulated_mean is not None:
            parts.append(f"simulated={format_number(row.simulated_mean)} ± {format_number(row.simulated_se)}")
        return '  '.join(parts)

    def table_path(self, table: Table) -> str:
        return os.path.join(self.out_dir, f"{table.name}.csv")

    def _save_to_file(self, table: Table) -> Optional[str]:
        """Write the table as CSV with a one-line header"""
        if not self.file_enabled:
            return None
        os.makedirs(self.out_dir, exist_ok=True)
        path = self.table_path(table)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(table.header())
            for row in table.rows:
                writer.writerow(row.cells())
        if self.console_enabled:
            print(f"✓ Saved {len(table.rows)} row(s) to {path}", flush=True)
        return path

    def publish(self, table: Table) -> Optional[str]:
        """Print a table summary and save it"""
        if self.console_enabled:
            print("\n" + "=" * 60)
            print(f"EXPERIMENT {table.name.upper()} - {len(table.rows)} ROW(S)")
            print("=" * 60)
            for key, value in table.notes.items():
                print(f"{key}: {value}")
            if not self.quiet:
                for row in table.rows:
                    print(self._format_row(table, row))
        return self._save_to_file(table)

    def report_checks(self, results: Sequence) -> int:
        """Print one line per criterion and a closing summary; returns the number of failures"""
        failures = sum(1 for result in results if result.status == 'FAIL')
        warnings = sum(1 for result in results if result.status == 'WARN')
        if self.console_enabled:
            print("\n" + "=" * 60)
            print(f"CHECKS - {len(results)} CRITERIA")
            print("=" * 60)
            for result in results:
                print(result.describe())
            print("=" * 60)
            print(f"{len(results) - failures - warnings} passed, {warnings} warned, {failures} failed")
        return failures
