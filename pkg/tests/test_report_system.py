import csv
import math

import numpy as np

from acceptance_checks import CheckResult
from report_system import ReportSystem, Row, Table, format_number
from simulate import Estimate, RunSummary


def test_format_number():
    assert format_number(None) == ''
    assert format_number(math.nan) == ''
    assert format_number(12) == '12'
    assert format_number(np.int64(7)) == '7'
    assert format_number(1 / 3) == '0.333333333'
    assert format_number(235.76123456789) == '235.761235'


def test_row_cells_leave_missing_values_empty():
    assert Row('k_opt', 5.0, analytic=32.189).cells() == ['k_opt', '5', '32.189', '', '', '', '']


def test_table_header_names_sweep_variable():
    assert Table('uninformed', 'Z').header() == [
        'quantity', 'Z', 'analytic', 'simulated_mean', 'simulated_se', 'R', 'seed']


def test_add_takes_statistics_from_summary():
    summary = RunSummary('uninformed', {}, 100, 42, quantities={'profit': Estimate(10.0, 0.5)})
    table = Table('demo', 'k')
    row = table.add('profit', 3, 11.0, summary=summary)
    assert (row.simulated_mean, row.simulated_se, row.R, row.seed) == (10.0, 0.5, 100, 42)
    other = table.add('gain', 3, summary=summary, name='profit')
    assert other.simulated_mean == 10.0


def test_publish_writes_csv(tmp_path, capsys):
    table = Table('profit_curve', 'k')
    table.add('profit', 0, 0.0, mean=0.0, se=0.0, R=10, seed=1)
    table.add('profit', 1, 23.5, mean=23.1, se=0.2, R=10, seed=1)
    path = ReportSystem({'out': str(tmp_path), 'console': False}).publish(table)
    assert capsys.readouterr().out == ''
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == table.header()
    assert rows[2] == ['profit', '1', '23.5', '23.1', '0.2', '10', '1']
    with open(path, 'rb') as f:
        assert b'\r\n' not in f.read()


def test_publish_prints_summary(tmp_path, capsys):
    table = Table('demo', 'Z', notes={'Z': 5.0})
    table.add('k_opt', 5.0, 32.189, mean=32)
    ReportSystem({'out': str(tmp_path)}).publish(table)
    out = capsys.readouterr().out
    assert 'EXPERIMENT DEMO' in out
    assert 'Saved 1 row(s)' in out


def test_quiet_skips_rows(tmp_path, capsys):
    table = Table('demo', 'Z')
    table.add('k_opt', 5.0, 32.189)
    ReportSystem({'out': str(tmp_path), 'quiet': True}).publish(table)
    assert 'analytic=' not in capsys.readouterr().out


def test_file_output_can_be_disabled(tmp_path):
    assert ReportSystem({'out': str(tmp_path), 'file': False, 'console': False}).publish(Table('x', 'k')) is None
    assert not (tmp_path / 'x.csv').exists()


def test_report_checks_counts_failures(capsys):
    results = [
        CheckResult(1, 'a', 'PASS', 1.0, 1.0, 0.1),
        CheckResult(1, 'b', 'FAIL', 2.0, 1.0, 0.1),
        CheckResult(2, 'c', 'WARN', 50, 100, None),
    ]
    assert ReportSystem({'console': True}).report_checks(results) == 1
    out = capsys.readouterr().out
    assert 'FAIL [1] b: measured=2 target=1 tolerance=0.1' in out
    assert '1 passed, 1 warned, 1 failed' in out
