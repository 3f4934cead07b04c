# bb_report_utils.py
"""Utility functions for decode records and result tables (csv + json)"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from scipy.stats import norm

Z_95 = float(norm.ppf(0.975))

PATH_BP_ONLY = 'BP_ONLY'
PATH_BP_OSD = 'BP_OSD'


@dataclass(frozen=True)
class DecodeRecord:
    """outcome of one decoded shot; every table is an aggregate of these"""
    shot: int
    code: str
    decoder: str
    schedule: str
    defect_count: int
    mod_w_class: int
    mod_w_zero: bool
    path: str
    converged: bool
    iterations: int
    valid: bool
    p: float = 0.0
    fixed_weight: Optional[int] = None
    basis: str = 'Z_memory'
    max_component: int = 0
    position_variance: float = 0.0
    data_weight: int = 0
    meas_count: int = 0

    @property
    def nontrivial(self):
        return self.defect_count > 0


RECORD_FIELDS = [f.name for f in fields(DecodeRecord)]
_RECORD_TYPES = {f.name: f.type for f in fields(DecodeRecord)}


def format_cell(value):
    """stable text for a csv cell"""
    if value is None:
        return ''
    if isinstance(value, bool):
        return '1' if value else '0'
    if isinstance(value, float):
        if math.isnan(value):
            return ''
        return f"{value:.6f}"
    return str(value)


def _parse_cell(name, text):
    kind = _RECORD_TYPES[name]
    if text == '':
        return None if kind == Optional[int] else text
    if kind in (bool, 'bool'):
        return text == '1'
    if kind in (int, 'int', Optional[int]):
        return int(text)
    if kind in (float, 'float'):
        return float(text)
    return text


def record_to_row(record):
    return {name: format_cell(value) for name, value in asdict(record).items()}


def record_from_row(row):
    return DecodeRecord(**{name: _parse_cell(name, row[name]) for name in RECORD_FIELDS})


def write_records_csv(records, filename):
    """raw per-shot dump, the audit trail behind every rate"""
    with open(filename, 'w', newline='') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=RECORD_FIELDS, lineterminator='\n')
        writer.writeheader()
        for record in records:
            writer.writerow(record_to_row(record))


def read_records_csv(filename):
    with open(filename, 'r', newline='') as csvfile:
        return [record_from_row(row) for row in csv.DictReader(csvfile)]


def wilson_interval(successes, trials, z=Z_95):
    """Wilson score interval for a binomial rate; (None, None) when trials == 0"""
    if trials == 0:
        return (None, None)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def rate(successes, trials):
    return successes / trials if trials else None


def rate_cells(name, successes, trials):
    """{name, name_lo, name_hi} for a rate with its 95% Wilson interval"""
    low, high = wilson_interval(successes, trials)
    return {name: rate(successes, trials), f"{name}_lo": low, f"{name}_hi": high}


def rate_columns(*names):
    columns = []
    for name in names:
        columns += [name, f"{name}_lo", f"{name}_hi"]
    return columns


@dataclass
class ResultTable:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, row):
        missing = [column for column in self.columns if column not in row]
        assert not missing, f"row for '{self.name}' is missing {missing}"
        self.rows.append(row)


def table_to_csv(table):
    """csv text: one header row, snake_case columns, rates as decimals"""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=table.columns, lineterminator='\n',
                            extrasaction='ignore')
    writer.writeheader()
    for row in table.rows:
        writer.writerow({column: format_cell(row[column]) for column in table.columns})
    return buffer.getvalue()


def table_to_json(table, indent=2):
    """json mirror of the csv with the table metadata"""
    payload = {
        'name': table.name,
        'columns': table.columns,
        'rows': table.rows,
        'metadata': table.metadata,
    }
    return json.dumps(payload, indent=indent, default=_json_default)


def _json_default(value):
    if hasattr(value, 'item'):
        return value.item()
    if hasattr(value, 'tolist'):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def write_table(table, directory):
    """writes <name>.csv and <name>.json into directory; returns the csv path"""
    csv_path = f"{directory}/{table.name}.csv"
    with open(csv_path, 'w', newline='') as csv_file:
        csv_file.write(table_to_csv(table))
    with open(f"{directory}/{table.name}.json", 'w') as json_file:
        json_file.write(table_to_json(table))
    return csv_path
