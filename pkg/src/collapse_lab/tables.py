"""CSV and JSON emission with exact round-tripping.

Floats are written with repr (shortest string that parses back to the
identical double), booleans as lowercase true/false, missing values as the
empty string. ``read_csv`` inverts the encoding, so write -> read is the
identity on values, which is what the byte-identical-output contract and
the re-plotting command rely on.
"""

from __future__ import annotations

import csv
import json

from .errors import ConfigError

__all__ = ["write_csv", "read_csv", "write_json", "rows_from_dicts"]


def _encode(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _decode(text: str):
    if text == "":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)  # covers 'inf', 'nan', exponents
    except ValueError:
        return text


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_encode(v) for v in row])


def read_csv(path):
    """Returns (header, rows) with cell values decoded back to Python types."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path} is empty, expected a header row")
        rows = [[_decode(cell) for cell in row] for row in reader]
    return header, rows


def rows_from_dicts(dicts, header):
    missing = [k for d in dicts for k in header if k not in d]
    if missing:
        raise ConfigError(f"rows missing columns: {sorted(set(missing))}")
    return [[d[k] for k in header] for d in dicts]


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
