"""CSV and manifest writers shared by the experiment pipelines and the CLI.

The CSV contract: header row, comma separators, '\n' line ends, '.' radix,
floats rendered with exactly 17 significant digits (round-trip safe), the
literal "inf" for the +infinity sentinel.  Identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import hashlib

import numpy as np


def fmt_cell(v) -> str:
    """Render one CSV cell deterministically."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        # .16e always carries 17 significant digits; infinities collapse to
        # the bare sentinel literals.
        s = "%.16e" % float(v)
        if s.endswith("inf"):
            return "inf" if float(v) > 0 else "-inf"
        return s
    return str(v)


def write_csv(path, header: list[str], rows) -> str:
    """Write rows (iterables of cells) under a header; returns the path."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt_cell(v) for v in row) + "\n")
    return str(path)


def parse_cell(s: str) -> float:
    """Inverse of fmt_cell for numeric cells ('inf' maps to +infinity)."""
    return float(s)


def read_csv_columns(path, expected_header: list[str] | None = None):
    """Read a CSV written by write_csv into a dict of float arrays."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip().split(",")
        if expected_header is not None and header != expected_header:
            from ._errors import DataError

            raise DataError("CSV header %r does not match expected %r"
                            % (header, expected_header))
        cols = [[] for _ in header]
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            for i, part in enumerate(parts):
                cols[i].append(parse_cell(part))
    return {name: np.array(vals) for name, vals in zip(header, cols)}


def file_checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def grid_spec(lo: float, step: float, count: int) -> dict:
    """Manifest form of a uniform grid; regeneration is lo + step*arange(count)."""
    return {"lo": lo, "step": step, "count": int(count)}


def make_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Uniform grid lo + step*arange(count) covering [lo, hi]."""
    if not step > 0:
        from ._errors import UsageError

        raise UsageError("grid step must be > 0")
    count = int(round((hi - lo) / step)) + 1
    if count < 1:
        from ._errors import UsageError

        raise UsageError("empty grid: lo=%r hi=%r step=%r" % (lo, hi, step))
    return lo + step * np.arange(count)


