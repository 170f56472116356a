"""CSV and key-value file formats.

All floats are written with 17 significant digits so that a write/read
round trip is lossless.
"""

import csv
from pathlib import Path

import numpy as np

from .fields import ComplexField, Grid1D, HydroField

FLOAT_FMT = "%.17g"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    if v is None:
        return ""
    return str(v)


def write_table(path, columns, rows):
    """Write ``rows`` (sequences matching ``columns``) as CSV."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_table(path):
    """Read a CSV written by :func:`write_table` into a dict of string columns."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        cols = {name: [] for name in header}
        for row in r:
            for name, v in zip(header, row):
                cols[name].append(v)
    return cols


def write_complex_field(path, psi):
    x = psi.grid.x
    rows = zip(x, psi.values.real, psi.values.imag)
    return write_table(path, ["x", "re_psi", "im_psi"], rows)


def write_hydro_field(path, h):
    rows = zip(h.grid.x, h.rho, h.current)
    return write_table(path, ["x", "rho", "J"], rows)


def _grid_from_x(x):
    n = len(x)
    dx = (x[-1] - x[0]) / (n - 1)
    return Grid1D(float(x[0]), float(x[0] + n * dx), n)


def read_complex_field(path, grid=None):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = grid or _grid_from_x(data[:, 0])
    return ComplexField(grid, data[:, 1] + 1j * data[:, 2])


def read_hydro_field(path, grid=None):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = grid or _grid_from_x(data[:, 0])
    return HydroField(grid, data[:, 1], data[:, 2])


def write_keyvalue(path, items):
    """``key = value`` per line, in the given order."""
    path = Path(path)
    with path.open("w") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {_fmt(v)}\n")
    return path


def read_keyvalue(path):
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out
