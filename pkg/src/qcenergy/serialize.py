"""Field and report serialization.

Field records are one row per inside node in row-major order:
index, x, y, re(value), im(value) -- as CSV with a one-line header, or an
equivalent JSON layout with the grid metadata (kind, n, extents) in a
header object. Floats are written with repr (shortest round-trip form),
so identical inputs produce byte-identical files.
"""

import json

import numpy as np

from .errors import DataError
from .fields import MappingField
from .grids import build_grid


def _fmt(x):
    return repr(float(x))


def _node_rows(grid, values):
    m = grid.inside
    idx = np.flatnonzero(m.ravel())
    zz = grid.zz.ravel()[idx]
    vv = np.asarray(values).ravel()[idx]
    return idx, zz, vv


def field_to_csv(grid, values, path, role="mapping"):
    idx, zz, vv = _node_rows(grid, values)
    with open(path, "w") as fh:
        fh.write("index,x,y,re,im\n")
        for i, z, v in zip(idx, zz, vv):
            fh.write(f"{i},{_fmt(z.real)},{_fmt(z.imag)},{_fmt(v.real)},{_fmt(v.imag)}\n")


def field_to_json(grid, values, path, role="mapping"):
    idx, zz, vv = _node_rows(grid, values)
    doc = {
        "grid": {"kind": grid.kind, "n": grid.n, "extents": list(grid.extents)},
        "role": role,
        "nodes": [[int(i), float(z.real), float(z.imag), float(v.real), float(v.imag)]
                  for i, z, v in zip(idx, zz, vv)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def field_from_json(path):
    """Rebuild (grid, values) from the JSON layout."""
    with open(path) as fh:
        doc = json.load(fh)
    g = doc["grid"]
    extents = g["extents"]
    if g["kind"] == "disk":
        grid = build_grid("disk", g["n"])
    elif g["kind"] == "half-plane":
        x0, x1, y0, y1 = extents
        grid = build_grid("half-plane", g["n"], (x1, y0, y1))
    else:
        grid = build_grid("rectangle", g["n"], tuple(extents))
    if list(grid.extents) != list(extents):
        raise DataError(f"extents mismatch reading {path}")
    vals = np.full(grid.zz.size, np.nan + 0j)
    for i, _x, _y, re, im in doc["nodes"]:
        vals[i] = re + 1j * im
    return grid, vals.reshape(grid.zz.shape)


def field_from_csv(path, grid):
    """Read node values back onto a known grid."""
    vals = np.full(grid.zz.size, np.nan + 0j)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "index,x,y,re,im":
            raise DataError(f"unexpected header {header!r} in {path}")
        for line in fh:
            i, _x, _y, re, im = line.strip().split(",")
            vals[int(i)] = float(re) + 1j * float(im)
    return vals.reshape(grid.zz.shape)


def mapping_from_json(path):
    grid, vals = field_from_json(path)
    return MappingField.from_values(grid, vals)


def write_json_report(obj, path):
    """JSON with sorted keys and repr-stable floats via default str fallback."""
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON-serializable: {type(x)}")


def table_to_csv(path, header, columns):
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
