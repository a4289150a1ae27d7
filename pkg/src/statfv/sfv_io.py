"""Binary field dumps (SFV1), sidecar metadata, and deterministic CSV output.

SFV1 layout, little-endian: magic "SFV1", n (u32), time (f64), gamma (f64),
then n*n*4 IEEE-754 doubles in row-major order with the component index
innermost. A text sidecar ``<path>.meta`` records scheme, seed and config
hash as ``key = value`` lines.
"""

import struct

import numpy as np

from .errors import FormatError
from .grid import ConservedField, Grid

_MAGIC = b"SFV1"
_HEADER = struct.Struct("<4sIdd")


def dump_field(path, field: ConservedField, time: float, gamma: float, meta: dict | None = None) -> None:
    """Write one field; bit-exact round trip with load_field."""
    n = field.grid.n
    payload = np.ascontiguousarray(np.moveaxis(field.data, 0, -1), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, n, float(time), float(gamma)))
        fh.write(payload.tobytes())
    if meta is not None:
        lines = [f"{k} = {meta[k]}" for k in sorted(meta)]
        with open(str(path) + ".meta", "w") as fh:
            fh.write("\n".join(lines) + "\n")


def load_field(path):
    """Read a dump; returns (field, time, gamma). FormatError on mismatch."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, n, time, gamma = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        raw = fh.read()
    expected = n * n * 4 * 8
    if len(raw) != expected:
        raise FormatError(f"{path}: payload is {len(raw)} bytes, header implies {expected}")
    data = np.frombuffer(raw, dtype="<f8").reshape(n, n, 4)
    return ConservedField(Grid(n), np.moveaxis(data, -1, 0)), time, gamma


def format_float(x: float) -> str:
    """Fixed 17-significant-digit float formatting for CSV determinism."""
    return f"{x:.17g}"


def write_csv(path, columns, rows, config_hash: str | None = None) -> None:
    """Write a CSV table; floats at 17 significant digits, one comment line
    embedding the config hash."""
    out = []
    if config_hash is not None:
        out.append(f"# config_hash={config_hash}")
    out.append(",".join(columns))
    for row in rows:
        cells = [format_float(v) if isinstance(v, float) else str(v) for v in row]
        out.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
