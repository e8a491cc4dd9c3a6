"""Parameter checkpoint files.

Layout: an ASCII header, one line per array (``name dim0,dim1,...``), a blank
line, then the arrays' little-endian float64 bytes concatenated in header order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

MAGIC = "ED2PARAMS 1"


def save_arrays(path, arrays: dict[str, np.ndarray]) -> None:
    lines = [MAGIC]
    for name, arr in arrays.items():
        if not name or any(c.isspace() for c in name):
            raise ValueError(f"array name {name!r} must be non-empty without whitespace")
        lines.append(f"{name} {','.join(str(d) for d in arr.shape)}")
    header = ("\n".join(lines) + "\n\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_arrays(path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    end = data.index(b"\n\n")
    lines = data[:end].decode("ascii").split("\n")
    if lines[0] != MAGIC:
        raise ValueError(f"{path}: not a parameter checkpoint")
    out, offset = {}, end + 2
    for line in lines[1:]:
        name, dims = line.rsplit(" ", 1)
        shape = tuple(int(d) for d in dims.split(",")) if dims else ()
        count = int(np.prod(shape, dtype=np.int64))
        out[name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += 8 * count
    if offset != len(data):
        raise ValueError(f"{path}: trailing or missing bytes")
    return out
