"""Portable checkpoint format for model parameters.

Layout of a checkpoint file:

* magic line ``FCP1``
* one JSON line: ``{"meta": {...}, "arrays": [{"name", "shape"}, ...]}``
* for each listed array, in order: raw little-endian float64 values,
  row-major, no padding

The JSON header carries arbitrary metadata (architecture tag, config)
so a checkpoint is self-describing.
"""

from __future__ import annotations

import json

import numpy as np

MAGIC = b"FCP1\n"


def save_params(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    header = {
        "meta": meta or {},
        "arrays": [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()],
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for v in arrays.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_params(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path} is not a checkpoint file (bad magic {magic!r})")
        header = json.loads(fh.readline().decode("utf-8"))
        arrays = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"truncated checkpoint: array {spec['name']!r}")
            arrays[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        trailing = fh.read(1)
        if trailing:
            raise ValueError("trailing bytes after last array")
    return header["meta"], arrays
