"""Raw tensor files: little-endian float64 payload plus a text sidecar.

``x.bin`` holds the C-order bytes; ``x.meta`` records dtype, shape, and
layout in a fixed key order so files are byte-reproducible. Round trips
are bitwise exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError


def _meta_path(path: Path) -> Path:
    return path.with_suffix(".meta")


def save_tensor(array: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    array = np.ascontiguousarray(array, dtype=np.float64)
    path.write_bytes(array.astype("<f8", copy=False).tobytes())
    meta = (
        "dtype = float64\n"
        f"shape = {' '.join(str(int(s)) for s in array.shape)}\n"
        "order = C\n"
    )
    _meta_path(path).write_text(meta)


def load_tensor(path: str | Path) -> np.ndarray:
    path = Path(path)
    meta_path = _meta_path(path)
    if not meta_path.is_file():
        raise FormatError("missing sidecar", path=meta_path)
    fields = {}
    for lineno, raw in enumerate(meta_path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError("expected 'key = value'", path=meta_path, line=lineno)
        key, _, rhs = line.partition("=")
        fields[key.strip()] = rhs.strip()
    if fields.get("dtype") != "float64" or fields.get("order") != "C":
        raise FormatError("unsupported dtype or order", path=meta_path)
    try:
        shape = tuple(int(v) for v in fields["shape"].split())
    except (KeyError, ValueError):
        raise FormatError("bad shape", path=meta_path) from None
    data = path.read_bytes()
    expected = int(np.prod(shape)) * 8 if shape else 8
    if len(data) != expected:
        raise FormatError(
            f"payload is {len(data)} bytes, shape implies {expected}", path=path
        )
    return np.frombuffer(data, dtype="<f8").reshape(shape).astype(np.float64)
