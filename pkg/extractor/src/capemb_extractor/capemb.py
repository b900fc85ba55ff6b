"""CAPEMB writer: text by default, binary for ``.capembb`` paths.

Written independently from the scoring side's loader; the two meet only at
the documented format, which keeps conformance tests honest. Output is
atomic (temp file + rename) so readers never observe partial files.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

BINARY_SUFFIX = ".capembb"


def write_capemb(
    entries: list[tuple[str, np.ndarray]],
    kind: str,
    dim: int,
    path: str | Path,
    binary: bool | None = None,
) -> None:
    path = Path(path)
    if binary is None:
        binary = path.suffix == BINARY_SUFFIX
    if binary and path.suffix != BINARY_SUFFIX:
        raise ValueError(
            f"binary CAPEMB files must use the {BINARY_SUFFIX} extension, got {path.name!r}"
        )
    if not binary and path.suffix == BINARY_SUFFIX:
        raise ValueError(f"{path.name!r} has the binary extension but text output was requested")
    header = f"CAPEMB 1 {kind} {dim} {len(entries)}\n"
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        if binary:
            with os.fdopen(fd, "wb") as fh:
                fh.write(header.encode("utf-8"))
                for key, values in entries:
                    fh.write(key.encode("utf-8") + b"\n")
                    fh.write(struct.pack(f"<{dim}f", *np.asarray(values, dtype=np.float32)))
        else:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(header)
                for key, values in entries:
                    rendered = " ".join(f"{float(v):.9g}" for v in np.asarray(values, dtype=np.float32))
                    fh.write(f"{key}\t{rendered}\n")
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
