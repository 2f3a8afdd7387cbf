"""Writer for the NCTV contextual-vector container.

Layout: magic `NCTV`, version u32, dim u32, then one record per sentence:
length-prefixed UTF-8 sentence id, token count u32, and token_count x dim
little-endian float32 values. Everything little-endian.
"""

from __future__ import annotations

import struct
from typing import Iterable

import numpy as np

MAGIC = b"NCTV"
VERSION = 1


def write(path, entries: Iterable[tuple[str, np.ndarray]], dim: int) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, dim))
        for sid, vectors in entries:
            if vectors.ndim != 2 or vectors.shape[1] != dim:
                raise ValueError(f"sentence {sid}: vectors shaped {vectors.shape}, expected (*, {dim})")
            sid_bytes = sid.encode("utf-8")
            fh.write(struct.pack("<I", len(sid_bytes)))
            fh.write(sid_bytes)
            fh.write(struct.pack("<I", vectors.shape[0]))
            fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())
