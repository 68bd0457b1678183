"""Checkpoint container: model configuration, vocabulary and parameters
in one flat, versioned binary file.

Layout (all integers little-endian):

    bytes 0..7    magic ``ERRDETM1``
    bytes 8..11   uint32 header length N
    bytes 12..    UTF-8 JSON header of N bytes
    then          one raw block per parameter, in header order:
                  C-order float64 little-endian values

Header schema::

    {"format": 1,
     "config": {...ModelConfig fields...},
     "vocab": {"tokens": [...non-reserved tokens in id order...],
               "min_count": int} | null,
     "params": [{"name": str, "shape": [int, ...]}, ...]}

Saving the same model twice produces identical bytes, and a
save -> load -> save round trip is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .data import Vocabulary
from .errors import ParseError
from .model import Model, ModelConfig

MAGIC = b"ERRDETM1"
FORMAT_VERSION = 1


def save_checkpoint(path, model: Model, vocab: Vocabulary | None = None) -> None:
    header = {
        "format": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "vocab": None if vocab is None else {"tokens": vocab.tokens[2:],
                                             "min_count": vocab.min_count},
        "params": [{"name": name, "shape": list(p.data.shape)}
                   for name, p in model.params.items()],
    }
    blob = json.dumps(header, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    with path.open("wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<I", len(blob)))
        handle.write(blob)
        for p in model.params.values():
            handle.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[Model, Vocabulary | None]:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise ParseError("not a checkpoint file (bad magic)", path=path)
    (header_len,) = struct.unpack("<I", raw[8:12])
    try:
        header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"corrupt checkpoint header: {exc}", path=path) from exc
    if header.get("format") != FORMAT_VERSION:
        raise ParseError(f"unsupported checkpoint format {header.get('format')!r}",
                         path=path)

    config = ModelConfig.from_dict(header["config"])
    params: dict[str, ad.Tensor] = {}
    offset = 12 + header_len
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise ParseError(f"checkpoint truncated in parameter {entry['name']!r}",
                             path=path)
        values = np.frombuffer(raw[offset:end], dtype="<f8").reshape(shape).copy()
        params[entry["name"]] = ad.parameter(values)
        offset = end
    if offset != len(raw):
        raise ParseError("trailing bytes after last parameter", path=path)

    vocab = None
    if header["vocab"] is not None:
        vocab = Vocabulary(header["vocab"]["tokens"],
                           min_count=header["vocab"]["min_count"])
    return Model(config=config, params=params), vocab


def checkpoint_digest(path) -> str:
    """Short content hash, used as the served model version."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:12]
