"""Deterministic binary checkpoint format for parameter sets.

Layout: 4-byte magic, little-endian u32 format version, u64 header length,
UTF-8 JSON header (layer/parameter manifest plus optional extra metadata),
then the raw float64 little-endian array payloads in manifest order.  The
encoding is fully deterministic, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataValidationError

_MAGIC = b"SGNN"
_VERSION = 1


def save_params(params, path, extra=None):
    """Write a nested ``{layer: {name: array}}`` dict to ``path``."""
    manifest = []
    blobs = []
    for layer_name in params:
        entries = []
        for pname, value in params[layer_name].items():
            arr = np.ascontiguousarray(value, dtype="<f8")
            entries.append({"name": pname, "shape": list(arr.shape)})
            blobs.append(arr.tobytes())
        manifest.append({"layer": layer_name, "params": entries})
    header = {"format": _VERSION, "layers": manifest}
    if extra is not None:
        header["extra"] = extra
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        for blob in blobs:
            fh.write(blob)
    return Path(path)


def load_params(path):
    """Read a checkpoint back, returning ``(params, extra)``."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataValidationError(f"{path}: not a parameter checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _VERSION:
            raise DataValidationError(f"{path}: unsupported checkpoint version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        params = {}
        for layer in header["layers"]:
            group = {}
            for entry in layer["params"]:
                shape = tuple(entry["shape"])
                count = int(np.prod(shape)) if shape else 1
                raw = fh.read(count * 8)
                if len(raw) != count * 8:
                    raise DataValidationError(f"{path}: truncated checkpoint")
                group[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            params[layer["layer"]] = group
    return params, header.get("extra")
