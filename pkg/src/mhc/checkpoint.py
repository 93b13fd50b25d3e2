"""Deterministic checkpoint container (format "mhc-ckpt/1").

One JSON header line (sorted keys) followed by the concatenated raw
little-endian array bytes.  Writing the same content twice produces
byte-identical files, so save -> load -> save round-trips exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SchemaError

FORMAT = "mhc-ckpt/1"


def save_arrays(path, arrays: dict, meta: dict | None = None) -> None:
    entries = []
    blobs = []
    for key in sorted(arrays):
        arr = np.ascontiguousarray(arrays[key], dtype=np.float64)
        entries.append({"key": key, "shape": list(arr.shape)})
        blobs.append(arr.astype("<f8").tobytes())
    header = json.dumps(
        {"format": FORMAT, "arrays": entries, "meta": meta or {}},
        sort_keys=True,
        separators=(",", ":"),
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        for blob in blobs:
            fh.write(blob)


def load_arrays(path):
    """Returns (arrays dict, meta dict)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise SchemaError(f"not a checkpoint file: {e}") from e
        if header.get("format") != FORMAT:
            raise SchemaError(f"expected {FORMAT!r}, got {header.get('format')!r}")
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise SchemaError(f"truncated checkpoint at {entry['key']!r}")
            arrays[entry["key"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return arrays, header.get("meta", {})


def flatten_tree(tree: dict, prefix: str = "") -> dict:
    """Nested dicts of arrays -> flat {dotted.key: array}."""
    flat = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(flatten_tree(v, key + "."))
        else:
            flat[key] = np.asarray(v)
    return flat


def unflatten_tree(flat: dict) -> dict:
    tree: dict = {}
    for key, v in flat.items():
        parts = key.split(".")
        node = tree
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = v
    return tree


def save_tree(path, tree: dict, meta: dict | None = None) -> None:
    save_arrays(path, flatten_tree(tree), meta)


def load_tree(path):
    arrays, meta = load_arrays(path)
    return unflatten_tree(arrays), meta
