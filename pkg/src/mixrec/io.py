"""File formats: model and tensor JSON, binary datasets, result JSON.

Dataset binary layout (little endian)::

    magic  b"MXDS"      4 bytes
    version uint32      currently 1
    n       uint64
    d       uint32
    seed    int64       -1 when unknown
    supports uint32 * d
    rows    uint32 * (n * d), row-major
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch
from .model import Dataset, JointTensor, MixtureSpec

MAGIC = b"MXDS"
VERSION = 1
_HEADER = struct.Struct("<4sIQIq")


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def save_model(spec: MixtureSpec, path) -> None:
    dump_json(spec.to_dict(), path)


def load_model(path) -> MixtureSpec:
    return MixtureSpec.from_dict(json.loads(Path(path).read_text()))


def tensor_to_dict(t: JointTensor) -> dict:
    return {
        "shape": list(t.shape),
        "kind": t.kind,
        "sample_size": t.sample_size,
        "values": t.values.ravel().tolist(),
    }


def tensor_from_dict(data: dict) -> JointTensor:
    try:
        shape = tuple(int(s) for s in data["shape"])
        values = np.asarray(data["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeMismatch(f"malformed tensor description: {exc}") from exc
    if values.size != int(np.prod(shape)):
        raise ShapeMismatch(f"{values.size} values cannot fill shape {shape}")
    kind = data.get("kind", "exact")
    n = data.get("sample_size")
    return JointTensor(values.reshape(shape), kind=kind, sample_size=None if n is None else int(n))


def save_tensor(t: JointTensor, path) -> None:
    dump_json(tensor_to_dict(t), path)


def load_tensor(path) -> JointTensor:
    return tensor_from_dict(json.loads(Path(path).read_text()))


def save_dataset(data: Dataset, path) -> None:
    seed = -1 if data.seed is None else int(data.seed)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, data.n, data.d, seed))
        fh.write(np.asarray(data.supports, dtype="<u4").tobytes())
        fh.write(np.ascontiguousarray(data.rows, dtype="<u4").tobytes())


def load_dataset(path) -> Dataset:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ShapeMismatch("truncated dataset header")
    magic, version, n, d, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ShapeMismatch(f"not a version-{VERSION} dataset file")
    off = _HEADER.size
    expected = off + 4 * d + 4 * n * d
    if len(raw) != expected:
        raise ShapeMismatch(f"dataset file has {len(raw)} bytes, expected {expected}")
    supports = np.frombuffer(raw, dtype="<u4", count=d, offset=off)
    rows = np.frombuffer(raw, dtype="<u4", count=n * d, offset=off + 4 * d).reshape(n, d)
    return Dataset(rows.astype(np.int64), tuple(int(s) for s in supports), None if seed == -1 else seed)
