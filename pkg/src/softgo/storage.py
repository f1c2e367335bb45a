"""Binary container for named numeric arrays plus a JSON metadata blob.

Layout: magic, format version, header length, JSON header (metadata and an
array manifest with name/dtype/shape), then the raw array bytes in manifest
order. Round-trips are bit-exact. Used for network checkpoints and for
spilling training state (optimizer, replay buffer, RNG) to disk.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"SFGO"
FORMAT_VERSION = 1


class CorruptContainerError(Exception):
    pass


def pack(meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    manifest = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        blob = arr.tobytes()
        manifest.append(
            {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape), "nbytes": len(blob)}
        )
        blobs.append(blob)
    header = json.dumps({"meta": meta, "arrays": manifest}).encode("utf-8")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<IQ", FORMAT_VERSION, len(header))
    out += header
    for blob in blobs:
        out += blob
    return bytes(out)


def unpack(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if len(data) < 16 or data[:4] != MAGIC:
        raise CorruptContainerError("bad magic: not a softgo container")
    version, header_len = struct.unpack("<IQ", data[4:16])
    if version != FORMAT_VERSION:
        raise CorruptContainerError(f"unsupported container version {version}")
    if len(data) < 16 + header_len:
        raise CorruptContainerError("truncated header")
    try:
        header = json.loads(data[16 : 16 + header_len].decode("utf-8"))
        meta = header["meta"]
        manifest = header["arrays"]
    except (ValueError, KeyError) as exc:
        raise CorruptContainerError(f"malformed header: {exc}") from exc
    arrays: dict[str, np.ndarray] = {}
    offset = 16 + header_len
    for entry in manifest:
        nbytes = entry["nbytes"]
        if offset + nbytes > len(data):
            raise CorruptContainerError(f"truncated array data for {entry['name']!r}")
        arr = np.frombuffer(data[offset : offset + nbytes], dtype=np.dtype(entry["dtype"]))
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
        offset += nbytes
    return meta, arrays


def write_file(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(pack(meta, arrays))


def read_file(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        return unpack(f.read())
