"""Binary on-disk format for complex matrices.

Layout (little-endian):

    bytes 0..3    magic b"ICMX"
    bytes 4..7    format version, uint32 (currently 1)
    bytes 8..11   header length H, uint32
    bytes 12..12+H  UTF-8 JSON header: {"dtype", "shape", "order",
                    "content_hash", "meta"}
    remainder     raw array payload, C (row-major) order

`content_hash` is the SHA-256 hex digest of the payload, verified on load.
Writes go through a temp file in the destination directory followed by an
atomic rename.
"""

import hashlib
import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"ICMX"
VERSION = 1
_ALLOWED_DTYPES = ("complex64", "complex128")


def save_matrix(path, array: np.ndarray, meta: dict | None = None) -> None:
    array = np.ascontiguousarray(array)
    if array.dtype.name not in _ALLOWED_DTYPES:
        array = array.astype(np.complex128)
    payload = array.tobytes()
    header = {
        "dtype": array.dtype.name,
        "shape": list(array.shape),
        "order": "row-major",
        "content_hash": hashlib.sha256(payload).hexdigest(),
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", VERSION, len(header_bytes)))
            fh.write(header_bytes)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_matrix(path):
    """Read a matrix file; returns (array, meta). Verifies magic and hash."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a matrix cache file")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        payload = fh.read()
    if hashlib.sha256(payload).hexdigest() != header["content_hash"]:
        raise ValueError(f"{path}: payload hash mismatch (corrupt file)")
    array = np.frombuffer(payload, dtype=np.dtype(header["dtype"]))
    array = array.reshape(header["shape"]).copy()
    return array, header.get("meta", {})
