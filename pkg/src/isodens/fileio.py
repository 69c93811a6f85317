"""Flat binary matrix files, PGM images, and run manifests.

The matrix container ("TRM") is a 12-byte header (magic ``TRM1``, then
row and column counts as little-endian uint32) followed by the payload
as row-major little-endian float64. Round trips are bit exact.
"""

import hashlib
import json
import struct

import numpy as np

from .errors import TableFormatError

_MAGIC = b"TRM1"


def write_trm(path, matrix):
    """Write a 2-D float64 matrix; returns the payload sha256 hex digest."""
    m = np.ascontiguousarray(np.asarray(matrix, dtype="<f8"))
    if m.ndim != 2:
        raise ValueError(f"TRM stores 2-D matrices, got shape {m.shape}")
    payload = m.tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(payload)
    return hashlib.sha256(payload).hexdigest()


def read_trm(path):
    """Read a matrix written by :func:`write_trm`.

    Raises:
        TableFormatError: wrong magic or payload length.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise TableFormatError(f"{path}: bad magic {data[:4]!r}, expected {_MAGIC!r}")
    if len(data) < 12:
        raise TableFormatError(f"{path}: truncated header")
    rows, cols = struct.unpack("<II", data[4:12])
    expected = 12 + 8 * rows * cols
    if len(data) != expected:
        raise TableFormatError(
            f"{path}: payload is {len(data) - 12} bytes, expected {8 * rows * cols}"
        )
    return np.frombuffer(data[12:], dtype="<f8").reshape(rows, cols).copy()


def trm_digest(matrix):
    """sha256 of the TRM payload a matrix would serialize to."""
    m = np.ascontiguousarray(np.asarray(matrix, dtype="<f8"))
    return hashlib.sha256(m.tobytes(order="C")).hexdigest()


def read_pgm(path):
    """Read an 8-bit binary or ASCII PGM into a uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    # Header tokens with '#' comments; stop after maxval (4 tokens).
    while len(tokens) < 4 and i < len(data):
        if data[i : i + 1].isspace():
            i += 1
        elif data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] not in (b"P2", b"P5"):
        raise TableFormatError(f"{path}: not an 8-bit PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise TableFormatError(f"{path}: expected 8-bit PGM, maxval={maxval}")
    if tokens[0] == b"P5":
        raster = data[i + 1 : i + 1 + width * height]
        if len(raster) != width * height:
            raise TableFormatError(f"{path}: truncated raster")
        img = np.frombuffer(raster, dtype=np.uint8)
    else:
        img = np.array(data[i:].split()[: width * height], dtype=np.uint8)
        if img.size != width * height:
            raise TableFormatError(f"{path}: truncated raster")
    return img.reshape(height, width)


def write_pgm16(path, image, vmin, vmax):
    """Write a float image as a 16-bit binary PGM scaled to [vmin, vmax]."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    if not vmax > vmin:
        raise ValueError("need vmax > vmin")
    scaled = np.clip((img - vmin) / (vmax - vmin), 0.0, 1.0)
    words = np.round(scaled * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode())
        fh.write(words.tobytes(order="C"))


def write_mask_pgm(path, mask2d):
    """Write a boolean mask as an 8-bit PGM (255 = member pixel)."""
    m = np.asarray(mask2d, dtype=bool)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode())
        fh.write((m.astype(np.uint8) * 255).tobytes(order="C"))


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, entries):
    """Dump a manifest dict as stable, human-readable JSON."""
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)
