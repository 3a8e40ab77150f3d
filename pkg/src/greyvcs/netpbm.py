"""Minimal netpbm reader/writer for PBM (P1, P4) and PGM (P2, P5).

Pillow reads these formats but only writes the binary variants, and the ASCII
forms are wanted for human-readable fixtures, so both directions live here.
PBM bits follow netpbm: 1 is black.  PGM samples are 8-bit (maxval <= 255).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .boolmat import BIT, ParameterError


class NetpbmError(ValueError):
    """Malformed or unsupported netpbm data."""


_TOKEN = re.compile(rb"#[^\n]*|\S+")


def _header(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` header tokens, skipping comments; return them and the offset after."""
    tokens, pos = [], 0
    while len(tokens) < count:
        m = _TOKEN.search(data, pos)
        if m is None:
            raise NetpbmError("truncated header")
        pos = m.end()
        if not m.group().startswith(b"#"):
            tokens.append(m.group())
    return tokens, pos + 1  # exactly one whitespace byte precedes raster data


def _int(tok: bytes) -> int:
    try:
        return int(tok)
    except ValueError:
        raise NetpbmError(f"expected an integer, got {tok!r}") from None


def read(path: str | Path) -> tuple[str, np.ndarray]:
    """Return ``(magic, array)``: uint8 0/1 bits for PBM, uint8 samples for PGM."""
    return decode(Path(path).read_bytes())


def decode(data: bytes) -> tuple[str, np.ndarray]:
    magic = data[:2].decode("ascii", "replace")
    if magic in ("P1", "P4"):
        (_, w, h), pos = _header(data, 3)
        width, height, maxval = _int(w), _int(h), 1
    elif magic in ("P2", "P5"):
        (_, w, h, mv), pos = _header(data, 4)
        width, height, maxval = _int(w), _int(h), _int(mv)
        if not 0 < maxval <= 255:
            raise NetpbmError(f"unsupported maxval {maxval}")
    else:
        raise NetpbmError(f"not a PBM/PGM file (magic {magic!r})")
    if width <= 0 or height <= 0:
        raise NetpbmError(f"bad dimensions {width}x{height}")

    if magic == "P4":
        stride = (width + 7) // 8
        if len(data) - pos < stride * height:
            raise NetpbmError("truncated P4 raster")
        raw = np.frombuffer(data, dtype=np.uint8, count=stride * height, offset=pos)
        arr = np.unpackbits(raw.reshape(height, stride), axis=1)[:, :width]
    elif magic == "P5":
        if len(data) - pos < width * height:
            raise NetpbmError("truncated P5 raster")
        arr = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos).reshape(height, width)
    else:
        body = data[pos - 1:]
        body = re.sub(rb"#[^\n]*", b"", body)
        if magic == "P1":
            vals = [int(c) - 48 for c in body if c in b"01"]
            if any(c not in b"01 \t\r\n" for c in body):
                raise NetpbmError("P1 raster contains characters other than 0/1")
        else:
            vals = [_int(t) for t in body.split()]
        if len(vals) < width * height:
            raise NetpbmError(f"raster has {len(vals)} samples, expected {width * height}")
        arr = np.array(vals[: width * height], dtype=np.int64).reshape(height, width)
        if arr.max(initial=0) > maxval:
            raise NetpbmError(f"sample exceeds maxval {maxval}")
    arr = arr.astype(BIT)
    if magic in ("P2", "P5") and maxval != 255:
        arr = (arr.astype(np.uint32) * 255 // maxval).astype(BIT)
    return magic, arr


def encode_pbm(bits: np.ndarray, ascii: bool = False) -> bytes:
    bits = np.asarray(bits)
    if bits.ndim != 2:
        raise ParameterError(f"PBM needs a 2-D raster, got shape {bits.shape}")
    height, width = bits.shape
    if ascii:
        # netpbm asks for lines of at most 70 characters
        lines = []
        for row in bits:
            text = "".join("1" if b else "0" for b in row)
            lines.extend(text[i:i + 70] for i in range(0, max(len(text), 1), 70))
        return f"P1\n{width} {height}\n".encode() + "\n".join(lines).encode() + b"\n"
    packed = np.packbits(bits.astype(bool), axis=1)
    return f"P4\n{width} {height}\n".encode() + packed.tobytes()


def encode_pgm(samples: np.ndarray, ascii: bool = False) -> bytes:
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise ParameterError(f"PGM needs a 2-D raster, got shape {samples.shape}")
    if samples.size and (samples.min() < 0 or samples.max() > 255):
        raise ParameterError("PGM samples must lie in [0, 255]")
    height, width = samples.shape
    if ascii:
        body = "\n".join(" ".join(str(int(v)) for v in row) for row in samples)
        return f"P2\n{width} {height}\n255\n{body}\n".encode()
    return f"P5\n{width} {height}\n255\n".encode() + samples.astype(np.uint8).tobytes()


def write_pbm(path: str | Path, bits: np.ndarray, ascii: bool = False) -> None:
    Path(path).write_bytes(encode_pbm(bits, ascii))


def write_pgm(path: str | Path, samples: np.ndarray, ascii: bool = False) -> None:
    Path(path).write_bytes(encode_pgm(samples, ascii))


def read_pbm(path: str | Path) -> np.ndarray:
    magic, arr = read(path)
    if magic not in ("P1", "P4"):
        raise NetpbmError(f"{path}: expected a PBM file, got {magic}")
    return arr


def read_pgm(path: str | Path) -> np.ndarray:
    magic, arr = read(path)
    if magic not in ("P2", "P5"):
        raise NetpbmError(f"{path}: expected a PGM file, got {magic}")
    return arr
