"""Binary 16-bit PGM (P5, maxval 65535, big-endian samples) reading and writing."""
from __future__ import annotations

import re
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError

MAXVAL = 65535
DIFF_OFFSET = 32768
DIFF_COMMENT = "diff = value - 32768 (clamped to [-32768, 32767])"


def encode(image: np.ndarray, comments: Sequence[str] = ()) -> bytes:
    img = np.asarray(image)
    if img.ndim != 2:
        raise DomainError("PGM images must be 2-D")
    if img.size and (img.min() < 0 or img.max() > MAXVAL):
        raise DomainError("PGM sample out of range [0, 65535]")
    h, w = img.shape
    header = "P5\n" + "".join(f"# {c}\n" for c in comments) + f"{w} {h}\n{MAXVAL}\n"
    return header.encode("ascii") + img.astype(">u2").tobytes()


def write(path, image: np.ndarray, comments: Sequence[str] = ()) -> None:
    Path(path).write_bytes(encode(image, comments))


def decode(data: bytes) -> tuple[np.ndarray, list[str]]:
    """Return (image, comments). Accepts 8- and 16-bit P5 files."""
    pos = 0
    tokens: list[str] = []
    comments: list[str] = []
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n|\S+)").match(data, pos)
        if m is None:
            raise DomainError("truncated PGM header")
        tok = m.group(1)
        pos = m.end()
        if tok.startswith(b"#"):
            comments.append(tok[1:].strip().decode("ascii", "replace"))
        else:
            tokens.append(tok.decode("ascii", "replace"))
    if tokens[0] != "P5":
        raise DomainError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise DomainError("malformed PGM header") from None
    pos += 1  # single whitespace byte after maxval
    dtype = ">u2" if maxval > 255 else "u1"
    n = w * h * np.dtype(dtype).itemsize
    raw = data[pos : pos + n]
    if len(raw) != n:
        raise DomainError(f"PGM payload has {len(raw)} bytes, expected {n}")
    return np.frombuffer(raw, dtype=dtype).reshape(h, w).astype(np.int64), comments


def read(path) -> tuple[np.ndarray, list[str]]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DomainError(f"cannot read {path}: {e.strerror}") from None
    return decode(data)


def encode_diff(values: np.ndarray) -> np.ndarray:
    return np.clip(values, -DIFF_OFFSET, DIFF_OFFSET - 1) + DIFF_OFFSET


def decode_diff(image: np.ndarray) -> np.ndarray:
    return np.asarray(image, dtype=np.int64) - DIFF_OFFSET


def comment_value(comments: Sequence[str], key: str):
    """Value of a ``key=value`` comment, or None."""
    for c in comments:
        k, sep, v = c.partition("=")
        if sep and k.strip() == key:
            return v.strip()
    return None
