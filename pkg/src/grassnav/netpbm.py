"""Minimal binary netpbm I/O: P5 (8/16-bit PGM) and P6 (8-bit PPM).

Costmap snapshots are written as P5 maxval 255 with raster byte i equal to
grid cell i (row-major, row 0 first). Depth images serialize as P5 maxval
65535 in millimeters (big-endian per the format); segmentation masks as P5
maxval 255 with 0=don't-care, 1=obstacle, 2=traversable.
"""

from __future__ import annotations

import numpy as np

from .camera import DepthImage, SegMask


def _write_header(magic: bytes, width: int, height: int, maxval: int) -> bytes:
    return b"%s\n%d %d\n%d\n" % (magic, width, height, maxval)


def write_pgm8(path, data: np.ndarray) -> None:
    data = np.asarray(data, dtype=np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(_write_header(b"P5", w, h, 255))
        f.write(data.tobytes())


def write_pgm16(path, data: np.ndarray) -> None:
    data = np.asarray(data, dtype=np.uint16)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(_write_header(b"P5", w, h, 65535))
        f.write(data.astype(">u2").tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    rgb = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as f:
        f.write(_write_header(b"P6", w, h, 255))
        f.write(rgb.tobytes())


def _read_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Parse whitespace/comment-separated header integers; returns (values, offset)."""
    values: list[int] = []
    i = 0
    while len(values) < count:
        if i >= len(data):
            raise ValueError("truncated netpbm header")
        ch = data[i : i + 1]
        if ch == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            values.append(int(data[i:j]))
            i = j
    return values, i + 1  # single whitespace after maxval


def read_pgm(path) -> np.ndarray:
    """Read P5 as uint8 (maxval <= 255) or uint16 (larger maxvals)."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    (w, h, maxval), offset = _read_tokens(data[2:], 3)
    raster = data[2 + offset :]
    if maxval <= 255:
        expected = w * h
        if len(raster) < expected:
            raise ValueError("truncated PGM raster")
        return np.frombuffer(raster[:expected], dtype=np.uint8).reshape(h, w)
    expected = w * h * 2
    if len(raster) < expected:
        raise ValueError("truncated PGM raster")
    return np.frombuffer(raster[:expected], dtype=">u2").astype(np.uint16).reshape(h, w)


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM (P6) file")
    (w, h, maxval), offset = _read_tokens(data[2:], 3)
    if maxval != 255:
        raise ValueError("only maxval 255 PPM supported")
    raster = data[2 + offset :]
    expected = w * h * 3
    if len(raster) < expected:
        raise ValueError("truncated PPM raster")
    return np.frombuffer(raster[:expected], dtype=np.uint8).reshape(h, w, 3)


def save_depth_pgm(path, depth: DepthImage) -> None:
    """Depth in millimeters, 16-bit; invalid pixels are 0."""
    mm = np.where(depth.valid, np.clip(depth.depth * 1000.0, 0, 65535), 0.0)
    write_pgm16(path, np.round(mm).astype(np.uint16))


def load_depth_pgm(path, stamp: float = 0.0) -> DepthImage:
    mm = read_pgm(path)
    if mm.dtype != np.uint16:
        raise ValueError("depth PGM must be 16-bit")
    h, w = mm.shape
    return DepthImage(w, h, stamp, mm.astype(np.float64) / 1000.0)


def save_mask_pgm(path, mask: SegMask) -> None:
    write_pgm8(path, mask.classes)


def load_mask_pgm(path, stamp: float = 0.0) -> SegMask:
    classes = read_pgm(path)
    if classes.dtype != np.uint8:
        raise ValueError("mask PGM must be 8-bit")
    if classes.max(initial=0) > 2:
        raise ValueError("mask PGM values must be 0, 1 or 2")
    h, w = classes.shape
    return SegMask(w, h, stamp, classes)
