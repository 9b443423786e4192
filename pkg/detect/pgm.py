"""
Binary portable graymap (P5) codec for prediction masks
"""
from pathlib import Path
from typing import Union

import numpy as np

from detect.mask import PredictionMask
from model.errors import MaskFormatError


def _tokens(data: bytes, count: int):
    """First `count` whitespace-separated header tokens plus the offset of the raster"""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MaskFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or not data[pos:pos + 1].isspace():
        raise MaskFormatError("truncated PGM header")
    return tokens, pos + 1


def read_pgm(path: Union[str, Path]) -> PredictionMask:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise MaskFormatError(f"{path}: not a binary PGM (P5) file")
    (magic, w, h, maxval), offset = _tokens(data, 4)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as e:
        raise MaskFormatError(f"{path}: malformed PGM header") from e
    if width <= 0 or height <= 0:
        raise MaskFormatError(f"{path}: invalid size {width}x{height}")
    if not 0 < maxval <= 255:
        raise MaskFormatError(f"{path}: only 8-bit PGM is supported, maxval={maxval}")
    expected = width * height
    raster = data[offset:offset + expected]
    if len(raster) < expected:
        raise MaskFormatError(f"{path}: truncated raster, {len(raster)} of {expected} bytes")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    if maxval != 255:
        if np.any(pixels > maxval):
            raise MaskFormatError(f"{path}: pixel value above maxval {maxval}")
        pixels = np.round(pixels.astype(float) * 255.0 / maxval).astype(np.uint8)
    return PredictionMask(pixels)


def write_pgm(mask: PredictionMask, path: Union[str, Path]) -> None:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(mask.intensities, dtype=np.uint8).tobytes())
