"""Minimal PGM (portable graymap) reader/writer for fixtures and datasets.

Images are exchanged as float arrays in [0, 1]; files use 8-bit binary
(P5) or ASCII (P2) graymaps with maxval 255.
"""

from __future__ import annotations

import numpy as np


def read_pgm(path) -> np.ndarray:
    """Read a P2/P5 grayscale image, returning floats in [0, 1]."""
    with open(path, "rb") as f:
        data = f.read()

    tokens = []
    i = 0
    # tokenize the header, honoring '#' comments
    while len(tokens) < 4 and i < len(data):
        if data[i:i + 1].isspace():
            i += 1
        elif data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a P2/P5 PGM file")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval <= 0 or maxval > 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    if tokens[0] == b"P5":
        i += 1  # single whitespace byte after maxval
        raster = np.frombuffer(data[i:i + width * height], dtype=np.uint8)
        if raster.size != width * height:
            raise ValueError(f"{path}: truncated raster")
    else:
        raster = np.array(data[i:].split(), dtype=float)
        if raster.size != width * height:
            raise ValueError(f"{path}: expected {width * height} samples")
    img = raster.astype(float).reshape(height, width) / maxval
    return img


def write_pgm(path, image) -> None:
    """Write floats in [0, 1] as an 8-bit binary (P5) graymap."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    quantized = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        f.write(quantized.tobytes())
