"""On-disk formats: binary PPM images, text point clouds, and text
correspondence lists.

PPM files are the 8-bit binary flavor (P6, maxval 255) with the exact
layout: magic ``P6``, whitespace, width, height, maxval, one whitespace
byte, then raw RGB rows. The reader additionally tolerates ``#`` comments
inside the header, as the format allows.

Point clouds are whitespace-separated text, one point per line, one column
per coordinate; lines starting with ``#`` are comments. Correspondence
lists are ``source_index target_index weight`` per line. Floats are written
with ``repr`` so reading them back reproduces the exact values.
"""

import numpy as np

from .applications import Correspondence, RgbImage
from .errors import FileFormatError

__all__ = [
    "write_ppm",
    "read_ppm",
    "write_point_cloud",
    "read_point_cloud",
    "write_correspondences",
    "read_correspondences",
]


def write_ppm(path, image):
    """Write an RgbImage as binary 8-bit PPM (P6, maxval 255).

    Channels are scaled by 255 and rounded to nearest.
    """
    levels = np.rint(image.pixels * 255.0)
    data = np.clip(levels, 0, 255).astype(np.uint8)
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def _read_header_tokens(fh, count):
    # PPM header tokens are separated by whitespace; '#' starts a comment
    # that runs to end of line. Exactly one whitespace byte follows the
    # final token before the raster.
    tokens = []
    token = b""
    while len(tokens) < count:
        ch = fh.read(1)
        if not ch:
            raise FileFormatError("unexpected end of PPM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            ch = b" "
        if ch.isspace():
            if token:
                tokens.append(token)
                token = b""
        else:
            token += ch
    return tokens


def read_ppm(path):
    """Read a binary 8-bit PPM (P6, maxval 255) into an RgbImage."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
        if magic != b"P6":
            raise FileFormatError(f"not a P6 PPM file: magic {magic!r}")
        width_s, height_s, maxval_s = _read_header_tokens(fh, 3)
        try:
            width, height, maxval = int(width_s), int(height_s), int(maxval_s)
        except ValueError as exc:
            raise FileFormatError("malformed PPM header") from exc
        if width < 1 or height < 1:
            raise FileFormatError("PPM dimensions must be positive")
        if maxval != 255:
            raise FileFormatError(
                f"only 8-bit PPM (maxval 255) is supported, got {maxval}"
            )
        raster = fh.read(width * height * 3)
    if len(raster) != width * height * 3:
        raise FileFormatError("truncated PPM raster")
    data = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    pixels = (data / 255.0).reshape(height * width, 3)
    return RgbImage(width=width, height=height, pixels=pixels)


def write_point_cloud(path, points):
    points = np.asarray(points, dtype=np.float64)
    with open(path, "w", encoding="ascii") as fh:
        for row in points:
            fh.write(" ".join(repr(float(c)) for c in row))
            fh.write("\n")


def _data_lines(path):
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                yield stripped


def read_point_cloud(path):
    """Read a whitespace-separated point cloud; '#' lines are comments."""
    rows = []
    width = None
    for line in _data_lines(path):
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise FileFormatError(f"bad point line: {line!r}") from exc
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FileFormatError(
                f"inconsistent column count: {len(row)} vs {width}"
            )
        rows.append(row)
    if not rows:
        raise FileFormatError("point cloud file has no data lines")
    return np.array(rows, dtype=np.float64)


def write_correspondences(path, correspondences):
    """Write 'source_index target_index weight' lines."""
    with open(path, "w", encoding="ascii") as fh:
        for c in correspondences:
            fh.write(f"{c.source_index} {c.target_index} {repr(c.weight)}\n")


def read_correspondences(path):
    out = []
    for line in _data_lines(path):
        parts = line.split()
        if len(parts) != 3:
            raise FileFormatError(f"bad correspondence line: {line!r}")
        try:
            out.append(
                Correspondence(
                    source_index=int(parts[0]),
                    target_index=int(parts[1]),
                    weight=float(parts[2]),
                )
            )
        except ValueError as exc:
            raise FileFormatError(f"bad correspondence line: {line!r}") from exc
    return out
