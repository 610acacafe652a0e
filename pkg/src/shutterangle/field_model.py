"""Dense vector fields, grayscale frames and their on-disk formats.

Vector fields (optical flow and linear blur kernel maps alike) use the
Middlebury ``.flo`` container::

    bytes 0-3    magic "PIEH" (float32 202021.25, little-endian)
    bytes 4-7    width  (int32 LE)
    bytes 8-11   height (int32 LE)
    bytes 12-    width*height interleaved (u, v) float32 LE pairs, row-major

Frames are 8-bit binary PGM (``P5``) with maxval 255.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError, ParameterError, TruncationError

FLO_MAGIC = b"PIEH"
FLO_HEADER_SIZE = 12
MAX_DIMENSION = 16384

_FLO_DTYPE = np.dtype("<f4")


@dataclass(frozen=True, eq=False)
class Vec2Field:
    """Per-pixel 2-vector field in pixel units.

    ``data`` has shape ``(height, width, 2)``; ``data[y, x] == (u, v)``.
    The array is copied to float64 and made read-only on construction.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ParameterError(f"field data must have shape (H, W, 2), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ParameterError(f"field dimensions must be positive, got {arr.shape[:2]}")
        if not np.all(np.isfinite(arr)):
            raise DataError("field contains non-finite components", _first_bad_pixel(arr))
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def constant(cls, width: int, height: int, vector) -> "Vec2Field":
        data = np.empty((height, width, 2))
        data[...] = np.asarray(vector, dtype=np.float64)
        return cls(data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    @property
    def u(self) -> np.ndarray:
        return self.data[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.data[..., 1]

    def __eq__(self, other):
        if not isinstance(other, Vec2Field):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def __mul__(self, scale: float) -> "Vec2Field":
        return Vec2Field(self.data * scale)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Vec2Field(width={self.width}, height={self.height})"


@dataclass(frozen=True, eq=False)
class Frame:
    """Grayscale image with intensities in [0, 1], shape ``(height, width)``."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ParameterError(f"frame must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise DataError("frame intensities must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"Frame(width={self.width}, height={self.height})"


def _first_bad_pixel(arr: np.ndarray) -> tuple[int, int]:
    bad = ~np.isfinite(arr).all(axis=-1)
    y, x = np.unravel_index(int(np.argmax(bad)), bad.shape)
    return int(x), int(y)


def _check_dims(width: int, height: int, max_dim: int):
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}")
    if width > max_dim or height > max_dim:
        raise FormatError(f"dimensions {width}x{height} exceed the cap of {max_dim}")


def read_vector_field(buf: bytes, max_dim: int = MAX_DIMENSION) -> Vec2Field:
    """Parse a ``.flo`` byte string.

    Raises:
        FormatError: bad magic, absurd dimensions or trailing bytes.
        TruncationError: payload shorter than the header announces.
        DataError: a NaN/Inf component; ``pixel`` is the first offender.
    """
    buf = bytes(buf)
    if len(buf) < FLO_HEADER_SIZE:
        if len(buf) >= 4 and buf[:4] != FLO_MAGIC:
            raise FormatError(f"bad magic {buf[:4]!r}, expected {FLO_MAGIC!r}")
        raise TruncationError(FLO_HEADER_SIZE, len(buf), "header")
    if buf[:4] != FLO_MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {FLO_MAGIC!r}")
    width, height = struct.unpack_from("<ii", buf, 4)
    _check_dims(width, height, max_dim)

    expected = FLO_HEADER_SIZE + 8 * width * height
    if len(buf) < expected:
        raise TruncationError(expected, len(buf))
    if len(buf) > expected:
        raise FormatError(f"{len(buf) - expected} trailing bytes after field payload")

    data = np.frombuffer(buf, dtype=_FLO_DTYPE, offset=FLO_HEADER_SIZE)
    data = data.reshape(height, width, 2)
    finite = np.isfinite(data)
    if not finite.all():
        x, y = _first_bad_pixel(data)
        raise DataError(f"non-finite component at pixel (x={x}, y={y})", (x, y))
    return Vec2Field(data)


def write_vector_field(field: Vec2Field) -> bytes:
    """Serialize ``field`` to ``.flo`` bytes (components stored as float32)."""
    header = FLO_MAGIC + struct.pack("<ii", field.width, field.height)
    return header + field.data.astype(_FLO_DTYPE).tobytes(order="C")


def load_vector_field(path, max_dim: int = MAX_DIMENSION) -> Vec2Field:
    with open(path, "rb") as fh:
        return read_vector_field(fh.read(), max_dim=max_dim)


def save_vector_field(path, field: Vec2Field):
    with open(path, "wb") as fh:
        fh.write(write_vector_field(field))


# PGM header: magic, width, height, maxval, each separated by whitespace
# with optional '#' comments, then exactly one whitespace byte.
_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def read_frame(buf: bytes, max_dim: int = MAX_DIMENSION) -> Frame:
    """Parse a binary PGM (``P5``, maxval 255) into a :class:`Frame`."""
    buf = bytes(buf)
    tokens = []
    pos = 0
    for _ in range(4):
        m = _PGM_TOKEN.match(buf, pos)
        if m is None:
            raise FormatError("incomplete PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FormatError(f"unsupported PGM magic {tokens[0][:8]!r}, expected b'P5'")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("non-integer PGM header field") from None
    _check_dims(width, height, max_dim)
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}, expected 255")
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise TruncationError(pos + 1 + width * height, len(buf), "raster")
    pos += 1

    expected = pos + width * height
    if len(buf) < expected:
        raise TruncationError(expected, len(buf), "raster")
    raster = np.frombuffer(buf, dtype=np.uint8, count=width * height, offset=pos)
    return Frame(raster.reshape(height, width) / 255.0)


def quantize_frame(frame: Frame) -> np.ndarray:
    """8-bit codes of ``frame``: ``floor(p * 255 + 0.5)``."""
    return np.floor(frame.pixels * 255.0 + 0.5).astype(np.uint8)


def write_frame(frame: Frame) -> bytes:
    header = b"P5\n%d %d\n255\n" % (frame.width, frame.height)
    return header + quantize_frame(frame).tobytes()


def load_frame(path, max_dim: int = MAX_DIMENSION) -> Frame:
    with open(path, "rb") as fh:
        return read_frame(fh.read(), max_dim=max_dim)


def save_frame(path, frame: Frame):
    with open(path, "wb") as fh:
        fh.write(write_frame(frame))
