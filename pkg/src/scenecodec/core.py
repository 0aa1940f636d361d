"""Shared domain types: images, bitstreams, rate accounting, raster I/O.

The bitstream container is byte-exact:

    magic   "CMC1"          4 bytes ASCII
    version 1               1 byte
    codec_id                1 byte
    codebook_id             4 bytes little-endian unsigned
    payload_bit_length      4 bytes little-endian unsigned
    payload                 ceil(payload_bit_length / 8) bytes

Bits are packed MSB-first within each byte; pad bits in the final payload
byte are zero. Raster interchange is binary PPM (P6) with maxval 255.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, TruncationError, UnsupportedCodecError

MAGIC = b"CMC1"
CONTAINER_VERSION = 1
HEADER_SIZE = 14


class Codec(enum.IntEnum):
    CMC_TEXT = 0
    BASELINE_DCT = 1


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit RGB raster. ``pixels`` is a read-only (height, width, 3) array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise ValueError("pixel samples must be uint8")
        if px.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel array shape {px.shape} does not match "
                f"{self.height}x{self.width}x3"
            )
        px = px.copy() if px.flags.writeable else px
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr) -> "Image":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError("expected an array of shape (height, width, 3)")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)

    @classmethod
    def filled(cls, width: int, height: int, color) -> "Image":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:, :] = color
        return cls(width=width, height=height, pixels=arr)

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.pixels, other.pixels)
        )

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()


@dataclass(frozen=True)
class Bitstream:
    """Entropy-coded payload plus the header fields of the container."""

    codec_id: Codec
    codebook_id: int
    payload_bit_length: int
    payload: bytes

    def __post_init__(self):
        if not 0 <= self.codebook_id < 2**32:
            raise ValueError("codebook_id must fit an unsigned 32-bit field")
        if not 0 <= self.payload_bit_length < 2**32:
            raise ValueError("payload_bit_length must fit an unsigned 32-bit field")
        expected = (self.payload_bit_length + 7) // 8
        if len(self.payload) != expected:
            raise ValueError(
                f"payload holds {len(self.payload)} bytes, bit length implies {expected}"
            )
        pad = 8 * len(self.payload) - self.payload_bit_length
        if pad and self.payload and self.payload[-1] & ((1 << pad) - 1):
            raise ValueError("pad bits after payload_bit_length must be zero")
        object.__setattr__(self, "codec_id", Codec(self.codec_id))


@dataclass(frozen=True)
class RDPoint:
    """One operating point: average rate in bytes against one metric value."""

    rate_bytes: float
    distortion: float
    metric_name: str
    codec_label: str

    def __post_init__(self):
        if not self.rate_bytes > 0:
            raise ValueError("rate_bytes must be positive")


def compression_ratio(raw_width: int, raw_height: int, compressed_bytes: float) -> float:
    """Raw size over compressed size, with raw = width * height * 3 bytes."""
    if raw_width <= 0 or raw_height <= 0:
        raise ValueError("image dimensions must be positive")
    if compressed_bytes <= 0:
        raise ValueError("compressed size must be positive")
    return (raw_width * raw_height * 3) / compressed_bytes


def serialize_bitstream(b: Bitstream) -> bytes:
    out = bytearray(MAGIC)
    out.append(CONTAINER_VERSION)
    out.append(int(b.codec_id))
    out += b.codebook_id.to_bytes(4, "little")
    out += b.payload_bit_length.to_bytes(4, "little")
    out += b.payload
    return bytes(out)


def deserialize_bitstream(data: bytes) -> Bitstream:
    """Exact inverse of :func:`serialize_bitstream`.

    Raises FormatError for a bad magic/version or trailing bytes,
    TruncationError when the payload is shorter than the declared bit
    length, and UnsupportedCodecError for unknown codec ids.
    """
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        if data[: len(MAGIC)] != MAGIC[: len(data)]:
            raise FormatError("bad container magic")
        raise TruncationError("container header incomplete")
    if data[:4] != MAGIC:
        raise FormatError("bad container magic")
    if data[4] != CONTAINER_VERSION:
        raise FormatError(f"unsupported container version {data[4]}")
    codec_raw = data[5]
    try:
        codec = Codec(codec_raw)
    except ValueError:
        raise UnsupportedCodecError(f"unknown codec id {codec_raw}") from None
    codebook_id = int.from_bytes(data[6:10], "little")
    bit_length = int.from_bytes(data[10:14], "little")
    payload = data[HEADER_SIZE:]
    need = (bit_length + 7) // 8
    if len(payload) < need:
        raise TruncationError(
            f"payload declares {bit_length} bits but only {len(payload)} bytes present"
        )
    if len(payload) > need:
        raise FormatError("trailing bytes after payload")
    pad = 8 * need - bit_length
    if pad and payload and payload[-1] & ((1 << pad) - 1):
        raise FormatError("nonzero pad bits in final payload byte")
    return Bitstream(codec, codebook_id, bit_length, payload)


class BitWriter:
    """Packs codes MSB-first into a byte buffer."""

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._nbits = 0

    def write(self, code: int, length: int):
        self._acc = (self._acc << length) | (code & ((1 << length) - 1))
        self._nbits += length
        while self._nbits >= 8:
            self._nbits -= 8
            self._buf.append((self._acc >> self._nbits) & 0xFF)
        self._acc &= (1 << self._nbits) - 1

    @property
    def bit_length(self) -> int:
        return 8 * len(self._buf) + self._nbits

    def getvalue(self) -> bytes:
        """Payload bytes with zero padding in the final byte."""
        out = bytes(self._buf)
        if self._nbits:
            out += bytes([(self._acc << (8 - self._nbits)) & 0xFF])
        return out


class BitReader:
    """Reads MSB-first bits from a payload, bounded by a bit length."""

    def __init__(self, payload: bytes, bit_length: int):
        if bit_length > 8 * len(payload):
            raise TruncationError("bit length exceeds payload size")
        self._data = payload
        self._limit = bit_length
        self.pos = 0

    @property
    def remaining(self) -> int:
        return self._limit - self.pos

    def read_bit(self) -> int:
        if self.pos >= self._limit:
            raise TruncationError("bitstream exhausted")
        bit = (self._data[self.pos >> 3] >> (7 - (self.pos & 7))) & 1
        self.pos += 1
        return bit

    def read_bits(self, n: int) -> int:
        if self.pos + n > self._limit:
            raise TruncationError("bitstream exhausted")
        value = 0
        pos = self.pos
        data = self._data
        for _ in range(n):
            value = (value << 1) | ((data[pos >> 3] >> (7 - (pos & 7))) & 1)
            pos += 1
        self.pos = pos
        return value


def write_ppm(img: Image, path):
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (img.width, img.height))
        fh.write(img.tobytes())


def read_ppm(path) -> Image:
    """Reads a binary PPM (P6, maxval 255). Header comments are skipped."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P6":
        raise FormatError("not a P6 PPM file")
    fields = []
    i = 2
    while len(fields) < 3:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise TruncationError("PPM header incomplete")
        fields.append(data[start:i])
    if i >= len(data):
        raise TruncationError("PPM header incomplete")
    i += 1  # single whitespace byte after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise FormatError("malformed PPM header") from None
    if maxval != 255:
        raise FormatError(f"unsupported PPM maxval {maxval}")
    if width <= 0 or height <= 0:
        raise FormatError("non-positive PPM dimensions")
    raster = data[i : i + 3 * width * height]
    if len(raster) < 3 * width * height:
        raise TruncationError("PPM raster shorter than header implies")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return Image(width=width, height=height, pixels=arr)
