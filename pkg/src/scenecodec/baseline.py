"""JPEG-like baseline codec: 8x8 block DCT, scaled quantization, zigzag,
run-length tokens, canonical Huffman.

This is a self-contained comparison codec, not JPEG interchange. It runs
4:4:4 on RGB directly, pads to block multiples by edge replication, and
Huffman-codes (run, size) tokens with a codebook trained once on a fixed
calibration image set and shipped as package data.

Payload layout (inside the container payload, byte-aligned header first):

    quality          1 byte
    original width   4 bytes little-endian unsigned
    original height  4 bytes little-endian unsigned
    token bits       channel-major, blocks in raster order

Per block the zigzag coefficient vector becomes tokens:

    EOB              symbol 0, rest of block is zero (always emitted)
    ZRL              symbol 1, a run of 16 zeros before a nonzero
    RS(run, size)    symbol 2 + run*12 + (size-1), run in 0..15,
                     size in 1..12, followed by `size` raw value bits
                     (JPEG-style one's-complement magnitude coding)
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import BitReader, BitWriter, Bitstream, Codec, Image
from .entropy import ALPHABET_SIZE, Codebook, read_codebook
from .errors import FormatError, TruncationError

BLOCK = 8

DEFAULT_QUALITIES = (10, 20, 30, 40, 50, 60, 70, 80, 90)

# Conventional luminance quantization table.
BASE_QUANT_MATRIX = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)

TOKEN_EOB = 0
TOKEN_ZRL = 1
MAX_RUN = 15
MAX_SIZE = 12
TOKEN_COUNT = 2 + (MAX_RUN + 1) * MAX_SIZE  # 194 symbols

_CALIBRATION_COUNT = 10
_CALIBRATION_SIZE = 128


def _dct_matrix() -> np.ndarray:
    k = np.arange(BLOCK)
    c = np.cos((2 * k[None, :] + 1) * k[:, None] * np.pi / (2 * BLOCK))
    c *= np.sqrt(2.0 / BLOCK)
    c[0, :] = np.sqrt(1.0 / BLOCK)
    return c


_DCT = _dct_matrix()


def _zigzag_order() -> np.ndarray:
    # odd diagonals walk down-left (row ascending), even ones up-right
    order = sorted(
        ((u, v) for u in range(BLOCK) for v in range(BLOCK)),
        key=lambda p: (p[0] + p[1], p[0] if (p[0] + p[1]) % 2 else -p[0]),
    )
    return np.array([u * BLOCK + v for u, v in order], dtype=np.int64)


ZIGZAG = _zigzag_order()
UNZIGZAG = np.argsort(ZIGZAG)


def dct8x8_forward(block) -> np.ndarray:
    """Orthonormal 2-D DCT-II of one 8x8 block."""
    block = np.asarray(block, dtype=np.float64)
    if block.shape != (BLOCK, BLOCK):
        raise ValueError(f"expected an {BLOCK}x{BLOCK} block")
    return _DCT @ block @ _DCT.T


def dct8x8_inverse(coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (BLOCK, BLOCK):
        raise ValueError(f"expected an {BLOCK}x{BLOCK} block")
    return _DCT.T @ coeffs @ _DCT


@dataclass(frozen=True)
class QuantizerConfig:
    """Quality-scaled quantization matrix (quality 50 is the base table)."""

    quality: int
    base: np.ndarray = field(default_factory=lambda: BASE_QUANT_MATRIX.copy())

    def __post_init__(self):
        if not 1 <= self.quality <= 100:
            raise ValueError("quality must be in 1..100")

    @property
    def effective(self) -> np.ndarray:
        q = self.quality
        scale = 50.0 / q if q < 50 else (100.0 - q) / 50.0
        return np.clip(np.floor(self.base * scale + 0.5), 1, 255)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _blocks_of(channel: np.ndarray):
    """Edge-pads a channel to block multiples and returns
    (blocks (n, 8, 8) in raster order, block rows, block cols)."""
    h, w = channel.shape
    pad_h = (-h) % BLOCK
    pad_w = (-w) % BLOCK
    if pad_h or pad_w:
        channel = np.pad(channel, ((0, pad_h), (0, pad_w)), mode="edge")
    hb, wb = channel.shape[0] // BLOCK, channel.shape[1] // BLOCK
    return (
        channel.reshape(hb, BLOCK, wb, BLOCK).swapaxes(1, 2).reshape(-1, BLOCK, BLOCK),
        hb,
        wb,
    )


def _tokenize_block(zz: np.ndarray):
    """Yields (symbol, value_bits, value_bit_count) for one zigzag vector."""
    nz = np.nonzero(zz)[0]
    pos = 0
    for idx in nz:
        run = int(idx) - pos
        while run > MAX_RUN:
            yield TOKEN_ZRL, 0, 0
            run -= MAX_RUN + 1
        level = int(zz[idx])
        size = level.bit_length() if level > 0 else (-level).bit_length()
        if size > MAX_SIZE:
            raise ValueError(f"coefficient level {level} exceeds the token range")
        bits = level if level > 0 else level + (1 << size) - 1
        yield 2 + run * MAX_SIZE + (size - 1), bits, size
        pos = int(idx) + 1
    yield TOKEN_EOB, 0, 0


def _quantized_blocks(img: Image, steps: np.ndarray):
    """Per channel: (quantized zigzag int array (n, 64), hb, wb)."""
    flat_steps = steps.reshape(-1)
    for ch in range(3):
        channel = img.pixels[:, :, ch].astype(np.float64)
        blocks, hb, wb = _blocks_of(channel)
        coeffs = np.einsum("ij,njk,lk->nil", _DCT, blocks, _DCT, optimize=True)
        q = _round_half_away(coeffs.reshape(-1, BLOCK * BLOCK) / flat_steps)
        yield q[:, ZIGZAG].astype(np.int64), hb, wb


def encode_image(img: Image, cfg: QuantizerConfig, cb: Codebook | None = None) -> Bitstream:
    """Encodes an RGB image with the block-DCT pipeline."""
    if img.width <= 0 or img.height <= 0:
        raise ValueError("image must be non-empty")
    if cb is None:
        cb = default_token_codebook()
    writer = BitWriter()
    writer.write(cfg.quality, 8)
    for byte in img.width.to_bytes(4, "little") + img.height.to_bytes(4, "little"):
        writer.write(byte, 8)
    steps = cfg.effective
    for zz, _, _ in _quantized_blocks(img, steps):
        for block in zz:
            for symbol, bits, nbits in _tokenize_block(block):
                code, ln = cb.symbol_bits(symbol)
                writer.write(code, ln)
                if nbits:
                    writer.write(bits, nbits)
    return Bitstream(
        codec_id=Codec.BASELINE_DCT,
        codebook_id=cb.codebook_id,
        payload_bit_length=writer.bit_length,
        payload=writer.getvalue(),
    )


def decode_image(
    b: Bitstream, cfg: QuantizerConfig | None = None, cb: Codebook | None = None
) -> Image:
    """Inverse of :func:`encode_image`; dequantizes, inverts the DCT,
    clamps to [0, 255], and crops the padding."""
    if b.codec_id != Codec.BASELINE_DCT:
        raise FormatError(f"bitstream codec {b.codec_id!r} is not baseline_dct")
    if cb is None:
        cb = default_token_codebook()
    reader = BitReader(b.payload, b.payload_bit_length)
    quality = reader.read_bits(8)
    width = int.from_bytes(bytes(reader.read_bits(8) for _ in range(4)), "little")
    height = int.from_bytes(bytes(reader.read_bits(8) for _ in range(4)), "little")
    if not 1 <= quality <= 100:
        raise FormatError(f"payload quality byte {quality} out of range")
    if width == 0 or height == 0 or width * height > 2**28:
        raise FormatError("implausible image dimensions in payload")
    if cfg is not None and cfg.quality != quality:
        raise FormatError(
            f"stream was encoded at quality {quality}, config says {cfg.quality}"
        )
    steps = QuantizerConfig(quality).effective.reshape(-1)
    hb = (height + BLOCK - 1) // BLOCK
    wb = (width + BLOCK - 1) // BLOCK
    n_blocks = hb * wb
    out = np.empty((height, width, 3), dtype=np.uint8)
    for ch in range(3):
        zz = np.zeros((n_blocks, BLOCK * BLOCK), dtype=np.float64)
        for bi in range(n_blocks):
            pos = 0
            while True:
                symbol = cb.decode_symbol(reader)
                if symbol == TOKEN_EOB:
                    break
                if symbol == TOKEN_ZRL:
                    pos += MAX_RUN + 1
                    if pos > BLOCK * BLOCK:
                        raise FormatError("zero run overflows the block")
                    continue
                run, size = divmod(symbol - 2, MAX_SIZE)
                size += 1
                pos += run
                if pos >= BLOCK * BLOCK:
                    raise FormatError("coefficient index overflows the block")
                raw = reader.read_bits(size)
                level = raw if raw >= (1 << (size - 1)) else raw - (1 << size) + 1
                zz[bi, pos] = level
                pos += 1
        coeffs = (zz[:, UNZIGZAG] * steps).reshape(-1, BLOCK, BLOCK)
        pixels = np.einsum("ji,njk,kl->nil", _DCT, coeffs, _DCT, optimize=True)
        plane = (
            pixels.reshape(hb, wb, BLOCK, BLOCK)
            .swapaxes(1, 2)
            .reshape(hb * BLOCK, wb * BLOCK)
        )
        out[:, :, ch] = np.clip(np.floor(plane + 0.5), 0, 255)[:height, :width]
    if reader.remaining:
        raise FormatError(f"{reader.remaining} meaningful bits after the last block")
    return Image(width=width, height=height, pixels=out)


def calibration_images() -> list[Image]:
    """Fixed set of ten synthetic photo-like rasters.

    Deterministic closed-form patterns (gradients, sinusoids, radial
    blobs) at 128x128; used to train the shipped token codebook and as
    the corpus for the codec monotonicity checks.
    """
    side = _CALIBRATION_SIZE
    y, x = np.mgrid[0:side, 0:side].astype(np.float64) / side
    images = []
    for i in range(_CALIBRATION_COUNT):
        f1, f2 = 2.0 + i, 3.0 + 1.5 * i
        base = (
            110
            + 70 * np.sin(2 * np.pi * f1 * x + 0.7 * i)
            + 45 * np.cos(2 * np.pi * f2 * (y + 0.13 * i))
        )
        blob = 85 * np.exp(
            -(((x - 0.3 - 0.05 * i) ** 2 + (y - 0.6 + 0.04 * i) ** 2) / 0.02)
        )
        ramp = 60 * (x * (i + 1) % 1.0)
        arr = np.empty((side, side, 3), dtype=np.uint8)
        arr[:, :, 0] = np.clip(base + blob, 0, 255)
        arr[:, :, 1] = np.clip(base * 0.8 + ramp, 0, 255)
        arr[:, :, 2] = np.clip(255 - base + 0.5 * blob, 0, 255)
        images.append(Image.from_array(arr))
    return images


def train_token_codebook(images, qualities=DEFAULT_QUALITIES) -> Codebook:
    """Token statistics over the given images and qualities, add-one
    smoothed over the 194 token symbols."""
    counts = [0] * ALPHABET_SIZE
    for img in images:
        for q in qualities:
            steps = QuantizerConfig(q).effective
            for zz, _, _ in _quantized_blocks(img, steps):
                for block in zz:
                    for symbol, _, _ in _tokenize_block(block):
                        counts[symbol] += 1
    for s in range(TOKEN_COUNT):
        counts[s] += 1
    return Codebook.from_counts(counts)


@lru_cache(maxsize=1)
def default_token_codebook() -> Codebook:
    """The shipped token codebook fixture."""
    ref = importlib.resources.files("scenecodec").joinpath("data/dct_tokens.cbk")
    with importlib.resources.as_file(ref) as path:
        return read_codebook(path)
