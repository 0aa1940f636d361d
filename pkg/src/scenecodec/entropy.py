"""Lossless text coding with corpus-trained canonical Huffman codes.

The alphabet is the 256 byte values plus one end-of-text marker (EOT,
symbol index 256). Training applies add-one smoothing over all 257
symbols, so any byte sequence stays codable regardless of the corpus.
Codebooks are canonical: codewords are fully determined by the code
lengths, assigned in (length, symbol index) order, which makes streams
reproducible across runs and machines.

Codebook file format (little-endian):

    magic   "CBK1"              4 bytes
    version 1                   1 byte
    counts                      257 x uint64, smoothed symbol counts
    codebook_id                 uint32, FNV-1a over the counts block
"""

from __future__ import annotations

import heapq
import math
from typing import Iterable

from .core import BitReader, BitWriter, Bitstream, Codec
from .errors import (
    FormatError,
    TrailingGarbageError,
    TruncationError,
    WrongCodebookError,
)

EOT = 256
ALPHABET_SIZE = 257

CODEBOOK_MAGIC = b"CBK1"
CODEBOOK_VERSION = 1

_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619

# Decode accelerator: one table lookup resolves codes up to this length.
_FAST_BITS = 10


def fnv1a32(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def _counts_block(counts) -> bytes:
    return b"".join(int(c).to_bytes(8, "little") for c in counts)


def _huffman_lengths(counts) -> list[int]:
    """Code length per symbol; 0 for symbols with zero count.

    Ties are broken toward the node created earliest (leaves in symbol
    order first), so identical counts always give identical lengths.
    """
    heap = [(c, i, i) for i, c in enumerate(counts) if c > 0]
    if len(heap) < 2:
        raise ValueError("Huffman coding needs at least two symbols with mass")
    heapq.heapify(heap)
    parent: dict[int, int] = {}
    serial = ALPHABET_SIZE
    while len(heap) > 1:
        w1, _, n1 = heapq.heappop(heap)
        w2, _, n2 = heapq.heappop(heap)
        parent[n1] = serial
        parent[n2] = serial
        heapq.heappush(heap, (w1 + w2, serial, serial))
        serial += 1
    lengths = [0] * len(counts)
    for i, c in enumerate(counts):
        if c <= 0:
            continue
        depth = 0
        node = i
        while node in parent:
            node = parent[node]
            depth += 1
        lengths[i] = depth
    return lengths


class Codebook:
    """Canonical Huffman code over symbol indices 0..256.

    The text codec interprets indices 0..255 as bytes and 256 as EOT;
    the block-DCT codec reuses the same engine for its token alphabet.
    """

    def __init__(self, counts, lengths, codes, codebook_id):
        self.counts = tuple(int(c) for c in counts)
        self.lengths = tuple(lengths)
        self.codes = tuple(codes)
        self.codebook_id = codebook_id
        self._build_decode_tables()

    @classmethod
    def from_counts(cls, counts) -> "Codebook":
        counts = tuple(int(c) for c in counts)
        if len(counts) != ALPHABET_SIZE:
            raise ValueError(f"expected {ALPHABET_SIZE} symbol counts")
        if any(c < 0 for c in counts):
            raise ValueError("symbol counts must be non-negative")
        lengths = _huffman_lengths(counts)
        codes = cls._canonical_codes(lengths)
        return cls(counts, lengths, codes, fnv1a32(_counts_block(counts)))

    @staticmethod
    def _canonical_codes(lengths) -> list[int]:
        order = sorted(
            (i for i, ln in enumerate(lengths) if ln > 0),
            key=lambda i: (lengths[i], i),
        )
        codes = [0] * len(lengths)
        code = 0
        prev_len = 0
        for sym in order:
            code <<= lengths[sym] - prev_len
            codes[sym] = code
            prev_len = lengths[sym]
            code += 1
        return codes

    def _build_decode_tables(self):
        by_length: dict[int, list[int]] = {}
        for sym, ln in enumerate(self.lengths):
            if ln > 0:
                by_length.setdefault(ln, []).append(sym)
        self.max_length = max(by_length) if by_length else 0
        self._first_code = [0] * (self.max_length + 1)
        self._first_index = [0] * (self.max_length + 1)
        self._count = [0] * (self.max_length + 1)
        self._canon_symbols = []
        index = 0
        for ln in range(1, self.max_length + 1):
            syms = sorted(by_length.get(ln, []))
            self._count[ln] = len(syms)
            self._first_index[ln] = index
            self._first_code[ln] = self.codes[syms[0]] if syms else 0
            self._canon_symbols.extend(syms)
            index += len(syms)
        # (symbol, length) for every _FAST_BITS-bit window whose prefix is
        # a codeword of length <= _FAST_BITS; None forces the slow path.
        fast_bits = min(_FAST_BITS, self.max_length)
        self._fast_bits = fast_bits
        table = [None] * (1 << fast_bits)
        for sym, ln in enumerate(self.lengths):
            if 0 < ln <= fast_bits:
                base = self.codes[sym] << (fast_bits - ln)
                for fill in range(1 << (fast_bits - ln)):
                    table[base | fill] = (sym, ln)
        self._fast_table = table

    def symbol_bits(self, symbol: int) -> tuple[int, int]:
        ln = self.lengths[symbol]
        if ln == 0:
            raise ValueError(f"symbol {symbol} has no code in this codebook")
        return self.codes[symbol], ln

    def decode_symbol(self, reader: BitReader) -> int:
        pos = reader.pos
        fb = self._fast_bits
        if reader.remaining >= fb:
            byte_i = pos >> 3
            bit_off = pos & 7
            end = byte_i + ((bit_off + fb + 7) >> 3)
            chunk = int.from_bytes(reader._data[byte_i:end], "big")
            window = (chunk >> (8 * (end - byte_i) - bit_off - fb)) & ((1 << fb) - 1)
            hit = self._fast_table[window]
            if hit is not None:
                reader.pos = pos + hit[1]
                return hit[0]
        code = 0
        for ln in range(1, self.max_length + 1):
            code = (code << 1) | reader.read_bit()
            offset = code - self._first_code[ln]
            if 0 <= offset < self._count[ln]:
                return self._canon_symbols[self._first_index[ln] + offset]
        raise FormatError("bit pattern matches no codeword")

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return self.counts == other.counts and self.lengths == other.lengths


def train_codebook(documents: Iterable[bytes | str]) -> Codebook:
    """Builds a smoothed codebook from an iterable of text documents.

    Byte counts are accumulated over all documents, EOT is counted once
    per document, and add-one smoothing is applied over the full
    257-symbol alphabet. Identical corpora give identical codebook ids.
    """
    counts = [0] * ALPHABET_SIZE
    for doc in documents:
        if isinstance(doc, str):
            doc = doc.encode("utf-8")
        for byte in doc:
            counts[byte] += 1
        counts[EOT] += 1
    smoothed = [c + 1 for c in counts]
    return Codebook.from_counts(smoothed)


def encode_text(text: bytes | str, cb: Codebook) -> Bitstream:
    """Huffman-codes ``text`` and terminates it with the EOT codeword."""
    if isinstance(text, str):
        text = text.encode("utf-8")
    writer = BitWriter()
    for byte in text:
        code, ln = cb.symbol_bits(byte)
        writer.write(code, ln)
    code, ln = cb.symbol_bits(EOT)
    writer.write(code, ln)
    return Bitstream(
        codec_id=Codec.CMC_TEXT,
        codebook_id=cb.codebook_id,
        payload_bit_length=writer.bit_length,
        payload=writer.getvalue(),
    )


def decode_text(b: Bitstream, cb: Codebook) -> bytes:
    """Exact inverse of :func:`encode_text` under the same codebook."""
    if b.codec_id != Codec.CMC_TEXT:
        raise FormatError(f"bitstream codec {b.codec_id!r} is not a text stream")
    if b.codebook_id != cb.codebook_id:
        raise WrongCodebookError(
            f"stream codebook {b.codebook_id:#010x} does not match "
            f"{cb.codebook_id:#010x}"
        )
    reader = BitReader(b.payload, b.payload_bit_length)
    out = bytearray()
    while True:
        try:
            sym = cb.decode_symbol(reader)
        except TruncationError:
            raise TruncationError("bitstream exhausted before EOT") from None
        if sym == EOT:
            break
        out.append(sym)
    if reader.remaining:
        raise TrailingGarbageError(
            f"{reader.remaining} meaningful bits remain after EOT"
        )
    return bytes(out)


def codebook_entropy(cb: Codebook) -> float:
    """Shannon entropy in bits per symbol over the codebook's counts."""
    total = sum(cb.counts)
    return -sum(
        (c / total) * math.log2(c / total) for c in cb.counts if c > 0
    )


def expected_code_length(cb: Codebook) -> float:
    """Average codeword length in bits under the codebook's own counts."""
    total = sum(cb.counts)
    return sum(c * ln for c, ln in zip(cb.counts, cb.lengths)) / total


def write_codebook(cb: Codebook, path):
    with open(path, "wb") as fh:
        fh.write(CODEBOOK_MAGIC)
        fh.write(bytes([CODEBOOK_VERSION]))
        block = _counts_block(cb.counts)
        fh.write(block)
        fh.write(cb.codebook_id.to_bytes(4, "little"))


def read_codebook(path) -> Codebook:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CODEBOOK_MAGIC:
        raise FormatError("bad codebook magic")
    expected_size = 4 + 1 + 8 * ALPHABET_SIZE + 4
    if len(data) < expected_size:
        raise TruncationError("codebook file incomplete")
    if data[4] != CODEBOOK_VERSION:
        raise FormatError(f"unsupported codebook version {data[4]}")
    block = data[5 : 5 + 8 * ALPHABET_SIZE]
    counts = [
        int.from_bytes(block[8 * i : 8 * i + 8], "little")
        for i in range(ALPHABET_SIZE)
    ]
    stored_id = int.from_bytes(data[expected_size - 4 : expected_size], "little")
    cb = Codebook.from_counts(counts)
    if cb.codebook_id != stored_id:
        raise FormatError("codebook id does not match its counts block")
    return cb
