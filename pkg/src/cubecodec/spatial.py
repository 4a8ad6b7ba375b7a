"""Baseline-JPEG-style lossy coder for a single real-valued plane.

Pipeline: affine-normalize the plane into [0, 255] -> pad to 8-multiples by
edge replication -> per 8x8 block: level shift -128, orthonormal 2-D DCT-II,
scalar quantization (round half away from zero), zigzag -> DC differential
in raster order + AC run-length symbols -> canonical Huffman coding with
the standard luminance tables.  No subsampling anywhere; every lossy step
is confined to quantization (and the float normalization), so the entropy
stage is exactly invertible.

The bitstream is MSB-first and zero-padded to a whole byte.  A plane record
serializes as:

    u32 width | u32 height | u8 quality | f64 norm.offset | f64 norm.scale |
    u32 payload-byte-count | Huffman bitstream
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, CorruptError, ValidationError

# ---------------------------------------------------------------------------
# fixed tables (JPEG Annex K: luminance quantization + typical Huffman)

BASE_LUMA_QUANT = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int32)

# natural (row-major) index -> position in the zigzag sequence
_ZIGZAG_POS = np.array([
    0, 1, 5, 6, 14, 15, 27, 28,
    2, 4, 7, 13, 16, 26, 29, 42,
    3, 8, 12, 17, 25, 30, 41, 43,
    9, 11, 18, 24, 31, 40, 44, 53,
    10, 19, 23, 32, 39, 45, 52, 54,
    20, 22, 33, 38, 46, 51, 55, 60,
    21, 34, 37, 47, 50, 56, 59, 61,
    35, 36, 48, 49, 57, 58, 62, 63,
], dtype=np.int64)
#: ZIGZAG_ORDER[k] = natural flat index of the k-th zigzag element
ZIGZAG_ORDER = np.argsort(_ZIGZAG_POS)

_DC_BITS = (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0)
_DC_VALS = tuple(range(12))

_AC_BITS = (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D)
_AC_VALS = (
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3,
    0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9,
    0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA,
)

_EOB = 0x00
_ZRL = 0xF0


def _build_codes(bits, vals):
    """Canonical Huffman codes from (BITS, HUFFVAL): symbol -> (code, length)."""
    codes = {}
    code = 0
    k = 0
    for i, count in enumerate(bits):
        for _ in range(count):
            codes[vals[k]] = (code, i + 1)
            code += 1
            k += 1
        code <<= 1
    return codes


def _build_decode_lut(codes):
    """16-bit peek lookup: value -> (symbol, code length); length 0 = invalid."""
    sym = np.full(1 << 16, -1, dtype=np.int16)
    length = np.zeros(1 << 16, dtype=np.uint8)
    for symbol, (code, ln) in codes.items():
        start = code << (16 - ln)
        stop = (code + 1) << (16 - ln)
        sym[start:stop] = symbol
        length[start:stop] = ln
    return sym, length


_DC_CODES = _build_codes(_DC_BITS, _DC_VALS)
_AC_CODES = _build_codes(_AC_BITS, _AC_VALS)
_DC_LUT_SYM, _DC_LUT_LEN = _build_decode_lut(_DC_CODES)
_AC_LUT_SYM, _AC_LUT_LEN = _build_decode_lut(_AC_CODES)

# ---------------------------------------------------------------------------
# DCT

def _dct_matrix() -> np.ndarray:
    x = np.arange(8)
    u = x[:, None]
    d = np.cos((2 * x + 1) * u * np.pi / 16.0)
    d[0] *= np.sqrt(1.0 / 2.0)
    return d * 0.5  # rows orthonormal


_DCT = _dct_matrix()


def dct8_forward(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of an 8x8 block."""
    b = np.asarray(block, dtype=np.float64)
    if b.shape != (8, 8):
        raise ArgumentError(f"expected an 8x8 block, got shape {b.shape}")
    return _DCT @ b @ _DCT.T


def dct8_inverse(block: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct8_forward` (transpose of the orthonormal transform)."""
    b = np.asarray(block, dtype=np.float64)
    if b.shape != (8, 8):
        raise ArgumentError(f"expected an 8x8 block, got shape {b.shape}")
    return _DCT.T @ b @ _DCT


def _dct_batch(blocks: np.ndarray) -> np.ndarray:
    return _DCT @ blocks @ _DCT.T


def _idct_batch(coeffs: np.ndarray) -> np.ndarray:
    return _DCT.T @ coeffs @ _DCT


# ---------------------------------------------------------------------------
# quantization

def quality_to_table(base: np.ndarray, quality: int) -> np.ndarray:
    """Scale a base quantization table by the standard JPEG quality mapping."""
    if not isinstance(quality, (int, np.integer)) or not 1 <= quality <= 100:
        raise ArgumentError(f"quality must be an integer in [1, 100], got {quality!r}")
    base = np.asarray(base)
    if base.shape != (8, 8) or np.any(base < 1) or np.any(base > 32767):
        raise ArgumentError("base table must be 8x8 with entries in [1, 32767]")
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    steps = np.floor((base * scale + 50.0) / 100.0)
    return np.clip(steps, 1, 32767).astype(np.int32)


def _quantize(coeffs: np.ndarray, table: np.ndarray) -> np.ndarray:
    scaled = np.abs(coeffs) / table
    return (np.sign(coeffs) * np.floor(scaled + 0.5)).astype(np.int32)


# ---------------------------------------------------------------------------
# entropy stage (bijective on quantized blocks)

class _BitWriter:
    __slots__ = ("acc", "nbits", "out")

    def __init__(self):
        self.acc = 0
        self.nbits = 0
        self.out = bytearray()

    def write(self, code: int, length: int):
        acc = (self.acc << length) | code
        nbits = self.nbits + length
        out = self.out
        while nbits >= 8:
            nbits -= 8
            out.append((acc >> nbits) & 0xFF)
        self.acc = acc & ((1 << nbits) - 1)
        self.nbits = nbits

    def finish(self) -> bytes:
        if self.nbits:
            self.out.append((self.acc << (8 - self.nbits)) & 0xFF)
            self.acc = 0
            self.nbits = 0
        return bytes(self.out)


def _amplitude(value: int) -> tuple[int, int]:
    """JPEG magnitude coding: (bits, size category) for a nonzero value."""
    size = int(value if value > 0 else -value).bit_length()
    bits = value if value > 0 else value + (1 << size) - 1
    return bits, size


def _extend(bits: int, size: int) -> int:
    return bits if bits >= (1 << (size - 1)) else bits - (1 << size) + 1


def entropy_encode_blocks(qblocks: np.ndarray) -> bytes:
    """Pack quantized 8x8 blocks (natural order) into the Huffman bitstream.

    Exactly invertible by :func:`entropy_decode_blocks`; includes the
    zigzag scan and the raster-order DC differential.
    """
    q = np.asarray(qblocks)
    if q.ndim != 3 or q.shape[1:] != (8, 8):
        raise ArgumentError(f"expected (n, 8, 8) blocks, got shape {q.shape}")
    zz = q.reshape(-1, 64)[:, ZIGZAG_ORDER]
    dc = zz[:, 0].astype(np.int64)
    diffs = np.diff(dc, prepend=0)
    writer = _BitWriter()
    write = writer.write
    dc_codes = _DC_CODES
    ac_codes = _AC_CODES
    for i in range(zz.shape[0]):
        diff = int(diffs[i])
        if diff == 0:
            write(*dc_codes[0])
        else:
            bits, size = _amplitude(diff)
            if size > 11:
                raise ValidationError(f"DC difference {diff} exceeds category 11")
            write(*dc_codes[size])
            write(bits, size)
        row = zz[i]
        nz = np.flatnonzero(row[1:]) + 1
        prev = 0
        for pos in nz:
            run = int(pos) - prev - 1
            while run > 15:
                write(*ac_codes[_ZRL])
                run -= 16
            bits, size = _amplitude(int(row[pos]))
            if size > 10:
                raise ValidationError(f"AC coefficient {row[pos]} exceeds category 10")
            write(*ac_codes[(run << 4) | size])
            write(bits, size)
            prev = int(pos)
        if prev != 63:
            write(*ac_codes[_EOB])
    return writer.finish()


def entropy_decode_blocks(payload: bytes, nblocks: int) -> np.ndarray:
    """Exact inverse of :func:`entropy_encode_blocks`.

    Raises :class:`CorruptError` on truncated or invalid bitstreams, or when
    more than 7 padding bits remain after the last block.
    """
    buf = bytes(payload) + b"\x00\x00"
    total_bits = len(payload) * 8
    pos = 0
    zz = np.zeros((nblocks, 64), dtype=np.int32)
    prev_dc = 0
    dc_sym, dc_len = _DC_LUT_SYM, _DC_LUT_LEN
    ac_sym, ac_len = _AC_LUT_SYM, _AC_LUT_LEN

    def peek16(at):
        bi = at >> 3
        window = (buf[bi] << 16) | (buf[bi + 1] << 8) | buf[bi + 2]
        return (window >> (8 - (at & 7))) & 0xFFFF

    for i in range(nblocks):
        v = peek16(pos)
        size = int(dc_sym[v])
        ln = int(dc_len[v])
        if ln == 0 or pos + ln > total_bits:
            raise CorruptError(f"bad DC code in block {i}")
        pos += ln
        if size:
            if pos + size > total_bits:
                raise CorruptError(f"truncated DC amplitude in block {i}")
            bits = peek16(pos) >> (16 - size)
            pos += size
            prev_dc += _extend(bits, size)
        zz[i, 0] = prev_dc
        k = 1
        while k < 64:
            v = peek16(pos)
            sym = int(ac_sym[v])
            ln = int(ac_len[v])
            if ln == 0 or pos + ln > total_bits:
                raise CorruptError(f"bad AC code in block {i}")
            pos += ln
            if sym == _EOB:
                break
            if sym == _ZRL:
                k += 16
                if k > 63:
                    raise CorruptError(f"zero run overflows block {i}")
                continue
            run = sym >> 4
            size = sym & 0xF
            k += run
            if k > 63:
                raise CorruptError(f"coefficient index overflows block {i}")
            if pos + size > total_bits:
                raise CorruptError(f"truncated AC amplitude in block {i}")
            bits = peek16(pos) >> (16 - size)
            pos += size
            zz[i, k] = _extend(bits, size)
            k += 1
    if total_bits - pos >= 8:
        raise CorruptError(f"{total_bits - pos} unread payload bits after last block")
    out = np.zeros((nblocks, 64), dtype=np.int32)
    out[:, ZIGZAG_ORDER] = zz
    return out.reshape(nblocks, 8, 8)


# ---------------------------------------------------------------------------
# plane codec

@dataclass(frozen=True)
class PlaneNorm:
    """Affine map taking plane values into [0, 255]: normalized = (v - offset)/scale."""

    offset: float
    scale: float

    def __post_init__(self):
        if not (np.isfinite(self.offset) and np.isfinite(self.scale) and self.scale > 0):
            raise ValidationError(f"bad normalization offset={self.offset} scale={self.scale}")


_PLANE_HEADER = struct.Struct("<IIBddI")


@dataclass(frozen=True)
class EncodedPlane:
    """One entropy-coded plane plus everything needed to decode it."""

    norm: PlaneNorm
    quality: int
    width: int
    height: int
    payload: bytes

    @property
    def nblocks(self) -> int:
        return ((self.height + 7) // 8) * ((self.width + 7) // 8)

    def to_bytes(self) -> bytes:
        return _PLANE_HEADER.pack(
            self.width, self.height, self.quality,
            self.norm.offset, self.norm.scale, len(self.payload),
        ) + self.payload

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["EncodedPlane", int]:
        """Parse one self-delimiting plane record; returns (plane, next offset)."""
        if offset + _PLANE_HEADER.size > len(data):
            raise CorruptError("truncated plane record header")
        width, height, quality, n_off, n_scale, count = _PLANE_HEADER.unpack_from(data, offset)
        if min(width, height) < 1 or not 1 <= quality <= 100:
            raise CorruptError(f"bad plane record fields w={width} h={height} q={quality}")
        start = offset + _PLANE_HEADER.size
        if start + count > len(data):
            raise CorruptError("truncated plane payload")
        try:
            norm = PlaneNorm(offset=n_off, scale=n_scale)
        except ValidationError as exc:
            raise CorruptError(str(exc)) from None
        plane = cls(norm=norm, quality=quality, width=width, height=height,
                    payload=bytes(data[start:start + count]))
        return plane, start + count


def _to_blocks(padded: np.ndarray) -> np.ndarray:
    h, w = padded.shape
    return padded.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)


def _from_blocks(blocks: np.ndarray, h8: int, w8: int) -> np.ndarray:
    return blocks.reshape(h8 // 8, w8 // 8, 8, 8).transpose(0, 2, 1, 3).reshape(h8, w8)


def encode_plane(plane: np.ndarray, quality: int) -> EncodedPlane:
    """Encode one real-valued plane at the given quality (1..100)."""
    p = np.asarray(plane, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
        raise ValidationError(f"plane must be 2-D and non-empty, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("plane contains non-finite values")
    table = quality_to_table(BASE_LUMA_QUANT, quality)
    height, width = p.shape
    mn = float(p.min())
    mx = float(p.max())
    norm = PlaneNorm(offset=mn, scale=(mx - mn) / 255.0 if mx > mn else 1.0)
    normalized = (p - norm.offset) / norm.scale
    pad_h = (-height) % 8
    pad_w = (-width) % 8
    padded = np.pad(normalized, ((0, pad_h), (0, pad_w)), mode="edge")
    blocks = _to_blocks(padded)
    coeffs = _dct_batch(blocks - 128.0)
    qblocks = _quantize(coeffs, table)
    payload = entropy_encode_blocks(qblocks)
    return EncodedPlane(norm=norm, quality=int(quality),
                        width=width, height=height, payload=payload)


def decode_plane(enc: EncodedPlane) -> np.ndarray:
    """Decode a plane record back to its (H, W) float64 values (no clamping)."""
    table = quality_to_table(BASE_LUMA_QUANT, enc.quality)
    qblocks = entropy_decode_blocks(enc.payload, enc.nblocks)
    coeffs = qblocks.astype(np.float64) * table
    blocks = _idct_batch(coeffs) + 128.0
    h8 = ((enc.height + 7) // 8) * 8
    w8 = ((enc.width + 7) // 8) * 8
    padded = _from_blocks(blocks, h8, w8)
    normalized = padded[: enc.height, : enc.width]
    return normalized * enc.norm.scale + enc.norm.offset
