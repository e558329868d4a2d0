"""Grayscale image I/O: PGM (P2/P5) and 8-bit grayscale PNG.

Masks follow the convention that any pixel value strictly greater than zero
is occupied - a deliberate choice over 128-thresholding, which would silently
drop low-valued mask encodings.

The PNG codec is self-contained (``zlib`` only): it writes non-interlaced
8-bit grayscale and reads the same, accepting all five standard scanline
filters so masks produced by other tools load too.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError, UnsupportedColorTypeError, ValidationError

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True, eq=False)
class MaskImage:
    """Binary occupancy image; ``pixels[v, u]`` is row v, column u."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=bool)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValidationError(f"mask must be a non-empty 2-D array, got shape {px.shape}")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def _coerce_gray(image) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValidationError(f"grayscale image must be non-empty 2-D, got shape {img.shape}")
    if img.dtype == bool:
        return np.where(img, np.uint8(255), np.uint8(0))
    if img.dtype != np.uint8:
        raise ValidationError(f"grayscale image must be uint8 or bool, got {img.dtype}")
    return img


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------

def _pgm_tokens(data: bytes, count: int):
    """Yield the first `count` header tokens, skipping '#' comments.

    Returns (tokens, offset just past the single whitespace after the last one).
    """
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise ParseError("truncated PGM header", offset=i)
        c = data[i : i + 1]
        if c == b"#":
            nl = data.find(b"\n", i)
            i = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
            if len(tokens) == count:
                if i < len(data) and data[i : i + 1].isspace():
                    i += 1  # exactly one whitespace separates header from raster
    return tokens, i


def _read_pgm(data: bytes) -> np.ndarray:
    magic = data[:2]
    tokens, offset = _pgm_tokens(data[2:], 3)
    offset += 2
    try:
        width, height, maxval = (int(tok) for tok in tokens)
    except ValueError:
        raise ParseError(f"non-numeric PGM header fields {tokens!r}", offset=2) from None
    if width <= 0 or height <= 0:
        raise ParseError(f"bad PGM dimensions {width}x{height}", offset=2)
    if not 0 < maxval <= 255:
        raise ParseError(f"unsupported PGM maxval {maxval} (only 8-bit supported)", offset=2)

    if magic == b"P5":
        raster = data[offset : offset + width * height]
        if len(raster) < width * height:
            raise ParseError(
                f"P5 raster truncated: expected {width * height} bytes, got {len(raster)}",
                offset=offset,
            )
        return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()

    values = data[offset:].split()
    if len(values) != width * height:
        raise ParseError(
            f"P2 raster has {len(values)} samples, expected {width * height}", offset=offset
        )
    try:
        img = np.array(values, dtype=np.int64)
    except ValueError:
        raise ParseError("non-numeric P2 raster sample", offset=offset) from None
    if img.min() < 0 or img.max() > maxval:
        raise ParseError("P2 sample outside [0, maxval]", offset=offset)
    return img.astype(np.uint8).reshape(height, width)


def _write_pgm(image: np.ndarray, path: Path) -> None:
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + image.tobytes())


# ---------------------------------------------------------------------------
# PNG
# ---------------------------------------------------------------------------

def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def _write_png(image: np.ndarray, path: Path) -> None:
    height, width = image.shape
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    filtered = np.zeros((height, width + 1), dtype=np.uint8)
    filtered[:, 1:] = image
    idat = zlib.compress(filtered.tobytes(), 6)
    path.write_bytes(
        _PNG_SIGNATURE
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", idat)
        + _png_chunk(b"IEND", b"")
    )


def _unfilter_rows(raw: bytes, width: int, height: int) -> np.ndarray:
    stride = width + 1
    if len(raw) < stride * height:
        raise ParseError(f"decompressed PNG data too short ({len(raw)} bytes)")
    rows = np.frombuffer(raw[: stride * height], dtype=np.uint8).reshape(height, stride)
    out = np.empty((height, width), dtype=np.uint8)
    prev = np.zeros(width, dtype=np.uint8)
    for r in range(height):
        ftype = int(rows[r, 0])
        line = rows[r, 1:]
        if ftype == 0:
            recon = line.copy()
        elif ftype == 1:  # Sub: running sum along the row, mod 256
            recon = (np.cumsum(line, dtype=np.uint64) & 0xFF).astype(np.uint8)
        elif ftype == 2:  # Up
            recon = line + prev
        elif ftype == 3:  # Average
            recon = np.empty(width, dtype=np.uint8)
            left = 0
            for i in range(width):
                recon[i] = (int(line[i]) + ((left + int(prev[i])) >> 1)) & 0xFF
                left = int(recon[i])
        elif ftype == 4:  # Paeth
            recon = np.empty(width, dtype=np.uint8)
            left = 0
            for i in range(width):
                up = int(prev[i])
                ul = int(prev[i - 1]) if i > 0 else 0
                p = left + up - ul
                pa, pb, pc = abs(p - left), abs(p - up), abs(p - ul)
                if pa <= pb and pa <= pc:
                    pred = left
                elif pb <= pc:
                    pred = up
                else:
                    pred = ul
                recon[i] = (int(line[i]) + pred) & 0xFF
                left = int(recon[i])
        else:
            raise ParseError(f"unknown PNG filter type {ftype} on row {r}")
        out[r] = recon
        prev = recon
    return out


def _read_png(data: bytes) -> np.ndarray:
    if not data.startswith(_PNG_SIGNATURE):
        raise ParseError("bad PNG signature", offset=0)
    offset = len(_PNG_SIGNATURE)
    width = height = None
    idat = bytearray()
    seen_end = False
    while offset + 8 <= len(data):
        length, tag = struct.unpack(">I4s", data[offset : offset + 8])
        chunk_end = offset + 8 + length + 4
        if chunk_end > len(data):
            raise ParseError(f"truncated PNG chunk {tag!r}", offset=offset)
        payload = data[offset + 8 : offset + 8 + length]
        (crc,) = struct.unpack(">I", data[chunk_end - 4 : chunk_end])
        if crc != (zlib.crc32(tag + payload) & 0xFFFFFFFF):
            raise ParseError(f"CRC mismatch in PNG chunk {tag!r}", offset=offset)
        if tag == b"IHDR":
            if length != 13:
                raise ParseError("malformed IHDR", offset=offset)
            width, height, depth, color, comp, filt, interlace = struct.unpack(
                ">IIBBBBB", payload
            )
            if color != 0:
                raise UnsupportedColorTypeError(
                    f"PNG color type {color} not supported; masks must be grayscale"
                )
            if depth != 8:
                raise ParseError(f"PNG bit depth {depth} not supported (8 only)")
            if comp != 0 or filt != 0:
                raise ParseError("nonstandard PNG compression/filter method")
            if interlace != 0:
                raise ParseError("interlaced PNG not supported")
        elif tag == b"IDAT":
            idat.extend(payload)
        elif tag == b"IEND":
            seen_end = True
            break
        offset = chunk_end
    if width is None or height is None:
        raise ParseError("PNG lacks IHDR chunk")
    if not seen_end:
        raise ParseError("PNG lacks IEND chunk")
    if width < 1 or height < 1:
        raise ParseError(f"bad PNG dimensions {width}x{height}")
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise ParseError(f"PNG IDAT decompression failed: {exc}") from None
    return _unfilter_rows(raw, width, height)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def read_grayscale(path) -> np.ndarray:
    """Read a PGM (P2/P5) or 8-bit grayscale PNG into a (H, W) uint8 array."""
    data = Path(path).read_bytes()
    if data.startswith(_PNG_SIGNATURE):
        return _read_png(data)
    if data[:2] in (b"P2", b"P5"):
        return _read_pgm(data)
    if data[:2] in (b"P3", b"P6"):
        raise UnsupportedColorTypeError("color PPM images are not supported")
    raise ParseError("unrecognized image format (expected PGM or PNG)", offset=0)


def read_mask(path) -> MaskImage:
    """Read a binary mask; any pixel value > 0 counts as occupied."""
    return MaskImage(read_grayscale(path) > 0)


def write_grayscale(image, path) -> None:
    """Write an 8-bit grayscale image as PGM (P5) or PNG, chosen by extension."""
    img = _coerce_gray(image)
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        _write_pgm(img, path)
    elif suffix == ".png":
        _write_png(img, path)
    else:
        raise ValidationError(f"unsupported image extension {suffix!r} (use .pgm or .png)")
