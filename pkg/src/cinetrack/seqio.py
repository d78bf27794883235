"""Sequence and mask I/O.

A sequence lives in a directory::

    meta.json          {"width", "height", "frame_count", "bit_depth", "pixel_spacing_mm"?}
    frame_00000.pgm    binary PGM (P5), 8- or 16-bit (big-endian)
    frame_00001.pgm
    ...
    mask_00000.pgm     optional ground truth / predictions, 8-bit 0/255

Masks are binarized on read with a ``> 127`` threshold.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._grid import boundary
from .errors import FormatError, ValidationError

FRAME_PATTERN = "frame_{:05d}.pgm"
MASK_PATTERN = "mask_{:05d}.pgm"
_FRAME_RE = re.compile(r"^frame_(\d{5})\.pgm$")
_MASK_RE = re.compile(r"^mask_(\d{5})\.pgm$")


@dataclass(frozen=True)
class SequenceMeta:
    width: int
    height: int
    frame_count: int
    pixel_spacing: Optional[float] = None
    bit_depth: int = 16

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValidationError(f"frame size {self.width}x{self.height} below 16x16")
        if self.frame_count < 1:
            raise ValidationError("frame_count must be >= 1")
        if self.pixel_spacing is not None and not self.pixel_spacing > 0:
            raise ValidationError("pixel_spacing must be positive")
        if self.bit_depth not in (8, 16):
            raise ValidationError(f"bit_depth must be 8 or 16, got {self.bit_depth}")

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def spacing(self) -> float:
        """Pixel spacing in mm, 1.0 when unknown."""
        return 1.0 if self.pixel_spacing is None else float(self.pixel_spacing)

    def to_json(self) -> dict:
        d = {
            "width": self.width,
            "height": self.height,
            "frame_count": self.frame_count,
            "bit_depth": self.bit_depth,
        }
        if self.pixel_spacing is not None:
            d["pixel_spacing_mm"] = self.pixel_spacing
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SequenceMeta":
        try:
            return cls(
                width=int(d["width"]),
                height=int(d["height"]),
                frame_count=int(d["frame_count"]),
                pixel_spacing=d.get("pixel_spacing_mm"),
                bit_depth=int(d.get("bit_depth", 16)),
            )
        except KeyError as e:
            raise FormatError(f"meta.json missing key {e.args[0]!r}") from None


@dataclass(frozen=True, eq=False)
class Frame:
    """One grayscale frame; ``index`` is 0-based."""

    index: int
    pixels: np.ndarray
    meta: Optional[SequenceMeta] = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValidationError("frame pixels must be 2-D")
        if self.meta is not None:
            if px.shape != self.meta.shape:
                raise ValidationError(
                    f"frame {self.index}: shape {px.shape} != meta {self.meta.shape}"
                )
            if px.size and (px.min() < 0 or px.max() >= 2 ** self.meta.bit_depth):
                raise ValidationError(f"frame {self.index}: intensity outside bit depth")

    @property
    def shape(self):
        return self.pixels.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.pixels, dtype=dtype)


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary label grid (0 background, 1 tumour)."""

    index: int
    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ValidationError("mask must be 2-D")
        if lab.dtype != bool and lab.size and not ((lab == 0) | (lab == 1)).all():
            raise ValidationError("mask labels must be 0 or 1")
        object.__setattr__(self, "labels", lab.astype(np.uint8, copy=False))

    @property
    def shape(self):
        return self.labels.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.labels, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.labels, other.labels)

    def any(self) -> bool:
        return bool(self.labels.any())


# --- PGM -----------------------------------------------------------------

def _read_token(buf: bytes, pos: int):
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header")
    return buf[start:pos], pos


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a binary P5 PGM. Returns ``(pixels, maxval)``."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {buf[:2]!r})")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise FormatError(f"{path}: bad header field {tok!r}") from None
    width, height, maxval = fields
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: maxval {maxval} out of range")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    nbytes = width * height * dtype.itemsize
    data = buf[pos:pos + nbytes]
    if len(data) != nbytes:
        raise FormatError(f"{path}: expected {nbytes} data bytes, found {len(data)}")
    px = np.frombuffer(data, dtype=dtype).reshape(height, width)
    return px.astype(np.uint16 if maxval > 255 else np.uint8), maxval


def write_pgm(path, pixels, maxval: Optional[int] = None) -> None:
    """Write a 2-D non-negative integer array as binary PGM."""
    px = np.asarray(pixels)
    if px.ndim != 2:
        raise ValidationError("PGM data must be 2-D")
    if maxval is None:
        maxval = 255 if px.dtype == np.uint8 else 65535
    if px.size and (px.min() < 0 or px.max() > maxval):
        raise ValidationError("pixel values exceed maxval")
    dtype = ">u2" if maxval > 255 else "u1"
    header = b"P5\n%d %d\n%d\n" % (px.shape[1], px.shape[0], maxval)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(px.astype(dtype).tobytes())


# --- masks ---------------------------------------------------------------

def write_mask(mask, path) -> None:
    labels = np.asarray(mask)
    if not np.isin(labels, (0, 1)).all():
        raise ValidationError("mask labels must be 0 or 1")
    write_pgm(path, labels.astype(np.uint8) * np.uint8(255), maxval=255)


def read_mask(path, index: int = 0) -> Mask:
    px, maxval = read_pgm(path)
    if maxval > 255:
        # rescale wide masks onto the 8-bit threshold
        px = (px.astype(np.uint32) * 255 // maxval)
    return Mask(index, (px > 127).astype(np.uint8))


# --- sequences -----------------------------------------------------------

def _numbered(directory: Path, regex) -> list[int]:
    out = []
    for p in directory.iterdir():
        m = regex.match(p.name)
        if m:
            out.append(int(m.group(1)))
    return sorted(out)


def _check_contiguous(indices, count, kind):
    for i in range(count):
        if i >= len(indices) or indices[i] != i:
            raise FormatError(f"missing {kind} file at index {i}")
    if len(indices) > count:
        raise FormatError(f"unexpected {kind} file at index {indices[count]}")


def read_meta(path) -> SequenceMeta:
    meta_path = Path(path) / "meta.json"
    if not meta_path.exists():
        raise FormatError(f"{path}: no meta.json")
    try:
        return SequenceMeta.from_json(json.loads(meta_path.read_text()))
    except json.JSONDecodeError as e:
        raise FormatError(f"{meta_path}: {e}") from None


def read_sequence(path) -> tuple[SequenceMeta, list[Frame]]:
    """Load ``meta.json`` and every ``frame_%05d.pgm`` in index order."""
    path = Path(path)
    meta = read_meta(path)
    indices = _numbered(path, _FRAME_RE)
    _check_contiguous(indices, meta.frame_count, "frame")
    frames = []
    for i in range(meta.frame_count):
        px, _ = read_pgm(path / FRAME_PATTERN.format(i))
        frames.append(Frame(i, px, meta))
    return meta, frames


def read_masks(path, count: Optional[int] = None) -> list[Mask]:
    """Load ``mask_%05d.pgm`` files numbered ``0..count-1``.

    When ``count`` is omitted every contiguous mask file is read.
    """
    path = Path(path)
    indices = _numbered(path, _MASK_RE)
    if count is None:
        count = len(indices)
    _check_contiguous(indices, count, "mask")
    return [read_mask(path / MASK_PATTERN.format(i), index=i) for i in range(count)]


def write_sequence(path, meta: SequenceMeta, frames, masks=None) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    frames = list(frames)
    if len(frames) != meta.frame_count:
        raise ValidationError(f"{len(frames)} frames but meta says {meta.frame_count}")
    (path / "meta.json").write_text(json.dumps(meta.to_json(), indent=2) + "\n")
    maxval = 2 ** meta.bit_depth - 1
    for i, fr in enumerate(frames):
        px = np.asarray(fr)
        if px.shape != meta.shape:
            raise ValidationError(f"frame {i}: shape {px.shape} != meta {meta.shape}")
        write_pgm(path / FRAME_PATTERN.format(i), px, maxval=maxval)
    if masks is not None:
        write_masks(path, masks)


def write_masks(path, masks) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, m in enumerate(masks):
        write_mask(m, path / MASK_PATTERN.format(i))


# --- overlays ------------------------------------------------------------

OVERLAY_COLOR = (255, 0, 0)


def overlay_rgb(frame, mask) -> np.ndarray:
    """Intensity-scaled frame as RGB with the mask boundary painted red."""
    px = np.asarray(frame, dtype=np.float64)
    lab = np.asarray(mask)
    if px.shape != lab.shape:
        raise ValidationError(f"frame shape {px.shape} != mask shape {lab.shape}")
    lo, hi = px.min(), px.max()
    if hi > lo:
        gray = np.round((px - lo) * (255.0 / (hi - lo))).astype(np.uint8)
    else:
        gray = np.zeros(px.shape, np.uint8)
    rgb = np.repeat(gray[..., None], 3, axis=2)
    rgb[boundary(lab)] = OVERLAY_COLOR
    return rgb


def render_overlay(frame, mask, out) -> None:
    """Write :func:`overlay_rgb` as a binary PPM (P6)."""
    rgb = overlay_rgb(frame, mask)
    with open(out, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (rgb.shape[1], rgb.shape[0]))
        fh.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if buf[:2] != b"P6":
        raise FormatError(f"{path}: not a binary PPM")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        fields.append(int(tok))
    w, h, _ = fields
    return np.frombuffer(buf[pos + 1:pos + 1 + w * h * 3], np.uint8).reshape(h, w, 3)
