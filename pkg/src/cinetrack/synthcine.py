"""Synthetic cine phantom: a breathing ellipse on a smooth textured background.

Frame ``t``::

    phase   = 2*pi*t / period
    centre  = (cx, cy + round(amplitude * sin(phase)))
    axes    = semi_axes * (1 + deformation * sin(phase + pi/2))
    clean   = background + texture(x, y) + contrast * inside(t)
    frame   = clean * (1 + drift * t) + N(0, noise_sigma)

A pixel is inside when its centre lies inside the analytic ellipse (the
boundary counts as inside). The displacement is rounded to whole pixels so
that, without deformation, every frame rasterizes the identical shape. The texture is seeded, Gaussian-filtered white
noise with unit std scaled by ``texture``; it is fixed across frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .errors import ValidationError
from .seqio import Frame, Mask, SequenceMeta, write_sequence


@dataclass(frozen=True)
class PhantomSpec:
    size: int | tuple[int, int] = 128  # square side or (height, width)
    frames: int = 100
    center: tuple[float, float] | None = None  # (x, y); image centre by default
    semi_axes: tuple[float, float] = (14.0, 10.0)  # (along x, along y)
    amplitude: float = 0.0
    period: float = 20.0
    deformation: float = 0.0
    noise_sigma: float = 0.0
    drift: float = 0.0
    contrast: float = 400.0
    background: float = 1000.0
    texture: float = 150.0
    texture_scale: float = 0.08  # texture smoothing sigma as a fraction of the image side
    pixel_spacing: float | None = None
    seed: int = 0
    bit_depth: int = 16

    def __post_init__(self):
        h, w = self.shape
        if h < 16 or w < 16:
            raise ValidationError("phantom must be at least 16x16")
        if self.frames < 1:
            raise ValidationError("frames must be >= 1")
        if self.period < 2:
            raise ValidationError("period must be >= 2")
        if min(self.semi_axes) <= 0:
            raise ValidationError("semi-axes must be positive")
        if not 0 <= self.deformation < 1:
            raise ValidationError("deformation must be in [0, 1)")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        cx, cy = self.centre
        ax, ay = self.semi_axes
        grow = 1.0 + self.deformation
        amp = math.ceil(abs(self.amplitude))  # bounds the rounded displacement
        if (cx - ax * grow < 0 or cx + ax * grow > w - 1
                or cy - amp - ay * grow < 0 or cy + amp + ay * grow > h - 1):
            raise ValidationError(
                f"ellipse (centre {cx:.1f},{cy:.1f}, axes {ax},{ay}, amplitude {amp}) "
                f"leaves the {w}x{h} image"
            )

    @property
    def shape(self):
        if isinstance(self.size, int):
            return (self.size, self.size)
        return tuple(self.size)

    @property
    def centre(self):
        if self.center is not None:
            return tuple(float(c) for c in self.center)
        h, w = self.shape
        return ((w - 1) / 2.0, (h - 1) / 2.0)

    def ellipse_at(self, t: int):
        """``(cx, cy, ax, ay)`` of the tumour in frame ``t``."""
        phase = 2.0 * math.pi * t / self.period
        cx, cy = self.centre
        scale = 1.0 + self.deformation * math.sin(phase + math.pi / 2)
        return (cx, cy + round(self.amplitude * math.sin(phase)),
                self.semi_axes[0] * scale, self.semi_axes[1] * scale)


def rasterize_ellipse(shape, cx, cy, ax, ay) -> np.ndarray:
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
    return ((((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2) <= 1.0).astype(np.uint8)


def generate(spec: PhantomSpec):
    """Return ``(meta, frames, masks)`` for ``spec``; deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    h, w = spec.shape
    tex = ndi.gaussian_filter(rng.standard_normal((h, w)), spec.texture_scale * min(h, w),
                              mode="reflect")
    sd = tex.std()
    tex = tex / sd if sd > 0 else tex
    base = spec.background + spec.texture * tex
    top = 2 ** spec.bit_depth - 1
    meta = SequenceMeta(w, h, spec.frames, spec.pixel_spacing, spec.bit_depth)

    frames, masks = [], []
    for t in range(spec.frames):
        lab = rasterize_ellipse((h, w), *spec.ellipse_at(t))
        img = (base + spec.contrast * lab) * (1.0 + spec.drift * t)
        if spec.noise_sigma > 0:
            img = img + rng.normal(0.0, spec.noise_sigma, (h, w))
        px = np.clip(np.round(img), 0, top).astype(np.uint16 if spec.bit_depth == 16 else np.uint8)
        frames.append(Frame(t, px, meta))
        masks.append(Mask(t, lab))
    return meta, frames, masks


def write_phantom(path, spec: PhantomSpec):
    """Generate and write a sequence directory with ground-truth masks."""
    meta, frames, masks = generate(spec)
    write_sequence(path, meta, frames, masks)
    return meta, frames, masks
