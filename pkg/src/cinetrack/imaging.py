"""Frame preprocessing: z-score normalization, ROI crop/resize and its inverse,
plus deterministic affine / intensity transforms used for robustness checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from ._grid import resample_bilinear, resample_nearest
from .errors import ValidationError
from .seqio import Mask

STD_EPS = 1e-8


def normalize_zscore(frame) -> np.ndarray:
    """Zero-mean, unit-variance copy of ``frame`` as float64.

    Constant frames map to all zeros (the stdev is floored at 1e-8).
    """
    x = np.asarray(frame, dtype=np.float64)
    mu = x.mean()
    sd = x.std()
    return (x - mu) / max(sd, STD_EPS)


@dataclass(frozen=True)
class RoiTransform:
    """Crop rectangle ``(x0, y0, w, h)`` in source pixels and a target size.

    ``target`` is ``(W_r, H_r)``.
    """

    x0: int
    y0: int
    w: int
    h: int
    target: tuple[int, int]

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValidationError("empty crop rectangle")
        if self.x0 < 0 or self.y0 < 0:
            raise ValidationError("crop rectangle outside image")
        if min(self.target) < 16:
            raise ValidationError(f"target resolution {self.target} below 16")

    @property
    def box(self):
        return (self.x0, self.y0, self.w, self.h)

    @property
    def out_shape(self):
        return (self.target[1], self.target[0])

    def check_fits(self, shape):
        H, W = shape
        if self.x0 + self.w > W or self.y0 + self.h > H:
            raise ValidationError(f"crop {self.box} exceeds image {W}x{H}")

    @classmethod
    def identity(cls, shape, target=None):
        H, W = shape
        return cls(0, 0, W, H, target or (W, H))


def roi_from_mask(mask, pad_factor: float = 2.0, target=(384, 384)) -> RoiTransform:
    """Crop around the foreground of ``mask``.

    The tight bounding box is grown by ``pad_factor`` times its own size on
    every side, the shorter side is then grown symmetrically to match the
    target aspect ratio, and finally the rectangle is clamped to the image.
    """
    lab = np.asarray(mask).astype(bool)
    if not lab.any():
        raise ValidationError("empty initial mask")
    if pad_factor < 0:
        raise ValidationError("pad_factor must be >= 0")
    H, W = lab.shape
    rows = np.flatnonzero(lab.any(axis=1))
    cols = np.flatnonzero(lab.any(axis=0))
    bw = cols[-1] - cols[0] + 1
    bh = rows[-1] - rows[0] + 1
    x0 = cols[0] - pad_factor * bw
    x1 = cols[-1] + 1 + pad_factor * bw
    y0 = rows[0] - pad_factor * bh
    y1 = rows[-1] + 1 + pad_factor * bh

    aspect = target[0] / target[1]
    w, h = x1 - x0, y1 - y0
    if w / h < aspect:
        grow = (h * aspect - w) / 2
        x0, x1 = x0 - grow, x1 + grow
    elif w / h > aspect:
        grow = (w / aspect - h) / 2
        y0, y1 = y0 - grow, y1 + grow

    # outward rounding keeps the padded box inside the integer crop
    ix0 = max(0, math.floor(x0 + 1e-9))
    iy0 = max(0, math.floor(y0 + 1e-9))
    ix1 = min(W, math.ceil(x1 - 1e-9))
    iy1 = min(H, math.ceil(y1 - 1e-9))
    return RoiTransform(ix0, iy0, ix1 - ix0, iy1 - iy0, tuple(int(t) for t in target))


def crop_resize(image, xf: RoiTransform):
    """Resample the crop of ``image`` to the working resolution.

    Masks (:class:`Mask` instances) use nearest neighbour and stay binary;
    anything else is treated as intensities and resampled bilinearly.
    """
    if isinstance(image, Mask):
        xf.check_fits(image.shape)
        return Mask(image.index, resample_nearest(image.labels, xf.out_shape, xf.box))
    arr = np.asarray(image)
    xf.check_fits(arr.shape)
    return resample_bilinear(arr, xf.out_shape, xf.box)


def crop_resize_mask(labels, xf: RoiTransform) -> np.ndarray:
    """Array form of the nearest-neighbour branch of :func:`crop_resize`."""
    xf.check_fits(np.shape(labels))
    return resample_nearest(np.asarray(labels), xf.out_shape, xf.box)


def _uncrop_index(n_src, start, extent, n_work):
    src = np.arange(start, start + extent)
    idx = np.floor((src - start + 0.5) * (n_work / extent)).astype(np.intp)
    return src, np.clip(idx, 0, n_work - 1)


def uncrop_mask(mask, xf: RoiTransform, shape) -> np.ndarray:
    """Map a working-resolution mask back to source coordinates.

    Every source pixel inside the crop takes the label of the working pixel
    its centre falls in; everything outside the crop is background.
    """
    work = np.asarray(mask)
    if work.shape != xf.out_shape:
        raise ValidationError(f"working mask {work.shape} != {xf.out_shape}")
    out = np.zeros(shape, dtype=np.uint8)
    ys, iy = _uncrop_index(shape[0], xf.y0, xf.h, xf.out_shape[0])
    xs, ix = _uncrop_index(shape[1], xf.x0, xf.w, xf.out_shape[1])
    out[ys[0]:ys[-1] + 1, xs[0]:xs[-1] + 1] = work[np.ix_(iy, ix)]
    return out


@dataclass(frozen=True)
class AffineParams:
    rotation: float = 0.0  # degrees, counter-clockwise as displayed
    translation: tuple[float, float] = (0.0, 0.0)  # (dx, dy) pixels
    scale: float = 1.0
    gain: float = 1.0
    bias: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError("scale must be positive")


def apply_affine(image, params: AffineParams):
    """Rotate about the centre, scale, then translate.

    Intensity images are sampled bilinearly with out-of-bounds reads taking
    the image minimum, and then mapped through ``gain * v + bias``. Masks are
    sampled nearest-neighbour with background fill and no intensity change.
    """
    is_mask = isinstance(image, Mask)
    arr = np.asarray(image)
    H, W = arr.shape
    cy, cx = (H - 1) / 2.0, (W - 1) / 2.0
    th = math.radians(params.rotation)
    c, s = math.cos(th), math.sin(th)
    dx, dy = params.translation
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    # invert p' = c + scale * R (p - c) + t, with R rotating counter-clockwise on screen (y down)
    u = (xx - cx - dx) / params.scale
    v = (yy - cy - dy) / params.scale
    src_x = c * u - s * v + cx
    src_y = s * u + c * v + cy
    coords = np.stack([src_y, src_x])
    if is_mask:
        out = ndi.map_coordinates(arr, np.round(coords), order=0, mode="constant", cval=0)
        return Mask(image.index, out.astype(np.uint8))
    arr = arr.astype(np.float64)
    out = ndi.map_coordinates(arr, coords, order=1, mode="constant", cval=float(arr.min()),
                              prefilter=False)
    return params.gain * out + params.bias
