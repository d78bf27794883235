"""Small grid helpers shared by several modules."""

import numpy as np


def _axis_weights(n_out, n_in, start, extent):
    # half-pixel-centre convention: output pixel i covers source [start + i*step, start + (i+1)*step)
    step = extent / n_out
    pos = start + (np.arange(n_out) + 0.5) * step - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    i0 = np.floor(pos).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = pos - i0
    return i0, i1, frac


def resample_bilinear(img, out_shape, box=None):
    """Bilinearly resample ``img[y0:y0+h, x0:x0+w]`` to ``out_shape``.

    ``box`` is ``(x0, y0, w, h)`` in source pixels and defaults to the whole image.
    Sample positions are clamped to the image, so outputs are convex
    combinations of input values.
    """
    img = np.asarray(img, dtype=np.float64)
    H, W = img.shape
    if box is None:
        box = (0, 0, W, H)
    x0, y0, w, h = box
    ry0, ry1, fy = _axis_weights(out_shape[0], H, y0, h)
    rx0, rx1, fx = _axis_weights(out_shape[1], W, x0, w)
    top = img[ry0]
    bot = img[ry1]
    fx = fx[None, :]
    a = top[:, rx0] * (1.0 - fx) + top[:, rx1] * fx
    b = bot[:, rx0] * (1.0 - fx) + bot[:, rx1] * fx
    fy = fy[:, None]
    return a * (1.0 - fy) + b * fy


def resample_nearest(img, out_shape, box=None):
    """Nearest-neighbour counterpart of :func:`resample_bilinear`."""
    img = np.asarray(img)
    H, W = img.shape
    if box is None:
        box = (0, 0, W, H)
    x0, y0, w, h = box
    ry = np.floor(y0 + (np.arange(out_shape[0]) + 0.5) * (h / out_shape[0])).astype(np.intp)
    rx = np.floor(x0 + (np.arange(out_shape[1]) + 0.5) * (w / out_shape[1])).astype(np.intp)
    ry = np.clip(ry, 0, H - 1)
    rx = np.clip(rx, 0, W - 1)
    return img[np.ix_(ry, rx)]


def boundary(mask):
    """Foreground pixels with at least one 4-neighbour in the background.

    The image border counts as background.
    """
    m = np.asarray(mask).astype(bool)
    p = np.pad(m, 1, constant_values=False)
    interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return m & ~interior
