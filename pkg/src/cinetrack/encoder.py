"""Feature encoders producing key/value grids at a fixed stride.

The reference :class:`DescriptorEncoder` is a fixed multi-scale descriptor.
For each window size in ``(3, 7, 15)`` it computes five per-pixel channels
on the normalized image: local mean, local stdev, x and y gradient of the
local mean, and Laplacian of the local mean. That gives 15 key channels,
which are mean-pooled over ``stride x stride`` cells. All windowed
statistics use reflect padding.

Memory values carry three channels: pooled foreground probability, its
complement, and the pooled window-7 local mean.

Any object with ``spec``, ``encode_query(image, frame_index)`` and
``memory_values(image, mask_prob, keys)`` can stand in for the reference
encoder inside the tracker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError

WINDOWS = (3, 7, 15)
CHANNELS_PER_WINDOW = 5
KEY_DIM = len(WINDOWS) * CHANNELS_PER_WINDOW
VALUE_DIM = 3
# key channel holding the pooled window-7 local mean
_MEAN7_CHANNEL = WINDOWS.index(7) * CHANNELS_PER_WINDOW


@dataclass(frozen=True)
class EncoderSpec:
    stride: int = 4
    key_dim: int = KEY_DIM
    value_dim: int = VALUE_DIM

    def __post_init__(self):
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.key_dim < 1 or self.value_dim < 1:
            raise ConfigError("key_dim and value_dim must be >= 1")

    def grid_shape(self, shape):
        H, W = shape
        if H % self.stride or W % self.stride:
            raise ConfigError(f"stride {self.stride} does not divide resolution {W}x{H}")
        return H // self.stride, W // self.stride


@dataclass(eq=False)
class FeatureGrid:
    """Keys ``(H_f, W_f, C_k)`` and values ``(H_f, W_f, C_v)`` for one frame."""

    keys: np.ndarray
    values: np.ndarray
    stride: int
    frame_index: int = -1

    def __post_init__(self):
        if self.keys.ndim != 3 or self.values.ndim != 3:
            raise ValidationError("feature grids must be 3-D (H, W, C)")
        if self.keys.shape[:2] != self.values.shape[:2]:
            raise ValidationError("key and value grids differ in size")

    @property
    def grid_shape(self):
        return self.keys.shape[:2]

    @property
    def n_sites(self) -> int:
        return self.keys.shape[0] * self.keys.shape[1]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.keys).all() and np.isfinite(self.values).all())


def pool(x, stride: int) -> np.ndarray:
    """Mean-pool the two leading axes of ``x`` over ``stride x stride`` cells."""
    if stride == 1:
        return np.asarray(x, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    H, W = x.shape[:2]
    tail = x.shape[2:]
    if tail:
        return x.reshape(H // stride, stride, W // stride, stride, *tail).mean(axis=(1, 3))
    # two contiguous reductions are much faster than a strided 2-axis mean
    rows = x.reshape(H, W // stride, stride).sum(axis=2)
    return rows.reshape(H // stride, stride, W // stride).sum(axis=1) * (1.0 / (stride * stride))


_HALF = max(WINDOWS) // 2


def _box_means(padded, shape):
    """Window means for every size in WINDOWS, stacked on a new leading axis.

    ``padded`` is ``(..., H + 2*_HALF, W + 2*_HALF)``; the result is
    ``(len(WINDOWS), ..., H, W)``.
    """
    H, W = shape
    lead = padded.shape[:-2]
    integ = np.zeros(lead + (padded.shape[-2] + 1, padded.shape[-1] + 1))
    np.cumsum(padded, axis=-2, out=integ[..., 1:, 1:])
    np.cumsum(integ[..., 1:, 1:], axis=-1, out=integ[..., 1:, 1:])
    out = np.empty((len(WINDOWS),) + lead + (H, W))
    for i, w in enumerate(WINDOWS):
        a = _HALF - w // 2  # window's top-left corner in padded coordinates
        b = a + w
        out[i] = (integ[..., b:b + H, b:b + W] - integ[..., a:a + H, b:b + W]
                  - integ[..., b:b + H, a:a + W] + integ[..., a:a + H, a:a + W])
        out[i] *= 1.0 / (w * w)
    return out


def _planes(img) -> np.ndarray:
    """All key channels per pixel as ``(KEY_DIM, H, W)``."""
    H, W = img.shape
    # numpy "symmetric" padding is scipy's "reflect" (edge sample repeated)
    padded = np.pad(img, _HALF, mode="symmetric")
    both = _box_means(np.stack([padded, padded * padded]), img.shape)
    m, m2 = both[:, 0], both[:, 1]
    p = np.pad(m, ((0, 0), (1, 1), (1, 1)), mode="symmetric")
    out = np.empty((len(WINDOWS), CHANNELS_PER_WINDOW, H, W))
    out[:, 0] = m
    np.sqrt(np.maximum(m2 - m * m, 0.0), out=out[:, 1])
    out[:, 2] = 0.5 * (p[:, 1:-1, 2:] - p[:, 1:-1, :-2])
    out[:, 3] = 0.5 * (p[:, 2:, 1:-1] - p[:, :-2, 1:-1])
    out[:, 4] = p[:, :-2, 1:-1] + p[:, 2:, 1:-1] + p[:, 1:-1, :-2] + p[:, 1:-1, 2:] - 4.0 * m
    return out.reshape(KEY_DIM, H, W)


def _pool_matrix(n, stride):
    m = np.zeros((n // stride, n))
    for i in range(n // stride):
        m[i, i * stride:(i + 1) * stride] = 1.0 / stride
    return m


def _pool_planes(planes, stride):
    """Mean-pool ``(C, H, W)`` planes into an ``(H/s, W/s, C)`` grid."""
    C, H, W = planes.shape
    if stride == 1:
        return planes.transpose(1, 2, 0).copy()
    cols = planes @ _pool_matrix(W, stride).T
    cells = _pool_matrix(H, stride) @ cols
    return cells.transpose(1, 2, 0).copy()


def descriptor_channels(image) -> np.ndarray:
    """Per-pixel 15-channel descriptor, shape ``(H, W, 15)``."""
    img = np.asarray(image, dtype=np.float64)
    return _planes(img).transpose(1, 2, 0).copy()


class DescriptorEncoder:
    """Deterministic handcrafted encoder; see the module docstring."""

    def __init__(self, spec: EncoderSpec | None = None):
        spec = spec or EncoderSpec()
        if spec.key_dim != KEY_DIM or spec.value_dim != VALUE_DIM:
            raise ConfigError(
                f"descriptor encoder has key_dim={KEY_DIM}, value_dim={VALUE_DIM}"
            )
        self.spec = spec

    def encode_query(self, image, frame_index: int = -1) -> FeatureGrid:
        img = np.asarray(image, dtype=np.float64)
        hf, wf = self.spec.grid_shape(img.shape)
        keys = _pool_planes(_planes(img), self.spec.stride)
        values = np.zeros((hf, wf, self.spec.value_dim))
        return FeatureGrid(keys, values, self.spec.stride, frame_index)

    def memory_values(self, image, mask_prob, keys=None) -> np.ndarray:
        """Value grid for a memory write; reuses ``keys`` when already computed."""
        img = np.asarray(image, dtype=np.float64)
        prob = np.asarray(mask_prob, dtype=np.float64)
        if prob.shape != img.shape:
            raise ValidationError(f"mask_prob {prob.shape} != image {img.shape}")
        if keys is None:
            keys = self.encode_query(img).keys
        p = pool(prob, self.spec.stride)
        return np.stack([p, 1.0 - p, keys[..., _MEAN7_CHANNEL]], axis=-1)

    def encode_memory(self, image, mask_prob, frame_index: int = -1) -> FeatureGrid:
        q = self.encode_query(image, frame_index)
        q.values = self.memory_values(image, mask_prob, q.keys)
        return q


def encode_query(image, spec: EncoderSpec | None = None, frame_index: int = -1) -> FeatureGrid:
    return DescriptorEncoder(spec).encode_query(image, frame_index)


def encode_memory(image, mask_prob, spec: EncoderSpec | None = None,
                  frame_index: int = -1) -> FeatureGrid:
    return DescriptorEncoder(spec).encode_memory(image, mask_prob, frame_index)
