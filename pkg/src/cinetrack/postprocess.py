"""Temporal smoothing, thresholding and largest-component cleanup."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage as ndi

from .errors import ConfigError

_STRUCTURES = {
    4: ndi.generate_binary_structure(2, 1),
    8: ndi.generate_binary_structure(2, 2),
}


@dataclass
class SmootherState:
    """Exponential moving average over probability maps."""

    alpha: float = 0.5
    ema: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")

    def update(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        if self.ema is None:
            self.ema = p.copy()
        else:
            self.ema = self.alpha * p + (1.0 - self.alpha) * self.ema
        return self.ema.copy()

    def reset(self):
        self.ema = None


def ema_update(state: SmootherState, p):
    """Functional form of :meth:`SmootherState.update`; returns ``(state, smoothed)``."""
    smoothed = state.update(p)
    return state, smoothed


def threshold(p, tau: float = 0.5) -> np.ndarray:
    """Binary mask of ``p >= tau`` (inclusive)."""
    return (np.asarray(p) >= tau).astype(np.uint8)


def largest_component(mask, connectivity: int = 8) -> np.ndarray:
    """Keep only the largest foreground component.

    Ties go to the component whose first pixel in raster order comes first.
    That is the lowest label :func:`scipy.ndimage.label` assigns, because it
    numbers components in raster order.
    """
    if connectivity not in _STRUCTURES:
        raise ConfigError("connectivity must be 4 or 8")
    m = np.asarray(mask).astype(bool)
    labels, n = ndi.label(m, structure=_STRUCTURES[connectivity])
    if n <= 1:
        return m.astype(np.uint8)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return (labels == int(np.argmax(sizes))).astype(np.uint8)
