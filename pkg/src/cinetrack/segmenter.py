"""Label-transfer decoding of a memory readout into a probability map."""

import numpy as np

from ._grid import resample_bilinear
from .encoder import EncoderSpec
from .errors import ValidationError

EPS = 1e-8


def decode(readout, spec: EncoderSpec | None = None) -> np.ndarray:
    """Foreground probability at working resolution.

    Per feature site the probability is ``c0 / (c0 + c1 + 1e-8)`` from the
    first two value channels. The site grid is upsampled bilinearly by the
    stride (site centres sit at cell centres) and clamped to ``[0, 1]``.
    """
    values = getattr(readout, "values", readout)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3 or values.shape[2] < 2:
        raise ValidationError("readout values must be (H_f, W_f, C>=2)")
    stride = spec.stride if spec is not None else getattr(readout, "stride", 1)
    c0 = values[..., 0]
    c1 = values[..., 1]
    p = c0 / (c0 + c1 + EPS)
    hf, wf = p.shape
    if stride > 1:
        p = resample_bilinear(p, (hf * stride, wf * stride))
    return np.clip(p, 0.0, 1.0)
