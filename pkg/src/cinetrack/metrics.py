"""Segmentation and runtime metrics: DSC, HD95, MSD, per-frame latency.

Surface distances are measured between boundary pixels. A boundary pixel
is a foreground pixel with a 4-neighbour in the background, where the image
border counts as background. Each boundary pixel of one mask gets the exact
Euclidean distance to the nearest boundary pixel of the other mask, scaled
by the pixel spacing.

HD95 is the 95th percentile of both directed lists concatenated, using
linear interpolation at zero-based position ``0.95 * (n - 1)``. MSD is the
mean of the same concatenation. If either mask is empty, the surface
metrics are undefined and reported as NaN.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage as ndi

from ._grid import boundary
from .errors import ValidationError

CSV_HEADER = ("frame", "dsc", "hd95", "msd", "elapsed_s", "valid_surface")


def _pair(a, b):
    a = np.asarray(a).astype(bool)
    b = np.asarray(b).astype(bool)
    if a.shape != b.shape:
        raise ValidationError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a, b


def dsc(a, b) -> float:
    """``2|A & B| / (|A| + |B|)``; two empty masks score 1.0."""
    a, b = _pair(a, b)
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / total


def _directed(src_boundary, dst_boundary, spacing):
    # nearest dst boundary pixel for every pixel, via an exact EDT
    _, (ir, ic) = ndi.distance_transform_edt(~dst_boundary, return_indices=True)
    r, c = np.nonzero(src_boundary)
    dr = r - ir[r, c]
    dc = c - ic[r, c]
    return np.sqrt((dr * dr + dc * dc).astype(np.float64)) * spacing


def surface_distances(a, b, spacing: float = 1.0):
    """Directed boundary distances ``(a -> b, b -> a)``, or ``None`` if a mask is empty."""
    a, b = _pair(a, b)
    if not a.any() or not b.any():
        return None
    ba, bb = boundary(a), boundary(b)
    return _directed(ba, bb, spacing), _directed(bb, ba, spacing)


def hd95_from_distances(d_ab, d_ba) -> float:
    return float(np.percentile(np.concatenate([d_ab, d_ba]), 95, method="linear"))


def msd_from_distances(d_ab, d_ba) -> float:
    return float(np.concatenate([d_ab, d_ba]).mean())


def hd95(a, b, spacing: float = 1.0) -> float:
    d = surface_distances(a, b, spacing)
    return math.nan if d is None else hd95_from_distances(*d)


def msd(a, b, spacing: float = 1.0) -> float:
    d = surface_distances(a, b, spacing)
    return math.nan if d is None else msd_from_distances(*d)


@dataclass
class FrameMetrics:
    frame: int
    dsc: float
    hd95: float
    msd: float
    elapsed: Optional[float]
    valid_surface: bool


@dataclass
class MetricReport:
    rows: list[FrameMetrics]
    unit: str = "px"
    budget: float = 1.0
    aggregates: dict = field(default_factory=dict)

    @property
    def invalid_surface_frames(self) -> int:
        return sum(not r.valid_surface for r in self.rows)

    @property
    def latencies(self) -> list[float]:
        return [r.elapsed for r in self.rows if r.elapsed is not None]

    @property
    def budget_violations(self) -> int:
        return sum(e > self.budget for e in self.latencies)

    def summary(self) -> dict:
        return {
            "frames": len(self.rows),
            "unit": self.unit,
            "aggregates": self.aggregates,
            "invalid_surface_frames": self.invalid_surface_frames,
            "budget_s": self.budget,
            "budget_violations": self.budget_violations if self.latencies else None,
        }

    def write_csv(self, path) -> None:
        def fmt(v):
            return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow([r.frame, fmt(r.dsc), fmt(r.hd95), fmt(r.msd), fmt(r.elapsed),
                            int(r.valid_surface)])

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2) + "\n")


def _stats(values) -> dict:
    if not values:
        return {"mean": None, "median": None, "n": 0}
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "median": float(np.median(arr)), "n": len(values)}


def evaluate_run(predictions: Sequence, references: Sequence,
                 latencies: Optional[Sequence[float]] = None,
                 spacing: Optional[float] = None, budget: float = 1.0) -> MetricReport:
    """Per-frame metrics plus aggregates over the valid rows.

    ``spacing=None`` reports distances in pixels. Frames where either mask is
    empty keep their DSC but are flagged invalid for HD95/MSD and excluded
    from those aggregates.
    """
    if len(predictions) != len(references):
        raise ValidationError(
            f"{len(predictions)} predictions vs {len(references)} references"
        )
    if latencies is not None and len(latencies) != len(predictions):
        raise ValidationError(f"{len(latencies)} latencies vs {len(predictions)} frames")
    scale = 1.0 if spacing is None else float(spacing)
    rows = []
    for i, (p, r) in enumerate(zip(predictions, references)):
        d = surface_distances(p, r, scale)
        rows.append(FrameMetrics(
            frame=getattr(r, "index", i),
            dsc=dsc(p, r),
            hd95=math.nan if d is None else hd95_from_distances(*d),
            msd=math.nan if d is None else msd_from_distances(*d),
            elapsed=None if latencies is None else float(latencies[i]),
            valid_surface=d is not None,
        ))
    report = MetricReport(rows, "px" if spacing is None else "mm", budget)
    valid = [r for r in rows if r.valid_surface]
    report.aggregates = {
        "dsc": _stats([r.dsc for r in rows]),
        "hd95": _stats([r.hd95 for r in valid]),
        "msd": _stats([r.msd for r in valid]),
    }
    if latencies is not None:
        lat = _stats(report.latencies)
        lat["p95"] = float(np.percentile(report.latencies, 95)) if rows else None
        report.aggregates["runtime_s"] = lat
    return report
