"""Streaming single-object mask propagation.

Per frame: normalize -> crop/resize -> encode -> memory read -> decode
-> EMA -> threshold -> largest component -> uncrop. The memory is written
on frame 0 and then on every ``k``-th frame with a non-empty prediction.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .encoder import DescriptorEncoder, EncoderSpec, FeatureGrid
from .errors import ConfigError, SequencingError, ValidationError
from .imaging import crop_resize, crop_resize_mask, normalize_zscore, roi_from_mask, uncrop_mask
from .memory import MemoryStore
from .postprocess import SmootherState, largest_component, threshold
from .segmenter import decode
from .seqio import Mask


@dataclass(frozen=True)
class TrackerConfig:
    resolution: tuple[int, int] = (384, 384)  # (W_r, H_r)
    k: int = 5
    capacity: int = 64
    top_k: int = 8
    temperature: float | None = None  # None -> sqrt(key_dim)
    alpha: float = 0.5
    tau: float = 0.5
    connectivity: int = 8
    pad_factor: float = 2.0
    latency_budget: float = 1.0
    stride: int = 4

    def __post_init__(self):
        res = self.resolution
        if isinstance(res, int):
            res = (res, res)
        object.__setattr__(self, "resolution", tuple(int(r) for r in res))
        if len(self.resolution) != 2 or min(self.resolution) < 16:
            raise ConfigError(f"resolution {self.resolution} invalid (each side >= 16)")
        if self.k < 1 or self.capacity < 1 or self.top_k < 1:
            raise ConfigError("k, capacity and top_k must be >= 1")
        if not self.latency_budget > 0:
            raise ConfigError("latency_budget must be positive")
        if self.temperature is not None and not self.temperature > 0:
            raise ConfigError("temperature must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must be in (0, 1]")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau must be in (0, 1)")
        if self.connectivity not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8")
        if self.pad_factor < 0:
            raise ConfigError("pad_factor must be >= 0")
        EncoderSpec(self.stride).grid_shape(self.resolution[::-1])

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["resolution"] = list(self.resolution)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrackerConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class FrameResult:
    index: int
    mask: Mask
    elapsed: float
    memory_size: int
    fallback: bool = False


@dataclass
class RunSummary:
    frames: int
    mean_latency: float
    median_latency: float
    p95_latency: float
    max_latency: float
    budget: float
    budget_violations: int
    memory_high_water: int
    fallbacks: int

    @property
    def within_budget(self) -> bool:
        return self.mean_latency < self.budget

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["within_budget"] = self.within_budget
        return d


class Tracker:
    """Owns the ROI, memory and smoother for a single sequence."""

    def __init__(self, config: TrackerConfig | None = None, encoder=None):
        self.config = config or TrackerConfig()
        self.encoder = encoder or DescriptorEncoder(EncoderSpec(self.config.stride))
        self.roi = None
        self.memory = MemoryStore(self.config.capacity, self.config.k)
        self.smoother = SmootherState(self.config.alpha)
        self.last_mask: Mask | None = None
        self.latencies: list[tuple[int, float]] = []
        self.written: list[int] = []
        self.shape = None
        self._last_index = None

    @property
    def initialized(self) -> bool:
        return self.roi is not None

    def _working_image(self, frame):
        return crop_resize(normalize_zscore(frame), self.roi)

    def init(self, frame, mask) -> FrameResult:
        t0 = time.perf_counter()
        if self.initialized:
            raise SequencingError("tracker already initialized")
        px = np.asarray(frame)
        lab = np.asarray(mask).astype(np.uint8)
        if px.shape != lab.shape:
            raise ValidationError(f"frame {px.shape} and mask {lab.shape} differ in size")
        if not lab.any():
            raise ValidationError("empty initial mask")
        index = getattr(frame, "index", 0)
        self.shape = px.shape
        self.roi = roi_from_mask(lab, self.config.pad_factor, self.config.resolution)
        work = self._working_image(px)
        prob = crop_resize_mask(lab, self.roi).astype(np.float64)
        q = self.encoder.encode_query(work, index)
        values = self.encoder.memory_values(work, prob, q.keys)
        self.memory.write(FeatureGrid(q.keys, values, q.stride, index), index)
        self.written.append(index)
        self.last_mask = Mask(index, lab)
        self._last_index = index
        elapsed = time.perf_counter() - t0
        self.latencies.append((index, elapsed))
        return FrameResult(index, self.last_mask, elapsed, len(self.memory))

    def step(self, frame) -> FrameResult:
        t0 = time.perf_counter()
        if not self.initialized:
            raise SequencingError("step before init")
        index = frame.index
        if index <= self._last_index:
            raise SequencingError(f"frame {index} after frame {self._last_index}")
        px = np.asarray(frame)
        if px.shape != self.shape:
            raise ValidationError(f"frame {index}: shape {px.shape} != {self.shape}")
        cfg = self.config

        work = self._working_image(px)
        q = self.encoder.encode_query(work, index)
        readout = self.memory.read(q, cfg.top_k, cfg.temperature)
        prob = decode(readout, self.encoder.spec)
        smoothed = self.smoother.update(prob)
        wmask = largest_component(threshold(smoothed, cfg.tau), cfg.connectivity)

        fallback = not wmask.any()
        if fallback:
            mask = Mask(index, self.last_mask.labels)
        else:
            mask = Mask(index, uncrop_mask(wmask, self.roi, self.shape))
            self.last_mask = mask
            if index % cfg.k == 0:
                values = self.encoder.memory_values(work, smoothed, q.keys)
                self.memory.write(FeatureGrid(q.keys, values, q.stride, index), index)
                self.written.append(index)
        self._last_index = index
        elapsed = time.perf_counter() - t0
        self.latencies.append((index, elapsed))
        return FrameResult(index, mask, elapsed, len(self.memory), fallback)


def summarize(results, budget: float) -> RunSummary:
    lat = np.array([r.elapsed for r in results], dtype=np.float64)
    return RunSummary(
        frames=len(results),
        mean_latency=float(lat.mean()),
        median_latency=float(np.median(lat)),
        p95_latency=float(np.percentile(lat, 95)),
        max_latency=float(lat.max()),
        budget=budget,
        budget_violations=int((lat > budget).sum()),
        memory_high_water=max(r.memory_size for r in results),
        fallbacks=sum(r.fallback for r in results),
    )


def run_sequence(frames, mask1, config: TrackerConfig | None = None, encoder=None):
    """Track ``mask1`` through ``frames``; returns ``(results, summary)``.

    ``results[0]`` is the initialization result (the given mask, elapsed =
    init time); one result follows per remaining frame.
    """
    frames = list(frames)
    if not frames:
        raise ValidationError("empty sequence")
    tracker = Tracker(config, encoder)
    results = [tracker.init(frames[0], mask1)]
    for fr in frames[1:]:
        results.append(tracker.step(fr))
    return results, summarize(results, tracker.config.latency_budget)


def frozen_baseline(frames, mask1) -> list[Mask]:
    """Predict the first-frame mask for every frame (no tracking)."""
    lab = np.asarray(mask1).astype(np.uint8)
    return [Mask(getattr(f, "index", i), lab) for i, f in enumerate(frames)]
