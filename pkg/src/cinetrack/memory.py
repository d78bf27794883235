"""Capacity-bounded key-value memory with sparse top-k softmax readout.

One entry holds one frame's full feature grid. A read matches every query
site against every stored key site. Similarity is ``-||q - k||^2 / T``.
The ``top_k`` best stored sites, over all entries, share a softmax, and
the readout is their weighted value. Each entry's share of the attention,
normalised by the number of query sites, accumulates into its ``usage``.
When a write overflows the capacity, the non-permanent entry with the
lowest usage is evicted, the oldest first on ties. The entry being written
is not a candidate unless it is the only one. The first entry ever written
is permanent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .encoder import FeatureGrid
from .errors import ConfigError, MemoryStoreError, ValidationError

_CHUNK = 4096


@dataclass(eq=False)
class MemoryEntry:
    features: FeatureGrid
    frame_index: int
    write_order: int
    usage: float = 0.0

    @property
    def permanent(self) -> bool:
        return math.isinf(self.usage)


@dataclass(eq=False)
class Readout:
    """Attention readout for one query grid.

    ``entry_mass[i]`` is the summed weight that entry ``i`` received over
    all query sites, so ``entry_mass.sum() == n_query_sites``.
    """

    values: np.ndarray
    entry_mass: np.ndarray
    stride: int = 1
    indices: np.ndarray | None = field(default=None, repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)


def _softmax_neg_sqdist(d2, temperature):
    s = -d2 / temperature
    s -= s.max(axis=1, keepdims=True)
    w = np.exp(s)
    w /= w.sum(axis=1, keepdims=True)
    return w


class MemoryStore:
    """Single-owner mutable store; see the module docstring for the policy."""

    def __init__(self, capacity: int = 64, write_cadence: int = 5):
        if capacity < 1:
            raise ConfigError("capacity must be >= 1")
        if write_cadence < 1:
            raise ConfigError("write cadence must be >= 1")
        self.capacity = capacity
        self.write_cadence = write_cadence
        self.entries: list[MemoryEntry] = []
        self.read_count = 0
        self._next_order = 0
        self._flat = None  # (keys, values, owner, tree) cache

    def __len__(self):
        return len(self.entries)

    @property
    def total_sites(self) -> int:
        return sum(e.features.n_sites for e in self.entries)

    @property
    def frame_indices(self) -> list[int]:
        return [e.frame_index for e in self.entries]

    # -- writes ------------------------------------------------------------

    def write(self, features: FeatureGrid, frame_index: int) -> MemoryEntry:
        if not features.is_finite():
            raise ValidationError("non-finite features")
        first = self._next_order == 0
        if not first and frame_index % self.write_cadence != 0:
            raise ValidationError(
                f"frame {frame_index} is off the write cadence k={self.write_cadence}"
            )
        if self.entries:
            ref = self.entries[0].features
            if (features.keys.shape[2] != ref.keys.shape[2]
                    or features.values.shape[2] != ref.values.shape[2]):
                raise ValidationError("feature channel counts differ from stored entries")
        entry = MemoryEntry(features, frame_index, self._next_order,
                            math.inf if first else 0.0)
        self._next_order += 1
        self.entries.append(entry)
        self._flat = None
        if len(self.entries) > self.capacity:
            # the new entry has had no chance to earn usage, so it is spared
            # unless nothing else is evictable
            self.evict_lowest(spare=entry)
        return entry

    def evict_lowest(self, spare: MemoryEntry | None = None) -> MemoryEntry:
        candidates = [(e.usage, e.write_order, i) for i, e in enumerate(self.entries)
                      if not e.permanent and e is not spare]
        if not candidates and spare is not None:
            return self.evict_lowest()
        if not candidates:
            raise MemoryStoreError("cannot evict: only permanent entries present")
        _, _, i = min(candidates)
        self._flat = None
        return self.entries.pop(i)

    # -- reads -------------------------------------------------------------

    def _flatten(self):
        if self._flat is None:
            keys = np.concatenate([e.features.keys.reshape(-1, e.features.keys.shape[2])
                                   for e in self.entries])
            vals = np.concatenate([e.features.values.reshape(-1, e.features.values.shape[2])
                                   for e in self.entries])
            owner = np.concatenate([np.full(e.features.n_sites, i, dtype=np.intp)
                                    for i, e in enumerate(self.entries)])
            self._flat = [keys, vals, owner, None]
        return self._flat

    def _tree(self):
        flat = self._flatten()
        if flat[3] is None:
            flat[3] = cKDTree(flat[0], leafsize=16, balanced_tree=False)
        return flat[3]

    def read(self, query: FeatureGrid, top_k: int = 8, temperature: float | None = None) -> Readout:
        if not self.entries:
            raise MemoryStoreError("read before first write")
        if top_k < 1:
            raise ConfigError("top_k must be >= 1")
        keys, vals, owner, _ = self._flatten()
        if query.keys.shape[2] != keys.shape[1]:
            raise ValidationError("query key dimension differs from memory")
        if temperature is None:
            temperature = math.sqrt(keys.shape[1])
        if not temperature > 0:
            raise ConfigError("temperature must be positive")

        hf, wf, ck = query.keys.shape
        q = query.keys.reshape(-1, ck)
        n_q, n_m = q.shape[0], keys.shape[0]

        if top_k >= n_m:
            idx = np.broadcast_to(np.arange(n_m), (n_q, n_m))
            d2 = np.empty((n_q, n_m))
            step = max(1, _CHUNK * 64 // max(n_m, 1))
            for a in range(0, n_q, step):
                diff = q[a:a + step, None, :] - keys[None, :, :]
                d2[a:a + step] = np.einsum("qmc,qmc->qm", diff, diff)
        else:
            _, idx = self._tree().query(q, k=top_k)
            idx = idx.reshape(n_q, top_k)
            diff = q[:, None, :] - keys[idx]
            d2 = (diff * diff).sum(axis=2)

        w = _softmax_neg_sqdist(d2, temperature)
        out = (w[:, :, None] * vals[idx]).sum(axis=1)
        mass = np.bincount(owner[idx].ravel(), weights=w.ravel(), minlength=len(self.entries))
        for e, m in zip(self.entries, mass.tolist()):
            if m and not e.permanent:
                e.usage += m / n_q
        self.read_count += 1
        return Readout(out.reshape(hf, wf, vals.shape[1]), mass, query.stride,
                       np.asarray(idx), w)


def memory_write(store: MemoryStore, features: FeatureGrid, frame_index: int) -> MemoryStore:
    store.write(features, frame_index)
    return store


def memory_read(store: MemoryStore, query: FeatureGrid, top_k: int = 8,
                temperature: float | None = None) -> Readout:
    return store.read(query, top_k, temperature)


def evict_lowest(store: MemoryStore) -> MemoryStore:
    store.evict_lowest()
    return store
