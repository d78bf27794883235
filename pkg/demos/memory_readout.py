"""The key-value memory on its own: writes, sparse readout, usage and eviction."""

import numpy as np

from cinetrack.encoder import FeatureGrid
from cinetrack.memory import MemoryStore

rng = np.random.default_rng(0)


def grid(h=4, w=4):
    return FeatureGrid(rng.normal(size=(h, w, 3)), rng.uniform(size=(h, w, 2)), 1)


store = MemoryStore(capacity=3, write_cadence=5)
store.write(grid(), 0)  # first write: permanent
store.write(grid(), 5)
store.write(grid(), 10)

# a query close to frame 5 gives that entry the largest share of attention
q = FeatureGrid(store.entries[1].features.keys + 0.05 * rng.normal(size=(4, 4, 3)),
                np.zeros((4, 4, 2)), 1)
out = store.read(q, top_k=8)
print("attention mass per entry", np.round(out.entry_mass, 3), "sum", out.entry_mass.sum())
print("usage", [round(e.usage, 3) for e in store.entries])

# the next write overflows: lowest-usage, oldest-first entry goes (never frame 0)
store.write(grid(), 15)
print("frames after overflow", store.frame_indices)

# off-cadence writes are refused
try:
    store.write(grid(), 17)
except ValueError as e:
    print("refused:", e)
