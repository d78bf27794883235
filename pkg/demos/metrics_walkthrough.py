"""Surface metrics on small hand-made masks."""

import numpy as np

from cinetrack.metrics import dsc, hd95, msd, surface_distances

a = np.zeros((12, 12), np.uint8)
a[3:7, 3:7] = 1
b = np.roll(a, 2, axis=1)

print("DSC", dsc(a, b))  # 8 shared pixels of 16 + 16
d_ab, d_ba = surface_distances(a, b)
print("a->b", d_ab)
print("b->a", d_ba)
print("HD95", hd95(a, b), "MSD", msd(a, b))

# spacing rescales every distance
print("HD95 at 0.8 mm/px", hd95(a, b, spacing=0.8))

# an empty prediction has no surface: NaN, not an exception
print("empty:", hd95(a, np.zeros_like(a)), "DSC", dsc(a, np.zeros_like(a)))
