import math

import numpy as np
import pytest

from cinetrack.errors import ValidationError
from cinetrack.seqio import read_masks, read_sequence
from cinetrack.synthcine import PhantomSpec, generate, rasterize_ellipse, write_phantom
from oracles import components


def test_static_case_identical():
    _, frames, masks = generate(PhantomSpec(size=64, frames=6, semi_axes=(8, 6)))
    for f, m in zip(frames, masks):
        np.testing.assert_array_equal(f.pixels, frames[0].pixels)
        np.testing.assert_array_equal(m.labels, masks[0].labels)


def test_centroid_traces_sinusoid():
    spec = PhantomSpec(size=96, frames=40, semi_axes=(10, 7), amplitude=8, period=20)
    _, _, masks = generate(spec)
    cy0 = (96 - 1) / 2
    for t, m in enumerate(masks):
        rows, _ = np.nonzero(m.labels)
        analytic = cy0 + 8 * math.sin(2 * math.pi * t / 20)
        assert abs(rows.mean() - analytic) <= 0.5


def test_area_constant_without_deformation():
    _, _, masks = generate(PhantomSpec(size=96, frames=25, semi_axes=(9.3, 6.1),
                                       amplitude=7.3, period=11))
    counts = {int(m.labels.sum()) for m in masks}
    assert len(counts) == 1


def test_deformation_changes_area():
    _, _, masks = generate(PhantomSpec(size=96, frames=20, deformation=0.2, period=20))
    counts = [int(m.labels.sum()) for m in masks]
    assert counts[0] > counts[10]  # axes scale by 1.2 at t=0 and 0.8 at t=P/2


def test_single_component():
    _, _, masks = generate(PhantomSpec(size=64, frames=10, semi_axes=(6, 4), amplitude=5,
                                       period=7, deformation=0.3))
    for m in masks:
        assert len(components(m.labels, 8)) == 1


def test_rasterize_rule():
    m = rasterize_ellipse((9, 9), 4, 4, 2, 2)
    assert m[4, 6] == 1 and m[4, 7] == 0  # boundary point (6, 4) counts as inside
    assert m.sum() == 13


def test_deterministic():
    spec = PhantomSpec(size=48, frames=5, semi_axes=(6, 5), amplitude=3, noise_sigma=10,
                       drift=0.01, seed=7)
    a = generate(spec)
    b = generate(spec)
    for fa, fb in zip(a[1], b[1]):
        assert fa.pixels.tobytes() == fb.pixels.tobytes()
    c = generate(PhantomSpec(size=48, frames=5, semi_axes=(6, 5), amplitude=3,
                             noise_sigma=10, drift=0.01, seed=8))
    assert a[1][1].pixels.tobytes() != c[1][1].pixels.tobytes()


def test_drift_scales_gain():
    _, frames, _ = generate(PhantomSpec(size=32, frames=3, semi_axes=(5, 4), drift=0.1,
                                        texture=0))
    assert frames[2].pixels[0, 0] == round(1000 * 1.2)


def test_exit_image_rejected():
    with pytest.raises(ValidationError):
        PhantomSpec(size=64, semi_axes=(10, 10), amplitude=30)
    with pytest.raises(ValidationError):
        PhantomSpec(size=64, frames=0)


def test_write_phantom_roundtrip(tmp_path):
    spec = PhantomSpec(size=32, frames=4, semi_axes=(5, 4), amplitude=2, pixel_spacing=1.2)
    _, frames, masks = write_phantom(tmp_path, spec)
    meta, frames2 = read_sequence(tmp_path)
    assert meta.pixel_spacing == 1.2 and meta.frame_count == 4
    assert read_masks(tmp_path) == masks
    assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(frames, frames2))
