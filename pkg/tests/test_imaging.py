import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp
from scipy import ndimage as ndi

from cinetrack.errors import ValidationError
from cinetrack.imaging import (
    AffineParams, RoiTransform, apply_affine, crop_resize, crop_resize_mask,
    normalize_zscore, roi_from_mask, uncrop_mask,
)
from cinetrack.seqio import Mask


def test_constant_frame_normalizes_to_zero():
    assert not normalize_zscore(np.full((16, 16), 500)).any()


def test_two_point_zscore():
    x = np.array([[0, 2], [2, 0]])
    np.testing.assert_array_equal(normalize_zscore(x), [[-1, 1], [1, -1]])


def test_zscore_moments_recomputed(rng):
    x = rng.integers(0, 4096, (32, 32))
    z = normalize_zscore(x)
    mu = sum(x.ravel().tolist()) / x.size
    sd = (sum((v - mu) ** 2 for v in x.ravel().tolist()) / x.size) ** 0.5
    np.testing.assert_allclose(z, (x - mu) / sd, rtol=0, atol=1e-12)


@given(hnp.arrays(np.int64, st.tuples(st.integers(2, 24), st.integers(2, 24)),
                  elements=st.integers(0, 65535)))
def test_zscore_moments_property(x):
    z = normalize_zscore(x)
    if x.min() == x.max():
        assert not z.any()
    else:
        assert abs(z.mean()) < 1e-5 and abs(z.std() - 1) < 1e-5


def test_roi_full_image_pad0():
    xf = roi_from_mask(np.ones((40, 30)), pad_factor=0, target=(30, 40))
    assert xf.box == (0, 0, 30, 40)


def test_roi_single_pixel():
    # bbox [10, 11) per axis; pad 2*1 per side -> [8, 13); square already
    m = np.zeros((64, 64))
    m[10, 10] = 1
    xf = roi_from_mask(m, pad_factor=2.0, target=(32, 32))
    assert xf.box == (8, 8, 5, 5)
    assert xf.x0 + xf.w / 2 == 10.5  # centred on pixel 10's centre


def test_roi_aspect_grows_shorter_side():
    m = np.zeros((100, 100))
    m[40:50, 30:70] = 1  # 40 wide, 10 tall
    xf = roi_from_mask(m, pad_factor=0, target=(32, 16))
    assert xf.box == (30, 35, 40, 20)


def test_roi_clamped_at_edge():
    m = np.zeros((64, 64))
    m[0:3, 60:64] = 1
    xf = roi_from_mask(m, pad_factor=2.0, target=(32, 32))
    assert xf.x0 >= 0 and xf.y0 >= 0
    assert xf.x0 + xf.w <= 64 and xf.y0 + xf.h <= 64
    assert xf.x0 + xf.w == 64 and xf.y0 == 0


def test_roi_empty_mask():
    with pytest.raises(ValidationError, match="empty initial mask"):
        roi_from_mask(np.zeros((16, 16)))


def test_roi_transform_target_floor():
    with pytest.raises(ValidationError):
        RoiTransform(0, 0, 8, 8, (8, 8))


def test_identity_crop_exact(rng):
    x = rng.normal(size=(20, 24))
    np.testing.assert_array_equal(crop_resize(x, RoiTransform.identity(x.shape)), x)


def test_upsample_2x2_corners():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    xf = RoiTransform(0, 0, 2, 2, (16, 16))
    y = crop_resize(x, xf)
    assert (y[0, 0], y[0, -1], y[-1, 0], y[-1, -1]) == (1.0, 2.0, 3.0, 4.0)
    assert y.min() >= 1 and y.max() <= 4


def test_mask_crop_stays_binary(rng):
    m = Mask(3, rng.integers(0, 2, (50, 50)))
    out = crop_resize(m, RoiTransform(5, 7, 33, 21, (64, 48)))
    assert isinstance(out, Mask) and out.index == 3
    assert set(np.unique(out.labels)) <= {0, 1}


def test_uncrop_identity(rng):
    m = rng.integers(0, 2, (20, 20)).astype(np.uint8)
    xf = RoiTransform.identity(m.shape)
    np.testing.assert_array_equal(uncrop_mask(crop_resize_mask(m, xf), xf, m.shape), m)


def test_uncrop_integer_upscale_roundtrip(rng):
    m = np.zeros((64, 64), np.uint8)
    m[20:40, 25:35] = rng.integers(0, 2, (20, 10))
    xf = RoiTransform(16, 16, 32, 32, (64, 64))
    np.testing.assert_array_equal(uncrop_mask(crop_resize_mask(m, xf), xf, m.shape), m)


def test_uncrop_empty():
    xf = RoiTransform(4, 4, 20, 20, (16, 16))
    assert not uncrop_mask(np.zeros((16, 16)), xf, (32, 32)).any()


def _disk_blob(r, shape, lo, hi):
    # one or two overlapping disks, each fully inside [9, 87)
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    m = np.zeros(shape, bool)
    for _ in range(r.integers(1, 3)):
        rad = r.uniform(lo, hi)
        cy, cx = r.uniform(9 + rad, 87 - rad, 2)
        m |= (yy - cy) ** 2 + (xx - cx) ** 2 <= rad ** 2
    return m.astype(np.uint8)


@given(st.integers(0, 10_000))
def test_uncrop_2x_downscale_iou(seed):
    # one sample per 2x2 block misplaces ~1 px of boundary, so 0.9 needs radius >= ~16
    m = _disk_blob(np.random.default_rng(seed), (96, 96), 16, 26)
    xf = RoiTransform(8, 8, 80, 80, (40, 40))
    back = uncrop_mask(crop_resize_mask(m, xf), xf, m.shape).astype(bool)
    inter = (back & m.astype(bool)).sum()
    union = (back | m.astype(bool)).sum()
    assert inter / union >= 0.9


def test_uncrop_never_outside_crop(rng):
    xf = RoiTransform(5, 9, 17, 23, (32, 32))
    out = uncrop_mask(np.ones((32, 32)), xf, (40, 40))
    assert out.sum() == 17 * 23
    assert out[9:32, 5:22].all()


def test_affine_identity_exact(rng):
    x = rng.normal(size=(17, 23))
    np.testing.assert_array_equal(apply_affine(x, AffineParams()), x)
    m = Mask(0, rng.integers(0, 2, (17, 23)))
    assert apply_affine(m, AffineParams()) == m


def test_affine_translation_moves_impulse():
    x = np.zeros((21, 21))
    x[10, 7] = 1
    y = apply_affine(x, AffineParams(translation=(5, 0)))
    assert y[10, 12] == 1 and y.sum() == 1


def test_affine_rotation_180():
    x = np.zeros((21, 21))
    x[3, 5] = 1
    y = apply_affine(x, AffineParams(rotation=180))
    assert np.argmax(y) == np.ravel_multi_index((17, 15), y.shape)
    assert abs(y.max() - 1) < 1e-12


def test_affine_gain_bias():
    y = apply_affine(np.full((16, 16), 3.0), AffineParams(gain=2, bias=1))
    np.testing.assert_array_equal(y, 7.0)


def test_affine_out_of_bounds_is_min():
    x = np.full((16, 16), 10.0)
    x[0, 0] = 2.0
    y = apply_affine(x, AffineParams(translation=(8, 0)))
    assert (y[:, :8] == 2.0).all()


def test_affine_mask_binary(rng):
    m = Mask(0, rng.integers(0, 2, (30, 30)))
    out = apply_affine(m, AffineParams(rotation=33, scale=1.3, translation=(2.5, -1), gain=5))
    assert set(np.unique(out.labels)) <= {0, 1}


def test_affine_scale_validated():
    with pytest.raises(ValidationError):
        AffineParams(scale=0)
