import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import ndimage as ndi

from cinetrack.encoder import (
    KEY_DIM, DescriptorEncoder, EncoderSpec, FeatureGrid, descriptor_channels, encode_memory,
    encode_query, pool,
)
from cinetrack.errors import ConfigError, ValidationError


def reference_channels(img):
    """Same descriptor built from scipy filters, mode='reflect' throughout."""
    out = []
    for w in (3, 7, 15):
        m = ndi.uniform_filter(img, w, mode="reflect")
        m2 = ndi.uniform_filter(img * img, w, mode="reflect")
        sd = np.sqrt(np.maximum(m2 - m * m, 0))
        gx = ndi.correlate1d(m, [-0.5, 0, 0.5], axis=1, mode="reflect")
        gy = ndi.correlate1d(m, [-0.5, 0, 0.5], axis=0, mode="reflect")
        lap = ndi.laplace(m, mode="reflect")
        out += [m, sd, gx, gy, lap]
    return np.stack(out, axis=-1)


def reference_pool(x, s):
    H, W = x.shape[:2]
    out = np.zeros((H // s, W // s) + x.shape[2:])
    for i in range(H // s):
        for j in range(W // s):
            out[i, j] = x[i * s:(i + 1) * s, j * s:(j + 1) * s].mean(axis=(0, 1))
    return out


def test_channels_match_scipy_reference(rng):
    img = rng.normal(size=(40, 36))
    np.testing.assert_allclose(descriptor_channels(img), reference_channels(img),
                               rtol=0, atol=1e-11)


def test_query_keys_match_reference_pooling(rng):
    img = rng.normal(size=(32, 48))
    q = encode_query(img, EncoderSpec(4), frame_index=7)
    assert q.keys.shape == (8, 12, KEY_DIM) and q.frame_index == 7
    assert not q.values.any()
    np.testing.assert_allclose(q.keys, reference_pool(reference_channels(img), 4),
                               rtol=0, atol=1e-11)


def test_zero_image_all_zero_keys():
    assert not encode_query(np.zeros((32, 32))).keys.any()


def test_horizontal_ramp():
    img = np.tile(np.arange(64, dtype=float), (64, 1))
    ch = descriptor_channels(img)
    gx = ch[..., [2, 7, 12]]
    gy = ch[..., [3, 8, 13]]
    np.testing.assert_allclose(gx[:, 8:-8], 1.0, atol=1e-9)
    assert (gx >= -1e-12).all()
    np.testing.assert_allclose(gy, 0.0, atol=1e-9)
    keys = encode_query(img).keys
    np.testing.assert_allclose(keys[:, 2:-2][..., [2, 7, 12]], 1.0, atol=1e-9)


def test_deterministic(rng):
    img = rng.normal(size=(64, 64))
    a = encode_query(img).keys
    b = encode_query(img.copy()).keys
    assert a.tobytes() == b.tobytes()


def test_stride_must_divide():
    with pytest.raises(ConfigError):
        encode_query(np.zeros((30, 32)), EncoderSpec(4))


def test_memory_values_extremes(rng):
    img = rng.normal(size=(32, 32))
    ones = encode_memory(img, np.ones((32, 32))).values
    zeros = encode_memory(img, np.zeros((32, 32))).values
    assert (ones[..., 0] == 1).all() and (ones[..., 1] == 0).all()
    assert (zeros[..., 0] == 0).all() and (zeros[..., 1] == 1).all()


def test_half_cell_pools_to_half():
    prob = np.zeros((16, 16))
    prob[:, :2] = 1  # left half of the first column of 4x4 cells
    v = encode_memory(np.zeros((16, 16)), prob).values
    np.testing.assert_array_equal(v[:, 0, 0], 0.5)
    np.testing.assert_array_equal(v[:, 1:, 0], 0.0)


@given(st.integers(0, 2 ** 31))
def test_memory_keys_equal_query_keys_and_channels_sum(seed):
    r = np.random.default_rng(seed)
    img = r.normal(size=(24, 24))
    prob = r.uniform(size=(24, 24))
    m = encode_memory(img, prob)
    assert m.keys.tobytes() == encode_query(img).keys.tobytes()
    np.testing.assert_allclose(m.values[..., 0] + m.values[..., 1], 1.0, atol=1e-15)
    np.testing.assert_allclose(m.values[..., 0], reference_pool(prob, 4), atol=1e-14)
    np.testing.assert_array_equal(m.values[..., 2], m.keys[..., 5])


def test_translation_equivariance(rng):
    big = ndi.gaussian_filter(rng.normal(size=(64, 100)), 2)
    s = 4
    a = encode_query(big[:, :96], EncoderSpec(s)).keys
    b = encode_query(big[:, s:96 + s], EncoderSpec(s)).keys
    # sites whose 15-px windows (+1 px for derivatives) stay inside both crops
    margin = 3
    np.testing.assert_allclose(b[margin:-margin, margin:-margin - 1],
                               a[margin:-margin, margin + 1:-margin], rtol=0, atol=1e-9)


def test_pool_generic(rng):
    x = rng.normal(size=(8, 12, 3))
    np.testing.assert_allclose(pool(x, 4), reference_pool(x, 4), atol=1e-15)
    y = rng.normal(size=(8, 12))
    np.testing.assert_allclose(pool(y, 2), reference_pool(y, 2), atol=1e-15)


def test_feature_grid_validation():
    with pytest.raises(ValidationError):
        FeatureGrid(np.zeros((2, 2, 3)), np.zeros((2, 3, 3)), 4)
    assert not FeatureGrid(np.full((1, 1, 1), np.nan), np.zeros((1, 1, 1)), 1).is_finite()


def test_mask_prob_shape_checked():
    with pytest.raises(ValidationError):
        DescriptorEncoder().memory_values(np.zeros((16, 16)), np.zeros((8, 8)))
