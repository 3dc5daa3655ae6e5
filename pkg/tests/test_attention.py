import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roadkit.attention import (
    GaParams,
    ResidualBranchParams,
    channel_attention,
    conv3x3,
    ga_backward,
    ga_module,
    ga_resblock,
    ga_resblock_backward,
    residual_branch,
    spatial_attention,
)
from roadkit.losses import finite_diff_gradient, max_relative_error


def test_ga_params_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        GaParams.random(channels=6, reduction=4, rng=rng)
    with pytest.raises(ValueError):
        GaParams(np.zeros((2, 4)), np.zeros(3), np.zeros((4, 2)), np.zeros(4))
    p = GaParams.random(channels=8, reduction=4, rng=rng)
    assert p.channels == 8
    assert p.w1.shape == (2, 8)


def test_channel_attention_shape_and_scaling():
    rng = np.random.default_rng(1)
    p = GaParams.random(4, 2, rng)
    v = rng.standard_normal((4, 6, 6))
    out = channel_attention(v, p)
    assert out.shape == v.shape
    # each channel is a uniform rescale of the input channel
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = out / v
    for c in range(4):
        vals = ratio[c][np.isfinite(ratio[c])]
        assert np.allclose(vals, vals.flat[0])
        assert 0.0 < vals.flat[0] < 1.0  # sigmoid gate


def test_channel_attention_channel_mismatch():
    rng = np.random.default_rng(2)
    p = GaParams.random(4, 2, rng)
    with pytest.raises(ValueError):
        channel_attention(rng.standard_normal((3, 5, 5)), p)


def test_spatial_attention_zero_input_halves():
    v = np.zeros((2, 3, 3))
    assert np.array_equal(spatial_attention(v), v)
    v = np.ones((1, 2, 2))
    out = spatial_attention(v)
    assert np.allclose(out, 1.0 / (1.0 + np.exp(-1.0)))


def test_spatial_attention_rejects_2d():
    with pytest.raises(ValueError):
        spatial_attention(np.zeros((3, 3)))


def test_ga_module_composition():
    rng = np.random.default_rng(3)
    p = GaParams.random(4, 2, rng)
    v = rng.standard_normal((4, 5, 5))
    assert np.allclose(ga_module(v, p), spatial_attention(channel_attention(v, p)))


def test_ga_backward_input_gradient():
    rng = np.random.default_rng(4)
    p = GaParams.random(4, 2, rng)
    v = rng.standard_normal((4, 4, 4))
    upstream = rng.standard_normal(v.shape)
    d_v, _ = ga_backward(v, p, upstream)
    numeric = finite_diff_gradient(lambda x: float((ga_module(x, p) * upstream).sum()), v)
    assert max_relative_error(d_v, numeric) < 1e-4


def test_ga_backward_parameter_gradients():
    rng = np.random.default_rng(5)
    p = GaParams.random(4, 2, rng)
    v = rng.standard_normal((4, 4, 4))
    upstream = rng.standard_normal(v.shape)
    _, grads = ga_backward(v, p, upstream)

    def loss_with(name, value):
        fields = {"w1": p.w1, "b1": p.b1, "w2": p.w2, "b2": p.b2}
        fields[name] = value
        return float((ga_module(v, GaParams(**fields)) * upstream).sum())

    for name in ("w1", "b1", "w2", "b2"):
        numeric = finite_diff_gradient(lambda x, n=name: loss_with(n, x), getattr(p, name).copy())
        assert max_relative_error(grads[name], numeric) < 1e-4, name


def test_ga_backward_upstream_shape_check():
    rng = np.random.default_rng(6)
    p = GaParams.random(2, 2, rng)
    with pytest.raises(ValueError):
        ga_backward(np.zeros((2, 3, 3)), p, np.zeros((2, 2, 2)))


def test_conv3x3_identity_kernel():
    rng = np.random.default_rng(7)
    v = rng.standard_normal((2, 5, 5))
    w = np.zeros((2, 2, 3, 3))
    w[0, 0, 1, 1] = 1.0
    w[1, 1, 1, 1] = 1.0
    assert np.allclose(conv3x3(v, w, np.zeros(2)), v)


def test_conv3x3_box_filter_edges():
    v = np.ones((1, 4, 4))
    w = np.ones((1, 1, 3, 3))
    out = conv3x3(v, w, np.zeros(1))
    assert out[0, 1, 1] == 9.0  # interior sees the full window
    assert out[0, 0, 0] == 4.0  # corner loses the padded cells


def test_residual_branch_shape():
    rng = np.random.default_rng(8)
    b = ResidualBranchParams.random(3, rng)
    v = rng.standard_normal((3, 6, 7))
    assert residual_branch(v, b).shape == v.shape


def test_ga_resblock_nonnegative_output():
    rng = np.random.default_rng(9)
    p = GaParams.random(4, 2, rng)
    b = ResidualBranchParams.random(4, rng)
    v = rng.standard_normal((4, 5, 5))
    out = ga_resblock(v, p, b)
    assert out.shape == v.shape
    assert np.all(out >= 0.0)


def test_ga_resblock_backward_input_gradient():
    rng = np.random.default_rng(10)
    p = GaParams.random(4, 2, rng)
    b = ResidualBranchParams.random(4, rng)
    v = rng.uniform(0.1, 1.0, (4, 4, 4))  # keep away from the rectifier kink
    upstream = rng.standard_normal(v.shape)
    d_v, _, _ = ga_resblock_backward(v, p, b, upstream)
    numeric = finite_diff_gradient(
        lambda x: float((ga_resblock(x, p, b) * upstream).sum()), v
    )
    assert max_relative_error(d_v, numeric) < 1e-4


def test_ga_resblock_backward_branch_gradients():
    rng = np.random.default_rng(11)
    p = GaParams.random(2, 2, rng)
    b = ResidualBranchParams.random(2, rng)
    v = rng.uniform(0.1, 1.0, (2, 4, 4))
    upstream = rng.standard_normal(v.shape)
    _, _, branch_grads = ga_resblock_backward(v, p, b, upstream)

    def loss_with(name, value):
        fields = {"conv1": b.conv1, "bias1": b.bias1, "conv2": b.conv2, "bias2": b.bias2}
        fields[name] = value
        return float((ga_resblock(v, p, ResidualBranchParams(**fields)) * upstream).sum())

    for name in ("conv1", "bias1", "conv2", "bias2"):
        numeric = finite_diff_gradient(lambda x, n=name: loss_with(n, x), getattr(b, name).copy())
        assert max_relative_error(branch_grads[name], numeric) < 1e-4, name


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_ga_backward_gradient_property(seed):
    rng = np.random.default_rng(seed)
    p = GaParams.random(4, 4, rng)
    v = rng.standard_normal((4, 3, 3))
    upstream = rng.standard_normal(v.shape)
    d_v, _ = ga_backward(v, p, upstream)
    numeric = finite_diff_gradient(lambda x: float((ga_module(x, p) * upstream).sum()), v)
    assert max_relative_error(d_v, numeric) < 1e-4
