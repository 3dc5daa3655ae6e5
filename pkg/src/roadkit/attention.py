"""Global attention kernel: channel and spatial reweighting at desk scale.

Channel attention squeezes the map to a per-channel mean, runs it through a
two-layer bottleneck (reduction ratio r) with a sigmoid gate, and rescales
each channel. Spatial attention rescales each position by the sigmoid of the
channel mean. The residual block wraps a two-convolution branch whose output
is reweighted by the cascade before the skip addition.

Everything is plain numpy with hand-written reverse-mode derivatives so the
math can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class GaParams:
    """Bottleneck weights of the channel gate: C -> C/r -> C."""

    w1: np.ndarray  # (C/r, C)
    b1: np.ndarray  # (C/r,)
    w2: np.ndarray  # (C, C/r)
    b2: np.ndarray  # (C,)

    def __post_init__(self) -> None:
        hidden, channels = self.w1.shape
        if self.b1.shape != (hidden,):
            raise ValueError(f"b1 shape {self.b1.shape} does not match hidden size {hidden}")
        if self.w2.shape != (channels, hidden):
            raise ValueError(f"w2 shape {self.w2.shape} inconsistent with w1 {self.w1.shape}")
        if self.b2.shape != (channels,):
            raise ValueError(f"b2 shape {self.b2.shape} does not match channels {channels}")
        if channels % hidden != 0:
            raise ValueError(f"reduction must divide channels: C={channels}, hidden={hidden}")

    @property
    def channels(self) -> int:
        return self.w1.shape[1]

    @classmethod
    def random(cls, channels: int, reduction: int, rng: np.random.Generator) -> "GaParams":
        if channels % reduction != 0:
            raise ValueError(f"reduction {reduction} must divide channels {channels}")
        hidden = channels // reduction
        u = lambda *shape: rng.uniform(-0.1, 0.1, shape)
        return cls(u(hidden, channels), u(hidden), u(channels, hidden), u(channels))


@dataclass(frozen=True)
class ResidualBranchParams:
    """Two 3x3 same-padding convolutions with a rectifier between them."""

    conv1: np.ndarray  # (C, C, 3, 3)
    bias1: np.ndarray  # (C,)
    conv2: np.ndarray  # (C, C, 3, 3)
    bias2: np.ndarray  # (C,)

    @classmethod
    def random(cls, channels: int, rng: np.random.Generator) -> "ResidualBranchParams":
        u = lambda *shape: rng.uniform(-0.1, 0.1, shape)
        return cls(u(channels, channels, 3, 3), u(channels), u(channels, channels, 3, 3), u(channels))


def _check_feature_map(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 3:
        raise ValueError(f"expected a (C, H, W) feature map, got shape {v.shape}")
    return v


def channel_attention(v: np.ndarray, p: GaParams) -> np.ndarray:
    """Rescale each channel by a gate computed from its global average."""
    v = _check_feature_map(v)
    if v.shape[0] != p.channels:
        raise ValueError(f"feature map has {v.shape[0]} channels, params expect {p.channels}")
    u = v.mean(axis=(1, 2))
    gate = _sigmoid(p.w2 @ _relu(p.w1 @ u + p.b1) + p.b2)
    return v * gate[:, None, None]


def spatial_attention(v: np.ndarray) -> np.ndarray:
    """Rescale each position by the sigmoid of the channel mean (parameter-free)."""
    v = _check_feature_map(v)
    r = _sigmoid(v.mean(axis=0))
    return v * r[None, :, :]


def ga_module(v: np.ndarray, p: GaParams) -> np.ndarray:
    """Spatial attention cascaded after channel attention."""
    return spatial_attention(channel_attention(v, p))


def ga_backward(
    v: np.ndarray, p: GaParams, upstream: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Reverse-mode derivatives of ga_module.

    Returns (d/dv, {"w1","b1","w2","b2"}) for the scalar whose gradient with
    respect to the module output is ``upstream``.
    """
    v = _check_feature_map(v)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != v.shape:
        raise ValueError(f"upstream shape {upstream.shape} != input shape {v.shape}")
    c, h, w = v.shape
    area = h * w

    # Forward intermediates.
    u = v.mean(axis=(1, 2))
    a1 = p.w1 @ u + p.b1
    hid = _relu(a1)
    a2 = p.w2 @ hid + p.b2
    gate = _sigmoid(a2)
    v1 = v * gate[:, None, None]
    m = v1.mean(axis=0)
    r = _sigmoid(m)

    # v'' = v1 * r
    d_v1 = upstream * r[None, :, :]
    d_m = (upstream * v1).sum(axis=0) * r * (1.0 - r)
    d_v1 += d_m[None, :, :] / c

    # v1 = v * gate
    d_v = d_v1 * gate[:, None, None]
    d_gate = (d_v1 * v).sum(axis=(1, 2))

    d_a2 = d_gate * gate * (1.0 - gate)
    d_w2 = np.outer(d_a2, hid)
    d_b2 = d_a2
    d_hid = p.w2.T @ d_a2
    d_a1 = d_hid * (a1 > 0)
    d_w1 = np.outer(d_a1, u)
    d_b1 = d_a1
    d_u = p.w1.T @ d_a1
    d_v += d_u[:, None, None] / area

    return d_v, {"w1": d_w1, "b1": d_b1, "w2": d_w2, "b2": d_b2}


def conv3x3(v: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 convolution, stride 1, zero padding; weights are (Cout, Cin, 3, 3)."""
    v = _check_feature_map(v)
    padded = np.pad(v, ((0, 0), (1, 1), (1, 1)))
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    # windows: (Cin, H, W, 3, 3)
    return np.einsum("ihwkl,oikl->ohw", windows, weights) + bias[:, None, None]


def _conv3x3_backward(
    v: np.ndarray, weights: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(d/dv, d/dweights, d/dbias) of conv3x3."""
    padded = np.pad(v, ((0, 0), (1, 1), (1, 1)))
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    d_weights = np.einsum("ihwkl,ohw->oikl", windows, upstream)
    d_bias = upstream.sum(axis=(1, 2))
    # Input gradient: full correlation of upstream with flipped, transposed kernels.
    up_pad = np.pad(upstream, ((0, 0), (1, 1), (1, 1)))
    up_windows = np.lib.stride_tricks.sliding_window_view(up_pad, (3, 3), axis=(1, 2))
    flipped = weights[:, :, ::-1, ::-1]
    d_v = np.einsum("ohwkl,oikl->ihw", up_windows, flipped)
    return d_v, d_weights, d_bias


def residual_branch(v: np.ndarray, branch: ResidualBranchParams) -> np.ndarray:
    """conv -> rectifier -> conv, shape preserving."""
    return conv3x3(_relu(conv3x3(v, branch.conv1, branch.bias1)), branch.conv2, branch.bias2)


def ga_resblock(v: np.ndarray, p: GaParams, branch: ResidualBranchParams) -> np.ndarray:
    """Rectified skip addition of the attention-reweighted residual branch."""
    return _relu(v + ga_module(residual_branch(v, branch), p))


def ga_resblock_backward(
    v: np.ndarray, p: GaParams, branch: ResidualBranchParams, upstream: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Reverse-mode derivatives of ga_resblock: (d/dv, ga grads, branch grads)."""
    v = _check_feature_map(v)
    pre1 = conv3x3(v, branch.conv1, branch.bias1)
    act1 = _relu(pre1)
    b_out = conv3x3(act1, branch.conv2, branch.bias2)
    z = v + ga_module(b_out, p)

    d_z = np.asarray(upstream, dtype=np.float64) * (z > 0)
    d_v = d_z.copy()
    d_b_out, ga_grads = ga_backward(b_out, p, d_z)
    d_act1, d_conv2, d_bias2 = _conv3x3_backward(act1, branch.conv2, d_b_out)
    d_pre1 = d_act1 * (pre1 > 0)
    d_v2, d_conv1, d_bias1 = _conv3x3_backward(v, branch.conv1, d_pre1)
    d_v += d_v2
    branch_grads = {"conv1": d_conv1, "bias1": d_bias1, "conv2": d_conv2, "bias2": d_bias2}
    return d_v, ga_grads, branch_grads
