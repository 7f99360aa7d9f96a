"""Neural-network layers with explicit forward/backward passes.

Every layer is a stateless configuration object: parameters live in plain
``{name: ndarray}`` dicts so they can be checkpointed, finite-difference
checked and updated by the optimizer without touching layer internals.
Activations are batch-first; convolutions use NHWC layout.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataValidationError


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x):
    return np.maximum(x, 0.0)


def _uniform_init(rng, shape, fan_in):
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _require_shape(x, expected_tail, layer):
    if x.shape[1:] != tuple(expected_tail):
        raise DataValidationError(
            f"{layer}: expected input of shape (N, {', '.join(map(str, expected_tail))}), "
            f"got {x.shape}"
        )


class Dense:
    """Affine map y = x W + b."""

    def __init__(self, in_dim, out_dim, name="dense"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.name = name

    def init_params(self, rng):
        return {
            "W": _uniform_init(rng, (self.in_dim, self.out_dim), self.in_dim),
            "b": np.zeros(self.out_dim),
        }

    def forward(self, params, x, train=False, rng=None):
        _require_shape(x, (self.in_dim,), self.name)
        return x @ params["W"] + params["b"], (x,)

    def backward(self, params, cache, grad_out):
        (x,) = cache
        grads = {"W": x.T @ grad_out, "b": grad_out.sum(axis=0)}
        return grad_out @ params["W"].T, grads


class Conv2D:
    """Same-padding, stride-1 2-D convolution with optional ReLU."""

    def __init__(self, in_channels, out_channels, kernel=3, use_relu=True, name="conv"):
        if kernel % 2 != 1:
            raise DataValidationError(f"{name}: kernel size must be odd, got {kernel}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.use_relu = use_relu
        self.name = name

    def init_params(self, rng):
        k = self.kernel
        fan_in = k * k * self.in_channels
        return {
            "W": _uniform_init(rng, (k, k, self.in_channels, self.out_channels), fan_in),
            "b": np.zeros(self.out_channels),
        }

    def _im2col(self, x):
        k = self.kernel
        pad = (k - 1) // 2
        xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
        win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
        n, h, w, c = x.shape
        return win.transpose(0, 1, 2, 4, 5, 3).reshape(n, h, w, k * k * c)

    def _col2im(self, dcols, x_shape):
        n, h, w, c = x_shape
        k = self.kernel
        pad = (k - 1) // 2
        dxp = np.zeros((n, h + 2 * pad, w + 2 * pad, c))
        d = dcols.reshape(n, h, w, k, k, c)
        for i in range(k):
            for j in range(k):
                dxp[:, i : i + h, j : j + w, :] += d[:, :, :, i, j, :]
        return dxp[:, pad : pad + h, pad : pad + w, :]

    def forward(self, params, x, train=False, rng=None):
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise DataValidationError(
                f"{self.name}: expected NHWC input with {self.in_channels} channels, "
                f"got shape {x.shape}"
            )
        cols = self._im2col(x)
        k = self.kernel
        wmat = params["W"].reshape(k * k * self.in_channels, self.out_channels)
        z = cols @ wmat + params["b"]
        y = relu(z) if self.use_relu else z
        return y, (x.shape, cols, z)

    def backward(self, params, cache, grad_out):
        x_shape, cols, z = cache
        dz = grad_out * (z > 0) if self.use_relu else grad_out
        k = self.kernel
        kkc = k * k * self.in_channels
        dz_flat = dz.reshape(-1, self.out_channels)
        grads = {
            "W": (cols.reshape(-1, kkc).T @ dz_flat).reshape(params["W"].shape),
            "b": dz_flat.sum(axis=0),
        }
        dcols = dz @ params["W"].reshape(kkc, self.out_channels).T
        return self._col2im(dcols, x_shape), grads


class MaxPool2D:
    """Non-overlapping max pooling; odd trailing rows/columns are dropped."""

    def __init__(self, pool=2, name="pool"):
        self.pool = pool
        self.name = name

    def init_params(self, rng):
        return {}

    def forward(self, params, x, train=False, rng=None):
        if x.ndim != 4:
            raise DataValidationError(f"{self.name}: expected NHWC input, got {x.shape}")
        n, h, w, c = x.shape
        p = self.pool
        h2, w2 = h // p, w // p
        if h2 == 0 or w2 == 0:
            raise DataValidationError(f"{self.name}: input {x.shape} smaller than pool {p}")
        xc = x[:, : h2 * p, : w2 * p, :]
        xf = xc.reshape(n, h2, p, w2, p, c).transpose(0, 1, 3, 2, 4, 5)
        xf = xf.reshape(n, h2, w2, p * p, c)
        idx = xf.argmax(axis=3)
        y = np.take_along_axis(xf, idx[:, :, :, None, :], axis=3).squeeze(3)
        return y, (x.shape, idx)

    def backward(self, params, cache, grad_out):
        x_shape, idx = cache
        n, h, w, c = x_shape
        p = self.pool
        h2, w2 = h // p, w // p
        dxf = np.zeros((n, h2, w2, p * p, c))
        np.put_along_axis(dxf, idx[:, :, :, None, :], grad_out[:, :, :, None, :], axis=3)
        dxc = dxf.reshape(n, h2, w2, p, p, c).transpose(0, 1, 3, 2, 4, 5)
        dxc = dxc.reshape(n, h2 * p, w2 * p, c)
        dx = np.zeros(x_shape)
        dx[:, : h2 * p, : w2 * p, :] = dxc
        return dx, {}


class Dropout:
    """Inverted dropout: scaling happens at train time, eval is the identity."""

    def __init__(self, rate, name="dropout"):
        if not 0.0 <= rate < 1.0:
            raise DataValidationError(f"{name}: dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.name = name

    def init_params(self, rng):
        return {}

    def forward(self, params, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            return x, (None,)
        if rng is None:
            raise DataValidationError(f"{self.name}: train-mode forward needs an rng")
        mask = rng.random(x.shape) >= self.rate
        scale = 1.0 / (1.0 - self.rate)
        return x * mask * scale, (mask,)

    def backward(self, params, cache, grad_out):
        (mask,) = cache
        if mask is None:
            return grad_out, {}
        return grad_out * mask / (1.0 - self.rate), {}


class LSTM:
    """Single-layer LSTM over a (N, T, D) sequence, returning the final
    hidden state.

    Gate order in the packed weight matrices is input, forget, cell, output;
    gate activations are sigmoid and the cell activation is tanh.
    """

    def __init__(self, in_dim, hidden, name="lstm"):
        self.in_dim = in_dim
        self.hidden = hidden
        self.name = name

    def init_params(self, rng):
        h = self.hidden
        return {
            "Wx": _uniform_init(rng, (self.in_dim, 4 * h), self.in_dim),
            "Wh": _uniform_init(rng, (h, 4 * h), h),
            "b": np.zeros(4 * h),
        }

    def forward(self, params, x, train=False, rng=None):
        if x.ndim != 3 or x.shape[2] != self.in_dim:
            raise DataValidationError(
                f"{self.name}: expected (N, T, {self.in_dim}) input, got {x.shape}"
            )
        n, t, _ = x.shape
        hdim = self.hidden
        h = np.zeros((n, hdim))
        c = np.zeros((n, hdim))
        steps = []
        for ti in range(t):
            xt = x[:, ti, :]
            z = xt @ params["Wx"] + h @ params["Wh"] + params["b"]
            i = sigmoid(z[:, :hdim])
            f = sigmoid(z[:, hdim : 2 * hdim])
            g = np.tanh(z[:, 2 * hdim : 3 * hdim])
            o = sigmoid(z[:, 3 * hdim :])
            c_new = f * c + i * g
            h_new = o * np.tanh(c_new)
            steps.append((xt, h, c, i, f, g, o, c_new))
            h, c = h_new, c_new
        return h, (x.shape, steps)

    def backward(self, params, cache, grad_out):
        x_shape, steps = cache
        n, t, d = x_shape
        hdim = self.hidden
        dwx = np.zeros_like(params["Wx"])
        dwh = np.zeros_like(params["Wh"])
        db = np.zeros_like(params["b"])
        dx = np.zeros(x_shape)
        dh = grad_out
        dc = np.zeros((n, hdim))
        for ti in reversed(range(t)):
            xt, h_prev, c_prev, i, f, g, o, c_new = steps[ti]
            tanh_c = np.tanh(c_new)
            do = dh * tanh_c
            dct = dc + dh * o * (1.0 - tanh_c * tanh_c)
            di = dct * g
            df = dct * c_prev
            dg = dct * i
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dwx += xt.T @ dz
            dwh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, ti, :] = dz @ params["Wx"].T
            dh = dz @ params["Wh"].T
            dc = dct * f
        return dx, {"Wx": dwx, "Wh": dwh, "b": db}


class Softmax:
    """Row-wise softmax over the last axis."""

    def __init__(self, name="softmax"):
        self.name = name

    def init_params(self, rng):
        return {}

    def forward(self, params, x, train=False, rng=None):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=-1, keepdims=True)
        return y, (y,)

    def backward(self, params, cache, grad_out):
        (y,) = cache
        inner = (grad_out * y).sum(axis=-1, keepdims=True)
        return y * (grad_out - inner), {}
