"""Temporal convolutional sequence labeller with hand-written backpropagation.

Architecture (activations are laid out as (batch, frames, channels)):

    features --1x1 conv--> bottleneck (B)
      -> num_blocks x [ layers_per_block x (dilated conv k=3 -> frame norm -> ReLU) + residual ]
      -> 1x1 conv -> softmax (classification) or identity (regression)

Inside a block the first layer maps B -> H, the middle layers H -> H and the
last layer H -> B so the residual can be added. Convolutions are non-causal
with zero "same" padding, so the output has as many frames as the input.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

NORM_EPS = 1e-5


@dataclass(frozen=True)
class TCNConfig:
    input_dim: int
    output_dim: int = 2
    head: str = "class_posterior"  # or "linear"
    bottleneck_dim: int = 64
    hidden_dim: int = 80
    kernel_size: int = 3
    num_blocks: int = 3
    layers_per_block: int = 5
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("input_dim", "output_dim", "bottleneck_dim", "hidden_dim", "kernel_size",
                     "num_blocks", "layers_per_block"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd for same-length convolutions")
        if self.head not in ("class_posterior", "linear"):
            raise ValueError(f"unknown head {self.head!r}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    @classmethod
    def for_task(cls, task: str, input_dim: int, **kw) -> "TCNConfig":
        if task == "scd":
            return cls(input_dim=input_dim, output_dim=1, head="linear", **kw)
        return cls(input_dim=input_dim, output_dim=2, head="class_posterior", **kw)

    @property
    def dilations(self) -> tuple:
        return tuple(2 ** i for i in range(self.layers_per_block))

    @property
    def receptive_field(self) -> int:
        return 1 + self.num_blocks * (self.kernel_size - 1) * sum(self.dilations)

    def layer_dims(self):
        """(name, in_channels, out_channels, dilation) of every dilated conv layer."""
        out = []
        for b in range(self.num_blocks):
            for l, d in enumerate(self.dilations):
                cin = self.bottleneck_dim if l == 0 else self.hidden_dim
                cout = self.bottleneck_dim if l == self.layers_per_block - 1 else self.hidden_dim
                out.append((f"block{b}.layer{l}", cin, cout, d))
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def param_shapes(config: TCNConfig) -> dict:
    shapes = {"bottleneck.w": (config.input_dim, config.bottleneck_dim),
              "bottleneck.b": (config.bottleneck_dim,)}
    for name, cin, cout, _ in config.layer_dims():
        shapes[f"{name}.w"] = (config.kernel_size * cin, cout)
        shapes[f"{name}.b"] = (cout,)
        shapes[f"{name}.gamma"] = (cout,)
        shapes[f"{name}.beta"] = (cout,)
    shapes["head.w"] = (config.bottleneck_dim, config.output_dim)
    shapes["head.b"] = (config.output_dim,)
    return shapes


def param_count(config: TCNConfig) -> int:
    """Number of trainable parameters, in closed form."""
    k, b, h = config.kernel_size, config.bottleneck_dim, config.hidden_dim
    n = config.input_dim * b + b
    for _, cin, cout, _ in config.layer_dims():
        n += k * cin * cout + 3 * cout
    return n + b * config.output_dim + config.output_dim


def init_weights(config: TCNConfig, rng: np.random.Generator) -> dict:
    dtype = np.dtype(config.dtype)
    weights = {}
    for name, shape in param_shapes(config).items():
        if name.endswith(".gamma"):
            w = np.ones(shape)
        elif name.endswith((".b", ".beta")):
            w = np.zeros(shape)
        elif name == "head.w":
            w = rng.normal(0.0, 0.1 / np.sqrt(shape[0]), shape)
        else:
            w = rng.normal(0.0, np.sqrt(2.0 / shape[0]), shape)
        weights[name] = w.astype(dtype)
    return weights


def _im2col(x: np.ndarray, k: int, dilation: int) -> np.ndarray:
    n, t, c = x.shape
    p = (k - 1) // 2 * dilation
    xp = np.zeros((n, t + 2 * p, c), dtype=x.dtype)
    xp[:, p:p + t] = x
    return np.concatenate([xp[:, i * dilation:i * dilation + t] for i in range(k)], axis=2)


def _col2im(dcols: np.ndarray, k: int, dilation: int, c: int) -> np.ndarray:
    n, t, _ = dcols.shape
    p = (k - 1) // 2 * dilation
    dxp = np.zeros((n, t + 2 * p, c), dtype=dcols.dtype)
    for i in range(k):
        dxp[:, i * dilation:i * dilation + t] += dcols[:, :, i * c:(i + 1) * c]
    return dxp[:, p:p + t]


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


class TCN:
    """The network: ``config`` plus a dict of named weight arrays."""

    def __init__(self, config: TCNConfig, weights: dict | None = None, seed: int = 0):
        self.config = config
        if weights is None:
            weights = init_weights(config, np.random.default_rng(seed))
        expected = param_shapes(config)
        if set(weights) != set(expected):
            raise ValueError("weight names do not match the configuration")
        for name, shape in expected.items():
            if tuple(weights[name].shape) != shape:
                raise ValueError(f"{name} has shape {weights[name].shape}, expected {shape}")
        dtype = np.dtype(config.dtype)
        self.weights = {k: np.asarray(weights[k], dtype=dtype) for k in expected}
        self._cache = None

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights.values())

    # forward / backward -------------------------------------------------

    def logits(self, x: np.ndarray, keep: bool = False) -> np.ndarray:
        """Pre-head outputs for a (batch, frames, features) input."""
        cfg, w = self.config, self.weights
        x = np.asarray(x, dtype=np.dtype(cfg.dtype))
        if x.ndim != 3 or x.shape[2] != cfg.input_dim:
            raise ValueError(f"expected (batch, frames, {cfg.input_dim}) input, got {x.shape}")
        cache = {"x": x}
        h = x @ w["bottleneck.w"] + w["bottleneck.b"]
        layers = cfg.layer_dims()
        per_block = cfg.layers_per_block
        for bi in range(cfg.num_blocks):
            block_in = h
            for name, _, _, d in layers[bi * per_block:(bi + 1) * per_block]:
                cols = _im2col(h, cfg.kernel_size, d)
                z = cols @ w[f"{name}.w"] + w[f"{name}.b"]
                mu = z.mean(axis=2, keepdims=True)
                zc = z - mu
                inv = 1.0 / np.sqrt((zc * zc).mean(axis=2, keepdims=True) + NORM_EPS)
                zhat = zc * inv
                a = zhat * w[f"{name}.gamma"] + w[f"{name}.beta"]
                h = np.maximum(a, 0.0)
                if keep:
                    cache[name] = (cols, zhat, inv, a > 0)
            h = block_in + h
        if keep:
            cache["top"] = h
            self._cache = cache
        return h @ w["head.w"] + w["head.b"]

    def forward(self, x: np.ndarray, keep: bool = False) -> np.ndarray:
        """Posteriors (softmax head) or regression outputs, shape (batch, frames, C)."""
        z = self.logits(x, keep)
        return softmax(z) if self.config.head == "class_posterior" else z

    def backward(self, dlogits: np.ndarray) -> dict:
        """Gradients of all weights given d(loss)/d(logits) from the last ``keep=True`` pass."""
        if self._cache is None:
            raise RuntimeError("backward() needs a preceding forward pass with keep=True")
        cfg, w, cache = self.config, self.weights, self._cache
        dtype = np.dtype(cfg.dtype)
        dlogits = np.asarray(dlogits, dtype=dtype)
        grads = {}
        top = cache["top"]
        grads["head.w"] = top.reshape(-1, top.shape[2]).T @ dlogits.reshape(-1, dlogits.shape[2])
        grads["head.b"] = dlogits.sum(axis=(0, 1))
        dh = dlogits @ w["head.w"].T

        layers = cfg.layer_dims()
        per_block = cfg.layers_per_block
        for bi in reversed(range(cfg.num_blocks)):
            dres = dh
            for name, cin, cout, d in reversed(layers[bi * per_block:(bi + 1) * per_block]):
                cols, zhat, inv, active = cache[name]
                da = dh * active
                grads[f"{name}.gamma"] = (da * zhat).sum(axis=(0, 1))
                grads[f"{name}.beta"] = da.sum(axis=(0, 1))
                dzhat = da * w[f"{name}.gamma"]
                dz = inv * (dzhat - dzhat.mean(axis=2, keepdims=True)
                            - zhat * (dzhat * zhat).mean(axis=2, keepdims=True))
                grads[f"{name}.w"] = cols.reshape(-1, cols.shape[2]).T @ dz.reshape(-1, cout)
                grads[f"{name}.b"] = dz.sum(axis=(0, 1))
                dh = _col2im(dz @ w[f"{name}.w"].T, cfg.kernel_size, d, cin)
            dh = dh + dres

        x = cache["x"]
        grads["bottleneck.w"] = x.reshape(-1, x.shape[2]).T @ dh.reshape(-1, dh.shape[2])
        grads["bottleneck.b"] = dh.sum(axis=(0, 1))
        return {k: grads[k].astype(dtype) for k in w}

    def loss_and_grads(self, x: np.ndarray, targets: np.ndarray, task: str):
        """Mean loss over all frames and its gradient for every weight."""
        z = self.logits(x, keep=True)
        value, dz = loss_from_logits(z, targets, task, self.config.head)
        grads = self.backward(dz)
        bad = [k for k, g in grads.items() if not np.all(np.isfinite(g))]
        if bad or not np.isfinite(value):
            raise FloatingPointError(f"non-finite loss ({value}) or gradients in: {', '.join(bad) or 'none'}")
        return value, grads


def loss_from_logits(z: np.ndarray, targets: np.ndarray, task: str, head: str):
    """Loss and d(loss)/d(logits) for a batch of (batch, frames, C) logits."""
    n = z.shape[0] * z.shape[1]
    if task in ("vad", "osd"):
        if head != "class_posterior":
            raise ValueError("classification tasks need a softmax head")
        y = np.asarray(targets).astype(np.int64)
        zs = z - z.max(axis=2, keepdims=True)
        logp = zs - np.log(np.exp(zs).sum(axis=2, keepdims=True))
        picked = np.take_along_axis(logp, y[..., None], axis=2)[..., 0]
        grad = np.exp(logp)
        np.put_along_axis(grad, y[..., None], np.take_along_axis(grad, y[..., None], axis=2) - 1.0, axis=2)
        return float(-picked.sum() / n), grad / n
    if task == "scd":
        diff = z[..., 0] - np.asarray(targets, dtype=z.dtype)
        return float((diff * diff).sum() / n), (2.0 * diff / n)[..., None]
    raise ValueError(f"unknown task {task!r}")


def loss(predictions: np.ndarray, targets: np.ndarray, task: str) -> float:
    """Mean frame loss of network outputs (posteriors for vad/osd, curve for scd).

    Accepts (C, T) or (batch, frames, C) predictions, with targets shaped (T,)
    or (batch, frames) respectively.
    """
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets)
    if p.ndim == 2:
        p = p.T[None]
        t = t[None]
    if task in ("vad", "osd"):
        picked = np.take_along_axis(p, t.astype(np.int64)[..., None], axis=2)[..., 0]
        return float(-np.mean(np.log(np.maximum(picked, np.finfo(np.float64).tiny))))
    if task == "scd":
        return float(np.mean((p[..., 0] - t) ** 2))
    raise ValueError(f"unknown task {task!r}")


def forward(weights: dict, config: TCNConfig, features: np.ndarray) -> np.ndarray:
    """Run the network on one (F, T) feature matrix; returns a (C, T) array."""
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[0] != config.input_dim:
        raise ValueError(f"expected ({config.input_dim}, T) features, got {features.shape}")
    return TCN(config, weights).forward(features.T[None])[0].T


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        """Update ``params`` in place."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in params.items():
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)
            p -= (self.lr / bc1) * self.m[k] / (np.sqrt(self.v[k] / bc2) + self.eps)

    def state_dict(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}


def adam_step(weights: dict, gradients: dict, state: Adam) -> dict:
    state.step(weights, gradients)
    return weights
