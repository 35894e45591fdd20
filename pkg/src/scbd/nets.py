"""Encoders, projection heads and the additive decoder.

Two architectures:

``mlp``
    flattens the input, two GELU hidden layers of width ``hidden``; the
    decoder mirrors it and reshapes to the input shape.
``conv``
    three stride-2 3x3 conv blocks (widths ``conv_widths``) then a global
    average pool; the decoder is a linear map to a feature map at 1/4
    resolution followed by two stride-2 transposed-conv blocks. Requires an
    image input (C, H, W) with H and W divisible by 8.

Projection heads are two-layer GELU MLPs with hidden width D_r and
unit-normalized output.
"""

from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import ndcore as nd
from .ndcore import Array

ARCHITECTURES = ("mlp", "conv")


@dataclass(frozen=True)
class ModelSpec:
    arch: str = "mlp"
    input_shape: tuple = (32,)
    d_zc: int = 128
    d_zs: int = 128
    hidden: int = 256
    conv_widths: tuple = (32, 64, 64)
    single_block: bool = False
    decoder: bool = True
    n_classes: int = 0  # >0 adds a linear classification head on r_c (ERM)

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"arch must be one of {ARCHITECTURES}, got {self.arch!r}")
        object.__setattr__(self, "input_shape", tuple(int(n) for n in self.input_shape))
        object.__setattr__(self, "conv_widths", tuple(int(n) for n in self.conv_widths))
        if min(self.d_zc, self.d_zs, self.hidden) < 1:
            raise ValueError("dims must be >= 1")
        if self.arch == "conv":
            if len(self.input_shape) != 3:
                raise ValueError(f"conv architecture needs (C, H, W) input, got {self.input_shape}")
            if self.input_shape[1] % 8 or self.input_shape[2] % 8:
                raise ValueError("conv architecture needs H and W divisible by 8")

    @property
    def d_x(self) -> int:
        return int(np.prod(self.input_shape))

    @property
    def d_r(self) -> int:
        return self.conv_widths[-1] if self.arch == "conv" else self.hidden

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ModelParams:
    spec: ModelSpec
    arrays: dict[str, Array] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Array:
        return self.arrays[name]

    def names(self, prefix: str = "") -> list[str]:
        return [k for k in self.arrays if k.startswith(prefix)]

    def has(self, prefix: str) -> bool:
        return any(k.startswith(prefix) for k in self.arrays)

    def to_numpy(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.arrays.items()}

    def to_numpy_view(self) -> dict[str, np.ndarray]:
        """Read-only views of the parameter data (no copy)."""
        return {k: v.data for k, v in self.arrays.items()}

    @classmethod
    def from_numpy(cls, spec: ModelSpec, arrays: dict[str, np.ndarray]) -> "ModelParams":
        return cls(spec, {k: Array(v, requires_grad=True, dtype=v.dtype, name=k) for k, v in arrays.items()})


@dataclass
class EmbeddingSet:
    r_c: Array
    z_c: Array
    r_s: Optional[Array] = None
    z_s: Optional[Array] = None


# initialization -----------------------------------------------------------

def kaiming_bound(fan_in: int) -> float:
    return float(np.sqrt(6.0 / fan_in))


def _layer_shapes(spec: ModelSpec) -> dict[str, tuple]:
    shapes: dict[str, tuple] = {}
    h, d_r = spec.hidden, spec.d_r

    def encoder(prefix):
        if spec.arch == "mlp":
            shapes[f"{prefix}.0.w"] = (spec.d_x, h)
            shapes[f"{prefix}.1.w"] = (h, h)
        else:
            c_in = spec.input_shape[0]
            for i, c_out in enumerate(spec.conv_widths):
                shapes[f"{prefix}.{i}.w"] = (c_out, c_in, 3, 3)
                c_in = c_out

    def projection(prefix, d_z):
        shapes[f"{prefix}.0.w"] = (d_r, d_r)
        shapes[f"{prefix}.1.w"] = (d_r, d_z)

    def decoder(prefix, d_z):
        if spec.arch == "mlp":
            shapes[f"{prefix}.0.w"] = (d_z, h)
            shapes[f"{prefix}.1.w"] = (h, h)
            shapes[f"{prefix}.2.w"] = (h, spec.d_x)
        else:
            c, hh, ww = spec.input_shape
            w0, w1 = spec.conv_widths[-1], spec.conv_widths[0]
            shapes[f"{prefix}.0.w"] = (d_z, w0 * (hh // 4) * (ww // 4))
            shapes[f"{prefix}.1.w"] = (w0, w1, 3, 3)
            shapes[f"{prefix}.2.w"] = (w1, c, 3, 3)

    encoder("enc_c")
    projection("proj_c", spec.d_zc)
    if not spec.single_block:
        encoder("enc_s")
        projection("proj_s", spec.d_zs)
    if spec.decoder:
        decoder("dec_c", spec.d_zc)
        if not spec.single_block:
            decoder("dec_s", spec.d_zs)
    if spec.n_classes:
        shapes["head.w"] = (d_r, spec.n_classes)
    return shapes


def _fan_in(shape: tuple) -> int:
    if len(shape) == 2:
        return shape[0]
    # conv (O, C, k, k) and transposed conv (C_in, C_out, k, k) alike use dim 1
    return shape[1] * shape[2] * shape[3]


def _bias_shape(name: str, shape: tuple) -> tuple:
    if len(shape) == 2 or name.startswith("dec"):
        return (shape[1],)
    return (shape[0],)


def init_params(seed: int, spec: ModelSpec) -> ModelParams:
    """Kaiming-uniform weights and zero biases, deterministic per seed.

    Each layer draws from its own stream keyed by (seed, layer name), so
    toggling optional sub-networks leaves the others unchanged.
    """
    arrays: dict[str, Array] = {}
    for name, shape in _layer_shapes(spec).items():
        rng = np.random.default_rng([int(seed), zlib.crc32(name.encode())])
        bound = kaiming_bound(_fan_in(shape))
        w = rng.uniform(-bound, bound, size=shape).astype(np.float32)
        arrays[name] = Array(w, requires_grad=True, name=name)
        bname = name[:-2] + ".b"
        arrays[bname] = Array(np.zeros(_bias_shape(name, shape), np.float32), requires_grad=True, name=bname)
    return ModelParams(spec, arrays)


# forward passes -----------------------------------------------------------

def _as_input(x, spec: ModelSpec) -> Array:
    x = x if isinstance(x, Array) else Array(x)
    if tuple(x.shape[1:]) != spec.input_shape:
        raise nd.ShapeError(f"encode: expected inputs of shape (N, {', '.join(map(str, spec.input_shape))}), got {x.shape}")
    return x


def _encoder(params: ModelParams, prefix: str, x: Array) -> Array:
    spec = params.spec
    if spec.arch == "mlp":
        h = nd.reshape(x, (x.shape[0], spec.d_x))
        h = nd.gelu(nd.linear(h, params[f"{prefix}.0.w"], params[f"{prefix}.0.b"]))
        return nd.gelu(nd.linear(h, params[f"{prefix}.1.w"], params[f"{prefix}.1.b"]))
    h = x
    for i in range(len(spec.conv_widths)):
        h = nd.gelu(nd.conv2d(h, params[f"{prefix}.{i}.w"], params[f"{prefix}.{i}.b"], stride=2, padding=1))
    return nd.mean(h, axis=(2, 3))


def _projection(params: ModelParams, prefix: str, r: Array) -> Array:
    h = nd.gelu(nd.linear(r, params[f"{prefix}.0.w"], params[f"{prefix}.0.b"]))
    return nd.l2_normalize(nd.linear(h, params[f"{prefix}.1.w"], params[f"{prefix}.1.b"]))


def encode(params: ModelParams, x, with_s: bool = True) -> EmbeddingSet:
    """Representations ``r`` and unit-norm embeddings ``z`` for a batch."""
    spec = params.spec
    x = _as_input(x, spec)
    r_c = _encoder(params, "enc_c", x)
    z_c = _projection(params, "proj_c", r_c)
    if spec.single_block or not with_s:
        return EmbeddingSet(r_c=r_c, z_c=z_c)
    r_s = _encoder(params, "enc_s", x)
    z_s = _projection(params, "proj_s", r_s)
    return EmbeddingSet(r_c=r_c, z_c=z_c, r_s=r_s, z_s=z_s)


def _decoder(params: ModelParams, prefix: str, z: Array) -> Array:
    spec = params.spec
    n = z.shape[0]
    if spec.arch == "mlp":
        h = nd.gelu(nd.linear(z, params[f"{prefix}.0.w"], params[f"{prefix}.0.b"]))
        h = nd.gelu(nd.linear(h, params[f"{prefix}.1.w"], params[f"{prefix}.1.b"]))
        out = nd.linear(h, params[f"{prefix}.2.w"], params[f"{prefix}.2.b"])
        return nd.reshape(out, (n,) + spec.input_shape)
    _, hh, ww = spec.input_shape
    w0 = spec.conv_widths[-1]
    h = nd.gelu(nd.linear(z, params[f"{prefix}.0.w"], params[f"{prefix}.0.b"]))
    h = nd.reshape(h, (n, w0, hh // 4, ww // 4))
    h = nd.gelu(nd.conv_transpose2d(h, params[f"{prefix}.1.w"], params[f"{prefix}.1.b"],
                                    stride=2, padding=1, output_padding=1))
    return nd.conv_transpose2d(h, params[f"{prefix}.2.w"], params[f"{prefix}.2.b"],
                               stride=2, padding=1, output_padding=1)


def decode(params: ModelParams, z_c, z_s=None) -> Array:
    """``Dec_c(z_c) + Dec_s(z_s)``; ``z_s`` is ignored for single-block models."""
    spec = params.spec
    if not spec.decoder:
        raise ValueError("decode: model was built without a decoder")
    z_c = z_c if isinstance(z_c, Array) else Array(z_c)
    if z_c.ndim != 2 or z_c.shape[1] != spec.d_zc:
        raise nd.ShapeError(f"decode: z_c must be (N, {spec.d_zc}), got {z_c.shape}")
    out = _decoder(params, "dec_c", z_c)
    if spec.single_block or z_s is None:
        return out
    z_s = z_s if isinstance(z_s, Array) else Array(z_s)
    if z_s.shape != (z_c.shape[0], spec.d_zs):
        raise nd.ShapeError(f"decode: z_s must be ({z_c.shape[0]}, {spec.d_zs}), got {z_s.shape}")
    return out + _decoder(params, "dec_s", z_s)


def classify(params: ModelParams, x) -> Array:
    """Logits of the linear head on ``r_c`` (ERM baseline)."""
    if not params.spec.n_classes:
        raise ValueError("classify: model has no classification head")
    r_c = _encoder(params, "enc_c", _as_input(x, params.spec))
    return nd.linear(r_c, params["head.w"], params["head.b"])


def cross_entropy(logits: Array, labels) -> Array:
    labels = np.asarray(labels).reshape(-1)
    onehot = np.zeros(logits.shape, dtype=logits.dtype)
    onehot[np.arange(len(labels)), labels] = 1.0
    return -nd.mean(nd.sum(nd.log_softmax(logits) * Array(onehot, dtype=logits.dtype), axis=1))
