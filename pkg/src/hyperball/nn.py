"""Manifold-agnostic neural network layers.

Every layer takes a manifold object at construction and routes its forward
pass through that manifold's operations, so the same layer class works on
Euclidean space (where it reduces exactly to the textbook layer) and on the
Poincare ball.  Inputs and outputs are ManifoldTensors; compatibility checks
fire on any cross-manifold or misaligned-axis use.
"""

from __future__ import annotations

import numpy as np

from .autodiff import (
    Graph,
    Tensor,
    exp as texp,
    log as tlog,
    maximum,
    no_grad,
    relu,
    reshape,
    sqrt,
    take,
    tmean,
    transpose,
    tsum,
    unfold2d,
)
from .errors import ContractError, DimensionError, ManifoldMismatchError, ShapeError
from .manifolds import Euclidean, Manifold, PoincareBall, beta_half
from .manifolds.base import matrix_apply
from .tensors import ManifoldParameter, ManifoldTensor, TangentTensor, make_tangent_tensor


class Parameter(Tensor):
    """A plain (Euclidean) trainable tensor."""

    def __init__(self, data):
        super().__init__(data, requires_grad=True)
        self._registered_with = None


class Module:
    """Minimal layer container: tracks parameters, children, and train mode."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, (Parameter, ManifoldParameter)):
            self._params[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = ""):
        for name, p in self._params.items():
            yield prefix + name, p
        for name, child in self._children.items():
            yield from child.named_parameters(prefix + name + ".")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def train(self):
        object.__setattr__(self, "training", True)
        for child in self._children.values():
            child.train()
        return self

    def eval(self):
        object.__setattr__(self, "training", False)
        for child in self._children.values():
            child.eval()
        return self

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def _reset_parameters(self, rng: np.random.Generator) -> None:
        pass

    def _init_recursive(self, rng: np.random.Generator) -> None:
        self._reset_parameters(rng)
        for child in self._children.values():
            child._init_recursive(rng)


def init_parameters(module: Module, seed: int) -> None:
    """Reinitialize all parameters of ``module`` from one seeded generator.

    Weight matrices draw from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); manifold
    point parameters are exp_0 of N(0, 0.01^2) tangent noise; scales reset
    to 1.  Same seed, same bits.
    """
    module._init_recursive(np.random.default_rng(seed))


def _init_weight(param: Parameter, fan_in: int, rng: np.random.Generator) -> None:
    bound = 1.0 / np.sqrt(fan_in)
    param.data[...] = rng.uniform(-bound, bound, size=param.shape)


def _init_point(param: ManifoldParameter, rng: np.random.Generator) -> None:
    noise = rng.normal(0.0, 0.01, size=param.shape)
    with no_grad():
        param.tensor.data[...] = param.manifold.expmap0(Tensor(noise), param.man_dim).data


def _check_input(layer, x: ManifoldTensor, extent: int | None = None) -> None:
    if x.manifold is not layer.manifold:
        raise ManifoldMismatchError(
            f"{type(layer).__name__} built on {layer.manifold!r} got input on {x.manifold!r}")
    if extent is not None and x.shape[x.man_dim] != extent:
        raise DimensionError(
            f"{type(layer).__name__} expects man_dim extent {extent}, got {x.shape[x.man_dim]}")


def lift_to_manifold(x, manifold: Manifold, man_dim: int = -1) -> ManifoldTensor:
    """Treat raw values as origin tangent vectors and push them onto the manifold.

    This is the standard way of feeding Euclidean data (images, features) to
    a network acting on a curved manifold; on Euclidean space it is an
    identity wrap.
    """
    t = make_tangent_tensor(x, manifold, base=None, man_dim=man_dim)
    y = manifold.expmap0(t.vectors, t.man_dim)
    return ManifoldTensor(y, manifold, t.man_dim)


class HLinear(Module):
    """Affine layer: Mobius matrix product plus a point-valued bias.

    Ball: y = project((W (x) x) (+) b).  Euclidean: y = W x + b exactly.
    """

    def __init__(self, manifold: Manifold, in_features: int, out_features: int):
        super().__init__()
        self.manifold = manifold
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(np.zeros((out_features, in_features)))
        self.bias = ManifoldParameter(np.zeros(out_features), manifold, man_dim=0)
        self._reset_parameters(np.random.default_rng(0))

    def _reset_parameters(self, rng):
        _init_weight(self.weight, self.in_features, rng)
        _init_point(self.bias, rng)

    def forward(self, x: ManifoldTensor) -> ManifoldTensor:
        _check_input(self, x, self.in_features)
        dim = x.man_dim
        bshape = [1] * x.tensor.ndim
        bshape[dim] = self.out_features
        b = reshape(self.bias.tensor, tuple(bshape))
        if isinstance(self.manifold, Euclidean):
            y = matrix_apply(self.weight, x.tensor, dim) + b
        else:
            y = self.manifold.mobius_add(self.manifold.matvec(self.weight, x.tensor, dim), b, dim)
        return ManifoldTensor(y, self.manifold, dim)


class HConv2d(Module):
    """2-d convolution over channel-points.

    Feature maps are N x C x H x W with man_dim=1: the channel vector at each
    spatial location is one manifold point.  Each receptive field's kh*kw
    points are concatenated through the origin tangent space (with Beta-ratio
    scaling unless ``beta_scaling=False``) into a single point of dimension
    C*kh*kw, which an HLinear maps to the output channels.  On Euclidean
    space this is exactly standard cross-correlation plus bias.
    """

    def __init__(self, manifold: Manifold, in_channels: int, out_channels: int,
                 kernel_size, stride=1, padding=0, beta_scaling: bool = True):
        super().__init__()
        self.manifold = manifold
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = _pair(kernel_size)
        self.stride = _pair(stride)
        self.padding = _pair(padding)
        self.beta_scaling = beta_scaling
        kh, kw = self.kernel_size
        self.linear = HLinear(manifold, in_channels * kh * kw, out_channels)

    def forward(self, x: ManifoldTensor) -> ManifoldTensor:
        _check_input(self, x, self.in_channels)
        if x.tensor.ndim != 4 or x.man_dim != 1:
            raise DimensionError("HConv2d expects N x C x H x W input with man_dim=1")
        n, c, h, w = x.shape
        kh, kw = self.kernel_size
        sh, sw = self.stride
        ph, pw = self.padding
        out_h = (h + 2 * ph - kh) // sh + 1
        out_w = (w + 2 * pw - kw) // sw + 1

        ball = isinstance(self.manifold, PoincareBall)
        u = self.manifold.logmap0(x.tensor, 1) if ball else x.tensor
        cols = unfold2d(u, self.kernel_size, self.stride, self.padding)
        if ball:
            if self.beta_scaling:
                cols = cols * (beta_half(c * kh * kw) / beta_half(c))
            cols = self.manifold.expmap0(cols, 1)
        y = self.linear(ManifoldTensor(cols, self.manifold, 1))
        out = reshape(y.tensor, (n, self.out_channels, out_h, out_w))
        return ManifoldTensor(out, self.manifold, 1)


class HReLU(Module):
    """ReLU lifted through the origin: exp_0(relu(log_0(x)))."""

    def __init__(self, manifold: Manifold):
        super().__init__()
        self.manifold = manifold

    def forward(self, x: ManifoldTensor) -> ManifoldTensor:
        _check_input(self, x)
        dim = x.man_dim
        if isinstance(self.manifold, Euclidean):
            return ManifoldTensor(relu(x.tensor), self.manifold, dim)
        y = self.manifold.expmap0(relu(self.manifold.logmap0(x.tensor, dim)), dim)
        return ManifoldTensor(y, self.manifold, dim)


class HPool2d(Module):
    """Spatial pooling of channel-points.

    ``max``: coordinatewise max over the window in the origin tangent space
    (equals standard max pooling on Euclidean space).  ``avg``: Frechet mean
    of the window's points (equals average pooling on Euclidean space).
    Padding is not supported: padded origin points would enter the aggregate.
    """

    def __init__(self, manifold: Manifold, kind: str = "max", window=2, stride=None):
        super().__init__()
        if kind not in ("max", "avg"):
            raise ContractError(f"pooling kind must be 'max' or 'avg', got {kind!r}")
        self.manifold = manifold
        self.kind = kind
        self.window = _pair(window)
        self.stride = _pair(stride) if stride is not None else self.window

    def forward(self, x: ManifoldTensor) -> ManifoldTensor:
        _check_input(self, x)
        if x.tensor.ndim != 4 or x.man_dim != 1:
            raise DimensionError("HPool2d expects N x C x H x W input with man_dim=1")
        n, c, h, w = x.shape
        wh, ww = self.window
        sh, sw = self.stride
        out_h = (h - wh) // sh + 1
        out_w = (w - ww) // sw + 1
        kk = wh * ww
        ball = isinstance(self.manifold, PoincareBall)

        if self.kind == "max":
            u = self.manifold.logmap0(x.tensor, 1) if ball else x.tensor
            cols = reshape(unfold2d(u, self.window, self.stride), (n, c, kk, out_h * out_w))
            best = cols[:, :, 0, :]
            for k in range(1, kk):
                best = maximum(best, cols[:, :, k, :])
            out = reshape(best, (n, c, out_h, out_w))
            if ball:
                out = self.manifold.expmap0(out, 1)
        else:
            cols = reshape(unfold2d(x.tensor, self.window, self.stride), (n, c, kk, out_h * out_w))
            mean = self.manifold.frechet_mean(cols, reduce_dim=2, man_dim=1)
            out = reshape(mean, (n, c, out_h, out_w))
        return ManifoldTensor(out, self.manifold, 1)


class HBatchNorm(Module):
    """Batch normalization by Frechet statistics.

    Train mode recenters the batch from its Frechet mean onto the learned
    point ``bias`` (via parallel transport of logarithms) and rescales the
    transported tangents by scale/sqrt(variance + 1e-5); running statistics
    follow with momentum 0.1.  Eval mode applies the same transform using the
    running statistics.  On Euclidean space this is exactly
    y = bias + scale*(x - mean)/sqrt(var + 1e-5) with a scalar variance.
    """

    EPS = 1e-5

    def __init__(self, manifold: Manifold, num_features: int, momentum: float = 0.1):
        super().__init__()
        self.manifold = manifold
        self.num_features = num_features
        self.momentum = momentum
        self.bias = ManifoldParameter(np.zeros(num_features), manifold, man_dim=0)
        self.scale = Parameter(1.0)
        self.running_mean = np.zeros(num_features)
        self.running_var = 1.0

    def _reset_parameters(self, rng):
        _init_point(self.bias, rng)
        self.scale.data[...] = 1.0
        self.running_mean[...] = 0.0
        self.running_var = 1.0

    def forward(self, x: ManifoldTensor) -> ManifoldTensor:
        _check_input(self, x, self.num_features)
        dim = x.man_dim
        perm = [i for i in range(x.tensor.ndim) if i != dim] + [dim]
        moved = transpose(x.tensor, perm)
        lead = moved.shape[:-1]
        flat = reshape(moved, (-1, self.num_features))
        batch = flat.shape[0]

        if self.training:
            if batch < 2:
                raise ContractError("batch normalization needs at least 2 points in train mode")
            mu = self.manifold.frechet_mean(flat, 0, 1, keepdims=True)
            var = self.manifold.frechet_variance(flat, mu, 0, 1, keepdims=True)
            with no_grad():
                rm = reshape(Tensor(self.running_mean), (1, self.num_features))
                step = self.momentum * self.manifold.logmap(rm, mu.detach(), 1)
                self.running_mean[...] = self.manifold.expmap(rm, step, 1).data.reshape(-1)
                self.running_var = (1.0 - self.momentum) * self.running_var \
                    + self.momentum * var.data.item()
        else:
            mu = reshape(Tensor(self.running_mean), (1, self.num_features))
            var = Tensor(self.running_var)

        beta = reshape(self.bias.tensor, (1, self.num_features))
        logs = self.manifold.logmap(mu, flat, 1)
        moved_logs = self.manifold.parallel_transport(mu, beta, logs, 1)
        y = self.manifold.expmap(beta, (self.scale / sqrt(var + self.EPS)) * moved_logs, 1)

        y = reshape(y, lead + (self.num_features,))
        y = transpose(y, tuple(np.argsort(perm)))
        return ManifoldTensor(y, self.manifold, dim)


class HEmbedding(Module):
    """Lookup table of manifold points, one row per entry."""

    def __init__(self, manifold: Manifold, num_embeddings: int, dim: int):
        super().__init__()
        self.manifold = manifold
        self.num_embeddings = num_embeddings
        self.dim = dim
        self.table = ManifoldParameter(np.zeros((num_embeddings, dim)), manifold, man_dim=1)
        self._reset_parameters(np.random.default_rng(0))

    def _reset_parameters(self, rng):
        _init_point(self.table, rng)

    def forward(self, indices) -> ManifoldTensor:
        rows = take(self.table.tensor, np.asarray(indices, dtype=np.intp), axis=0)
        return ManifoldTensor(rows, self.manifold, man_dim=-1)


class HFlatten(Module):
    """Concatenate all spatial channel-points of a feature map into one point."""

    def __init__(self, manifold: Manifold, beta_scaling: bool = True):
        super().__init__()
        self.manifold = manifold
        self.beta_scaling = beta_scaling

    def forward(self, x: ManifoldTensor) -> ManifoldTensor:
        _check_input(self, x)
        if x.tensor.ndim != 4 or x.man_dim != 1:
            raise DimensionError("HFlatten expects N x C x H x W input with man_dim=1")
        n, c, h, w = x.shape
        if isinstance(self.manifold, Euclidean):
            return ManifoldTensor(reshape(x.tensor, (n, c * h * w)), self.manifold, 1)
        u = reshape(self.manifold.logmap0(x.tensor, 1), (n, c * h * w))
        if self.beta_scaling:
            u = u * (beta_half(c * h * w) / beta_half(c))
        return ManifoldTensor(self.manifold.expmap0(u, 1), self.manifold, 1)


class HMLR(Module):
    """Multinomial logistic head scoring points against K geodesic hyperplanes.

    Returns plain logits (no manifold); pair with ``cross_entropy``.
    """

    def __init__(self, manifold: Manifold, in_features: int, num_classes: int):
        super().__init__()
        if num_classes < 2:
            raise ContractError("classification needs at least 2 classes")
        self.manifold = manifold
        self.in_features = in_features
        self.num_classes = num_classes
        self.points = ManifoldParameter(np.zeros((num_classes, in_features)), manifold, man_dim=1)
        self.normals = Parameter(np.zeros((num_classes, in_features)))
        self._reset_parameters(np.random.default_rng(0))

    def _reset_parameters(self, rng):
        _init_weight(self.normals, self.in_features, rng)
        _init_point(self.points, rng)

    def forward(self, x: ManifoldTensor) -> Tensor:
        _check_input(self, x, self.in_features)
        if x.man_dim != x.tensor.ndim - 1:
            raise DimensionError("HMLR expects points along the last axis")
        return self.manifold.mlr_logits(x.tensor, self.points.tensor, self.normals)


class Sequential(Module):
    """Layers applied in order; all must share one manifold object."""

    def __init__(self, *layers: Module):
        super().__init__()
        manifolds = [l.manifold for l in layers if hasattr(l, "manifold")]
        for m in manifolds[1:]:
            if m is not manifolds[0]:
                raise ManifoldMismatchError("Sequential layers must share one manifold object")
        self.manifold = manifolds[0] if manifolds else None
        self.layers = list(layers)
        for i, layer in enumerate(layers):
            self._children[str(i)] = layer

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x

    def __getitem__(self, i: int) -> Module:
        return self.layers[i]


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean -log softmax(logits)[label] over the batch."""
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels must have shape ({n},), got {labels.shape}")
    shift = Tensor(np.max(logits.data, axis=1, keepdims=True))
    lse = tlog(tsum(texp(logits - shift), dims=1, keepdims=True)) + shift
    picked = tsum(logits * Tensor(np.eye(k)[labels]), dims=1, keepdims=True)
    return tmean(lse - picked)


def accuracy(logits: Tensor, labels) -> float:
    return float(np.mean(np.argmax(logits.data, axis=1) == np.asarray(labels)))


def small_convnet(manifold: Manifold, in_channels: int, num_classes: int, image_hw: tuple[int, int],
                  conv_channels: tuple[int, int] = (6, 16), kernel: int = 5, pool: int = 2,
                  hidden: tuple[int, int] = (120, 84), pool_kind: str = "max") -> Sequential:
    """The tutorial convnet: conv-relu-pool twice, two dense layers, MLR head."""
    h, w = image_hw
    c1, c2 = conv_channels
    for _ in range(2):
        h, w = h - kernel + 1, w - kernel + 1
        if h < pool or w < pool:
            raise ShapeError(f"image {image_hw} too small for kernel {kernel} / pool {pool}")
        h, w = (h - pool) // pool + 1, (w - pool) // pool + 1
    flat = c2 * h * w
    f1, f2 = hidden
    return Sequential(
        HConv2d(manifold, in_channels, c1, kernel),
        HReLU(manifold),
        HPool2d(manifold, pool_kind, pool),
        HConv2d(manifold, c1, c2, kernel),
        HReLU(manifold),
        HPool2d(manifold, pool_kind, pool),
        HFlatten(manifold),
        HLinear(manifold, flat, f1),
        HReLU(manifold),
        HLinear(manifold, f1, f2),
        HReLU(manifold),
        HMLR(manifold, f2, num_classes),
    )


def _pair(v) -> tuple[int, int]:
    if isinstance(v, (tuple, list)):
        a, b = v
        return int(a), int(b)
    return int(v), int(v)
