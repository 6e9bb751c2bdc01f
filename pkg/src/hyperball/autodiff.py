"""Dense float64 tensors with tape-based reverse-mode differentiation.

The engine is deliberately small.  A :class:`Tensor` wraps a numpy float64
array; every differentiable operation appends one record (operands, output,
per-operand derivative closures) to the active :class:`Graph`.  Records are
appended in execution order, which is a topological order of the data flow,
so :func:`backward` walks the tape once in reverse and accumulates gradients
into ``.grad`` of every tensor that requires them.

Scalars are 64-bit floats throughout.  Binary operations broadcast with
trailing-dimension alignment (numpy semantics); their backward pass sums
gradients over the broadcast axes.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, ShapeError

# artanh inputs are clamped to [-ARTANH_BOUND, ARTANH_BOUND] before evaluation
# so the forward pass can never produce an infinity near the ball boundary.
ARTANH_BOUND = 1.0 - 1e-10

_grad_enabled: bool = True
_active_graph: "Graph | None" = None


class _Record:
    """One executed operation: operands, output, per-operand pullbacks."""

    __slots__ = ("inputs", "output", "grad_fns")

    def __init__(self, inputs, output, grad_fns):
        self.inputs = inputs
        self.output = output
        self.grad_fns = grad_fns


class Graph:
    """Ordered tape of executed operations.

    A graph and the tensors recorded on it are confined to one logical
    thread.  Use it as a context manager to scope recording::

        with Graph():
            loss = model(x)
            backward(loss)

    Tensors created outside any explicit graph record onto a lazily created
    default graph.
    """

    def __init__(self) -> None:
        self.records: list[_Record] = []
        self._outer: Graph | None = None

    def append(self, record: _Record) -> None:
        self.records.append(record)

    def __enter__(self) -> "Graph":
        global _active_graph
        self._outer = _active_graph
        _active_graph = self
        return self

    def __exit__(self, *exc) -> None:
        global _active_graph
        _active_graph = self._outer
        self._outer = None


def active_graph() -> Graph:
    """The graph new records are appended to (created on first use)."""
    global _active_graph
    if _active_graph is None:
        _active_graph = Graph()
    return _active_graph


class no_grad:
    """Context manager that suspends recording onto the tape."""

    def __enter__(self) -> "no_grad":
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc) -> None:
        global _grad_enabled
        _grad_enabled = self._prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """A dense float64 array, optionally tracked on the differentiation tape.

    ``data`` aliases the argument when it already is a float64 ndarray
    (numpy ``asarray`` semantics); lists and scalars are copied.
    """

    __slots__ = ("data", "grad", "requires_grad", "_record", "_graph")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._record: _Record | None = None
        self._graph: Graph | None = None

    # -- introspection -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        """A view of the same data with no tape attachment."""
        return _from_data(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"

    # -- operators ----------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return narrow(self, key)

    def sum(self, dims=None, keepdims: bool = False):
        return tsum(self, dims, keepdims)

    def mean(self, dims=None, keepdims: bool = False):
        return tmean(self, dims, keepdims)

    def norm(self, dims=None, keepdims: bool = False):
        return norm2(self, dims, keepdims)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes=None):
        return transpose(self, axes)

    def backward(self) -> None:
        backward(self)


def _from_data(data: np.ndarray) -> Tensor:
    t = Tensor.__new__(Tensor)
    t.data = data
    t.grad = None
    t.requires_grad = False
    t._record = None
    t._graph = None
    return t


def _coerce(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(out_data: np.ndarray, inputs: tuple[Tensor, ...], grad_fns) -> Tensor:
    """Wrap an op result, recording it on the tape when gradients may flow."""
    out = _from_data(out_data)
    if _grad_enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        fns = tuple(fn if t.requires_grad else None for t, fn in zip(inputs, grad_fns))
        rec = _Record(inputs, out, fns)
        out._record = rec
        out._graph = active_graph()
        out._graph.append(rec)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes numpy broadcast to reach ``grad.shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(*tensors: Tensor) -> None:
    try:
        np.broadcast_shapes(*(t.shape for t in tensors))
    except ValueError:
        shapes = " vs ".join(str(t.shape) for t in tensors)
        raise ShapeError(f"shapes are not broadcastable: {shapes}") from None


def _binary(a, b, fwd, da, db) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_broadcast(a, b)
    out = fwd(a.data, b.data)
    return _make(
        out,
        (a, b),
        (
            lambda g: _unbroadcast(da(g, a.data, b.data, out), a.shape),
            lambda g: _unbroadcast(db(g, a.data, b.data, out), b.shape),
        ),
    )


def _unary(x, fwd, dx) -> Tensor:
    x = _coerce(x)
    out = fwd(x.data)
    return _make(out, (x,), (lambda g: dx(g, x.data, out),))


# -- elementwise operations --------------------------------------------------


def add(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x + y, lambda g, x, y, o: g, lambda g, x, y, o: g)


def sub(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x - y, lambda g, x, y, o: g, lambda g, x, y, o: -g)


def mul(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x * y, lambda g, x, y, o: g * y, lambda g, x, y, o: g * x)


def div(a, b) -> Tensor:
    b = _coerce(b)
    if np.any(b.data == 0.0):
        raise ZeroDivisionError("division by exact zero")
    return _binary(
        a, b,
        lambda x, y: x / y,
        lambda g, x, y, o: g / y,
        lambda g, x, y, o: -g * o / y,
    )


def neg(x) -> Tensor:
    return _unary(x, lambda v: -v, lambda g, v, o: -g)


def tanh(x) -> Tensor:
    return _unary(x, np.tanh, lambda g, v, o: g * (1.0 - o * o))


def artanh(x) -> Tensor:
    """Inverse hyperbolic tangent, 0.5*ln((1+x)/(1-x)).

    The input is clamped to [-(1-1e-10), 1-1e-10] before evaluation; the
    derivative 1/(1-x^2) is taken at the clamped value.
    """

    def fwd(v):
        c = np.clip(v, -ARTANH_BOUND, ARTANH_BOUND)
        return 0.5 * np.log((1.0 + c) / (1.0 - c))

    def dx(g, v, o):
        c = np.clip(v, -ARTANH_BOUND, ARTANH_BOUND)
        return g / (1.0 - c * c)

    return _unary(x, fwd, dx)


def asinh(x) -> Tensor:
    return _unary(x, np.arcsinh, lambda g, v, o: g / np.sqrt(1.0 + v * v))


def sqrt(x) -> Tensor:
    return _unary(x, np.sqrt, lambda g, v, o: g * 0.5 / o)


def exp(x) -> Tensor:
    return _unary(x, np.exp, lambda g, v, o: g * o)


def log(x) -> Tensor:
    return _unary(x, np.log, lambda g, v, o: g / v)


def power(x, p: float) -> Tensor:
    p = float(p)
    return _unary(x, lambda v: v ** p, lambda g, v, o: g * p * v ** (p - 1.0))


def clamp(x, lo: float | None = None, hi: float | None = None) -> Tensor:
    """Clip to [lo, hi]; gradient passes where lo <= x <= hi (inclusive)."""
    lo_v = -np.inf if lo is None else float(lo)
    hi_v = np.inf if hi is None else float(hi)

    def dx(g, v, o):
        return g * ((v >= lo_v) & (v <= hi_v))

    return _unary(x, lambda v: np.clip(v, lo_v, hi_v), dx)


def relu(x) -> Tensor:
    return _unary(x, lambda v: np.maximum(v, 0.0), lambda g, v, o: g * (v > 0.0))


def maximum(a, b) -> Tensor:
    """Elementwise max; at ties the gradient routes to the first argument."""
    return _binary(
        a, b,
        np.maximum,
        lambda g, x, y, o: g * (x >= y),
        lambda g, x, y, o: g * (x < y),
    )


def softplus(x) -> Tensor:
    """ln(1 + e^x), evaluated overflow-free."""
    return _unary(
        x,
        lambda v: np.logaddexp(0.0, v),
        lambda g, v, o: g * 0.5 * (1.0 + np.tanh(0.5 * v)),
    )


def where(condition: np.ndarray, a, b) -> Tensor:
    """Select from ``a`` where ``condition`` else ``b``.

    The mask is a constant boolean array: no gradient flows through the
    selection itself, only through the selected branches.
    """
    cond = np.asarray(condition, dtype=bool)
    a, b = _coerce(a), _coerce(b)
    _check_broadcast(_from_data(np.empty(cond.shape)), a, b)
    out = np.where(cond, a.data, b.data)
    return _make(
        out,
        (a, b),
        (
            lambda g: _unbroadcast(g * cond, a.shape),
            lambda g: _unbroadcast(g * ~cond, b.shape),
        ),
    )


# -- reductions ---------------------------------------------------------------


def _normalize_dims(dims, ndim: int) -> tuple[int, ...]:
    if dims is None:
        return tuple(range(ndim))
    if isinstance(dims, int):
        dims = (dims,)
    out = []
    for d in dims:
        if not -ndim <= d < ndim:
            raise ShapeError(f"axis {d} out of range for rank {ndim}")
        out.append(d % ndim)
    return tuple(sorted(set(out)))


def _expand_reduced(g: np.ndarray, shape: tuple[int, ...], dims: tuple[int, ...], keepdims: bool) -> np.ndarray:
    if not keepdims:
        for d in dims:
            g = np.expand_dims(g, d)
    return np.broadcast_to(g, shape)


def tsum(x, dims=None, keepdims: bool = False) -> Tensor:
    x = _coerce(x)
    dims_n = _normalize_dims(dims, x.ndim)
    out = x.data.sum(axis=dims_n, keepdims=keepdims)
    return _make(out, (x,), (lambda g: _expand_reduced(g, x.shape, dims_n, keepdims).copy(),))


def tmean(x, dims=None, keepdims: bool = False) -> Tensor:
    x = _coerce(x)
    dims_n = _normalize_dims(dims, x.ndim)
    count = 1
    for d in dims_n:
        count *= x.shape[d]
    out = x.data.mean(axis=dims_n, keepdims=keepdims)
    return _make(out, (x,), (lambda g: _expand_reduced(g, x.shape, dims_n, keepdims) / count,))


def norm2(x, dims=None, keepdims: bool = False) -> Tensor:
    """Euclidean norm sqrt(sum(x^2)) over ``dims``.

    The gradient is x/||x||, defined as 0 where ||x|| = 0 (subgradient
    choice, so nothing NaNs at the ball origin).
    """
    x = _coerce(x)
    dims_n = _normalize_dims(dims, x.ndim)
    out = np.sqrt((x.data * x.data).sum(axis=dims_n, keepdims=keepdims))

    def dx(g):
        n = _expand_reduced(out if keepdims else np.asarray(out), x.shape, dims_n, keepdims)
        ge = _expand_reduced(g, x.shape, dims_n, keepdims)
        safe = np.where(n == 0.0, 1.0, n)
        return np.where(n == 0.0, 0.0, ge * x.data / safe)

    return _make(np.asarray(out), (x,), (dx,))


# -- linear algebra -----------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} x {b.shape}")
    out = a.data @ b.data
    return _make(
        out,
        (a, b),
        (lambda g: g @ b.data.T, lambda g: a.data.T @ g),
    )


# -- restructuring ------------------------------------------------------------


def reshape(x, shape) -> Tensor:
    x = _coerce(x)
    try:
        out = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(str(e)) from None
    return _make(out.copy(), (x,), (lambda g: g.reshape(x.shape),))


def transpose(x, axes=None) -> Tensor:
    x = _coerce(x)
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    axes = tuple(a % x.ndim for a in axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError(f"invalid permutation {axes} for rank {x.ndim}")
    inverse = np.argsort(axes)
    out = x.data.transpose(axes)
    return _make(out.copy(), (x,), (lambda g: g.transpose(inverse),))


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [_coerce(t) for t in tensors]
    if not ts:
        raise ContractError("concat of an empty sequence")
    axis = axis % ts[0].ndim
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as e:
        raise ShapeError(str(e)) from None
    offsets = np.cumsum([0] + [t.shape[axis] for t in ts])

    def make_fn(i):
        sl = [slice(None)] * ts[0].ndim
        sl[axis] = slice(offsets[i], offsets[i + 1])
        sl = tuple(sl)
        return lambda g: g[sl].copy()

    return _make(out, tuple(ts), tuple(make_fn(i) for i in range(len(ts))))


def narrow(x, key) -> Tensor:
    """Basic indexing (ints, slices, tuples thereof); backward scatters."""
    x = _coerce(x)
    try:
        out = x.data[key]
    except IndexError as e:
        raise ShapeError(str(e)) from None

    def dx(g):
        buf = np.zeros_like(x.data)
        buf[key] = g
        return buf

    return _make(np.array(out), (x,), (dx,))


def broadcast_to(x, shape) -> Tensor:
    x = _coerce(x)
    try:
        out = np.broadcast_to(x.data, shape)
    except ValueError as e:
        raise ShapeError(str(e)) from None
    return _make(out.copy(), (x,), (lambda g: _unbroadcast(g, x.shape),))


def take(x, indices, axis: int = 0) -> Tensor:
    """Gather slices along ``axis``; backward scatter-adds (repeats allowed)."""
    x = _coerce(x)
    idx = np.asarray(indices, dtype=np.intp)
    axis = axis % x.ndim
    if idx.size and (idx.min() < -x.shape[axis] or idx.max() >= x.shape[axis]):
        raise ShapeError(f"take indices out of range for extent {x.shape[axis]}")
    out = np.take(x.data, idx, axis=axis)

    def dx(g):
        buf = np.zeros_like(x.data)
        key = (slice(None),) * axis + (idx,)
        np.add.at(buf, key, g)
        return buf

    return _make(out, (x,), (dx,))


def unfold2d(x, kernel: tuple[int, int], stride: tuple[int, int] = (1, 1),
             padding: tuple[int, int] = (0, 0)) -> Tensor:
    """Extract sliding patches from an N x C x H x W tensor.

    Returns N x (C*kh*kw) x L columns, L = out_h*out_w, ordered channel-major
    (then kernel row, then kernel column).  Padding fills with zeros; the
    backward pass accumulates overlapping patches.
    """
    x = _coerce(x)
    if x.ndim != 4:
        raise ShapeError(f"unfold2d expects rank-4 input, got {x.shape}")
    n, c, h, w = x.shape
    kh, kw = kernel
    sh, sw = stride
    ph, pw = padding
    hp, wp = h + 2 * ph, w + 2 * pw
    out_h = (hp - kh) // sh + 1
    out_w = (wp - kw) // sw + 1
    if kh > hp or kw > wp or out_h <= 0 or out_w <= 0:
        raise ShapeError(
            f"kernel {kernel} does not fit padded input {hp}x{wp} at stride {stride}")

    kk = kh * kw
    ck = np.arange(c * kk)
    chan = ck // kk
    di = (ck % kk) // kw
    dj = (ck % kk) % kw
    ell = np.arange(out_h * out_w)
    i_idx = (ell // out_w)[None, :] * sh + di[:, None]
    j_idx = (ell % out_w)[None, :] * sw + dj[:, None]
    c_idx = np.broadcast_to(chan[:, None], i_idx.shape)

    padded = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    out = padded[:, c_idx, i_idx, j_idx]

    def dx(g):
        buf = np.zeros((n, c, hp, wp))
        np.add.at(buf, (np.arange(n)[:, None, None], c_idx[None], i_idx[None], j_idx[None]), g)
        if ph or pw:
            buf = buf[:, :, ph:hp - ph, pw:wp - pw]
        return buf

    return _make(out, (x,), (dx,))


# -- backward pass ------------------------------------------------------------


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into ``t.grad`` for every tensor requiring it.

    Repeated calls over the same graph accumulate (gradients double on the
    second call).  ``loss`` must be a one-element tensor produced by a
    recorded operation.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._record is None or loss._graph is None:
        raise ContractError("loss is not part of the active graph")

    flowing: dict[Tensor, np.ndarray] = {loss: np.ones_like(loss.data)}
    for rec in reversed(loss._graph.records):
        g = flowing.pop(rec.output, None)
        if g is None:
            continue
        if rec.output.requires_grad:
            _accumulate(rec.output, g)
        for inp, fn in zip(rec.inputs, rec.grad_fns):
            if fn is None:
                continue
            contrib = fn(g)
            prev = flowing.get(inp)
            flowing[inp] = contrib if prev is None else prev + contrib
    for t, g in flowing.items():
        if t.requires_grad:
            _accumulate(t, g)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g)
    else:
        t.grad = t.grad + g


def gradient_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-6) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``f`` must be scalar-valued and smooth near ``x``; other tensors captured
    by ``f`` are held constant.  The error is normalized by the largest
    gradient magnitude (floored at 1e-8), so a constant ``f`` reports 0.
    """
    if not x.requires_grad:
        raise ContractError("gradient_check input must require gradients")
    saved = x.grad
    x.grad = None
    with Graph():
        out = f(x)
        if out.data.size != 1:
            x.grad = saved
            raise ContractError("gradient_check needs a scalar-valued function")
        if out._record is not None:
            backward(out)
    analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
    x.grad = saved

    numeric = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    nflat = numeric.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f(x).data)
            flat[i] = orig - h
            fm = float(f(x).data)
            flat[i] = orig
            nflat[i] = (fp - fm) / (2.0 * h)

    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-8)
    return float(np.max(np.abs(analytic - numeric))) / scale


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape))


def ones(shape) -> Tensor:
    return Tensor(np.ones(shape))
