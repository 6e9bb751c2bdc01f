"""Tensors annotated with the manifold their slices live on.

A ManifoldTensor pairs a raw tensor with a manifold object and the axis
(``man_dim``) whose slices are individual points.  A TangentTensor does the
same for tangent vectors, optionally anchored at a broadcastable set of base
points.  Construction always yields a valid on-manifold object (out-of-ball
inputs are radially projected); any *cross-object* inconsistency is a hard,
typed error, so mistakes surface where they happen instead of as silent
geometry bugs downstream.

Manifold identity is object identity: two balls with independently learnable
curvatures are never interchangeable.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import DimensionError, ManifoldMismatchError, ShapeError
from .manifolds import Manifold


def _normalize_man_dim(man_dim: int, ndim: int) -> int:
    if ndim == 0:
        raise DimensionError("manifold data must have rank >= 1")
    if not -ndim <= man_dim < ndim:
        raise DimensionError(f"man_dim {man_dim} out of range for rank {ndim}")
    return man_dim % ndim


class ManifoldTensor:
    """A tensor whose slices along ``man_dim`` are points on ``manifold``."""

    def __init__(self, tensor, manifold: Manifold, man_dim: int = -1):
        tensor = tensor if isinstance(tensor, Tensor) else Tensor(tensor)
        self.man_dim = _normalize_man_dim(man_dim, tensor.ndim)
        self.manifold = manifold
        self.tensor = manifold.project(tensor, self.man_dim)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.tensor.shape

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shape={self.shape}, manifold={self.manifold!r}, man_dim={self.man_dim})"


class ManifoldParameter(ManifoldTensor):
    """A trainable ManifoldTensor; optimizers keep it on the manifold."""

    trainable = True

    def __init__(self, tensor, manifold: Manifold, man_dim: int = -1):
        super().__init__(tensor, manifold, man_dim)
        self.tensor.requires_grad = True
        self._registered_with = None

    @property
    def grad(self) -> np.ndarray | None:
        return self.tensor.grad


class TangentTensor:
    """Tangent vectors along ``man_dim``, anchored at ``base`` (origin if None).

    ``base`` must live on the identical manifold object and be broadcastable
    against the vectors, with equal extents on the aligned point axis.
    """

    def __init__(self, vectors, manifold: Manifold, base: ManifoldTensor | None = None,
                 man_dim: int = -1):
        vectors = vectors if isinstance(vectors, Tensor) else Tensor(vectors)
        self.man_dim = _normalize_man_dim(man_dim, vectors.ndim)
        self.manifold = manifold
        self.vectors = vectors
        self.base = base
        if base is not None:
            if base.manifold is not manifold:
                raise ManifoldMismatchError(
                    f"tangent vectors on {manifold!r} cannot be based at points on {base.manifold!r}")
            try:
                np.broadcast_shapes(vectors.shape, base.shape)
            except ValueError:
                raise ShapeError(
                    f"base shape {base.shape} is not broadcastable with vectors {vectors.shape}") from None
            if _trailing_offset(vectors.ndim, self.man_dim) != _trailing_offset(base.tensor.ndim, base.man_dim):
                raise DimensionError(
                    f"man_dim axes misaligned: vectors dim {self.man_dim} of rank {vectors.ndim}, "
                    f"base dim {base.man_dim} of rank {base.tensor.ndim}")
            if vectors.shape[self.man_dim] != base.shape[base.man_dim]:
                raise DimensionError(
                    f"man_dim extents differ: vectors {vectors.shape[self.man_dim]}, "
                    f"base {base.shape[base.man_dim]}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.vectors.shape

    @property
    def data(self) -> np.ndarray:
        return self.vectors.data

    def __repr__(self) -> str:
        anchored = "origin" if self.base is None else f"base{self.base.shape}"
        return f"TangentTensor(shape={self.shape}, manifold={self.manifold!r}, man_dim={self.man_dim}, {anchored})"


def _trailing_offset(ndim: int, dim: int) -> int:
    """Axis position counted from the end, the alignment broadcasting uses."""
    return ndim - dim


def _payload(obj) -> Tensor:
    return obj.vectors if isinstance(obj, TangentTensor) else obj.tensor


def make_manifold_tensor(tensor, manifold: Manifold, man_dim: int = -1) -> ManifoldTensor:
    """Wrap ``tensor`` as points on ``manifold`` (projecting into the ball if needed)."""
    return ManifoldTensor(tensor, manifold, man_dim)


def make_tangent_tensor(vectors, manifold: Manifold, base: ManifoldTensor | None = None,
                        man_dim: int = -1) -> TangentTensor:
    """Wrap ``vectors`` as tangent vectors; no base means origin tangent spaces."""
    return TangentTensor(vectors, manifold, base, man_dim)


def check_compatible(a, b) -> None:
    """Verify two manifold/tangent tensors may enter one geometric operation.

    Passes iff both reference the identical manifold object, their man_dim
    axes align under trailing-dimension broadcasting with equal extents, and
    the full shapes broadcast.  Symmetric in its arguments.
    """
    if a.manifold is not b.manifold:
        raise ManifoldMismatchError(
            f"operands live on different manifolds: {a.manifold!r} (man_dim {a.man_dim}) "
            f"vs {b.manifold!r} (man_dim {b.man_dim})")
    ta, tb = _payload(a), _payload(b)
    if _trailing_offset(ta.ndim, a.man_dim) != _trailing_offset(tb.ndim, b.man_dim):
        raise DimensionError(
            f"man_dim axes misaligned on {a.manifold!r}: dim {a.man_dim} of rank {ta.ndim} "
            f"vs dim {b.man_dim} of rank {tb.ndim}")
    if ta.shape[a.man_dim] != tb.shape[b.man_dim]:
        raise DimensionError(
            f"man_dim extents differ on {a.manifold!r}: {ta.shape[a.man_dim]} vs {tb.shape[b.man_dim]}")
    try:
        np.broadcast_shapes(ta.shape, tb.shape)
    except ValueError:
        raise ShapeError(f"shapes {ta.shape} and {tb.shape} are not broadcastable") from None
