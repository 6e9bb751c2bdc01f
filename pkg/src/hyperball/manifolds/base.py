"""Shared interface for geometric operations along a designated axis.

Every operation takes raw tensors plus the axis (``dim``) whose slices are
the individual points or tangent vectors.  Layers call these through a
manifold object, which is what makes them manifold-agnostic.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..autodiff import Tensor


class Manifold:
    """Base manifold: the operation set every concrete manifold provides."""

    name = "manifold"

    # -- membership / projection -------------------------------------------

    def project(self, x: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def contains(self, x: np.ndarray, dim: int) -> bool:
        """Raw membership test used when validating external data."""
        raise NotImplementedError

    # -- maps between the manifold and tangent spaces -----------------------

    def expmap0(self, v: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def logmap0(self, y: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def expmap(self, x: Tensor | None, v: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def logmap(self, x: Tensor | None, y: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    # -- gyrovector / metric structure ---------------------------------------

    def mobius_add(self, x: Tensor, y: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def gyration(self, u: Tensor, v: Tensor, w: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def conformal_factor(self, x: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def distance(self, x: Tensor, y: Tensor, dim: int, keepdims: bool = False) -> Tensor:
        raise NotImplementedError

    def parallel_transport(self, x: Tensor, y: Tensor, v: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    # -- aggregation ----------------------------------------------------------

    def frechet_mean(self, x: Tensor, reduce_dim: int, man_dim: int,
                     weights: np.ndarray | None = None, tol: float = 1e-9,
                     max_iter: int = 100, keepdims: bool = False) -> Tensor:
        raise NotImplementedError

    def frechet_variance(self, x: Tensor, mean: Tensor, reduce_dim: int, man_dim: int,
                         keepdims: bool = False) -> Tensor:
        raise NotImplementedError

    # -- layer primitives -------------------------------------------------------

    def matvec(self, m: Tensor, x: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def mlr_logits(self, x: Tensor, p: Tensor, a: Tensor) -> Tensor:
        raise NotImplementedError

    def concat(self, parts: Sequence[Tensor], dim: int, beta_scaling: bool = True) -> Tensor:
        raise NotImplementedError

    # -- optimization hooks -------------------------------------------------------

    def egrad_to_rgrad(self, x: Tensor, g: Tensor, dim: int) -> Tensor:
        raise NotImplementedError

    def adam_second_moment(self, x: Tensor, h: Tensor, dim: int) -> Tensor:
        """Squared metric norm of a gradient, in the layout Adam accumulates."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.name


def normalize_dim(dim: int, ndim: int) -> int:
    from ..errors import DimensionError

    if not -ndim <= dim < ndim:
        raise DimensionError(f"man_dim {dim} out of range for rank {ndim}")
    return dim % ndim


def matrix_apply(m: Tensor, x: Tensor, dim: int) -> Tensor:
    """Apply a (out x in) matrix along axis ``dim`` of ``x``."""
    from ..autodiff import matmul, reshape, transpose
    from ..errors import ShapeError

    dim = normalize_dim(dim, x.ndim)
    if m.ndim != 2 or m.shape[1] != x.shape[dim]:
        raise ShapeError(f"matrix {m.shape} does not apply to extent {x.shape[dim]} at dim {dim}")
    perm = [i for i in range(x.ndim) if i != dim] + [dim]
    moved = transpose(x, perm)
    lead = moved.shape[:-1]
    flat = reshape(moved, (-1, x.shape[dim]))
    out = matmul(flat, transpose(m))
    out = reshape(out, lead + (m.shape[0],))
    inv = np.argsort(perm)
    return transpose(out, tuple(inv))
