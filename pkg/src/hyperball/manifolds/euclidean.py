"""Flat manifold: every operation reduces to its textbook vector-space form.

Having Euclidean space behind the same interface is what lets layers be
written once and checked against their standard counterparts.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..autodiff import Tensor, concat as tensor_concat, norm2, tsum
from ..errors import ContractError
from .base import Manifold, matrix_apply, normalize_dim


class Euclidean(Manifold):
    name = "Euclidean"

    def project(self, x: Tensor, dim: int) -> Tensor:
        normalize_dim(dim, x.ndim)
        return x

    def contains(self, x: np.ndarray, dim: int) -> bool:
        return bool(np.all(np.isfinite(x)))

    def expmap0(self, v: Tensor, dim: int) -> Tensor:
        return v

    def logmap0(self, y: Tensor, dim: int) -> Tensor:
        return y

    def expmap(self, x: Tensor | None, v: Tensor, dim: int) -> Tensor:
        return v if x is None else x + v

    def logmap(self, x: Tensor | None, y: Tensor, dim: int) -> Tensor:
        return y if x is None else y - x

    def mobius_add(self, x: Tensor, y: Tensor, dim: int) -> Tensor:
        return x + y

    def gyration(self, u: Tensor, v: Tensor, w: Tensor, dim: int) -> Tensor:
        return w

    def conformal_factor(self, x: Tensor, dim: int) -> Tensor:
        dim = normalize_dim(dim, x.ndim)
        shape = list(x.shape)
        shape[dim] = 1
        return Tensor(np.ones(shape))

    def distance(self, x: Tensor, y: Tensor, dim: int, keepdims: bool = False) -> Tensor:
        return norm2(x - y, dims=dim, keepdims=keepdims)

    def parallel_transport(self, x: Tensor, y: Tensor, v: Tensor, dim: int) -> Tensor:
        return v

    def frechet_mean(self, x: Tensor, reduce_dim: int, man_dim: int,
                     weights: np.ndarray | None = None, tol: float = 1e-9,
                     max_iter: int = 100, keepdims: bool = False) -> Tensor:
        w = _mean_weights(x, reduce_dim, weights)
        return tsum(x * w, dims=reduce_dim, keepdims=keepdims)

    def frechet_variance(self, x: Tensor, mean: Tensor, reduce_dim: int, man_dim: int,
                         keepdims: bool = False) -> Tensor:
        d = self.distance(x, mean, man_dim, keepdims=True)
        reduce_dim = normalize_dim(reduce_dim, x.ndim)
        from ..autodiff import tmean
        return tmean(d * d, dims=reduce_dim, keepdims=keepdims)

    def matvec(self, m: Tensor, x: Tensor, dim: int) -> Tensor:
        return matrix_apply(m, x, dim)

    def mlr_logits(self, x: Tensor, p: Tensor, a: Tensor) -> Tensor:
        _check_normals(a)
        offset = x.reshape(x.shape[:-1] + (1, x.shape[-1])) - p
        return tsum(offset * a, dims=-1)

    def concat(self, parts: Sequence[Tensor], dim: int, beta_scaling: bool = True) -> Tensor:
        return tensor_concat(list(parts), axis=dim)

    def egrad_to_rgrad(self, x: Tensor, g: Tensor, dim: int) -> Tensor:
        return g

    def adam_second_moment(self, x: Tensor, h: Tensor, dim: int) -> Tensor:
        return h * h


def _mean_weights(x: Tensor, reduce_dim: int, weights: np.ndarray | None) -> Tensor:
    """Normalized weights reshaped to broadcast along ``reduce_dim``."""
    reduce_dim = normalize_dim(reduce_dim, x.ndim)
    n = x.shape[reduce_dim]
    if n == 0:
        raise ContractError("mean of an empty point set")
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (n,):
            raise ContractError(f"weights must have shape ({n},), got {w.shape}")
        if np.any(w < 0.0) or not np.any(w > 0.0):
            raise ContractError("weights must be nonnegative and not all zero")
        w = w / w.sum()
    shape = [1] * x.ndim
    shape[reduce_dim] = n
    return Tensor(w.reshape(shape))


def _check_normals(a: Tensor) -> None:
    norms = np.sqrt((a.data * a.data).sum(axis=-1))
    if np.any(norms == 0.0):
        raise ContractError("decision hyperplane normals must be nonzero")
