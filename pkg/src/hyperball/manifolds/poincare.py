"""Poincare ball model of hyperbolic space with curvature -c, c > 0.

Points live in {x : sqrt(c) ||x|| < 1}.  The metric is conformal with factor
lambda_x = 2 / (1 - c ||x||^2); geodesic operations are expressed through
Mobius (gyrovector) addition.  Every operation acts along a caller-supplied
axis, treats zero-norm vectors by the convention f(0) = 0 (no 0/0 sites),
and radially projects its output back into the ball, so downstream artanh
arguments stay at least 1e-5 away from 1.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..autodiff import (
    Tensor,
    artanh,
    asinh,
    norm2,
    sqrt,
    tanh,
    tsum,
    where,
)
from ..errors import ContractError, DimensionError, ManifoldMismatchError, ShapeError
from .base import Manifold, matrix_apply, normalize_dim
from .curvature import Curvature

# Radial slack keeping points strictly inside the ball: max norm (1-eps)/sqrt(c).
# At 1e-5, artanh(sqrt(c)||x||) keeps >= 9 significant digits in float64.
BALL_EPS = 1e-5


def beta_half(n: int) -> float:
    """Euler Beta B(n/2, 1/2) via log-gamma (exact to ~1e-15 on half-integers)."""
    return math.exp(math.lgamma(n / 2.0) + math.lgamma(0.5) - math.lgamma((n + 1) / 2.0))


def _safe(n: Tensor) -> Tensor:
    """Replace exact-zero norms by 1 so they can divide; paired with f(0)=0."""
    mask = n.data == 0.0
    if not mask.any():
        return n
    return where(mask, Tensor(np.ones_like(n.data)), n)


def _neg_dim(dim: int, *tensors: Tensor) -> int:
    """Normalize ``dim`` against the broadcast rank, returned in negative form.

    Broadcasting aligns trailing axes, so a negative index names the same
    logical axis on every operand even when their ranks differ.
    """
    nd = max(t.ndim for t in tensors)
    return normalize_dim(dim, nd) - nd


class PoincareBall(Manifold):
    """The open ball {x : sqrt(c)||x|| < 1} with its gyrovector operations.

    ``curvature`` may be a float (fixed) or a :class:`Curvature` object,
    whose raw parameter can be learnable; every operation differentiates
    through c as well as through the points.
    """

    def __init__(self, curvature: Curvature | float = 1.0):
        if not isinstance(curvature, Curvature):
            curvature = Curvature(float(curvature))
        self.curvature = curvature

    @property
    def name(self) -> str:
        return f"PoincareBall(c={float(self.curvature.value().data):.6g})"

    def _c(self) -> Tensor:
        return self.curvature.value()

    # -- membership / projection ---------------------------------------------

    def project(self, x: Tensor, dim: int) -> Tensor:
        """Radially rescale anything with sqrt(c)||x|| > 1-eps onto that shell."""
        dim = _neg_dim(dim, x)
        c = self._c()
        n = norm2(x, dims=dim, keepdims=True)
        sqrt_c_val = math.sqrt(float(c.data))
        mask = sqrt_c_val * n.data > 1.0 - BALL_EPS
        if not mask.any():
            return x
        max_norm = (1.0 - BALL_EPS) / sqrt(c)
        n_safe = where(mask, n, Tensor(np.ones_like(n.data)))
        factor = where(mask, max_norm / n_safe, Tensor(np.ones_like(n.data)))
        return x * factor

    def contains(self, x: np.ndarray, dim: int, rtol: float = 1e-12) -> bool:
        if not np.all(np.isfinite(x)):
            return False
        c = float(self._c().data)
        norms = np.sqrt((x * x).sum(axis=dim))
        return bool(np.all(math.sqrt(c) * norms <= (1.0 - BALL_EPS) * (1.0 + rtol)))

    # -- gyrovector structure ---------------------------------------------------

    def mobius_add(self, x: Tensor, y: Tensor, dim: int) -> Tensor:
        """x (+) y = ((1+2c<x,y>+c|y|^2) x + (1-c|x|^2) y) / (1+2c<x,y>+c^2|x|^2|y|^2)."""
        dim = _neg_dim(dim, x, y)
        c = self._c()
        x2 = tsum(x * x, dims=dim, keepdims=True)
        y2 = tsum(y * y, dims=dim, keepdims=True)
        xy = tsum(x * y, dims=dim, keepdims=True)
        num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
        den = 1.0 + 2.0 * c * xy + (c * c) * x2 * y2
        return self.project(num / den, dim)

    def gyration(self, u: Tensor, v: Tensor, w: Tensor, dim: int) -> Tensor:
        """gyr[u,v]w, the isometry measuring how far (+) is from associative.

        Closed form (valid for arbitrary w, not only ball points):
        w + 2(A u + B v)/D with
          A = -c^2 <u,w> |v|^2 + c <v,w> + 2 c^2 <u,v> <v,w>
          B = -c^2 <v,w> |u|^2 - c <u,w>
          D = 1 + 2c <u,v> + c^2 |u|^2 |v|^2.
        Equals -(u (+) v) (+) (u (+) (v (+) w)) whenever w is itself in the ball.
        """
        dim = _neg_dim(dim, u, v, w)
        c = self._c()
        c2 = c * c
        u2 = tsum(u * u, dims=dim, keepdims=True)
        v2 = tsum(v * v, dims=dim, keepdims=True)
        uv = tsum(u * v, dims=dim, keepdims=True)
        uw = tsum(u * w, dims=dim, keepdims=True)
        vw = tsum(v * w, dims=dim, keepdims=True)
        a = -c2 * uw * v2 + c * vw + 2.0 * c2 * uv * vw
        b = -c2 * vw * u2 - c * uw
        den = 1.0 + 2.0 * c * uv + c2 * u2 * v2
        return w + (2.0 * (a * u + b * v)) / den

    def conformal_factor(self, x: Tensor, dim: int) -> Tensor:
        """lambda_x = 2 / (1 - c||x||^2), shape keeps the reduced axis."""
        dim = _neg_dim(dim, x)
        x2 = tsum(x * x, dims=dim, keepdims=True)
        return 2.0 / (1.0 - self._c() * x2)

    # -- exponential / logarithmic maps ---------------------------------------

    def expmap0(self, v: Tensor, dim: int) -> Tensor:
        """exp_0(v) = tanh(sqrt(c)||v||) v / (sqrt(c)||v||); exp_0(0) = 0."""
        dim = _neg_dim(dim, v)
        c = self._c()
        sc = sqrt(c)
        n = norm2(v, dims=dim, keepdims=True)
        coef = tanh(sc * n) / (sc * _safe(n))
        return self.project(v * coef, dim)

    def logmap0(self, y: Tensor, dim: int) -> Tensor:
        """log_0(y) = artanh(sqrt(c)||y||) y / (sqrt(c)||y||); log_0(0) = 0."""
        dim = _neg_dim(dim, y)
        c = self._c()
        sc = sqrt(c)
        n = norm2(y, dims=dim, keepdims=True)
        coef = artanh(sc * n) / (sc * _safe(n))
        return y * coef

    def expmap(self, x: Tensor | None, v: Tensor, dim: int) -> Tensor:
        """exp_x(v) = x (+) tanh(sqrt(c) lambda_x ||v|| / 2) v / (sqrt(c)||v||)."""
        if x is None:
            return self.expmap0(v, dim)
        dim = _neg_dim(dim, x, v)
        c = self._c()
        sc = sqrt(c)
        lam = self.conformal_factor(x, dim)
        n = norm2(v, dims=dim, keepdims=True)
        coef = tanh(sc * lam * n * 0.5) / (sc * _safe(n))
        return self.mobius_add(x, v * coef, dim)

    def logmap(self, x: Tensor | None, y: Tensor, dim: int) -> Tensor:
        """log_x(y) = (2 / (sqrt(c) lambda_x)) artanh(sqrt(c)||w||) w/||w||, w = -x (+) y."""
        if x is None:
            return self.logmap0(y, dim)
        dim = _neg_dim(dim, x, y)
        c = self._c()
        sc = sqrt(c)
        w = self.mobius_add(-x, y, dim)
        lam = self.conformal_factor(x, dim)
        n = norm2(w, dims=dim, keepdims=True)
        coef = (2.0 / (sc * lam)) * artanh(sc * n) / _safe(n)
        return w * coef

    def distance(self, x: Tensor, y: Tensor, dim: int, keepdims: bool = False) -> Tensor:
        """d(x,y) = (2/sqrt(c)) artanh(sqrt(c) || -x (+) y ||)."""
        dim = _neg_dim(dim, x, y)
        c = self._c()
        sc = sqrt(c)
        w = self.mobius_add(-x, y, dim)
        return (2.0 / sc) * artanh(sc * norm2(w, dims=dim, keepdims=keepdims))

    def parallel_transport(self, x: Tensor, y: Tensor, v: Tensor, dim: int) -> Tensor:
        """PT_{x->y}(v) = (lambda_x / lambda_y) gyr[y, -x] v (metric preserving)."""
        dim = _neg_dim(dim, x, y, v)
        lam_x = self.conformal_factor(x, dim)
        lam_y = self.conformal_factor(y, dim)
        return (lam_x / lam_y) * self.gyration(y, -x, v, dim)

    # -- aggregation ----------------------------------------------------------------

    def frechet_mean(self, x: Tensor, reduce_dim: int, man_dim: int,
                     weights: np.ndarray | None = None, tol: float = 1e-9,
                     max_iter: int = 100, keepdims: bool = False) -> Tensor:
        """Karcher fixed-point iteration for the weighted Frechet mean.

        mu <- exp_mu(sum_i w_i log_mu(x_i)) from mu_0 = first point, until the
        update's Euclidean norm drops below ``tol`` (or ``max_iter``).  All
        executed iterations stay on the tape, so gradients flow through the
        whole trajectory.  Batched: all axes other than ``reduce_dim`` and
        ``man_dim`` are carried along and iterated simultaneously.
        """
        from .euclidean import _mean_weights

        reduce_dim = normalize_dim(reduce_dim, x.ndim)
        man_dim = normalize_dim(man_dim, x.ndim)
        if reduce_dim == man_dim:
            raise DimensionError("cannot aggregate along the point axis itself")
        w = _mean_weights(x, reduce_dim, weights)

        first = [slice(None)] * x.ndim
        first[reduce_dim] = slice(0, 1)
        mu = x[tuple(first)]
        for _ in range(max_iter):
            logs = self.logmap(mu, x, man_dim)
            step = tsum(logs * w, dims=reduce_dim, keepdims=True)
            mu = self.expmap(mu, step, man_dim)
            if float(np.max(np.abs(step.data))) < tol:
                break
        if not keepdims:
            squeezed = list(mu.shape)
            del squeezed[reduce_dim]
            mu = mu.reshape(tuple(squeezed))
        return mu

    def frechet_variance(self, x: Tensor, mean: Tensor, reduce_dim: int, man_dim: int,
                         keepdims: bool = False) -> Tensor:
        from ..autodiff import tmean

        reduce_dim = normalize_dim(reduce_dim, x.ndim)
        d = self.distance(x, mean, man_dim, keepdims=True)
        return tmean(d * d, dims=reduce_dim, keepdims=keepdims)

    # -- layer primitives ---------------------------------------------------------

    def matvec(self, m: Tensor, x: Tensor, dim: int) -> Tensor:
        """Mobius matrix-vector product M (x) x = exp_0(M log_0(x))."""
        u = self.logmap0(x, dim)
        return self.expmap0(matrix_apply(m, u, dim), dim)

    mobius_matvec = matvec

    def mlr_logits(self, x: Tensor, p: Tensor, a: Tensor) -> Tensor:
        """Hyperbolic multinomial-logistic logits for points x against K hyperplanes.

        logit_k = (lambda_{p_k} ||a_k|| / sqrt(c))
                  * asinh( 2 sqrt(c) <w_k, a_k> / ((1 - c||w_k||^2) ||a_k||) ),
        with w_k = -p_k (+) x.  Expects points along the last axis; p and a are
        (K, d).  Flat limit: 4<x - p_k, a_k> as c -> 0.
        """
        if p.ndim != 2 or a.ndim != 2 or p.shape != a.shape:
            raise ShapeError(f"hyperplane parameters must both be (K, d), got {p.shape} and {a.shape}")
        if x.shape[-1] != p.shape[1]:
            raise ShapeError(f"point dim {x.shape[-1]} != hyperplane dim {p.shape[1]}")
        a_norms = np.sqrt((a.data * a.data).sum(axis=-1))
        if np.any(a_norms == 0.0):
            raise ContractError("decision hyperplane normals must be nonzero")

        c = self._c()
        sc = sqrt(c)
        xx = x.reshape(x.shape[:-1] + (1, x.shape[-1]))
        w = self.mobius_add(-p, xx, dim=-1)
        wa = tsum(w * a, dims=-1)
        w2 = tsum(w * w, dims=-1)
        an = norm2(a, dims=-1)
        p2 = tsum(p * p, dims=-1)
        lam_p = 2.0 / (1.0 - c * p2)
        z = (2.0 * sc * wa) / ((1.0 - c * w2) * an)
        return (lam_p * an / sc) * asinh(z)

    def concat(self, parts: Sequence[Tensor], dim: int, beta_scaling: bool = True) -> Tensor:
        """Concatenate ball points through the origin tangent space.

        Each part is pulled back by log_0, rescaled by B(N/2,1/2)/B(n_i/2,1/2)
        (keeping tangent norms distribution-consistent across dimensions), the
        pieces are concatenated, and the result is pushed forward by exp_0.
        """
        from ..autodiff import concat as tensor_concat

        parts = list(parts)
        if not parts:
            raise ContractError("concat of an empty sequence")
        dim_n = normalize_dim(dim, parts[0].ndim)
        sizes = [p.shape[dim_n] for p in parts]
        total = sum(sizes)
        vs = [self.logmap0(p, dim_n) for p in parts]
        if beta_scaling:
            b_total = beta_half(total)
            vs = [v * (b_total / beta_half(n)) for v, n in zip(vs, sizes)]
        return self.expmap0(tensor_concat(vs, axis=dim_n), dim_n)

    # -- optimization hooks ----------------------------------------------------------

    def egrad_to_rgrad(self, x: Tensor, g: Tensor, dim: int) -> Tensor:
        """Metric-inverse rescaling ((1 - c||x||^2)^2 / 4) g."""
        dim = _neg_dim(dim, x)
        s = 1.0 - self._c() * tsum(x * x, dims=dim, keepdims=True)
        return g * (s * s) * 0.25

    def adam_second_moment(self, x: Tensor, h: Tensor, dim: int) -> Tensor:
        """Scalar product-metric norm: sum over points of (lambda_x/2)^2 ||h||^2."""
        dim = _neg_dim(dim, x)
        lam_half = 1.0 / (1.0 - self._c() * tsum(x * x, dims=dim, keepdims=True))
        scaled = lam_half * h
        return tsum(scaled * scaled)


def shared_curvature(manifolds: Sequence[Manifold]) -> None:
    """Raise unless all ball manifolds in ``manifolds`` share one curvature object."""
    balls = [m for m in manifolds if isinstance(m, PoincareBall)]
    for m in balls[1:]:
        if m.curvature is not balls[0].curvature:
            raise ManifoldMismatchError(
                f"manifolds {balls[0]!r} and {m!r} have distinct curvature objects")
