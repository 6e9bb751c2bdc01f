"""Manifolds with a shared operation interface: Euclidean space and the Poincare ball."""

from .base import Manifold
from .curvature import Curvature
from .euclidean import Euclidean
from .poincare import BALL_EPS, PoincareBall, beta_half, shared_curvature

__all__ = [
    "BALL_EPS",
    "Curvature",
    "Euclidean",
    "Manifold",
    "PoincareBall",
    "beta_half",
    "shared_curvature",
]
