"""Hyperbolic deep learning at desk scale.

Four building blocks: a small float64 autodiff engine (`autodiff`), manifolds
behind one operation interface (`manifolds`), manifold-annotated tensors with
hard legality checks (`tensors`), manifold-agnostic layers (`nn`) and
Riemannian optimizers (`optim`).  The `cli` package adds a reproducible
harness for hierarchy embedding and small-image classification.
"""

from .autodiff import (
    Graph,
    Tensor,
    backward,
    gradient_check,
    no_grad,
)
from .errors import (
    ConfigError,
    ContractError,
    DataFormatError,
    DimensionError,
    HyperballError,
    ManifoldMismatchError,
    NumericFailure,
    ShapeError,
)
from .manifolds import BALL_EPS, Curvature, Euclidean, Manifold, PoincareBall
from .tensors import (
    ManifoldParameter,
    ManifoldTensor,
    TangentTensor,
    check_compatible,
    make_manifold_tensor,
    make_tangent_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "BALL_EPS",
    "ConfigError",
    "ContractError",
    "Curvature",
    "DataFormatError",
    "DimensionError",
    "Euclidean",
    "Graph",
    "HyperballError",
    "Manifold",
    "ManifoldMismatchError",
    "ManifoldParameter",
    "ManifoldTensor",
    "NumericFailure",
    "PoincareBall",
    "ShapeError",
    "TangentTensor",
    "Tensor",
    "backward",
    "check_compatible",
    "gradient_check",
    "make_manifold_tensor",
    "make_tangent_tensor",
    "no_grad",
]
