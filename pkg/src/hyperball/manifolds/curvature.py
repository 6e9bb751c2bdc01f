"""Trainable curvature magnitude for negatively curved manifolds."""

from __future__ import annotations

import math

from ..autodiff import Tensor, softplus
from ..errors import ContractError


class Curvature:
    """Positive curvature magnitude c, stored as c = softplus(raw).

    The manifold's sectional curvature is -c; keeping the positive magnitude
    avoids a minus sign in every formula.  When ``learnable`` the raw scalar
    can be registered with an optimizer and trained like any other parameter;
    softplus keeps c strictly positive along the way.
    """

    def __init__(self, value: float = 1.0, learnable: bool = False):
        value = float(value)
        if not value > 0.0 or not math.isfinite(value):
            raise ContractError(f"curvature magnitude must be positive and finite, got {value}")
        # softplus inverse: raw = ln(e^c - 1)
        self.raw = Tensor(math.log(math.expm1(value)), requires_grad=bool(learnable))
        self.learnable = bool(learnable)

    def value(self) -> Tensor:
        """Current c > 0 as a scalar tensor (differentiable when learnable)."""
        return softplus(self.raw)

    def __repr__(self) -> str:
        return f"Curvature(value={float(self.value().data):.6g}, learnable={self.learnable})"
