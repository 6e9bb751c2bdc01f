"""Riemannian SGD and Adam over mixed parameter sets.

Both optimizers accept manifold-point parameters and plain tensors in one
list.  For points on a curved manifold the update converts the raw gradient
to a Riemannian one, steps along the exact exponential map, and parallel
transports the momentum buffer to the new point.  For plain tensors (and
ManifoldParameters on the Euclidean manifold, and the curvature raw scalar)
the same equations collapse to standard SGD-with-momentum / Adam, bitwise.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, no_grad
from .errors import ContractError
from .manifolds import Euclidean
from .tensors import ManifoldParameter


class _Slot:
    __slots__ = ("m", "v", "step")

    def __init__(self):
        self.m = None
        self.v = None
        self.step = 0


class Optimizer:
    """Shared bookkeeping: parameter registration, gradient slots, lr."""

    def __init__(self, params, lr: float):
        if not lr > 0.0:
            raise ContractError(f"learning rate must be positive, got {lr}")
        self.lr = float(lr)
        self._entries: list[tuple[object, Tensor, bool, _Slot]] = []
        seen = set()
        for p in params:
            if isinstance(p, ManifoldParameter):
                raw, curved = p.tensor, not isinstance(p.manifold, Euclidean)
            elif isinstance(p, Tensor):
                raw, curved = p, False
            else:
                raise ContractError(f"cannot optimize object of type {type(p).__name__}")
            if id(raw) in seen:
                continue
            seen.add(id(raw))
            if not raw.requires_grad:
                raise ContractError("all optimized parameters must require gradients")
            registered = getattr(p, "_registered_with", None)
            if registered is not None and registered is not self:
                raise ContractError("parameter is already registered with another optimizer")
            if hasattr(p, "_registered_with"):
                p._registered_with = self
            self._entries.append((p, raw, curved, _Slot()))
        if not self._entries:
            raise ContractError("optimizer needs at least one parameter")

    def zero_grad(self) -> None:
        for _, raw, _, _ in self._entries:
            raw.grad = np.zeros_like(raw.data)

    def _gradient(self, raw: Tensor) -> np.ndarray:
        if raw.grad is None:
            raise ContractError("parameter has no gradient: call backward() or zero_grad() first")
        return raw.grad


class RiemannianSGD(Optimizer):
    """SGD with momentum kept in the tangent space of the moving point.

    Per step: h = rgrad(x, g); m <- mu*m + h; x <- project(exp_x(-lr*m));
    m <- transport(x_old -> x_new, m).
    """

    def __init__(self, params, lr: float, momentum: float = 0.9):
        super().__init__(params, lr)
        if not 0.0 <= momentum < 1.0:
            raise ContractError(f"momentum must be in [0, 1), got {momentum}")
        self.momentum = momentum

    def step(self) -> None:
        with no_grad():
            for p, raw, curved, slot in self._entries:
                g = self._gradient(raw)
                if slot.m is None:
                    slot.m = np.zeros_like(raw.data)
                if not curved:
                    slot.m = self.momentum * slot.m + g
                    raw.data[...] = raw.data - self.lr * slot.m
                    continue
                man, dim = p.manifold, p.man_dim
                x = Tensor(raw.data.copy())
                h = man.egrad_to_rgrad(x, Tensor(g), dim)
                slot.m = self.momentum * slot.m + h.data
                x_new = man.expmap(x, Tensor(-self.lr * slot.m), dim)
                slot.m = man.parallel_transport(x, x_new, Tensor(slot.m), dim).data
                raw.data[...] = x_new.data


class RiemannianAdam(Optimizer):
    """Adam with Riemannian gradients, exact-exponential updates, and
    transported momentum.

    Curved parameters accumulate a scalar second moment (the squared metric
    norm of the gradient); plain tensors use per-coordinate second moments,
    making the Euclidean path exactly standard Adam.
    """

    def __init__(self, params, lr: float, betas: tuple[float, float] = (0.9, 0.999),
                 eps: float = 1e-8):
        super().__init__(params, lr)
        b1, b2 = betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ContractError(f"betas must be in [0, 1), got {betas}")
        if not eps > 0.0:
            raise ContractError(f"eps must be positive, got {eps}")
        self.betas = (float(b1), float(b2))
        self.eps = float(eps)

    def step(self) -> None:
        b1, b2 = self.betas
        with no_grad():
            for p, raw, curved, slot in self._entries:
                g = self._gradient(raw)
                slot.step += 1
                t = slot.step
                if slot.m is None:
                    slot.m = np.zeros_like(raw.data)
                    slot.v = 0.0 if curved else np.zeros_like(raw.data)
                if not curved:
                    slot.m = b1 * slot.m + (1.0 - b1) * g
                    slot.v = b2 * slot.v + (1.0 - b2) * g * g
                    m_hat = slot.m / (1.0 - b1 ** t)
                    v_hat = slot.v / (1.0 - b2 ** t)
                    raw.data[...] = raw.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
                    continue
                man, dim = p.manifold, p.man_dim
                x = Tensor(raw.data.copy())
                h = man.egrad_to_rgrad(x, Tensor(g), dim)
                slot.m = b1 * slot.m + (1.0 - b1) * h.data
                slot.v = b2 * slot.v + (1.0 - b2) * float(man.adam_second_moment(x, h, dim).data)
                m_hat = slot.m / (1.0 - b1 ** t)
                v_hat = slot.v / (1.0 - b2 ** t)
                direction = -self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
                x_new = man.expmap(x, Tensor(direction), dim)
                slot.m = man.parallel_transport(x, x_new, Tensor(slot.m), dim).data
                raw.data[...] = x_new.data


class StepDecay:
    """Multiply the optimizer's learning rate by ``gamma`` every ``every`` epochs."""

    def __init__(self, optimizer: Optimizer, gamma: float, every: int = 1):
        if not 0.0 < gamma <= 1.0:
            raise ContractError(f"decay factor must be in (0, 1], got {gamma}")
        if every < 1:
            raise ContractError(f"decay period must be >= 1, got {every}")
        self.optimizer = optimizer
        self.gamma = float(gamma)
        self.every = int(every)
        self.epoch = 0

    def step(self) -> None:
        """Call once per finished epoch."""
        self.epoch += 1
        if self.epoch % self.every == 0:
            self.optimizer.lr *= self.gamma
