"""Training loops for the two demo tasks, deterministic given the config seed."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Graph, Tensor, backward, reshape, tsum
from ..errors import DataFormatError, NumericFailure
from ..manifolds import Curvature, Euclidean, Manifold, PoincareBall
from .. import nn
from ..optim import Optimizer, RiemannianAdam, RiemannianSGD
from .checkpoint import restore_into, save_checkpoint
from .config import RunConfig
from .trees import TreeSpec, generate_tree, graph_distances


def build_manifold(cfg: RunConfig) -> Manifold:
    if cfg.manifold == "euclidean":
        return Euclidean()
    return PoincareBall(Curvature(cfg.curvature, learnable=cfg.learnable_curvature))


def build_optimizer(cfg: RunConfig, manifold: Manifold, model: nn.Module) -> Optimizer:
    params = list(model.parameters())
    if isinstance(manifold, PoincareBall) and manifold.curvature.learnable:
        params.append(manifold.curvature.raw)
    if cfg.optimizer == "rsgd":
        return RiemannianSGD(params, lr=cfg.lr, momentum=cfg.momentum)
    return RiemannianAdam(params, lr=cfg.lr)


def write_metrics(path: str, rows: list[tuple]) -> None:
    """CSV with schema epoch,step,loss,accuracy (accuracy may be empty)."""
    lines = ["epoch,step,loss,accuracy"]
    for epoch, step, loss, acc in rows:
        acc_str = "" if acc is None else repr(float(acc))
        lines.append(f"{epoch},{step},{float(loss)!r},{acc_str}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def _check_finite(value: float, context: str) -> float:
    if not math.isfinite(value):
        raise NumericFailure(f"non-finite loss during {context}")
    return value


@dataclass
class EmbedResult:
    model: nn.HEmbedding
    manifold: Manifold
    tree: TreeSpec
    rows: list = field(repr=False)
    final_loss: float = 0.0
    distortion: float = 0.0

    @property
    def points(self) -> np.ndarray:
        return self.model.table.data.copy()


def _pair_mask(n: int) -> np.ndarray:
    return np.triu(np.ones((n, n)), k=1)


def embedding_distortion(points: np.ndarray, manifold: Manifold, targets: np.ndarray) -> float:
    """Mean |d_emb / target - 1| over node pairs i < j."""
    n = points.shape[0]
    x1 = Tensor(points.reshape(n, 1, -1))
    x2 = Tensor(points.reshape(1, n, -1))
    d = manifold.distance(x1, x2, dim=2).data
    iu = np.triu_indices(n, k=1)
    return float(np.mean(np.abs(d[iu] / targets[iu] - 1.0)))


def embed_hierarchy(cfg: RunConfig, tree: TreeSpec | None = None,
                    initial_state: dict | None = None) -> EmbedResult:
    """Fit node embeddings so ball distances match tau-scaled tree distances.

    Loss: sum over pairs i<j of (d(x_i, x_j) - tau * d_G(i, j))^2, full-batch,
    one optimizer step per epoch.
    """
    if tree is None:
        tree = generate_tree(cfg.depth, cfg.branching, cfg.seed)
    n = tree.num_nodes
    targets = cfg.tau * graph_distances(tree)
    mask = Tensor(_pair_mask(n))
    target_t = Tensor(targets)

    manifold = build_manifold(cfg)
    model = nn.HEmbedding(manifold, n, cfg.dim)
    nn.init_parameters(model, cfg.seed)
    if initial_state is not None:
        restore_into(manifold, model, initial_state)
    optimizer = build_optimizer(cfg, manifold, model)

    rows = []
    loss_value = float("nan")
    for epoch in range(cfg.epochs):
        with Graph():
            table = model.table.tensor
            x1 = reshape(table, (n, 1, cfg.dim))
            x2 = reshape(table, (1, n, cfg.dim))
            d = manifold.distance(x1, x2, dim=2)
            err = d - target_t
            loss = tsum(mask * err * err)
            optimizer.zero_grad()
            backward(loss)
            optimizer.step()
        loss_value = _check_finite(loss.item(), f"embed-tree epoch {epoch}")
        rows.append((epoch, epoch, loss_value, None))

    distortion = embedding_distortion(model.table.data, manifold, targets)
    if cfg.metrics_out:
        write_metrics(cfg.metrics_out, rows)
    if cfg.checkpoint_out:
        save_checkpoint(cfg.checkpoint_out, manifold, model)
    return EmbedResult(model=model, manifold=manifold, tree=tree, rows=rows,
                       final_loss=loss_value, distortion=distortion)


@dataclass
class TrainResult:
    model: nn.Sequential
    manifold: Manifold
    rows: list = field(repr=False)
    epoch_accuracy: list[float] = field(default_factory=list)
    final_loss: float = 0.0


def train_image(cfg: RunConfig, data: tuple[np.ndarray, np.ndarray],
                initial_state: dict | None = None) -> TrainResult:
    """Train the tutorial convnet on (images, labels).

    Inputs are lifted onto the manifold with the origin exponential map, then
    fed through the network; cross-entropy + the configured optimizer.  The
    sample order is one seeded shuffle fixed up front, so interrupting after
    any epoch and resuming from its checkpoint continues with the same batch
    the uninterrupted run would see next.
    """
    images, labels = data
    if images.ndim != 4:
        raise DataFormatError(f"images must be N x C x H x W, got shape {images.shape}")
    if labels.shape != (images.shape[0],):
        raise DataFormatError(f"{images.shape[0]} images but {labels.shape} labels")
    if images.shape[0] < 1:
        raise DataFormatError("empty dataset")
    if labels.min() < 0 or labels.max() >= cfg.classes:
        raise DataFormatError(
            f"labels outside [0, {cfg.classes}): range [{labels.min()}, {labels.max()}]")

    manifold = build_manifold(cfg)
    model = nn.small_convnet(manifold, images.shape[1], cfg.classes, images.shape[2:])
    nn.init_parameters(model, cfg.seed)
    if initial_state is not None:
        restore_into(manifold, model, initial_state)
    optimizer = build_optimizer(cfg, manifold, model)

    order = np.random.default_rng(cfg.seed).permutation(images.shape[0])
    batches = [order[i:i + cfg.batch_size] for i in range(0, len(order), cfg.batch_size)]

    rows = []
    epoch_accuracy = []
    loss_value = float("nan")
    step = 0
    for epoch in range(cfg.epochs):
        hits = 0
        for batch in batches:
            with Graph():
                x = nn.lift_to_manifold(Tensor(images[batch]), manifold, man_dim=1)
                logits = model(x)
                loss = nn.cross_entropy(logits, labels[batch])
                optimizer.zero_grad()
                backward(loss)
                optimizer.step()
            loss_value = _check_finite(loss.item(), f"train-image epoch {epoch} step {step}")
            acc = nn.accuracy(logits, labels[batch])
            hits += int(round(acc * len(batch)))
            rows.append((epoch, step, loss_value, acc))
            step += 1
        epoch_accuracy.append(hits / len(order))

    if cfg.metrics_out:
        write_metrics(cfg.metrics_out, rows)
    if cfg.checkpoint_out:
        save_checkpoint(cfg.checkpoint_out, manifold, model)
    return TrainResult(model=model, manifold=manifold, rows=rows,
                       epoch_accuracy=epoch_accuracy, final_loss=loss_value)
