"""Command-line entry point.

Commands: embed-tree, train-image, export-disk, resume.
Exit codes: 0 success, 2 config error, 3 data/format error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ..errors import ConfigError, DataFormatError, NumericFailure
from .checkpoint import load_checkpoint
from .config import build_config
from .data import load_idx, synthetic_bars
from .exports import export_disk
from .training import embed_hierarchy, train_image
from .trees import generate_tree

SYNTHETIC_SAMPLES = 512
SYNTHETIC_SIZE = 16


def _add_shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifold", choices=["poincare", "euclidean"], default=None)
    p.add_argument("--curvature", type=float, default=None)
    p.add_argument("--learnable-curvature", dest="learnable_curvature",
                   action="store_const", const=True, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--optimizer", choices=["rsgd", "radam"], default=None)
    p.add_argument("--momentum", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--checkpoint-out", dest="checkpoint_out", default=None)
    p.add_argument("--metrics-out", dest="metrics_out", default=None)


def _add_embed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--branching", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--export-disk", dest="export_disk", default=None)
    p.add_argument("--export-format", dest="export_format", choices=["csv", "svg"], default=None)


def _add_image_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train-images", dest="train_images", default=None)
    p.add_argument("--train-labels", dest="train_labels", default=None)
    p.add_argument("--synthetic", action="store_const", const=True, default=None)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--center-crop", dest="center_crop", type=int, default=None)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperball",
                                     description="Hierarchy embedding and small-image "
                                                 "classification on the Poincare ball.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("embed-tree", help="embed a balanced tree into the ball")
    _add_shared_flags(p)
    _add_embed_flags(p)

    p = sub.add_parser("train-image", help="train the tutorial convnet")
    _add_shared_flags(p)
    _add_image_flags(p)

    p = sub.add_parser("export-disk", help="export a 2-d embedding checkpoint")
    p.add_argument("--from", dest="from_checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--export-format", dest="export_format", choices=["csv", "svg"], default="csv")

    p = sub.add_parser("resume", help="continue training from a checkpoint")
    p.add_argument("--from", dest="from_checkpoint", required=True)
    _add_shared_flags(p)
    _add_embed_flags(p)
    _add_image_flags(p)

    return parser


_CONFIG_KEYS = [
    "manifold", "curvature", "learnable_curvature", "dim", "epochs", "lr",
    "optimizer", "momentum", "batch_size", "seed", "checkpoint_out", "metrics_out",
    "depth", "branching", "tau", "export_disk", "export_format",
    "train_images", "train_labels", "synthetic", "classes", "center_crop",
]


def _cli_values(args: argparse.Namespace) -> dict:
    return {k: getattr(args, k) for k in _CONFIG_KEYS if hasattr(args, k)}


def _run_embed(cfg) -> None:
    result = embed_hierarchy(cfg)
    print(f"embed-tree: {result.tree.num_nodes} nodes, final loss {result.final_loss:.6g}, "
          f"mean relative distortion {result.distortion:.6g}")
    if cfg.export_disk:
        export_disk(result.points, result.tree.node_labels(), cfg.export_disk, cfg.export_format)
        print(f"wrote {cfg.export_format} export to {cfg.export_disk}")


def _load_image_data(cfg):
    if cfg.synthetic:
        return synthetic_bars(SYNTHETIC_SAMPLES, SYNTHETIC_SIZE, cfg.seed)
    return load_idx(cfg.train_images, cfg.train_labels,
                    center_crop=cfg.center_crop, num_classes=cfg.classes)


def _run_image(cfg) -> None:
    result = train_image(cfg, _load_image_data(cfg))
    best = max(result.epoch_accuracy) if result.epoch_accuracy else 0.0
    print(f"train-image: final loss {result.final_loss:.6g}, "
          f"best epoch accuracy {best:.4f}")


def _run_export(args: argparse.Namespace) -> None:
    doc = load_checkpoint(args.from_checkpoint)
    tables = [rec for rec in doc["params"] if rec["kind"] == "manifold" and len(rec["shape"]) == 2]
    if not tables:
        raise DataFormatError("checkpoint holds no 2-d embedding table")
    rec = tables[0]
    n, dim = rec["shape"]
    if dim != 2:
        raise ConfigError(f"disk export requires dim = 2, checkpoint has dim {dim}")
    points = np.asarray(rec["data"], dtype=np.float64).reshape(n, 2)
    labels = ["root"] + [f"n{k}" for k in range(1, n)]
    export_disk(points, labels, args.out, args.export_format)
    print(f"wrote {args.export_format} export to {args.out}")


def _run_resume(args: argparse.Namespace) -> None:
    state = load_checkpoint(args.from_checkpoint)
    cfg = build_config(None, _cli_values(args), args.config)
    if cfg.command == "embed-tree":
        result = embed_hierarchy(cfg, initial_state=state)
        print(f"resumed embed-tree: final loss {result.final_loss:.6g}, "
              f"mean relative distortion {result.distortion:.6g}")
        if cfg.export_disk:
            export_disk(result.points, result.tree.node_labels(), cfg.export_disk, cfg.export_format)
    else:
        result = train_image(cfg, _load_image_data(cfg), initial_state=state)
        best = max(result.epoch_accuracy) if result.epoch_accuracy else 0.0
        print(f"resumed train-image: final loss {result.final_loss:.6g}, "
              f"best epoch accuracy {best:.4f}")


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "embed-tree":
            _run_embed(build_config("embed-tree", _cli_values(args), args.config))
        elif args.cmd == "train-image":
            _run_image(build_config("train-image", _cli_values(args), args.config))
        elif args.cmd == "export-disk":
            _run_export(args)
        elif args.cmd == "resume":
            _run_resume(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DataFormatError, FileNotFoundError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericFailure as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
