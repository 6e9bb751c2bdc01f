"""Run configuration: CLI flags merged over an optional config file.

The config file holds one assignment per line (``key = value``) with keys
spelled exactly like the long flags; '#' starts a comment.  Explicit flags
override file values, which override per-command defaults.  Unknown keys are
rejected.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from ..errors import ConfigError

_BOOLS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


@dataclass
class RunConfig:
    command: str = ""
    manifold: str = "poincare"
    curvature: float = 1.0
    learnable_curvature: bool = False
    dim: int = 2
    epochs: int = 0
    lr: float = 0.0
    optimizer: str = "radam"
    momentum: float = 0.9
    batch_size: int = 32
    seed: int = 0
    checkpoint_out: str | None = None
    metrics_out: str | None = None
    # embed-tree
    depth: int = 3
    branching: int = 2
    tau: float = 0.3
    export_disk: str | None = None
    export_format: str = "csv"
    # train-image
    train_images: str | None = None
    train_labels: str | None = None
    synthetic: bool = False
    classes: int = 2
    center_crop: int | None = None

    def validate(self) -> "RunConfig":
        if self.command not in ("embed-tree", "train-image"):
            raise ConfigError(f"unknown command {self.command!r}")
        if self.manifold not in ("poincare", "euclidean"):
            raise ConfigError(f"manifold must be poincare or euclidean, got {self.manifold!r}")
        if self.optimizer not in ("rsgd", "radam"):
            raise ConfigError(f"optimizer must be rsgd or radam, got {self.optimizer!r}")
        if not self.curvature > 0.0:
            raise ConfigError(f"curvature must be positive, got {self.curvature}")
        if not self.lr > 0.0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ConfigError(f"batch-size must be >= 1, got {self.batch_size}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if not 0.0 < self.tau:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.command == "embed-tree":
            if self.dim < 2:
                raise ConfigError(f"embedding dim must be >= 2, got {self.dim}")
            if self.depth < 1:
                raise ConfigError(f"depth must be >= 1, got {self.depth}")
            if self.branching < 2:
                raise ConfigError(f"branching must be >= 2, got {self.branching}")
            if self.export_format not in ("csv", "svg"):
                raise ConfigError(f"export-format must be csv or svg, got {self.export_format!r}")
            if self.export_disk is not None and self.dim != 2:
                raise ConfigError("disk export requires dim = 2")
        if self.command == "train-image":
            if self.classes < 2:
                raise ConfigError(f"classes must be >= 2, got {self.classes}")
            if not self.synthetic and (self.train_images is None or self.train_labels is None):
                raise ConfigError("train-image needs --synthetic or both --train-images and --train-labels")
            if self.center_crop is not None and self.center_crop < 1:
                raise ConfigError(f"center-crop must be >= 1, got {self.center_crop}")
        return self


# flag-name -> (attribute, parser)
_KEY_PARSERS = {
    "command": ("command", str),
    "manifold": ("manifold", str),
    "curvature": ("curvature", float),
    "learnable-curvature": ("learnable_curvature", "bool"),
    "dim": ("dim", int),
    "epochs": ("epochs", int),
    "lr": ("lr", float),
    "optimizer": ("optimizer", str),
    "momentum": ("momentum", float),
    "batch-size": ("batch_size", int),
    "seed": ("seed", int),
    "checkpoint-out": ("checkpoint_out", str),
    "metrics-out": ("metrics_out", str),
    "depth": ("depth", int),
    "branching": ("branching", int),
    "tau": ("tau", float),
    "export-disk": ("export_disk", str),
    "export-format": ("export_format", str),
    "train-images": ("train_images", str),
    "train-labels": ("train_labels", str),
    "synthetic": ("synthetic", "bool"),
    "classes": ("classes", int),
    "center-crop": ("center_crop", int),
}

_COMMAND_DEFAULTS = {
    "embed-tree": {"epochs": 3000, "lr": 0.03},
    "train-image": {"epochs": 20, "lr": 1e-3},
}


def parse_config_file(path: str) -> dict:
    """Read ``key = value`` assignments into attribute/value pairs."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _KEY_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            attr, parser = _KEY_PARSERS[key]
            if parser == "bool":
                if raw.lower() not in _BOOLS:
                    raise ConfigError(f"{path}:{lineno}: boolean expected for {key!r}, got {raw!r}")
                values[attr] = _BOOLS[raw.lower()]
            else:
                try:
                    values[attr] = parser(raw)
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {raw!r}") from None
    return values


def build_config(command: str | None, cli_values: dict, config_path: str | None) -> RunConfig:
    """Defaults < config file < explicit CLI flags, then validate."""
    merged: dict = {}
    if config_path is not None:
        merged.update(parse_config_file(config_path))
    if command is not None:
        merged["command"] = command
    for key, value in cli_values.items():
        if value is not None:
            merged[key] = value
    cmd = merged.get("command")
    if cmd in _COMMAND_DEFAULTS:
        for attr, default in _COMMAND_DEFAULTS[cmd].items():
            merged.setdefault(attr, default)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    return RunConfig(**merged).validate()
