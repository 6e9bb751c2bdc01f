"""Disk exports of 2-d embeddings: CSV rows or a standalone SVG figure."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError


def export_disk(points: np.ndarray, labels: list[str], path: str, fmt: str = "csv") -> None:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ConfigError(f"disk export needs n x 2 coordinates, got shape {points.shape}")
    if len(labels) != points.shape[0]:
        raise ConfigError(f"{len(labels)} labels for {points.shape[0]} points")
    if fmt == "csv":
        _export_csv(points, labels, path)
    elif fmt == "svg":
        _export_svg(points, labels, path)
    else:
        raise ConfigError(f"export format must be csv or svg, got {fmt!r}")


def _export_csv(points: np.ndarray, labels: list[str], path: str) -> None:
    lines = ["node_id,label,x,y"]
    for i, (label, (x, y)) in enumerate(zip(labels, points)):
        lines.append(f"{i},{label},{float(x)!r},{float(y)!r}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def _export_svg(points: np.ndarray, labels: list[str], path: str) -> None:
    size = 500.0
    half = size / 2.0
    radius = half * 0.96
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" height="{size:g}" '
        f'viewBox="0 0 {size:g} {size:g}">',
        f'<circle cx="{half:g}" cy="{half:g}" r="{radius:g}" fill="none" stroke="black"/>',
    ]
    for label, (x, y) in zip(labels, points):
        cx = half + float(x) * radius
        cy = half - float(y) * radius
        parts.append(
            f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="3" fill="steelblue">'
            f"<title>{label}</title></circle>")
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(parts) + "\n")
