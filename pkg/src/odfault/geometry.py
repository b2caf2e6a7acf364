"""Axis-aligned boxes, IoU, NMS and rasterization to binary occupancy masks.

Boxes are continuous corner-pair regions ``(x1, y1, x2, y2)`` with x to the
right and y down. Occupancy masks are plain 2-D boolean numpy arrays of
shape ``(height, width)``; pixel ``(i, j)`` covers the unit cell
``[j, j+1) x [i, i+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Box",
    "Detection",
    "iou",
    "clip",
    "nms",
    "rasterize",
    "mask_diff",
    "mask_popcount",
]


@dataclass(frozen=True)
class Box:
    """Continuous axis-aligned rectangle. Degenerate (zero-area) boxes are legal."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x2 < self.x1 or self.y2 < self.y1:
            x1, x2 = sorted((self.x1, self.x2))
            y1, y2 = sorted((self.y1, self.y2))
            object.__setattr__(self, "x1", x1)
            object.__setattr__(self, "x2", x2)
            object.__setattr__(self, "y1", y1)
            object.__setattr__(self, "y2", y2)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class Detection:
    """A predicted or ground-truth object: box, integer category, confidence."""

    box: Box
    category: int
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 when the union has zero area."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def clip(box: Box, width: float, height: float) -> Box:
    """Clamp a box to the image extent; may collapse to zero area."""
    return Box(
        min(max(box.x1, 0.0), width),
        min(max(box.y1, 0.0), height),
        min(max(box.x2, 0.0), width),
        min(max(box.y2, 0.0), height),
    )


def nms(
    dets: list[Detection],
    iou_threshold: float = 0.5,
    max_detections: int = 1000,
) -> list[Detection]:
    """Greedy per-category non-maximum suppression.

    Keeps the highest-confidence detection of each overlap cluster, drops
    others of the same category with IoU strictly above the threshold, and
    caps the result at ``max_detections``, confidence-descending. Ordering
    ties are broken by input position for determinism.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
    kept: list[int] = []
    for i in order:
        suppressed = False
        for j in kept:
            if dets[j].category == dets[i].category and iou(dets[j].box, dets[i].box) > iou_threshold:
                suppressed = True
                break
        if not suppressed:
            kept.append(i)
            if len(kept) >= max_detections:
                break
    return [dets[i] for i in kept]


def rasterize(boxes: list[Box], width: int, height: int) -> np.ndarray:
    """Project boxes onto a binary occupancy grid.

    A pixel is set when at least one box overlaps its unit cell with
    positive area, so zero-width or zero-height boxes mark nothing.
    Boxes are expected pre-clipped; anything outside the canvas is ignored.
    """
    mask = np.zeros((height, width), dtype=bool)
    for box in boxes:
        if box.x2 <= box.x1 or box.y2 <= box.y1:
            continue
        x0 = max(int(math.floor(box.x1)), 0)
        x1 = min(int(math.ceil(box.x2)), width)
        y0 = max(int(math.floor(box.y1)), 0)
        y1 = min(int(math.ceil(box.y2)), height)
        if x1 > x0 and y1 > y0:
            mask[y0:y1, x0:x1] = True
    return mask


def mask_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pixels set in ``a`` and not in ``b``."""
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a & ~b


def mask_popcount(mask: np.ndarray) -> int:
    return int(mask.sum())
