"""Pixel-wise M/N persistence tracking of blob masks across a frame sequence.

A pixel is persistent at frame t when it was occupied in at least M of the
last N frames. If it is occupied right now that is a track update; if not,
the track is coasting, which only counts when coasting is enabled (used
for false-positive blobs; omitted for false negatives). A currently
occupied pixel whose own count falls short is still persistent when some
pixel within a Chebyshev vicinity window reaches M occupancies over the
window: that is the simplified unidirectional motion model for moving
blobs. Frames before N-1 are warm-up and produce empty masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from odfault.geometry import mask_popcount

__all__ = [
    "TrackerConfig",
    "PersistenceVerdict",
    "track",
    "occupancy_series",
    "sdc_at_severity",
]


@dataclass(frozen=True)
class TrackerConfig:
    m: int = 10
    n: int = 15
    vicinity_px: int = 50
    coasting: bool = True

    def __post_init__(self):
        if not 1 <= self.m <= self.n:
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.vicinity_px < 0:
            raise ValueError("vicinity must be non-negative")


@dataclass(frozen=True)
class PersistenceVerdict:
    """Per-frame persistent-pixel masks produced by the tracker."""

    masks: tuple[np.ndarray, ...]
    config: TrackerConfig


def track(blobs: list[np.ndarray], cfg: TrackerConfig) -> PersistenceVerdict:
    """Run the pixel-wise M/N scheme over a blob-mask sequence."""
    if len(blobs) < cfg.n:
        raise ValueError(f"sequence of {len(blobs)} frames is shorter than n={cfg.n}")
    shape = blobs[0].shape
    if any(b.shape != shape for b in blobs):
        raise ValueError("all blob masks must share dimensions")

    window = 2 * cfg.vicinity_px + 1
    counts = np.zeros(shape, dtype=np.int32)
    masks = []
    for t, blob in enumerate(blobs):
        counts += blob
        if t >= cfg.n:
            counts -= blobs[t - cfg.n]
        if t < cfg.n - 1:
            masks.append(np.zeros(shape, dtype=bool))
            continue
        strong = counts >= cfg.m
        if cfg.vicinity_px > 0:
            near_strong = ndimage.maximum_filter(strong, size=window, mode="constant", cval=False)
        else:
            near_strong = strong
        persistent = blob & near_strong
        if cfg.coasting:
            persistent = persistent | (~blob & strong)
        masks.append(persistent)
    return PersistenceVerdict(tuple(masks), cfg)


def occupancy_series(
    verdict: PersistenceVerdict,
    image_area: int | None = None,
    reference_blobs: list[np.ndarray] | None = None,
) -> list[float | None]:
    """Per-frame persistent occupancy fractions.

    Normalize either by a fixed image area (FP convention) or by the
    per-frame footprint of reference blobs (FN convention, None where the
    reference is empty). Exactly one normalization must be given.
    """
    if (image_area is None) == (reference_blobs is None):
        raise ValueError("provide exactly one of image_area or reference_blobs")
    if image_area is not None:
        if image_area <= 0:
            raise ValueError("image_area must be positive")
        return [mask_popcount(m) / image_area for m in verdict.masks]
    if len(reference_blobs) != len(verdict.masks):
        raise ValueError("reference sequence length does not match frame count")
    series: list[float | None] = []
    for mask, ref in zip(verdict.masks, reference_blobs):
        denom = mask_popcount(ref)
        series.append(mask_popcount(mask) / denom if denom else None)
    return series


def sdc_at_severity(series: list[float | None], levels) -> dict[float, bool]:
    """Decide, per severity level, whether the sequence counts as corrupted.

    Level 0 asks for any nonzero persistent occupancy in any frame; a
    positive level thresholds the sequence average (undefined frames are
    skipped).
    """
    defined = [v for v in series if v is not None]
    mean = sum(defined) / len(defined) if defined else 0.0
    out = {}
    for level in levels:
        if level == 0:
            out[level] = any(v is not None and v > 0 for v in series)
        else:
            out[level] = mean > level
    return out
