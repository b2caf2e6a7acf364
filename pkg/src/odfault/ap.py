"""Average-precision evaluation and the synthetic PR-curve experiment.

The reference pipeline follows the usual benchmark recipe: group by class,
rank by confidence, greedily match at an IoU threshold, sweep cumulative
precision/recall, integrate the interpolated curve per class, average the
classes present in ground truth. ``interpolation="101"`` samples the
precision envelope at 101 recall points (the common benchmark variant);
``"area"`` integrates the envelope exactly.

The synthetic experiment measures how the metric reacts to fault-style
perturbations (bulk low-confidence false positives vs. a few
high-confidence ones) on an abstract population of outcomes; no box
geometry is involved by design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from odfault.geometry import iou

__all__ = [
    "PrCurve",
    "ApResult",
    "average_precision",
    "mean_average_precision",
    "pr_curves",
    "MAP_THRESHOLDS",
    "SyntheticSetConfig",
    "SyntheticSet",
    "generate_synthetic_set",
    "perturb_set",
    "synthetic_ap50",
    "synthetic_pr_curve",
]

MAP_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class PrCurve:
    """(recall, precision) points in confidence-descending evaluation order."""

    points: tuple[tuple[float, float], ...]
    category: int | None = None


@dataclass(frozen=True)
class ApResult:
    per_category: dict[int, float]
    mean: float


def _ranked_outcomes(preds_by_image, gts_by_image, category, iou_threshold):
    """Confidence-ranked TP/FP flags for one category, plus the gt count."""
    ranked = []
    for image_id in sorted(preds_by_image, key=str):
        for idx, det in enumerate(preds_by_image[image_id]):
            if det.category == category:
                ranked.append((-det.confidence, str(image_id), idx, image_id, det))
    ranked.sort(key=lambda item: item[:3])

    n_gt = 0
    open_gts = {}
    for image_id in gts_by_image:
        gts = [g for g in gts_by_image[image_id] if g.category == category]
        n_gt += len(gts)
        open_gts[image_id] = gts

    flags = []
    matched: dict[object, set[int]] = {}
    for _, _, _, image_id, det in ranked:
        candidates = open_gts.get(image_id, [])
        used = matched.setdefault(image_id, set())
        best_iou, best_j = 0.0, -1
        for j, g in enumerate(candidates):
            if j in used:
                continue
            overlap = iou(det.box, g.box)
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou, best_j = overlap, j
        if best_j >= 0:
            used.add(best_j)
            flags.append((det.confidence, True))
        else:
            flags.append((det.confidence, False))
    return flags, n_gt


def _pr_points(flags, n_gt):
    tp_cum = 0
    points = []
    for k, (_, is_tp) in enumerate(flags, start=1):
        tp_cum += int(is_tp)
        recall = tp_cum / n_gt if n_gt else 0.0
        points.append((recall, tp_cum / k))
    return points


def _ap_from_points(points, interpolation):
    if not points:
        return 0.0
    recalls = np.array([r for r, _ in points])
    precisions = np.array([p for _, p in points])
    # precision envelope: best precision achievable at recall >= r
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    if interpolation == "101":
        grid = np.arange(101) / 100.0
        idx = np.searchsorted(recalls, grid, side="left")
        values = np.where(idx < len(points), envelope[np.minimum(idx, len(points) - 1)], 0.0)
        return float(values.mean())
    if interpolation == "area":
        area = 0.0
        prev_recall = 0.0
        for k in range(len(points)):
            r = recalls[k]
            if r > prev_recall:
                area += (r - prev_recall) * envelope[k]
                prev_recall = r
        return float(area)
    raise ValueError(f"unknown interpolation {interpolation!r}")


def average_precision(
    preds_by_image,
    gts_by_image,
    iou_threshold: float = 0.5,
    interpolation: str = "101",
) -> ApResult:
    """Per-category AP at one IoU threshold and the category mean.

    Categories absent from ground truth are excluded from the mean; an
    empty ground truth yields a mean of 0.
    """
    categories = sorted({g.category for gts in gts_by_image.values() for g in gts})
    per_category = {}
    for category in categories:
        flags, n_gt = _ranked_outcomes(preds_by_image, gts_by_image, category, iou_threshold)
        if n_gt == 0:
            continue
        per_category[category] = _ap_from_points(_pr_points(flags, n_gt), interpolation)
    mean = float(np.mean(list(per_category.values()))) if per_category else 0.0
    return ApResult(per_category=per_category, mean=mean)


def mean_average_precision(
    preds_by_image,
    gts_by_image,
    thresholds=MAP_THRESHOLDS,
    interpolation: str = "101",
) -> float:
    """Mean AP over the usual 0.50:0.05:0.95 threshold sweep."""
    values = [
        average_precision(preds_by_image, gts_by_image, t, interpolation).mean
        for t in thresholds
    ]
    return float(np.mean(values))


def pr_curves(preds_by_image, gts_by_image, iou_threshold: float = 0.5) -> dict[int, PrCurve]:
    categories = sorted({g.category for gts in gts_by_image.values() for g in gts})
    curves = {}
    for category in categories:
        flags, n_gt = _ranked_outcomes(preds_by_image, gts_by_image, category, iou_threshold)
        curves[category] = PrCurve(tuple(_pr_points(flags, n_gt)), category)
    return curves


@dataclass(frozen=True)
class SyntheticSetConfig:
    """Parameters of the abstract detection population.

    Each of ``n_objects`` ground truths becomes a TP with probability
    ``p_tp`` (an FN otherwise); false positives arrive at ``fp_rate`` per
    true detection; all confidences are uniform on ``conf_range``.
    """

    n_objects: int = 100
    p_tp: float = 0.7
    fp_rate: float = 0.3
    conf_range: tuple[float, float] = (0.7, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.p_tp <= 1.0 and 0.0 <= self.fp_rate <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.conf_range[0] > self.conf_range[1]:
            raise ValueError("conf_range low must not exceed high")


@dataclass(frozen=True)
class SyntheticSet:
    """Abstract outcome population: TP/FP confidences plus the gt count."""

    tp_confidences: tuple[float, ...]
    fp_confidences: tuple[float, ...]
    n_objects: int


def generate_synthetic_set(cfg: SyntheticSetConfig) -> SyntheticSet:
    rng = np.random.default_rng(cfg.seed)
    is_tp = rng.random(cfg.n_objects) < cfg.p_tp
    n_tp = int(is_tp.sum())
    n_fp = int(rng.binomial(n_tp, cfg.fp_rate)) if n_tp else 0
    lo, hi = cfg.conf_range
    tp_conf = rng.uniform(lo, hi, n_tp)
    fp_conf = rng.uniform(lo, hi, n_fp)
    return SyntheticSet(tuple(tp_conf.tolist()), tuple(fp_conf.tolist()), cfg.n_objects)


def perturb_set(
    s: SyntheticSet,
    add_fps: tuple[int, tuple[float, float]] | None = None,
    remove_tps: int = 0,
    seed: int = 0,
) -> SyntheticSet:
    """Inject abstract corruption: extra FPs and/or TPs turned into FNs."""
    rng = np.random.default_rng(seed)
    tp = list(s.tp_confidences)
    fp = list(s.fp_confidences)
    if remove_tps:
        if remove_tps > len(tp):
            raise ValueError(f"cannot remove {remove_tps} TPs from {len(tp)}")
        doomed = set(rng.choice(len(tp), size=remove_tps, replace=False).tolist())
        tp = [c for i, c in enumerate(tp) if i not in doomed]
    if add_fps is not None:
        count, (lo, hi) = add_fps
        fp.extend(rng.uniform(lo, hi, count).tolist())
    return SyntheticSet(tuple(tp), tuple(fp), s.n_objects)


def _synthetic_flags(s: SyntheticSet):
    scored = [(c, True) for c in s.tp_confidences] + [(c, False) for c in s.fp_confidences]
    # stable rank: confidence descending, TPs before FPs on exact ties
    scored.sort(key=lambda item: (-item[0], not item[1]))
    return scored


def synthetic_ap50(s: SyntheticSet, interpolation: str = "101") -> float:
    """AP of the abstract population (outcomes are fixed by construction)."""
    return _ap_from_points(_pr_points(_synthetic_flags(s), s.n_objects), interpolation)


def synthetic_pr_curve(s: SyntheticSet) -> PrCurve:
    return PrCurve(tuple(_pr_points(_synthetic_flags(s), s.n_objects)))
