"""A deterministic desk-scale convolutional detector on synthetic scenes.

Scenes are crisp axis-aligned rectangles whose fill intensity encodes the
category, drawn over a low-amplitude checkerboard background. The detector
is built analytically, not trained, as five conv layers:

1. front: three redundant intensity pass-through channels plus an edge
   response (the matched-filter inputs);
2. stairs: saturating unit steps bracketing every category band, one stair
   pair per redundant intensity copy;
3. indicators: per-copy band membership collapsed from the stair pairs;
4. votes: 2-of-3 majority over the redundant indicators, yielding exact
   {0, 1} per-category occupancy maps (tents);
5. score: a 3x3 box count of the own-category tent with a slightly
   edge-averse term.

The decode head gates cells on the score, groups survivors into connected
components, and emits one box per component with a support-size confidence
sigmoid, then NMS and a detection cap.

All arithmetic is 32-bit float in a fixed accumulation order, so a run is
bit-reproducible. The redundant-vote structure makes every single
mantissa-level perturbation along the band pathway decode-invisible, which
mirrors the mantissa neutrality observed on real networks, while exponent
MSB corruption turns small weights into ~1e38 values (or zero weights into
2.0) and storms the decode with false objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from odfault.bits import FaultDescriptor, FaultTarget, ShapeCatalog, apply_fault
from odfault.geometry import Box, Detection, clip, nms

__all__ = [
    "Scene",
    "SceneSpec",
    "ConvLayer",
    "DetectorModel",
    "InferenceTrace",
    "reference_model",
    "generate_scene",
    "generate_sequence",
    "infer",
    "shape_catalog",
    "CATEGORY_INTENSITIES",
    "BACKGROUND_LEVELS",
]

F32 = np.float32

# Dyadic intensity code: exactly representable, mantissas >= 1.25 so a
# single mantissa flip moves a value by at most ~40% and never lands in a
# foreign intensity band (bands are +-1/16 around each level).
CATEGORY_INTENSITIES = (0.375, 0.625, 0.8125)
BACKGROUND_LEVELS = (0.09375, 0.15625)
BAND_HALF_WIDTH = 0.0625
STAIR_RAMP = 0.03125


@dataclass(frozen=True)
class SceneSpec:
    width: int = 64
    height: int = 64
    object_count: tuple[int, int] = (2, 4)
    size_range: tuple[int, int] = (10, 16)

    def __post_init__(self):
        lo, hi = self.object_count
        slo, shi = self.size_range
        if lo < 0 or hi < lo or slo < 8 or shi < slo:
            raise ValueError(f"invalid scene spec {self}")


@dataclass(frozen=True)
class Scene:
    """Pixel grid plus the ground-truth objects painted into it."""

    pixels: np.ndarray  # (height, width) float32
    objects: tuple[tuple[Box, int, float], ...]  # (box, category, intensity)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def ground_truth(self) -> list[Detection]:
        return [Detection(box, category, 1.0) for box, category, _ in self.objects]


@dataclass(frozen=True)
class ConvLayer:
    weights: np.ndarray  # (out, in, kh, kw) float32
    biases: np.ndarray  # (out,) float32
    activation: str  # "relu" | "relu1" (rectifier clipped at 1)


@dataclass(frozen=True)
class DetectorModel:
    layers: tuple[ConvLayer, ...]
    confidence_threshold: float = 0.5
    nms_threshold: float = 0.5
    max_detections: int = 1000


@dataclass(frozen=True)
class InferenceTrace:
    detections: tuple[Detection, ...]
    nan_seen: bool
    inf_seen: bool
    activations: tuple[np.ndarray, ...] | None = None


def _checkerboard(height: int, width: int) -> np.ndarray:
    lo, hi = BACKGROUND_LEVELS
    grid = np.full((height, width), lo, dtype=F32)
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    grid[(rows + cols) % 2 == 1] = F32(hi)
    return grid


def generate_scene(spec: SceneSpec, seed) -> Scene:
    """Deterministic scene: non-interacting rectangles on a checkerboard.

    Objects keep a 5-pixel gap from each other and 2 pixels from the
    border so their decode footprints never touch. Raises after bounded
    placement retries when the request cannot be packed. ``seed`` is an
    int or a numpy SeedSequence.
    """
    rng = np.random.default_rng(seed)
    for _ in range(30):
        n_objects = int(rng.integers(spec.object_count[0], spec.object_count[1] + 1))
        placed: list[tuple[int, int, int, int]] = []  # (r1, c1, r2, c2) inclusive
        categories = []
        ok = True
        for _ in range(n_objects):
            for _attempt in range(80):
                h = int(rng.integers(spec.size_range[0], spec.size_range[1] + 1))
                w = int(rng.integers(spec.size_range[0], spec.size_range[1] + 1))
                if spec.height - h - 2 < 2 or spec.width - w - 2 < 2:
                    continue
                r1 = int(rng.integers(2, spec.height - h - 1))
                c1 = int(rng.integers(2, spec.width - w - 1))
                r2, c2 = r1 + h - 1, c1 + w - 1
                if all(
                    r1 > pr2 + 5 or pr1 > r2 + 5 or c1 > pc2 + 5 or pc1 > c2 + 5
                    for pr1, pc1, pr2, pc2 in placed
                ):
                    placed.append((r1, c1, r2, c2))
                    categories.append(int(rng.integers(0, len(CATEGORY_INTENSITIES))))
                    break
            else:
                ok = False
                break
        if ok:
            pixels = _checkerboard(spec.height, spec.width)
            objects = []
            for (r1, c1, r2, c2), category in zip(placed, categories):
                intensity = CATEGORY_INTENSITIES[category]
                pixels[r1:r2 + 1, c1:c2 + 1] = F32(intensity)
                objects.append((Box(c1, r1, c2 + 1, r2 + 1), category, intensity))
            return Scene(pixels, tuple(objects))
    raise RuntimeError(f"could not place {spec.object_count} objects of size {spec.size_range}")


def generate_sequence(seed, n_frames: int = 60, width: int = 64, height: int = 64) -> list[Scene]:
    """Moving-object sequence: lane-bound rectangles bouncing horizontally.

    Objects live in disjoint horizontal lanes (so they never interact) and
    translate a few pixels per frame, giving the persistence tracker real
    motion to follow.
    """
    rng = np.random.default_rng(seed)
    n_objects = int(rng.integers(2, 4))
    lanes = []
    row = 3
    for _ in range(n_objects):
        h = int(rng.integers(8, 12))
        if row + h > height - 3:
            break
        w = int(rng.integers(10, 16))
        category = int(rng.integers(0, len(CATEGORY_INTENSITIES)))
        x = int(rng.integers(2, width - w - 1))
        velocity = int(rng.choice([-3, -2, -1, 1, 2, 3]))
        lanes.append({"row": row, "h": h, "w": w, "cat": category, "x": x, "v": velocity})
        row += h + 6
    if not lanes:
        raise RuntimeError("sequence generation placed no objects")

    frames = []
    for _ in range(n_frames):
        pixels = _checkerboard(height, width)
        objects = []
        for lane in lanes:
            r1, h, w = lane["row"], lane["h"], lane["w"]
            c1 = lane["x"]
            intensity = CATEGORY_INTENSITIES[lane["cat"]]
            pixels[r1:r1 + h, c1:c1 + w] = F32(intensity)
            objects.append((Box(c1, r1, c1 + w, r1 + h), lane["cat"], intensity))
            nxt = c1 + lane["v"]
            if nxt < 2 or nxt + w > width - 2:
                lane["v"] = -lane["v"]
                nxt = c1 + lane["v"]
            lane["x"] = nxt
        frames.append(Scene(pixels, tuple(objects)))
    return frames


def _stair_bias_low(intensity: float) -> float:
    return -32.0 * (intensity - BAND_HALF_WIDTH)


def _stair_bias_high(intensity: float) -> float:
    return -32.0 * (intensity + BAND_HALF_WIDTH - STAIR_RAMP)


N_COPIES = 3  # redundancy of the band pathway; single faults are outvoted


def reference_model() -> DetectorModel:
    """Build the analytic five-layer detector tuned to the scene generator."""
    n_cat = len(CATEGORY_INTENSITIES)
    k = N_COPIES

    # layer 1: redundant intensity pass-through (center taps) + edge response
    w1 = np.zeros((k + 1, 1, 3, 3), dtype=F32)
    for copy in range(k):
        w1[copy, 0, 1, 1] = F32(0.5)
    w1[k, 0] = F32(-0.109375)
    w1[k, 0, 1, 1] = F32(0.875)
    b1 = np.zeros(k + 1, dtype=F32)

    # layer 2: saturating stairs at each band edge, one pair per copy,
    # plus an edge pass-through. Channel 2*(copy*n_cat + c) is the low
    # stair of category c on intensity copy `copy`; +1 is the high stair.
    w2 = np.zeros((2 * n_cat * k + 1, k + 1, 1, 1), dtype=F32)
    b2 = np.zeros(2 * n_cat * k + 1, dtype=F32)
    for copy in range(k):
        for c, intensity in enumerate(CATEGORY_INTENSITIES):
            lo = 2 * (copy * n_cat + c)
            w2[lo, copy, 0, 0] = F32(64.0)
            b2[lo] = F32(_stair_bias_low(intensity))
            w2[lo + 1, copy, 0, 0] = F32(64.0)
            b2[lo + 1] = F32(_stair_bias_high(intensity))
    w2[2 * n_cat * k, k, 0, 0] = F32(0.875)

    # layer 3: per-copy band indicators (low stair and not high stair)
    w3 = np.zeros((n_cat * k + 1, 2 * n_cat * k + 1, 1, 1), dtype=F32)
    b3 = np.zeros(n_cat * k + 1, dtype=F32)
    for copy in range(k):
        for c in range(n_cat):
            row = copy * n_cat + c
            lo = 2 * (copy * n_cat + c)
            w3[row, lo, 0, 0] = F32(2.0)
            w3[row, lo + 1, 0, 0] = F32(-2.0)
            b3[row] = F32(-1.0)
    w3[n_cat * k, 2 * n_cat * k, 0, 0] = F32(0.875)

    # layer 4: 2-of-3 vote across the copies -> exact {0,1} category tents,
    # plus the edge pass-through and a constant occupancy-prior floor (a
    # bias-like stored value, exposed as an injectable surface)
    w4 = np.zeros((n_cat + 2, n_cat * k + 1, 1, 1), dtype=F32)
    b4 = np.zeros(n_cat + 2, dtype=F32)
    for c in range(n_cat):
        for copy in range(k):
            w4[c, copy * n_cat + c, 0, 0] = F32(2.0)
        b4[c] = F32(-3.0)
    w4[n_cat, n_cat * k, 0, 0] = F32(0.875)
    b4[n_cat + 1] = F32(0.4375)

    # layer 5: 3x3 box count of the own-category tent, slightly edge-averse;
    # bias of 1.6 tap-weights makes "at least two covered cells" the rule
    w5 = np.zeros((n_cat, n_cat + 2, 3, 3), dtype=F32)
    b5 = np.full(n_cat, F32(-0.7), dtype=F32)
    for c in range(n_cat):
        w5[c, c] = F32(0.4375)
        w5[c, n_cat, 1, 1] = F32(-0.001953125)

    layers = (
        ConvLayer(w1, b1, "relu"),
        ConvLayer(w2, b2, "relu1"),
        ConvLayer(w3, b3, "relu1"),
        ConvLayer(w4, b4, "relu1"),
        ConvLayer(w5, b5, "relu"),
    )
    return DetectorModel(layers)


def shape_catalog(model: DetectorModel) -> ShapeCatalog:
    """Exact activation and filter tensor shapes for every conv layer."""
    neuron_shapes = []
    weight_shapes = []
    for layer in model.layers:
        weight_shapes.append(tuple(layer.weights.shape))
        neuron_shapes.append((layer.weights.shape[0], 64, 64))
    return ShapeCatalog(tuple(neuron_shapes), tuple(weight_shapes))


def _convolve(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """Same-padded conv in float32 with a fixed accumulation order.

    Zero weights are multiplied like any other so IEEE special values
    propagate exactly as a dense implementation would (0 * inf = nan).
    """
    c_in, height, width = x.shape
    c_out, _, kh, kw = layer.weights.shape
    pad_h, pad_w = kh // 2, kw // 2
    padded = np.zeros((c_in, height + 2 * pad_h, width + 2 * pad_w), dtype=F32)
    padded[:, pad_h:pad_h + height, pad_w:pad_w + width] = x
    out = np.empty((c_out, height, width), dtype=F32)
    # overflow to inf and 0*inf=nan are expected consequences of injected
    # faults, not numerical accidents worth warning about
    with np.errstate(over="ignore", invalid="ignore"):
        for oc in range(c_out):
            acc = np.full((height, width), layer.biases[oc], dtype=F32)
            for ic in range(c_in):
                for dy in range(kh):
                    for dx in range(kw):
                        acc = acc + layer.weights[oc, ic, dy, dx] * padded[ic, dy:dy + height, dx:dx + width]
            out[oc] = acc
    return out


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, F32(0.0))
    if kind == "relu1":
        return np.minimum(np.maximum(z, F32(0.0)), F32(1.0))
    raise ValueError(f"unknown activation {kind!r}")


def _sigmoid32(v: np.float32) -> np.float32:
    return F32(1.0) / (F32(1.0) + np.exp(-F32(v)))


# Cell gate on the score map: sits far below any genuine response (the
# weakest is ~0.175) yet above anything a denormal-level perturbation of an
# exactly-zero score can produce.
SCORE_GATE = F32(0.0625)


def _decode(scores: np.ndarray, model: DetectorModel, width: int, height: int) -> list[Detection]:
    detections: list[Detection] = []
    for category in range(scores.shape[0]):
        occupied = scores[category] > SCORE_GATE  # NaN scores gate to unoccupied
        labels, count = ndimage.label(occupied)
        if count == 0:
            continue
        areas = np.bincount(labels.ravel())
        for comp, slc in enumerate(ndimage.find_objects(labels), start=1):
            if slc is None:
                continue
            area = int(areas[comp])
            conf = _sigmoid32(F32(0.25) * (F32(area) - F32(4.0)))
            if conf > model.confidence_threshold:
                box = clip(
                    Box(float(slc[1].start), float(slc[0].start),
                        float(slc[1].stop), float(slc[0].stop)),
                    width, height,
                )
                detections.append(Detection(box, category, float(conf)))
    return nms(detections, model.nms_threshold, model.max_detections)


def _corrupt_weights(model: DetectorModel, fault: FaultDescriptor) -> DetectorModel:
    layer = model.layers[fault.layer_index]
    weights = layer.weights.copy()
    weights[fault.tensor_coords] = apply_fault(weights[fault.tensor_coords], fault.bit, fault.mode)
    layers = list(model.layers)
    layers[fault.layer_index] = ConvLayer(weights, layer.biases, layer.activation)
    return DetectorModel(layers=tuple(layers),
                         confidence_threshold=model.confidence_threshold,
                         nms_threshold=model.nms_threshold,
                         max_detections=model.max_detections)


def infer(
    model: DetectorModel,
    scene: Scene,
    fault: FaultDescriptor | None = None,
    keep_activations: bool = False,
) -> InferenceTrace:
    """Forward pass with an optional single fault.

    Weight faults corrupt the stored parameter before use (stuck-at modes
    persist across calls because the same descriptor pins the same bit on
    every inference); neuron faults corrupt exactly one activation element
    right after the layer's activation function. NaN/Inf flags are scanned
    over every post-activation tensor, faulty value included.
    """
    if fault is not None:
        n_layers = len(model.layers)
        if not 0 <= fault.layer_index < n_layers:
            raise ValueError(f"fault layer {fault.layer_index} outside 0..{n_layers - 1}")
        shape = (
            shape_catalog(model).neuron_shapes[fault.layer_index]
            if fault.target == FaultTarget.NEURON
            else model.layers[fault.layer_index].weights.shape
        )
        if len(fault.tensor_coords) != len(shape) or not all(
            0 <= c < s for c, s in zip(fault.tensor_coords, shape)
        ):
            raise ValueError(f"fault coords {fault.tensor_coords} invalid for shape {tuple(shape)}")
        if fault.target == FaultTarget.WEIGHT:
            model = _corrupt_weights(model, fault)

    x = scene.pixels[None, :, :].astype(F32, copy=False)
    nan_seen = False
    inf_seen = False
    activations = []
    for index, layer in enumerate(model.layers):
        x = _activate(_convolve(x, layer), layer.activation)
        if fault is not None and fault.target == FaultTarget.NEURON and fault.layer_index == index:
            x = x.copy()
            x[fault.tensor_coords] = apply_fault(x[fault.tensor_coords], fault.bit, fault.mode)
        nan_seen = nan_seen or bool(np.isnan(x).any())
        inf_seen = inf_seen or bool(np.isinf(x).any())
        if keep_activations:
            activations.append(x.copy())

    detections = _decode(x, model, scene.width, scene.height)
    return InferenceTrace(
        detections=tuple(detections),
        nan_seen=nan_seen,
        inf_seen=inf_seen,
        activations=tuple(activations) if keep_activations else None,
    )
