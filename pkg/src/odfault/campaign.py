"""Campaign orchestration: transient and permanent injections, ingestion,
and the synthetic PR experiment, with CSV/JSON/PGM reporting.

Every campaign is driven by a single config (JSON document or
``CampaignConfig``) whose seed fully determines the outcome: per-injection
work items derive their randomness from ``(seed, stream, index)``, workers
merely split the index range, and results are reduced in index order, so a
re-run at any worker count produces byte-identical reports.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from odfault import ap as ap_mod
from odfault.bits import (
    FaultDescriptor,
    FaultMode,
    FaultTarget,
    rescale_rate,
    sample_fault,
)
from odfault.detector import (
    DetectorModel,
    Scene,
    SceneSpec,
    generate_scene,
    generate_sequence,
    infer,
    reference_model,
    shape_catalog,
)
from odfault.geometry import rasterize
from odfault.matching import CategoryPolicy, assign, fp_type_breakdown
from odfault.metrics import ImageEval, SdcReport, severity
from odfault.persistence import TrackerConfig, occupancy_series, sdc_at_severity, track
from odfault.records import DataError, read_records

__all__ = [
    "ConfigError",
    "CampaignConfig",
    "run_transient",
    "run_permanent",
    "ingest_and_score",
    "simulate_pr",
    "CSV_COLUMNS",
    "write_pgm",
]


class ConfigError(Exception):
    """Invalid campaign configuration (CLI exit code 2)."""


# Streams for deriving independent per-item seeds from the campaign seed.
_STREAM_SCENE = 0
_STREAM_FAULT = 1
_STREAM_SEQUENCE = 2

CSV_COLUMNS = (
    "injection_id",
    "target",
    "layer",
    "coords",
    "bit",
    "mode",
    "image_id",
    "verdict",
    "delta_fp",
    "delta_fn_n",
    "avg_conf_orig",
    "avg_conf_corr",
    "avg_size_orig",
    "avg_size_corr",
    "a_fp_occ",
    "a_fn_vac",
)

DEFAULT_SEVERITY_LEVELS = (0.0, 0.05, 0.10, 0.15)


def _derive_seed(seed: int, stream: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(seed, stream, index))


@dataclass(frozen=True)
class CampaignConfig:
    """Validated configuration shared by all campaign modes."""

    mode: str
    seed: int
    n_injections: int = 200
    target: str = "neuron"
    bit_policy: str = "all_32"
    workers: int = 1
    iou_threshold: float = 0.5
    scene_spec: SceneSpec = field(default_factory=SceneSpec)
    scene_pool: int = 200
    fixed_scene: bool = False
    n_frames: int = 60
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    severity_levels: tuple[float, ...] = DEFAULT_SEVERITY_LEVELS
    category_policy: CategoryPolicy = field(default_factory=CategoryPolicy.strict)
    emit_masks: int = 0

    def __post_init__(self):
        if self.mode not in ("transient", "permanent", "ingest", "simulate_pr"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if self.mode in ("transient", "permanent") and self.n_injections < 1:
            raise ConfigError("n_injections must be at least 1")
        if self.target not in ("neuron", "weight"):
            raise ConfigError(f"unknown target {self.target!r}")
        if self.bit_policy not in ("all_32", "exponent_only", "mantissa_only"):
            raise ConfigError(f"unknown bit policy {self.bit_policy!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.mode == "permanent" and self.n_frames < self.tracker.n:
            raise ConfigError(
                f"sequence of {self.n_frames} frames is shorter than tracker n={self.tracker.n}")
        if any(level < 0 for level in self.severity_levels):
            raise ConfigError("severity levels must be non-negative")

    @classmethod
    def from_json(cls, obj: dict, **overrides) -> "CampaignConfig":
        obj = dict(obj)
        obj.update({k: v for k, v in overrides.items() if v is not None})
        try:
            scene = obj.get("scene", {})
            spec = SceneSpec(
                width=int(scene.get("width", 64)),
                height=int(scene.get("height", 64)),
                object_count=tuple(scene.get("object_count", (2, 4))),
                size_range=tuple(scene.get("size_range", (10, 16))),
            )
            tracker_obj = obj.get("tracker", {})
            tracker = TrackerConfig(
                m=int(tracker_obj.get("m", 10)),
                n=int(tracker_obj.get("n", 15)),
                vicinity_px=int(tracker_obj.get("vicinity_px", 50)),
                coasting=bool(tracker_obj.get("fp_coasting", True)),
            )
            policy_obj = obj.get("category_policy", {})
            mode = policy_obj.get("mode", "strict")
            if mode == "clusters":
                policy = CategoryPolicy.from_clusters(policy_obj.get("clusters", []))
            else:
                policy = CategoryPolicy(mode)
            if "seed" not in obj or obj["seed"] is None:
                raise ConfigError("seed is mandatory")
            return cls(
                mode=obj.get("mode", "transient"),
                seed=int(obj["seed"]),
                n_injections=int(obj.get("n_injections", 200)),
                target=obj.get("target", "neuron"),
                bit_policy=obj.get("bit_policy", "all_32"),
                workers=int(obj.get("workers", 1)),
                iou_threshold=float(obj.get("iou_threshold", 0.5)),
                scene_spec=spec,
                scene_pool=int(scene.get("pool", 200)),
                fixed_scene=bool(scene.get("fixed", False)),
                n_frames=int(obj.get("sequence", {}).get("n_frames", 60)),
                tracker=tracker,
                severity_levels=tuple(obj.get("severity_levels", DEFAULT_SEVERITY_LEVELS)),
                category_policy=policy,
                emit_masks=int(obj.get("emit_masks", 0)),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    def echo(self) -> dict:
        # the worker count is an execution detail, not campaign identity:
        # outputs must be byte-identical at any parallelism
        return {
            "mode": self.mode,
            "seed": self.seed,
            "n_injections": self.n_injections,
            "target": self.target,
            "bit_policy": self.bit_policy,
            "iou_threshold": self.iou_threshold,
            "scene": {
                "width": self.scene_spec.width,
                "height": self.scene_spec.height,
                "object_count": list(self.scene_spec.object_count),
                "size_range": list(self.scene_spec.size_range),
                "pool": self.scene_pool,
                "fixed": self.fixed_scene,
            },
            "sequence": {"n_frames": self.n_frames},
            "tracker": {
                "m": self.tracker.m,
                "n": self.tracker.n,
                "vicinity_px": self.tracker.vicinity_px,
                "fp_coasting": self.tracker.coasting,
            },
            "severity_levels": list(self.severity_levels),
            "category_policy": {"mode": self.category_policy.mode,
                                "clusters": [sorted(g) for g in self.category_policy.clusters]},
            "emit_masks": self.emit_masks,
        }


# ---------------------------------------------------------------------------
# shared per-worker state (built once per process by the pool initializer)

_STATE: dict = {}


def _scene_for(cfg: CampaignConfig, index: int) -> int:
    if cfg.fixed_scene:
        return 0
    return index % min(cfg.n_injections, cfg.scene_pool)


def _build_transient_state(cfg: CampaignConfig) -> dict:
    model = reference_model()
    catalog = shape_catalog(model)
    pool = 1 if cfg.fixed_scene else min(cfg.n_injections, cfg.scene_pool)
    scenes = [generate_scene(cfg.scene_spec, _derive_seed(cfg.seed, _STREAM_SCENE, i))
              for i in range(pool)]
    origs = [infer(model, scene) for scene in scenes]
    counts = []
    for scene, trace in zip(scenes, origs):
        outcome = assign(list(trace.detections), scene.ground_truth(),
                         cfg.iou_threshold, cfg.category_policy)
        counts.append((outcome.tp, outcome.fp, outcome.fn))
    return {"cfg": cfg, "model": model, "catalog": catalog,
            "scenes": scenes, "origs": origs, "counts": counts}


def _init_transient_worker(cfg_json: str) -> None:
    _STATE.clear()
    _STATE.update(_build_transient_state(CampaignConfig.from_json(json.loads(cfg_json))))


def _transient_injection(index: int) -> dict:
    cfg: CampaignConfig = _STATE["cfg"]
    model: DetectorModel = _STATE["model"]
    scene_idx = _scene_for(cfg, index)
    scene: Scene = _STATE["scenes"][scene_idx]
    fault = sample_fault(
        _STATE["catalog"], FaultTarget(cfg.target), cfg.bit_policy,
        seed=_derive_seed(cfg.seed, _STREAM_FAULT, index))
    corr = infer(model, scene, fault=fault)
    gts = scene.ground_truth()
    outcome = assign(list(corr.detections), gts, cfg.iou_threshold, cfg.category_policy)
    evaluation = ImageEval(
        image_id=scene_idx,
        counts_orig=_STATE["counts"][scene_idx],
        counts_corr=(outcome.tp, outcome.fp, outcome.fn),
        inf_flag=corr.inf_seen,
        nan_flag=corr.nan_seen,
    )
    report = severity(
        evaluation,
        list(_STATE["origs"][scene_idx].detections),
        list(corr.detections),
        gts,
        (scene.width, scene.height),
    )
    fp_types = fp_type_breakdown(list(corr.detections), gts, cfg.iou_threshold) \
        if report.verdict == "sdc" else None
    return {
        "injection_id": index,
        "fault": fault.to_json(),
        "image_id": scene_idx,
        "report": report,
        "fp_types": fp_types,
        "corr_detections": tuple(corr.detections),
    }


def _run_items(cfg: CampaignConfig, n_items: int, init, work, state_builder) -> list:
    """Execute items 0..n-1, possibly in a process pool, reduced in order."""
    if cfg.workers == 1:
        _STATE.clear()
        _STATE.update(state_builder(cfg))
        return [work(i) for i in range(n_items)]
    cfg_json = json.dumps(cfg.echo())
    with ProcessPoolExecutor(max_workers=cfg.workers, initializer=init,
                             initargs=(cfg_json,)) as pool:
        chunk = max(1, n_items // (cfg.workers * 4))
        return list(pool.map(work, range(n_items), chunksize=chunk))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv_row(injection_id, fault_json, image_id, report: SdcReport) -> list[str]:
    fault_json = fault_json or {}
    coords = fault_json.get("coords")
    return [
        _fmt(injection_id),
        _fmt(fault_json.get("target")),
        _fmt(fault_json.get("layer")),
        ";".join(str(c) for c in coords) if coords is not None else "",
        _fmt(fault_json.get("bit")),
        _fmt(fault_json.get("mode")),
        _fmt(image_id),
        report.verdict,
        _fmt(report.delta_fp),
        _fmt(report.delta_fn_n),
        _fmt(report.avg_conf_orig),
        _fmt(report.avg_conf_corr),
        _fmt(report.avg_size_orig),
        _fmt(report.avg_size_corr),
        _fmt(report.a_fp_occ),
        _fmt(report.a_fn_vac),
    ]


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(obj, handle, sort_keys=True, indent=2)
        handle.write("\n")


def write_pgm(mask: np.ndarray, path) -> None:
    """Binary mask as an 8-bit PGM image (0 = clear, 255 = set)."""
    height, width = mask.shape
    with open(path, "wb") as handle:
        handle.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        handle.write((mask.astype(np.uint8) * 255).tobytes())


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def _kilo_pixels(value: float | None) -> float | None:
    return value * 1e-3 if value is not None else None


def _severity_summary(reports: list[SdcReport]) -> dict:
    """Table-style severity means over the SDC events of a campaign.

    Box sizes are reported in thousands of square pixels.
    """
    sdc = [r for r in reports if r.verdict == "sdc"]
    return {
        "n_sdc_events": len(sdc),
        "mean_delta_fp": _mean(r.delta_fp for r in sdc),
        "mean_delta_fn_n": _mean(r.delta_fn_n for r in sdc),
        "avg_conf_orig": _mean(r.avg_conf_orig for r in sdc),
        "avg_conf_corr": _mean(r.avg_conf_corr for r in sdc),
        "avg_size_kpx_orig": _kilo_pixels(_mean(r.avg_size_orig for r in sdc)),
        "avg_size_kpx_corr": _kilo_pixels(_mean(r.avg_size_corr for r in sdc)),
        "mean_a_fp_occ": _mean(r.a_fp_occ for r in sdc),
        "mean_a_fn_vac": _mean(r.a_fn_vac for r in sdc),
    }


def _bit_average_table(pairs) -> dict:
    from odfault.metrics import bit_averaged

    table = bit_averaged(pairs)
    return {str(bit): stats for bit, stats in table.items()}


def run_transient(cfg: CampaignConfig, out_dir) -> dict:
    """Transient single-bit-flip campaign; returns the summary report."""
    if cfg.mode != "transient":
        raise ConfigError(f"run_transient got a {cfg.mode!r} config")
    os.makedirs(out_dir, exist_ok=True)
    results = _run_items(cfg, cfg.n_injections, _init_transient_worker,
                         _transient_injection, _build_transient_state)

    state = _build_transient_state(cfg) if cfg.workers != 1 else _STATE
    reports = [r["report"] for r in results]
    verdicts = [r.verdict for r in reports]
    n = len(results)
    rates = {
        "sdc": verdicts.count("sdc") / n,
        "due": verdicts.count("due") / n,
        "benign": verdicts.count("benign") / n,
    }

    pairs = [(FaultDescriptor.from_json(r["fault"]), r["report"]) for r in results]
    fp_types_total = {"class_only": 0, "box_only": 0, "both_or_unmatched": 0}
    for r in results:
        if r["fp_types"]:
            for key in fp_types_total:
                fp_types_total[key] += r["fp_types"][key]

    # AP on the fault-free and corrupted corpora (one image per injection)
    gts_by_image = {}
    orig_by_image = {}
    corr_by_image = {}
    for r in results:
        scene_idx = r["image_id"]
        key = r["injection_id"]
        gts_by_image[key] = state["scenes"][scene_idx].ground_truth()
        orig_by_image[key] = list(state["origs"][scene_idx].detections)
        corr_by_image[key] = list(r["corr_detections"])
    ap_summary = {
        "orig": {
            "ap50": ap_mod.average_precision(orig_by_image, gts_by_image, 0.5).mean,
            "map": ap_mod.mean_average_precision(orig_by_image, gts_by_image),
        },
        "corr": {
            "ap50": ap_mod.average_precision(corr_by_image, gts_by_image, 0.5).mean,
            "map": ap_mod.mean_average_precision(corr_by_image, gts_by_image),
        },
    }

    csv_rows = [_csv_row(r["injection_id"], r["fault"], r["image_id"], r["report"])
                for r in results]
    _write_csv(os.path.join(out_dir, "injections.csv"), CSV_COLUMNS, csv_rows)

    bit_table = _bit_average_table(pairs)
    bit_rows = [
        (bit, stats["count"], _fmt(stats["mean_delta_fp"]), _fmt(stats["mean_delta_fn_n"]))
        for bit, stats in sorted(bit_table.items(), key=lambda kv: int(kv[0]))
    ]
    _write_csv(os.path.join(out_dir, "bit_averages.csv"),
               ("bit", "n_sdc", "mean_delta_fp", "mean_delta_fn_n"), bit_rows)

    report = {
        "config": cfg.echo(),
        "rates": rates,
        "severity_over_sdc": _severity_summary(reports),
        "fp_types_over_sdc": fp_types_total,
        "bit_averages": bit_table,
        "ap": ap_summary,
    }
    _write_json(os.path.join(out_dir, "report.json"), report)
    return report


# ---------------------------------------------------------------------------
# permanent campaign


def _build_permanent_state(cfg: CampaignConfig) -> dict:
    model = reference_model()
    catalog = shape_catalog(model)
    frames = generate_sequence(_derive_seed(cfg.seed, _STREAM_SEQUENCE, 0),
                               n_frames=cfg.n_frames,
                               width=cfg.scene_spec.width,
                               height=cfg.scene_spec.height)
    orig_rasters = []
    for frame in frames:
        trace = infer(model, frame)
        orig_rasters.append(rasterize([d.box for d in trace.detections],
                                      frame.width, frame.height))
    return {"cfg": cfg, "model": model, "catalog": catalog,
            "frames": frames, "orig_rasters": orig_rasters}


def _init_permanent_worker(cfg_json: str) -> None:
    _STATE.clear()
    _STATE.update(_build_permanent_state(CampaignConfig.from_json(json.loads(cfg_json))))


def _permanent_injection(index: int) -> dict:
    cfg: CampaignConfig = _STATE["cfg"]
    model: DetectorModel = _STATE["model"]
    frames: list[Scene] = _STATE["frames"]
    orig_rasters = _STATE["orig_rasters"]
    fault = sample_fault(
        _STATE["catalog"], FaultTarget(cfg.target), "exponent_only",
        seed=_derive_seed(cfg.seed, _STREAM_FAULT, index),
        mode=FaultMode.STUCK_AT_1)

    fp_blobs, fn_blobs, due_frames = [], [], 0
    for frame, orig_raster in zip(frames, orig_rasters):
        trace = infer(model, frame, fault=fault)
        corr_raster = rasterize([d.box for d in trace.detections], frame.width, frame.height)
        fp_blobs.append(corr_raster & ~orig_raster)
        fn_blobs.append(orig_raster & ~corr_raster)
        due_frames += int(trace.nan_seen or trace.inf_seen)

    area = frames[0].width * frames[0].height
    fp_tracker = TrackerConfig(m=cfg.tracker.m, n=cfg.tracker.n,
                               vicinity_px=cfg.tracker.vicinity_px, coasting=cfg.tracker.coasting)
    fn_tracker = TrackerConfig(m=cfg.tracker.m, n=cfg.tracker.n,
                               vicinity_px=cfg.tracker.vicinity_px, coasting=False)
    fp_verdict = track(fp_blobs, fp_tracker)
    fn_verdict = track(fn_blobs, fn_tracker)
    fp_series = occupancy_series(fp_verdict, image_area=area)
    fn_series = occupancy_series(fn_verdict, reference_blobs=orig_rasters)
    fp_levels = sdc_at_severity(fp_series, cfg.severity_levels)
    fn_levels = sdc_at_severity(fn_series, cfg.severity_levels)
    persistent_popcount = [int(m.sum()) for m in fp_verdict.masks]

    return {
        "injection_id": index,
        "fault": fault.to_json(),
        "fp_levels": fp_levels,
        "fn_levels": fn_levels,
        "fp_series": fp_series,
        "fn_series": fn_series,
        "mean_fp_occ": _mean(fp_series),
        "mean_fn_vac": _mean(fn_series),
        "due_frames": due_frames,
        "fp_mask_popcounts": persistent_popcount,
    }


def run_permanent(cfg: CampaignConfig, out_dir) -> dict:
    """Stuck-at-1 exponent-bit campaign over a frame sequence."""
    if cfg.mode != "permanent":
        raise ConfigError(f"run_permanent got a {cfg.mode!r} config")
    os.makedirs(out_dir, exist_ok=True)
    results = _run_items(cfg, cfg.n_injections, _init_permanent_worker,
                         _permanent_injection, _build_permanent_state)
    n = len(results)

    def level_rates(key):
        raw = {}
        rescaled = {}
        for level in cfg.severity_levels:
            hits = sum(1 for r in results if r[key][level]) / n
            raw[str(level)] = hits
            rescaled[str(level)] = rescale_rate(hits)
        return raw, rescaled

    fp_raw, fp_rescaled = level_rates("fp_levels")
    fn_raw, fn_rescaled = level_rates("fn_levels")

    by_bit: dict[int, list] = {}
    for r in results:
        by_bit.setdefault(r["fault"]["bit"], []).append(r)
    bit_occupancy = {
        str(bit): {
            "count": len(rs),
            "mean_fp_occ": _mean(r["mean_fp_occ"] for r in rs),
            "mean_fn_vac": _mean(r["mean_fn_vac"] for r in rs),
        }
        for bit, rs in sorted(by_bit.items())
    }

    level_names = [f"fp_sdc_at_{level}" for level in cfg.severity_levels] + \
                  [f"fn_sdc_at_{level}" for level in cfg.severity_levels]
    header = ("injection_id", "target", "layer", "coords", "bit", "mode",
              *level_names, "mean_fp_occ", "mean_fn_vac", "due_frames")
    rows = []
    for r in results:
        fault = r["fault"]
        rows.append([
            r["injection_id"], fault["target"], fault["layer"],
            ";".join(str(c) for c in fault["coords"]), fault["bit"], fault["mode"],
            *[int(r["fp_levels"][lv]) for lv in cfg.severity_levels],
            *[int(r["fn_levels"][lv]) for lv in cfg.severity_levels],
            _fmt(r["mean_fp_occ"]), _fmt(r["mean_fn_vac"]), r["due_frames"],
        ])
    _write_csv(os.path.join(out_dir, "injections.csv"), header, rows)

    series_rows = []
    for r in results:
        for frame_idx, (fp, fn) in enumerate(zip(r["fp_series"], r["fn_series"])):
            series_rows.append([r["injection_id"], frame_idx, _fmt(fp), _fmt(fn)])
    _write_csv(os.path.join(out_dir, "occupancy_series.csv"),
               ("injection_id", "frame", "fp_occ", "fn_vac"), series_rows)

    if cfg.emit_masks > 0:
        state = _build_permanent_state(cfg) if cfg.workers != 1 else _STATE
        emitted = 0
        for r in results:
            if not r["fp_levels"][cfg.severity_levels[0]]:
                continue
            masks = track(
                _rebuild_fp_blobs(state, r["injection_id"]), state["cfg"].tracker).masks
            for frame_idx, mask in enumerate(masks):
                write_pgm(mask, os.path.join(
                    out_dir, f"fp_mask_inj{r['injection_id']}_frame{frame_idx:03d}.pgm"))
            emitted += 1
            if emitted >= cfg.emit_masks:
                break

    report = {
        "config": cfg.echo(),
        "fp_rates_at_level": fp_raw,
        "fp_rates_at_level_rescaled": fp_rescaled,
        "fn_rates_at_level": fn_raw,
        "fn_rates_at_level_rescaled": fn_rescaled,
        "bit_mean_occupancy": bit_occupancy,
        "due_fault_fraction": sum(1 for r in results if r["due_frames"] > 0) / n,
    }
    _write_json(os.path.join(out_dir, "report.json"), report)
    return report


def _rebuild_fp_blobs(state, injection_id):
    cfg = state["cfg"]
    fault = sample_fault(
        state["catalog"], FaultTarget(cfg.target), "exponent_only",
        seed=_derive_seed(cfg.seed, _STREAM_FAULT, injection_id),
        mode=FaultMode.STUCK_AT_1)
    blobs = []
    for frame, orig_raster in zip(state["frames"], state["orig_rasters"]):
        trace = infer(state["model"], frame, fault=fault)
        corr = rasterize([d.box for d in trace.detections], frame.width, frame.height)
        blobs.append(corr & ~orig_raster)
    return blobs


# ---------------------------------------------------------------------------
# ingestion


def ingest_and_score(orig_path, corr_path, cfg: CampaignConfig, out_dir) -> dict:
    """Score externally produced detection record pairs."""
    os.makedirs(out_dir, exist_ok=True)
    orig_records = read_records(orig_path)
    corr_records = read_records(corr_path)

    orig_by_id = {r.image_id: r for r in orig_records}
    corr_by_id = {r.image_id: r for r in corr_records}
    if len(orig_by_id) != len(orig_records) or len(corr_by_id) != len(corr_records):
        raise DataError("duplicate image_ids in record files")
    missing = sorted(set(orig_by_id) - set(corr_by_id), key=str)
    extra = sorted(set(corr_by_id) - set(orig_by_id), key=str)
    if missing or extra:
        raise DataError(
            f"image_id mismatch: missing from corrupted file {missing[:10]}, "
            f"unmatched in corrupted file {extra[:10]}")

    rows = []
    reports = []
    gts_by_image, orig_by_image, corr_by_image = {}, {}, {}
    for image_id in sorted(orig_by_id, key=str):
        orig = orig_by_id[image_id]
        corr = corr_by_id[image_id]
        if (orig.width, orig.height) != (corr.width, corr.height):
            raise DataError(f"image {image_id!r}: dimensions differ between files")
        gts = list(orig.ground_truth)
        out_orig = assign(list(orig.detections), gts, cfg.iou_threshold, cfg.category_policy)
        out_corr = assign(list(corr.detections), gts, cfg.iou_threshold, cfg.category_policy)
        evaluation = ImageEval(
            image_id=image_id,
            counts_orig=(out_orig.tp, out_orig.fp, out_orig.fn),
            counts_corr=(out_corr.tp, out_corr.fp, out_corr.fn),
            inf_flag=corr.inf_flag,
            nan_flag=corr.nan_flag,
        )
        report = severity(evaluation, list(orig.detections), list(corr.detections),
                          gts, (orig.width, orig.height))
        reports.append(report)
        rows.append(_csv_row("", None, image_id, report))
        gts_by_image[image_id] = gts
        orig_by_image[image_id] = list(orig.detections)
        corr_by_image[image_id] = list(corr.detections)

    n = len(reports)
    verdicts = [r.verdict for r in reports]
    rates = {
        "sdc": verdicts.count("sdc") / n,
        "due": verdicts.count("due") / n,
        "benign": verdicts.count("benign") / n,
    }
    ap_summary = {
        "orig": {
            "ap50": ap_mod.average_precision(orig_by_image, gts_by_image, 0.5).mean,
            "map": ap_mod.mean_average_precision(orig_by_image, gts_by_image),
        },
        "corr": {
            "ap50": ap_mod.average_precision(corr_by_image, gts_by_image, 0.5).mean,
            "map": ap_mod.mean_average_precision(corr_by_image, gts_by_image),
        },
    }
    ap_summary["delta"] = {
        "ap50": ap_summary["corr"]["ap50"] - ap_summary["orig"]["ap50"],
        "map": ap_summary["corr"]["map"] - ap_summary["orig"]["map"],
    }

    _write_csv(os.path.join(out_dir, "images.csv"), CSV_COLUMNS, rows)
    report = {
        "config": cfg.echo(),
        "n_images": n,
        "rates": rates,
        "severity_over_sdc": _severity_summary(reports),
        "ap": ap_summary,
    }
    _write_json(os.path.join(out_dir, "report.json"), report)
    return report


# ---------------------------------------------------------------------------
# synthetic PR experiment

DEFAULT_PERTURBATIONS = (
    {"name": "low_conf_fp_flood", "add_fps": [500, [0.0, 0.2]]},
    {"name": "high_conf_fp_few", "add_fps": [100, [0.9, 1.0]]},
    {"name": "tp_loss", "remove_tps_fraction": 0.3},
)


def simulate_pr(
    seed: int,
    out_dir,
    n_objects: int = 100,
    p_tp: float = 0.7,
    fp_rate: float = 0.3,
    conf_range: tuple[float, float] = (0.7, 1.0),
    perturbations=DEFAULT_PERTURBATIONS,
) -> dict:
    """Synthetic PR-curve experiment: baseline plus fault-style perturbations."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = ap_mod.SyntheticSetConfig(
        n_objects=n_objects, p_tp=p_tp, fp_rate=fp_rate,
        conf_range=tuple(conf_range), seed=seed)
    baseline = ap_mod.generate_synthetic_set(cfg)

    variants = [("baseline", baseline)]
    for index, spec in enumerate(perturbations):
        add_fps = spec.get("add_fps")
        remove = spec.get("remove_tps", 0)
        if "remove_tps_fraction" in spec:
            remove = int(len(baseline.tp_confidences) * spec["remove_tps_fraction"])
        perturbed = ap_mod.perturb_set(
            baseline,
            add_fps=(int(add_fps[0]), tuple(add_fps[1])) if add_fps else None,
            remove_tps=remove,
            seed=seed + index + 1,
        )
        variants.append((spec["name"], perturbed))

    curve_rows = []
    summary_rows = []
    summary = {}
    for name, synthetic in variants:
        curve = ap_mod.synthetic_pr_curve(synthetic)
        for rank, (recall, precision) in enumerate(curve.points):
            curve_rows.append([name, rank, _fmt(recall), _fmt(precision)])
        entry = {
            "n_objects": synthetic.n_objects,
            "n_tp": len(synthetic.tp_confidences),
            "n_fp": len(synthetic.fp_confidences),
            "ap50": ap_mod.synthetic_ap50(synthetic),
            "ap50_exact_area": ap_mod.synthetic_ap50(synthetic, interpolation="area"),
        }
        summary[name] = entry
        summary_rows.append([name, entry["n_objects"], entry["n_tp"], entry["n_fp"],
                             _fmt(entry["ap50"]), _fmt(entry["ap50_exact_area"])])

    _write_csv(os.path.join(out_dir, "pr_curves.csv"),
               ("variant", "rank", "recall", "precision"), curve_rows)
    _write_csv(os.path.join(out_dir, "pr_summary.csv"),
               ("variant", "n_objects", "n_tp", "n_fp", "ap50", "ap50_exact_area"),
               summary_rows)
    report = {
        "seed": seed,
        "generator": {"n_objects": n_objects, "p_tp": p_tp, "fp_rate": fp_rate,
                      "conf_range": list(conf_range)},
        "variants": summary,
    }
    _write_json(os.path.join(out_dir, "report.json"), report)
    return report
