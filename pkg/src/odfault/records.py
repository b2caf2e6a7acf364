"""Newline-delimited JSON detection records.

One JSON object per line carries a full per-image evaluation payload:
predicted boxes with categories and confidences, ground truth, and the
NaN/Inf irregularity flags of the inference that produced the predictions.
This is the path by which externally produced detector outputs are scored
with the same assignment and severity machinery as the built-in detector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from odfault.geometry import Box, Detection, clip

__all__ = ["DataError", "DetectionRecord", "read_records", "write_records", "record_from_trace"]


class DataError(Exception):
    """Malformed or inconsistent input data (CLI exit code 3)."""


@dataclass(frozen=True)
class DetectionRecord:
    image_id: object
    width: int
    height: int
    detections: tuple[Detection, ...]
    ground_truth: tuple[Detection, ...]
    nan_flag: bool = False
    inf_flag: bool = False

    def to_json(self) -> dict:
        return {
            "image_id": self.image_id,
            "width": self.width,
            "height": self.height,
            "detections": [
                {
                    "bbox": list(d.box.as_tuple()),
                    "category": d.category,
                    "confidence": d.confidence,
                }
                for d in self.detections
            ],
            "ground_truth": [
                {"bbox": list(g.box.as_tuple()), "category": g.category}
                for g in self.ground_truth
            ],
            "flags": {"nan": self.nan_flag, "inf": self.inf_flag},
        }


def _parse_box(raw, width, height, where):
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise DataError(f"{where}: bbox must be [x1, y1, x2, y2], got {raw!r}")
    coords = []
    for value in raw:
        value = float(value)
        if math.isnan(value):
            raise DataError(f"{where}: bbox coordinate is NaN")
        coords.append(value)
    # clipping also squashes infinities onto the image boundary
    return clip(Box(*coords), width, height)


def _parse_record(obj: dict, where: str) -> DetectionRecord:
    try:
        image_id = obj["image_id"]
        width = int(obj["width"])
        height = int(obj["height"])
        raw_dets = obj["detections"]
        raw_gts = obj["ground_truth"]
        flags = obj.get("flags", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}: missing or malformed field ({exc})") from exc
    if width <= 0 or height <= 0:
        raise DataError(f"{where}: non-positive image dimensions {width}x{height}")

    detections = []
    for k, det in enumerate(raw_dets):
        confidence = float(det.get("confidence", 1.0))
        if not 0.0 <= confidence <= 1.0:
            raise DataError(f"{where}: detection {k} confidence {confidence} outside [0, 1]")
        detections.append(
            Detection(
                _parse_box(det["bbox"], width, height, f"{where} detection {k}"),
                int(det["category"]),
                confidence,
            )
        )
    ground_truth = [
        Detection(_parse_box(g["bbox"], width, height, f"{where} gt {k}"), int(g["category"]), 1.0)
        for k, g in enumerate(raw_gts)
    ]
    return DetectionRecord(
        image_id=image_id,
        width=width,
        height=height,
        detections=tuple(detections),
        ground_truth=tuple(ground_truth),
        nan_flag=bool(flags.get("nan", False)),
        inf_flag=bool(flags.get("inf", False)),
    )


def read_records(path) -> list[DetectionRecord]:
    """Parse an ndjson record file; errors carry the offending line number."""
    records = []
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read records: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: invalid JSON ({exc.msg})") from exc
            records.append(_parse_record(obj, where))
    if not records:
        raise DataError(f"{path}: no records found")
    return records


def write_records(records, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json(), sort_keys=True))
            handle.write("\n")


def record_from_trace(image_id, scene, trace) -> DetectionRecord:
    """Package a detector inference as a record (for export or round-trips)."""
    return DetectionRecord(
        image_id=image_id,
        width=scene.width,
        height=scene.height,
        detections=tuple(trace.detections),
        ground_truth=tuple(scene.ground_truth()),
        nan_flag=trace.nan_seen,
        inf_flag=trace.inf_seen,
    )
