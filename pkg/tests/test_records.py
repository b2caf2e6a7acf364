"""Detection-record ndjson round trips and validation failures."""

from __future__ import annotations

import json

import pytest

from odfault.detector import SceneSpec, generate_scene, infer, reference_model
from odfault.geometry import Box, Detection
from odfault.records import (
    DataError,
    DetectionRecord,
    read_records,
    record_from_trace,
    write_records,
)


def _record(image_id="img0", nan=False, inf=False):
    return DetectionRecord(
        image_id=image_id,
        width=100,
        height=80,
        detections=(Detection(Box(10, 10, 30, 30), 1, 0.9),),
        ground_truth=(Detection(Box(11, 11, 31, 31), 1, 1.0),),
        nan_flag=nan,
        inf_flag=inf,
    )


def test_round_trip(tmp_path):
    path = tmp_path / "records.ndjson"
    records = [_record("a"), _record("b", inf=True)]
    write_records(records, path)
    loaded = read_records(path)
    assert loaded == records


def test_schema_field_names(tmp_path):
    obj = _record().to_json()
    assert set(obj) == {"image_id", "width", "height", "detections", "ground_truth", "flags"}
    assert set(obj["detections"][0]) == {"bbox", "category", "confidence"}
    assert set(obj["ground_truth"][0]) == {"bbox", "category"}
    assert set(obj["flags"]) == {"nan", "inf"}


def test_ingestion_clips_out_of_bounds_boxes(tmp_path):
    path = tmp_path / "r.ndjson"
    obj = _record().to_json()
    obj["detections"][0]["bbox"] = [-5.0, -5.0, 1e30, 40.0]
    path.write_text(json.dumps(obj) + "\n")
    record = read_records(path)[0]
    assert record.detections[0].box == Box(0, 0, 100, 40)


def test_infinite_coordinates_are_clipped_finite(tmp_path):
    path = tmp_path / "r.ndjson"
    obj = _record().to_json()
    obj["detections"][0]["bbox"] = [10.0, 10.0, float("inf"), 30.0]
    path.write_text(json.dumps(obj).replace("Infinity", "1e999") + "\n")
    record = read_records(path)[0]
    assert record.detections[0].box.x2 == 100.0


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.ndjson"
    path.write_text(json.dumps(_record().to_json()) + "\n{not json\n")
    with pytest.raises(DataError, match=":2"):
        read_records(path)


def test_nan_bbox_rejected(tmp_path):
    path = tmp_path / "r.ndjson"
    obj = _record().to_json()
    obj["ground_truth"][0]["bbox"] = [0.0, 0.0, None, 10.0]
    path.write_text(json.dumps(obj).replace("null", "NaN") + "\n")
    with pytest.raises(DataError):
        read_records(path)


def test_confidence_out_of_range_rejected(tmp_path):
    path = tmp_path / "r.ndjson"
    obj = _record().to_json()
    obj["detections"][0]["confidence"] = 1.7
    path.write_text(json.dumps(obj) + "\n")
    with pytest.raises(DataError, match="confidence"):
        read_records(path)


def test_missing_field_rejected(tmp_path):
    path = tmp_path / "r.ndjson"
    obj = _record().to_json()
    del obj["width"]
    path.write_text(json.dumps(obj) + "\n")
    with pytest.raises(DataError):
        read_records(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.ndjson"
    path.write_text("")
    with pytest.raises(DataError):
        read_records(path)


def test_missing_file_is_data_error(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        read_records(tmp_path / "absent.ndjson")


def test_record_from_trace_round_trips(tmp_path):
    model = reference_model()
    scene = generate_scene(SceneSpec(), seed=0)
    trace = infer(model, scene)
    record = record_from_trace("scene0", scene, trace)
    assert record.width == scene.width
    assert len(record.ground_truth) == len(scene.objects)
    assert record.detections == trace.detections
    path = tmp_path / "trace.ndjson"
    write_records([record], path)
    assert read_records(path)[0] == record
