"""Unit tests for the formatters module."""

import csv

import numpy as np

from app.exceptions import IngestionError
from app.formatters.output_formatter import format_error, format_success
from app.formatters.path_formatter import ensure_unique_path, generate_output_path, sanitize_filename
from app.formatters.report_formatter import (
    attribute_rows,
    evaluation_rows,
    format_evaluation,
    format_table,
    reid_rows,
    write_csv,
)
from app.metrics import AttributeEvalReport, RankingResult


class TestOutputFormatter:
    def test_format_success(self):
        data = {"checkpoint": "runs/train/model.ckpt"}
        result = format_success("train", data, "Done")
        assert result["status"] == "success"
        assert result["operation"] == "train"
        assert result["data"] == data
        assert result["message"] == "Done"
        assert result["timestamp"].endswith("Z")

    def test_format_error(self):
        result = format_error("eval", "bad manifest", error_code="DATA_ERROR", details={"row": 3}, exit_code=2)
        assert result["status"] == "error"
        assert result["error"]["message"] == "bad manifest"
        assert result["error"]["code"] == "DATA_ERROR"
        assert result["error"]["details"] == {"row": 3}
        assert result["error"]["exit_code"] == 2

    def test_format_error_from_exception(self):
        exc = IngestionError("pid 'x' is not an integer", path="train.csv", row=3, column="pid")
        result = format_error("train", **exc.to_dict())
        assert result["error"]["code"] == "INGESTION_ERROR"
        assert result["error"]["exit_code"] == 2
        assert result["error"]["details"]["row"] == 3
        assert result["error"]["details"]["column"] == "pid"


class TestPathFormatter:
    def test_sanitize_filename(self):
        assert sanitize_filename("a<b>c:d.png") == "a_b_c_d.png"
        assert sanitize_filename("  ..  ") == "unnamed_file"

    def test_ensure_unique_path(self, tmp_path):
        f = tmp_path / "test.txt"
        f.touch()
        assert ensure_unique_path(f).name == "test_1.txt"
        assert ensure_unique_path(tmp_path / "fresh.txt").name == "fresh.txt"

    def test_generate_output_path(self, tmp_path):
        source = tmp_path / "00001_c0_00.simg"
        source.touch()
        assert generate_output_path(str(source), str(tmp_path / "out"), "png").name == "00001_c0_00.png"

    def test_output_never_replaces_source(self, tmp_path):
        source = tmp_path / "img.simg"
        source.touch()
        destination = generate_output_path(str(source), None, "simg", overwrite=True)
        assert destination.name == "img_converted.simg"


class TestReportFormatter:
    def report(self):
        return AttributeEvalReport({"gender": 0.75, "hat": 0.5}, 0.625, {"gender": 0, "hat": 1}, 4)

    def test_attribute_rows(self):
        rows = attribute_rows(self.report())
        assert rows[-1] == {"group": "mA", "accuracy": 0.625, "missing": None}
        assert rows[1]["missing"] == 1

    def test_evaluation_rows(self):
        ranking = RankingResult([], np.array([0.5, 1.0]), np.array([False, True]), {1: 0.5}, 0)
        rows = evaluation_rows(self.report(), ranking)
        assert rows == [
            {"group": "gender", "accuracy": 0.75},
            {"group": "hat", "accuracy": 0.5},
            {"group": "mA", "accuracy": 0.625},
            {"group": "rank1", "accuracy": 0.5},
            {"group": "mAP", "accuracy": 0.75},
        ]
        assert evaluation_rows(None, None) == []

    def test_format_table(self):
        text = format_table([{"metric": "mAP", "value": 0.5}, {"metric": "rank1", "value": None}])
        lines = text.splitlines()
        assert lines[0].split() == ["metric", "value"]
        assert set(lines[1]) <= {"-", " "}
        assert lines[2].split() == ["mAP", "0.5000"]
        assert lines[3].split() == ["rank1", "-"]
        assert format_table([]) == ""

    def test_format_evaluation(self):
        ranking = RankingResult([], np.array([0.5]), np.array([True]), {1: 1.0}, 0)
        text = format_evaluation(self.report(), ranking)
        assert text.startswith("Attributes (4 images)")
        assert "Re-identification" in text
        assert any(row["metric"] == "mAP" for row in reid_rows(ranking))

    def test_write_csv(self, tmp_path):
        path = write_csv(
            [{"variant": "full", "mA": 0.9}, {"variant": "without hat", "mA": None, "extra": 1}],
            tmp_path / "r" / "out.csv",
            ["variant", "mA"],
        )
        with path.open() as handle:
            rows = list(csv.reader(handle))
        assert rows == [["variant", "mA"], ["full", "0.9"], ["without hat", ""]]
