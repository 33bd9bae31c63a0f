"""Unit tests for evaluation, single-image decoding and dataset generation."""

import csv

import numpy as np
import pytest

from app.codec import MappingTable
from app.config import DataSettings, load_config
from app.data import read_simg, write_simg
from app.exceptions import CheckpointVersionError, ImageFormatError, SpecError
from app.handler import (
    DatasetGenerator,
    DecodeRequest,
    EvaluationRequest,
    Evaluator,
    GenerationRequest,
    decode_image,
)
from app.handler.evaluator import query_gallery_split
from conftest import TINY_OVERRIDES


@pytest.fixture
def tiny_eval(trained_run, tiny_dataset, tiny_config, tmp_path):
    def run(**changes):
        request = EvaluationRequest(
            config=tiny_config,
            checkpoint=trained_run.checkpoint,
            test_manifest=tiny_dataset.test_path,
            table_path=tiny_dataset.table_path,
            stats_path=tiny_dataset.stats_path,
            output_directory=tmp_path / "eval",
            **changes,
        )
        return Evaluator.process(request)

    return run


class TestQueryGallery:
    def test_first_image_per_identity_is_the_query(self, tiny_dataset):
        queries, gallery = query_gallery_split(tiny_dataset.test)
        assert queries.tolist() == [0, 4, 8]
        assert len(gallery) == 9
        assert set(queries).isdisjoint(gallery)


class TestEvaluator:
    def test_summary(self, tiny_eval, table):
        result = tiny_eval()
        summary = result.summary()
        assert 0.0 <= summary["mA"] <= 1.0
        assert summary["chance_mA"] == pytest.approx(2.5 / 6)
        assert {f"acc_{g}" for g in table.group_names} <= set(summary)
        assert {"rank1", "rank5", "rank10", "mAP"} <= set(summary)
        # every query keeps two other-camera images of its identity
        assert summary["evaluated_queries"] == 3.0
        assert summary["excluded_queries"] == 0.0
        assert result.attributes.samples == 12

    def test_report_csv(self, tiny_eval, tmp_path, table):
        result = tiny_eval()
        assert [p.name for p in result.outputs] == ["evaluation.csv"]
        with (tmp_path / "eval" / "evaluation.csv").open(newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader)
            rows = list(reader)
        assert header == ["group", "accuracy"]
        assert [r[0] for r in rows] == list(table.group_names) + ["mA", "rank1", "mAP"]
        summary = result.summary()
        values = dict(rows)
        assert float(values["mA"]) == pytest.approx(summary["mA"])
        assert float(values["rank1"]) == pytest.approx(summary["rank1"])
        assert float(values["mAP"]) == pytest.approx(summary["mAP"])

    def test_report_without_attributes(self, tiny_eval, tmp_path):
        tiny_eval(attributes=False)
        with (tmp_path / "eval" / "evaluation.csv").open(newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert [r["group"] for r in rows] == ["rank1", "mAP"]

    def test_evaluation_is_deterministic(self, tiny_eval):
        assert tiny_eval().summary() == tiny_eval().summary()

    def test_fc0_layer(self, tiny_eval):
        result = tiny_eval(layer_choice="fc0", attributes=False)
        assert result.attributes is None
        assert "mAP" in result.summary()

    def test_config_mismatch(self, trained_run, tiny_dataset):
        request = EvaluationRequest(
            config=load_config(None, TINY_OVERRIDES + ["encoder.fc0_dim=32"]),
            checkpoint=trained_run.checkpoint,
            test_manifest=tiny_dataset.test_path,
            table_path=tiny_dataset.table_path,
        )
        with pytest.raises(CheckpointVersionError):
            Evaluator.process(request)


class TestDecode:
    def test_decode_with_sidecars(self, trained_run, tiny_dataset, tiny_config, table):
        image = tiny_dataset.test.rows[0].path
        result = decode_image(DecodeRequest(tiny_config, trained_run.checkpoint, image))
        assert result.success is True
        assert set(result.record.attributes) <= set(table.group_names)
        assert all(1 <= label <= table.num_labels for label in result.labels)
        assert result.log_prob <= 0.0

    def test_width_one_matches_greedy(self, trained_run, tiny_dataset, tiny_config):
        image = tiny_dataset.test.rows[1].path
        beam = decode_image(DecodeRequest(tiny_config, trained_run.checkpoint, image, beam_width=1))
        greedy = decode_image(DecodeRequest(tiny_config, trained_run.checkpoint, image, greedy=True))
        assert beam.labels == greedy.labels
        assert beam.log_prob == pytest.approx(greedy.log_prob)

    def test_wrong_size(self, trained_run, tiny_config, tmp_path):
        path = write_simg(tmp_path / "small.simg", np.zeros((28, 28, 3), dtype=np.uint8))
        with pytest.raises(ImageFormatError):
            decode_image(DecodeRequest(tiny_config, trained_run.checkpoint, path))

    def test_needs_simg(self, trained_run, tiny_config, tmp_path):
        from PIL import Image

        path = tmp_path / "photo.png"
        Image.fromarray(np.zeros((56, 28, 3), dtype=np.uint8)).save(path)
        with pytest.raises(ImageFormatError):
            decode_image(DecodeRequest(tiny_config, trained_run.checkpoint, path))


class TestGenerator:
    def test_generate(self, tmp_path):
        settings = DataSettings(identities=2, test_identities=1, images_per_identity=2, seed=5)
        result = DatasetGenerator.process(GenerationRequest(settings, tmp_path))
        assert result.message == "Generated 6 images"
        assert [p.name for p in result.outputs] == [
            "train.csv", "test.csv", "mapping_table.tsv", "channel_stats.json",
        ]
        assert read_simg(result.dataset.test.rows[0].path).shape == (56, 28, 3)

    def test_table_must_match_renderer(self, tmp_path, small_table):
        table_path = small_table.dump(tmp_path / "small.tsv")
        settings = DataSettings(identities=2, test_identities=1, images_per_identity=1, table=str(table_path))
        with pytest.raises(SpecError):
            DatasetGenerator.process(GenerationRequest(settings, tmp_path / "out"))

    def test_custom_table_is_written(self, tmp_path, table):
        table_path = table.dump(tmp_path / "custom.tsv")
        settings = DataSettings(identities=1, test_identities=1, images_per_identity=1, table=str(table_path))
        result = DatasetGenerator.process(GenerationRequest(settings, tmp_path / "out"))
        assert MappingTable.load(result.dataset.table_path) == table
