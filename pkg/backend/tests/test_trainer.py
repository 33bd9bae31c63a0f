"""Unit tests for the joint training loop."""

import csv
from unittest.mock import patch

import numpy as np
import pytest

from app.config import load_config
from app.config.constants import CHANNEL_STATS_FILE, LOSS_LOG_COLUMNS, TABLE_FILE
from app.data import TrainingSet, load_manifest
from app.exceptions import CheckpointVersionError, DataError, TrainingStepError
from app.handler import JointTrainer, TrainRequest
from app.handler.trainer import check_alignable, learning_rate, warm_start
from app.model import JointNetwork
from app.numkit import load_checkpoint, save_checkpoint
from conftest import TINY_OVERRIDES


def read_log(path):
    with path.open(newline="") as handle:
        return list(csv.DictReader(handle))


def request_for(dataset, out, *overrides, hold_out=False):
    return TrainRequest(
        config=load_config(None, TINY_OVERRIDES + list(overrides)),
        train_manifest=dataset.train_path,
        table_path=dataset.table_path,
        output_directory=out,
        stats_path=dataset.stats_path,
        hold_out_validation=hold_out,
    )


class TestSchedule:
    def test_learning_rate_decays_geometrically(self):
        assert learning_rate(0.1, 0.5, 0) == 0.1
        assert learning_rate(0.1, 0.5, 2) == pytest.approx(0.025)

    def test_alignability(self, tiny_dataset, table):
        training = TrainingSet(tiny_dataset.train, table, tiny_dataset.stats)
        check_alignable(training, 6)
        with pytest.raises(DataError) as exc:
            check_alignable(training, 5)
        assert exc.value.details["row"] == 0
        assert exc.value.details["required"] == 6


class TestTrainedRun:
    def test_loss_log(self, trained_run):
        with trained_run.loss_log.open(newline="") as handle:
            header = next(csv.reader(handle))
        assert tuple(header) == LOSS_LOG_COLUMNS
        rows = read_log(trained_run.loss_log)
        assert [int(r["step"]) for r in rows] == [1, 2, 3, 4, 5, 6]
        assert [int(r["epoch"]) for r in rows] == [1, 1, 1, 2, 2, 2]
        assert float(rows[0]["lr"]) == pytest.approx(1e-3)
        assert float(rows[-1]["lr"]) == pytest.approx(9e-4)
        for row in rows:
            values = [float(row[k]) for k in ("l_id", "l_ctc", "l_at", "joint")]
            assert np.all(np.isfinite(values))
            assert float(row["joint"]) == pytest.approx(4.0 * values[0] + values[1] + values[2])

    def test_result(self, trained_run):
        assert trained_run.success is True
        assert trained_run.steps == 6
        assert [e.epoch for e in trained_run.epochs] == [1, 2]
        assert trained_run.final.joint == pytest.approx(float(read_log(trained_run.loss_log)[-1]["joint"]))
        assert trained_run.validation_manifest is None

    def test_checkpoint_directory_is_self_contained(self, trained_run):
        out = trained_run.checkpoint.parent
        assert (out / TABLE_FILE).is_file()
        assert (out / CHANNEL_STATS_FILE).is_file()
        tensors = load_checkpoint(trained_run.checkpoint)
        assert tensors["meta/num_identities"][0] == 3.0
        assert tensors["adam/step"][0] == 6.0

    def test_training_is_reproducible(self, trained_run, tiny_dataset, tmp_path):
        again = JointTrainer.process(request_for(tiny_dataset, tmp_path))
        assert again.loss_log.read_text() == trained_run.loss_log.read_text()


class TestVariants:
    def test_validation_hold_out_and_disabled_stream(self, tiny_dataset, tmp_path, table):
        result = JointTrainer.process(
            request_for(tiny_dataset, tmp_path, "train.epochs=1", "train.use_attention=false", hold_out=True)
        )
        validation = load_manifest(result.validation_manifest, table)
        assert len(validation.pids()) == 1
        rows = read_log(result.loss_log)
        # eight training images in batches of four
        assert len(rows) == 2
        assert all(row["l_at"] == "" for row in rows)
        assert all(row["l_ctc"] != "" for row in rows)

    def test_stream_failure_names_step(self, tiny_dataset, tmp_path):
        failure = TrainingStepError("ctc loss is not finite", stream="ctc")
        with patch("app.handler.trainer.JointNetwork.losses", side_effect=failure):
            with pytest.raises(TrainingStepError) as exc:
                JointTrainer.process(request_for(tiny_dataset, tmp_path))
        assert exc.value.details == {"stream": "ctc", "step": 0}

    def test_unalignable_data(self, tiny_dataset, tmp_path):
        # T = 5 cannot align six labels
        with pytest.raises(DataError):
            JointTrainer.process(request_for(tiny_dataset, tmp_path, "encoder.input_w=20"))


class TestWarmStart:
    def test_copies_base_weights(self, trained_run, tiny_config, table):
        network = JointNetwork(tiny_config, table, num_identities=3, seed=99)
        loaded = warm_start(network, trained_run.checkpoint)
        tensors = load_checkpoint(trained_run.checkpoint)
        assert loaded == sum(1 for name in tensors if name.startswith("base."))
        np.testing.assert_array_equal(network.base.stem.weight.values, tensors["base.stem.weight"])

    def test_needs_base_tensors(self, tiny_config, table, tmp_path):
        path = save_checkpoint(tmp_path / "other.ckpt", {"decoder.w": np.zeros(2)})
        with pytest.raises(CheckpointVersionError):
            warm_start(JointNetwork(tiny_config, table, 3), path)
