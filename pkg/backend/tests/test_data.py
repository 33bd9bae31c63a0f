"""Unit tests for image files, manifests, synthetic rendering and batching."""

import numpy as np
import pytest

from app.codec import MappingTable
from app.data import (
    ChannelStats,
    FlipAugmenter,
    SyntheticSpec,
    TrainingSet,
    assign_identities,
    decode_simg,
    encode_simg,
    flip_augment,
    generate_dataset,
    identity_index,
    load_manifest,
    merge_manifests,
    read_attributes,
    read_simg,
    render_image,
    split_validation,
    standardize,
)
from app.exceptions import DataError, ImageFormatError, IngestionError, ParameterError, SpecError


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestSimg:
    def test_encode_decode(self):
        image = np.arange(24, dtype=np.uint8).reshape(2, 4, 3)
        data = encode_simg(image)
        assert data[:5] == b"SIMG1"
        np.testing.assert_array_equal(decode_simg(data), image)

    def test_rejects_float_images(self):
        with pytest.raises(ImageFormatError):
            encode_simg(np.zeros((2, 2, 3)))

    def test_bad_magic_and_truncation(self):
        data = encode_simg(np.zeros((2, 2, 3), dtype=np.uint8))
        with pytest.raises(ImageFormatError):
            decode_simg(b"XXXXX" + data[5:])
        with pytest.raises(ImageFormatError):
            decode_simg(data[:-1])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ImageFormatError) as exc:
            read_simg(tmp_path / "nope.simg")
        assert exc.value.details["path"].endswith("nope.simg")


class TestManifest:
    def test_parse_rows(self, tmp_path, table):
        path = write_csv(
            tmp_path / "m.csv",
            ["image,pid,camera,gender,hat", "a.simg,3,0,male,no", "b.simg,4,1,female,"],
        )
        manifest = load_manifest(path, table, check_images=False)
        assert manifest.split == "m"
        assert manifest.groups == ("gender", "hat")
        assert manifest.pids() == [3, 4]
        assert manifest.rows[0].path == tmp_path / "a.simg"
        # empty cell leaves the group unassigned
        assert dict(manifest.rows[1].attributes) == {"gender": "female"}
        assert manifest.records()[1].pid == 4

    def test_error_rows_are_file_lines(self, tmp_path, table):
        path = write_csv(
            tmp_path / "m.csv",
            ["image,pid,camera,hat", "a.simg,1,0,no", "b.simg,2,0,maybe"],
        )
        with pytest.raises(IngestionError) as exc:
            load_manifest(path, table, check_images=False)
        assert exc.value.details["row"] == 3
        assert exc.value.details["column"] == "hat"

    def test_unknown_group_in_header(self, tmp_path, table):
        path = write_csv(tmp_path / "m.csv", ["image,pid,camera,scarf", "a.simg,1,0,yes"])
        with pytest.raises(IngestionError) as exc:
            load_manifest(path, table, check_images=False)
        assert exc.value.details["row"] == 1

    def test_bad_header(self, tmp_path, table):
        path = write_csv(tmp_path / "m.csv", ["pid,image,camera", "1,a.simg,0"])
        with pytest.raises(IngestionError):
            load_manifest(path, table, check_images=False)

    @pytest.mark.parametrize("pid,camera,column", [("0", "0", "pid"), ("x", "0", "pid"), ("1", "-1", "camera")])
    def test_bad_ids(self, tmp_path, table, pid, camera, column):
        path = write_csv(tmp_path / "m.csv", ["image,pid,camera", f"a.simg,{pid},{camera}"])
        with pytest.raises(IngestionError) as exc:
            load_manifest(path, table, check_images=False)
        assert exc.value.details["column"] == column

    def test_missing_image(self, tmp_path, table):
        path = write_csv(tmp_path / "m.csv", ["image,pid,camera", "a.simg,1,0"])
        with pytest.raises(IngestionError) as exc:
            load_manifest(path, table)
        assert exc.value.details["column"] == "image"

    def test_missing_manifest(self, tmp_path, table):
        with pytest.raises(IngestionError):
            load_manifest(tmp_path / "absent.csv", table)

    def test_merge_unions_columns(self, tmp_path, table):
        a = load_manifest(
            write_csv(tmp_path / "a.csv", ["image,pid,camera,hat", "x.simg,1,0,no"]), table, check_images=False
        )
        b = load_manifest(
            write_csv(tmp_path / "b.csv", ["image,pid,camera,gender,hat", "y.simg,2,1,male,yes"]),
            table,
            check_images=False,
        )
        merged = merge_manifests([a, b], split="all")
        assert merged.groups == ("hat", "gender")
        assert len(merged) == 2
        with pytest.raises(IngestionError):
            merge_manifests([])


class TestSplitValidation:
    def test_holds_out_identities(self, tiny_dataset):
        train, validation = split_validation(tiny_dataset.train, 0.34, seed=0)
        assert len(validation.pids()) == 1
        assert set(train.pids()).isdisjoint(validation.pids())
        assert len(train) + len(validation) == len(tiny_dataset.train)
        assert validation.split == "validation"

    def test_keeps_one_identity_for_training(self, tiny_dataset):
        train, validation = split_validation(tiny_dataset.train, 1.0, seed=0)
        assert len(train.pids()) == 1
        assert len(validation.pids()) == 2

    def test_zero_fraction(self, tiny_dataset):
        train, validation = split_validation(tiny_dataset.train, 0.0, seed=0)
        assert len(validation) == 0
        assert train.pids() == tiny_dataset.train.pids()

    def test_seeded(self, tiny_dataset):
        a = split_validation(tiny_dataset.train, 0.34, seed=5)[1].pids()
        b = split_validation(tiny_dataset.train, 0.34, seed=5)[1].pids()
        assert a == b


class TestSynthetic:
    def test_identities_are_distinct_and_numbered(self, tiny_spec):
        identities = assign_identities(tiny_spec)
        assert [i.pid for i in identities] == [1, 2, 3, 4, 5, 6]
        codes = {(tuple(i.attributes.items()), i.texture) for i in identities}
        assert len(codes) == 6

    def test_pid_offset(self):
        spec = SyntheticSpec(identities=2, test_identities=1, images_per_identity=1, pid_offset=10)
        assert [i.pid for i in assign_identities(spec)] == [11, 12, 13]

    def test_capacity(self):
        spec = SyntheticSpec(identities=300, test_identities=0, texture_capacity=1)
        assert spec.combinations == 256
        with pytest.raises(SpecError) as exc:
            spec.validate()
        assert exc.value.details == {"identities": 300, "capacity": 256}

    def test_invalid_counts(self):
        with pytest.raises(SpecError):
            SyntheticSpec(identities=0).validate()
        with pytest.raises(SpecError):
            SyntheticSpec(height=8).validate()

    def test_renderer_needs_default_groups(self, small_table):
        with pytest.raises(SpecError):
            SyntheticSpec(table=small_table).validate()

    def test_camera_cycles_with_index(self, tiny_spec):
        identity = assign_identities(tiny_spec)[0]
        cameras = [render_image(tiny_spec, identity, index)[1] for index in range(4)]
        assert cameras == [0, 1, 0, 1]

    def test_split_layout(self, tiny_dataset):
        assert len(tiny_dataset.train) == 12
        assert tiny_dataset.train.pids() == [1, 2, 3]
        assert tiny_dataset.test.pids() == [4, 5, 6]
        assert tiny_dataset.train.cameras() == [0, 1]
        assert MappingTable.load(tiny_dataset.table_path).num_labels == 16

    def test_manifest_reloads(self, tiny_dataset, table):
        manifest = load_manifest(tiny_dataset.train_path, table)
        assert [row.path.name for row in manifest] == [row.path.name for row in tiny_dataset.train]
        assert manifest.records() == tiny_dataset.train.records()

    def test_generation_is_deterministic(self, tmp_path):
        spec = SyntheticSpec(identities=2, test_identities=1, images_per_identity=2, seed=11)
        a = generate_dataset(spec, tmp_path / "a")
        b = generate_dataset(spec, tmp_path / "b")
        assert a.train_path.read_bytes() == b.train_path.read_bytes()
        assert a.stats_path.read_bytes() == b.stats_path.read_bytes()
        for row_a, row_b in zip(a.test, b.test):
            assert row_a.path.read_bytes() == row_b.path.read_bytes()

    def test_labels_are_recoverable_from_pixels(self, tiny_dataset):
        for row in list(tiny_dataset.train) + list(tiny_dataset.test):
            image = read_simg(row.path)
            assert dict(read_attributes(image).attributes) == dict(row.attributes)
            assert dict(read_attributes(flip_augment(image)).attributes) == dict(row.attributes)


class TestAugment:
    def test_flip_twice_is_identity(self):
        image = np.random.default_rng(0).integers(0, 255, size=(4, 3, 3), dtype=np.uint8)
        np.testing.assert_array_equal(flip_augment(flip_augment(image)), image)
        np.testing.assert_array_equal(flip_augment(image)[:, 0], image[:, -1])

    def test_flip_needs_image_shape(self):
        with pytest.raises(ParameterError):
            flip_augment(np.zeros(4))

    def test_augmenter_is_seeded(self):
        batch = np.random.default_rng(1).normal(size=(8, 4, 3, 3))
        a = FlipAugmenter(0.5, seed=3).apply_batch(batch)
        b = FlipAugmenter(0.5, seed=3).apply_batch(batch)
        np.testing.assert_array_equal(a, b)

    def test_probability_bounds(self):
        batch = np.random.default_rng(2).normal(size=(3, 4, 3, 3))
        np.testing.assert_array_equal(FlipAugmenter(1.0).apply_batch(batch), flip_augment(batch))
        np.testing.assert_array_equal(FlipAugmenter(0.0).apply_batch(batch), batch)
        with pytest.raises(ParameterError):
            FlipAugmenter(1.5)


class TestBatching:
    def test_channel_stats(self, tmp_path):
        images = [np.full((2, 2, 3), 0, dtype=np.uint8), np.full((2, 2, 3), 255, dtype=np.uint8)]
        stats = ChannelStats.from_images(images)
        assert stats.mean == pytest.approx((0.5, 0.5, 0.5))
        assert stats.std == pytest.approx((0.5, 0.5, 0.5))
        assert ChannelStats.load(stats.save(tmp_path / "s.json")) == stats
        standardized = standardize(images[1], stats)
        np.testing.assert_allclose(standardized, 1.0)

    def test_stats_save_creates_parent_directories(self, tmp_path):
        stats = ChannelStats((0.25, 0.5, 0.75), (0.1, 0.2, 0.3))
        path = stats.save(tmp_path / "new" / "nested" / "stats.json")
        assert path.is_file()
        assert ChannelStats.load(path) == stats

    def test_unreadable_stats(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text("{}")
        with pytest.raises(DataError):
            ChannelStats.load(path)

    def test_identity_index(self):
        assert identity_index([7, 3, 7, 9]) == {3: 0, 7: 1, 9: 2}

    def test_epoch_covers_every_row_once(self, tiny_dataset, table):
        training = TrainingSet(tiny_dataset.train, table, tiny_dataset.stats)
        assert training.num_identities == 3
        batches = list(training.batches(5, np.random.default_rng(0)))
        assert [len(b.rows) for b in batches] == [5, 5, 2]
        assert sorted(np.concatenate([b.rows for b in batches]).tolist()) == list(range(12))
        assert batches[0].images.shape == (5, 56, 28, 3)
        assert all(len(seq) == 6 for b in batches for seq in b.sequences)
