"""Unit tests for utility functions."""

import logging

import pytest

from app.config.constants import RUN_RECORD_FILE
from app.utils.file_utils import (
    list_images,
    provenance_record,
    read_json,
    sha256_file,
    write_run_record,
)
from app.utils.string_utils import format_duration, format_metric, slugify
from utils import log_message, set_quiet


class TestStringUtils:
    def test_slugify(self):
        assert slugify("Hello World") == "hello-world"
        assert slugify("Test_File.mp3") == "test-file.mp3"
        assert slugify("Café") == "cafe"
        assert slugify("lambda=0.5") == "lambda-0.5"
        assert slugify("without re-id") == "without-re-id"

    def test_format_duration(self):
        assert format_duration(65) == "01:05"
        assert format_duration(3665) == "01:01:05"

    def test_format_metric(self):
        assert format_metric(0.123456) == "0.1235"
        assert format_metric(None) == "-"


class TestFileUtils:
    def test_sha256(self, tmp_path):
        f = tmp_path / "abc.txt"
        f.write_bytes(b"abc")
        assert sha256_file(f) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

    def test_list_images(self, tmp_path):
        (tmp_path / "b.simg").touch()
        (tmp_path / "a.simg").touch()
        (tmp_path / "notes.txt").touch()
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "c.simg").touch()
        assert [p.name for p in list_images(tmp_path)] == ["a.simg", "b.simg"]
        assert len(list_images(tmp_path, recursive=True)) == 3
        assert list_images(tmp_path / "missing") == []

    def test_run_record(self, tmp_path):
        record = provenance_record("train", ["train", "--seed", "3"], {"train": {"seed": 3}}, 3, {"checkpoint": "m.ckpt"})
        path = write_run_record(tmp_path, record)
        assert path.name == RUN_RECORD_FILE
        loaded = read_json(path)
        assert loaded["argv"] == ["train", "--seed", "3"]
        assert loaded["seed"] == 3
        assert set(loaded["versions"]) == {"seqattr", "python", "numpy", "scipy"}
        assert loaded["finished_at"].endswith("Z")


class TestLogging:
    def test_log_message_format(self, caplog):
        set_quiet(False)
        with caplog.at_level(logging.INFO, logger="seqattr"):
            log_message("train", "epoch 1 joint=3.2")
        assert caplog.records[-1].getMessage().startswith("[train] [")
        assert caplog.records[-1].getMessage().endswith("epoch 1 joint=3.2")

    def test_quiet_drops_info(self, caplog):
        set_quiet(True)
        try:
            log_message("cli", "hidden")
            log_message("cli", "shown", level=logging.ERROR)
        finally:
            set_quiet(False)
        messages = [r.getMessage() for r in caplog.records]
        assert not any("hidden" in m for m in messages)
        assert any("shown" in m for m in messages)
