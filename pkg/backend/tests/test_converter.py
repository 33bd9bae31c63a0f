"""Unit tests for the converter module."""

import numpy as np
import pytest
from PIL import Image

from app.data import read_simg, write_simg
from app.exceptions import ImageFormatError, ParameterError
from app.handler.converter import ConversionRequest, ImageConverter


@pytest.fixture
def simg_file(tmp_path):
    image = np.random.default_rng(0).integers(0, 255, size=(6, 4, 3), dtype=np.uint8)
    return write_simg(tmp_path / "test.simg", image), image


class TestConverter:
    def test_conversion_request_outputs(self, tmp_path, simg_file):
        source, _ = simg_file
        output_dir = tmp_path / "out"
        req = ConversionRequest(input_paths=[source], output_directory=output_dir, output_format="png")
        outputs = list(req.outputs())
        assert len(outputs) == 1
        src, dst = outputs[0]
        assert src == source
        assert dst == (output_dir / "test.png").absolute()

    def test_conversion_request_no_overwrite(self, tmp_path, simg_file):
        source, _ = simg_file
        output_dir = tmp_path / "out"
        output_dir.mkdir()
        (output_dir / "test.png").touch()
        req = ConversionRequest(
            input_paths=[source], output_directory=output_dir, output_format="png", overwrite_existing=False
        )
        _, dst = list(req.outputs())[0]
        assert dst.name == "test_1.png"

    def test_same_stem_in_one_batch(self, tmp_path, simg_file):
        source, image = simg_file
        other = write_simg(tmp_path / "b" / "test.simg", image)
        req = ConversionRequest(
            input_paths=[source, other], output_directory=tmp_path / "out", output_format="png", overwrite_existing=True
        )
        names = [dst.name for _, dst in req.outputs()]
        assert names == ["test.png", "test (1).png"]

    def test_simg_to_png_and_back(self, tmp_path, simg_file):
        source, image = simg_file
        progress = []
        result = ImageConverter.convert(
            ConversionRequest([source], tmp_path / "png", "png"), progress.append
        )
        assert result.success is True
        png = result.outputs[0]
        with Image.open(png) as img:
            np.testing.assert_array_equal(np.asarray(img), image)
        assert [p.status for p in progress] == ["processing", "completed"]

        back = ImageConverter.convert(ConversionRequest([png], tmp_path / "simg", "simg"))
        np.testing.assert_array_equal(read_simg(back.outputs[0]), image)
        assert back.message.startswith("Saved file to")

    def test_unsupported_target(self, simg_file):
        source, _ = simg_file
        with pytest.raises(ParameterError):
            ImageConverter.convert(ConversionRequest([source], None, "mp3"))

    def test_missing_source(self, tmp_path):
        with pytest.raises(ImageFormatError):
            ImageConverter.convert(ConversionRequest([tmp_path / "gone.simg"], tmp_path, "png"))

    def test_available_formats(self):
        assert list(ImageConverter.available_formats()) == ["png", "simg"]
