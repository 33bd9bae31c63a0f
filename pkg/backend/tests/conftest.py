"""Pytest configuration and fixtures."""

import logging
import sys
from pathlib import Path

import pytest

# Add backend to path
sys.path.append(str(Path(__file__).parent.parent))

from app.codec import MappingTable, default_table  # noqa: E402
from app.config import load_config  # noqa: E402
from app.data import SyntheticSpec, generate_dataset  # noqa: E402
from app.handler import JointTrainer, TrainRequest  # noqa: E402

# Small enough to train a few steps in seconds; still 56×28 so T = 7 fits six groups.
TINY_OVERRIDES = [
    "encoder.scale=0.125",
    "encoder.rnn_hidden_1=8",
    "encoder.rnn_hidden_2=4",
    "encoder.fc0_dim=16",
    "decoder.layers=1",
    "decoder.heads=2",
    "decoder.d_model=8",
    "decoder.ffn_dim=16",
    "decoder.beam_width=2",
    "train.epochs=2",
    "train.batch_size=4",
    "train.lr=0.001",
    "train.validation_fraction=0.34",
    "data.identities=3",
    "data.test_identities=3",
    "data.images_per_identity=4",
    "data.seed=3",
]


@pytest.fixture(autouse=True)
def _reset_seqattr_logger():
    """Drop handlers bound to a previous test's captured stderr."""
    yield
    logger = logging.getLogger("seqattr")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)


@pytest.fixture
def table():
    return default_table()


@pytest.fixture
def small_table():
    """Two groups, K = 4."""
    return MappingTable.from_groups([("gender", ("male", "female")), ("hat", ("no", "yes"))])


@pytest.fixture
def tiny_config():
    return load_config(None, TINY_OVERRIDES)


@pytest.fixture(scope="session")
def tiny_spec():
    return SyntheticSpec(identities=3, test_identities=3, images_per_identity=4, seed=3)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory, tiny_spec):
    """Six identities rendered once per session; tests must not modify it."""
    return generate_dataset(tiny_spec, tmp_path_factory.mktemp("tiny_data"))


@pytest.fixture(scope="session")
def trained_run(tmp_path_factory, tiny_dataset):
    """Two epochs of the tiny network on the tiny dataset."""
    out = tmp_path_factory.mktemp("tiny_run")
    return JointTrainer.process(
        TrainRequest(
            config=load_config(None, TINY_OVERRIDES),
            train_manifest=tiny_dataset.train_path,
            table_path=tiny_dataset.table_path,
            output_directory=out,
            stats_path=tiny_dataset.stats_path,
        )
    )
