"""Unit tests for the base model, attention decoder, objective and joint network."""

from unittest.mock import patch

import numpy as np
import pytest

from app.config import AppConfig, EncoderConfig, JointLossConfig, TransformerConfig
from app.exceptions import ConfigError, ContractError, ParameterError, TrainingStepError
from app.model import (
    AttentionDecoder,
    BaseModel,
    IdHead,
    JointNetwork,
    attribute_loss,
    beam_search,
    breakdown,
    decode_teacher_forced,
    encode_image,
    extract_reid_features,
    greedy_decode,
    id_loss,
    joint_loss,
    load_model,
    reid_feature_dim,
    save_model,
    scaled_dot_attention,
)
from app.model.recurrent import BiRecurrent
from app.numkit import Tape, Tensor, backward, max_relative_error, ops


def tiny_encoder():
    return EncoderConfig(scale=0.125, rnn_hidden_1=8, rnn_hidden_2=4, fc0_dim=16)


def tiny_decoder(max_len=6):
    return TransformerConfig(layers=1, heads=2, d_model=8, ffn_dim=16, max_len=max_len, beam_width=3)


class TestEncoderShapes:
    def test_full_size_layer_table(self):
        shapes = EncoderConfig.full().layer_shapes()
        assert shapes["conv_1"] == (64, 112, 56)
        assert shapes["pool_1"] == (64, 56, 28)
        assert shapes["conv_5"] == (2048, 4, 28)
        assert shapes["pool_2"] == (2048, 1, 28)
        assert shapes["rnn_1"] == (28, 2048)
        assert shapes["rnn_2"] == (28, 1024)

    def test_full_size_dimensions(self):
        cfg = EncoderConfig.full()
        assert cfg.sequence_length == 28
        assert cfg.feature_dim == 1024
        assert cfg.conv_feature_dim() == 57344
        assert reid_feature_dim(cfg, "fc0") == 1024

    def test_desk_dimensions(self):
        cfg = EncoderConfig.desk()
        assert cfg.sequence_length == 7
        assert cfg.feature_dim == 64
        assert cfg.layer_shapes()["pool_2"] == (512, 1, 7)

    def test_forward_matches_layer_table(self):
        cfg = tiny_encoder()
        model = BaseModel(cfg, np.random.default_rng(0))
        images = np.random.default_rng(1).normal(size=(2, 56, 28, 3))
        encoded = model(Tensor(images.transpose(0, 3, 1, 2)))
        assert encoded.x.shape == (2, 7, cfg.feature_dim)
        assert encoded.conv.shape == (2, 7, cfg.conv_channels)
        assert encoded.timesteps == cfg.sequence_length

    def test_encode_image_rejects_wrong_size(self):
        cfg = tiny_encoder()
        model = BaseModel(cfg, np.random.default_rng(0))
        with pytest.raises(ConfigError):
            encode_image(np.zeros((28, 28, 3)), cfg, model)

    def test_identity_head_checks_width(self):
        head = IdHead(12, 4, 3, np.random.default_rng(0))
        with pytest.raises(ConfigError):
            head(Tensor(np.zeros((1, 2, 5))))

    def test_uniform_identity_logits(self):
        loss = id_loss(Tensor(np.zeros((3, 5))), [0, 1, 4])
        assert loss.item() == pytest.approx(np.log(5))


class TestRecurrent:
    @pytest.mark.parametrize("cell", ["gru", "tanh"])
    def test_gradient(self, cell):
        rng = np.random.default_rng(2)
        layer = BiRecurrent(3, 2, cell, rng)
        x = Tensor(rng.normal(size=(2, 4, 3)), requires_grad=True)
        weights = rng.normal(size=(2, 4, 4))
        fn = lambda: ops.sum(ops.multiply(layer(x), weights))
        assert max_relative_error(fn, [x] + layer.parameters()) < 1e-5

    def test_directions_see_opposite_ends(self):
        rng = np.random.default_rng(3)
        layer = BiRecurrent(2, 3, "gru", rng)
        x = rng.normal(size=(1, 5, 2))
        changed = x.copy()
        changed[0, -1] += 1.0
        a, b = layer(Tensor(x)).values, layer(Tensor(changed)).values
        # forward half at t=0 cannot see the last step; backward half can
        np.testing.assert_allclose(a[0, 0, :3], b[0, 0, :3])
        assert not np.allclose(a[0, 0, 3:], b[0, 0, 3:])

    def test_unknown_cell(self):
        with pytest.raises(ConfigError):
            BiRecurrent(2, 2, "lstm", np.random.default_rng(0))


class TestReidFeatures:
    def test_unit_norm_per_layer(self):
        cfg = tiny_encoder()
        rng = np.random.default_rng(4)
        model = BaseModel(cfg, rng)
        head = IdHead(cfg.conv_feature_dim(), cfg.fc0_dim, 3, rng)
        images = rng.normal(size=(2, 56, 28, 3))
        conv = extract_reid_features(images, model, head, "conv")
        fc0 = extract_reid_features(images, model, head, "fc0")
        assert conv.shape == (2, reid_feature_dim(cfg, "conv"))
        assert fc0.shape == (2, cfg.fc0_dim)
        np.testing.assert_allclose(np.linalg.norm(conv, axis=1), 1.0)
        np.testing.assert_allclose(np.linalg.norm(fc0, axis=1), 1.0)

    def test_unknown_layer(self):
        cfg = tiny_encoder()
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            extract_reid_features(
                np.zeros((1, 56, 28, 3)), BaseModel(cfg, rng), IdHead(cfg.conv_feature_dim(), 4, 2, rng), "fc1"
            )


class TestAttention:
    def test_weights_are_row_stochastic_and_masked(self):
        rng = np.random.default_rng(5)
        q, k, v = (Tensor(rng.normal(size=(3, 4))) for _ in range(3))
        mask = np.tril(np.ones((3, 3), dtype=bool))
        _, weights = scaled_dot_attention(q, k, Tensor(rng.normal(size=(3, 2))), mask)
        np.testing.assert_allclose(weights.values.sum(axis=-1), 1.0)
        assert weights.values[0, 1] == 0.0
        assert weights.values[1, 2] == 0.0

    def test_gradient(self):
        rng = np.random.default_rng(6)
        q, k, v = (Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True) for _ in range(3))
        fn = lambda: ops.sum(ops.tanh(scaled_dot_attention(q, k, v)[0]))
        assert max_relative_error(fn, [q, k, v]) < 1e-5


class TestDecoder:
    @pytest.fixture
    def decoder(self, small_table):
        return AttentionDecoder(tiny_decoder(), 4, small_table.vocab_size, np.random.default_rng(7), memory_length=5)

    @pytest.fixture
    def memory(self, decoder):
        return decoder.encode_memory(Tensor(np.random.default_rng(8).normal(size=(1, 5, 4))))

    def test_teacher_forced_shape(self, decoder, memory, small_table):
        logits = decoder.decode(memory, np.array([[5, 1, 3, 0]]))
        assert logits.shape == (1, 4, small_table.vocab_size)

    def test_decoding_is_causal(self, decoder, memory):
        a = decode_teacher_forced(decoder, memory, np.array([[5, 1, 3, 0]])).values
        b = decode_teacher_forced(decoder, memory, np.array([[5, 1, 3, 4]])).values
        np.testing.assert_allclose(a[0, :3], b[0, :3])

    def test_uniform_logits_give_log_k_plus_one(self, small_table):
        logits = Tensor(np.zeros((1, 4, small_table.vocab_size)))
        loss = attribute_loss(logits, np.array([1, 3, 0, 0]), small_table.output_class_mask())
        assert loss.item() == pytest.approx(np.log(small_table.num_labels + 1))

    def test_width_one_beam_is_greedy(self, decoder, memory, small_table):
        beam = beam_search(decoder, memory, small_table, width=1)
        greedy = greedy_decode(decoder, memory, small_table)
        assert beam.labels == greedy.labels
        assert beam.log_prob == pytest.approx(greedy.log_prob)

    def test_wider_beam_never_scores_lower(self, decoder, memory, small_table):
        narrow = beam_search(decoder, memory, small_table, width=1)
        wide = beam_search(decoder, memory, small_table, width=3)
        assert wide.log_prob >= narrow.log_prob - 1e-12

    def test_beam_respects_length_budget(self, decoder, memory, small_table):
        hyp = beam_search(decoder, memory, small_table, width=3, max_len=3)
        assert len(hyp.labels) <= 2
        assert all(1 <= label <= small_table.num_labels for label in hyp.labels)

    def test_beam_width_must_be_positive(self, decoder, memory, small_table):
        with pytest.raises(ParameterError):
            beam_search(decoder, memory, small_table, width=0)


class TestObjective:
    def test_weighted_sum(self):
        cfg = JointLossConfig(lambda_id=2.0)
        total = joint_loss(Tensor(1.5), Tensor(0.25), Tensor(0.5), cfg)
        assert total.item() == pytest.approx(3.75)

    def test_disabled_streams(self):
        cfg = JointLossConfig(lambda_id=4.0, use_ctc=False)
        total = joint_loss(Tensor(0.5), None, Tensor(1.0), cfg)
        assert total.item() == pytest.approx(3.0)
        parts = breakdown(Tensor(0.5), None, Tensor(1.0), total)
        assert parts.l_ctc is None
        assert parts.joint == pytest.approx(3.0)

    def test_non_finite_stream_is_named(self):
        cfg = JointLossConfig()
        with pytest.raises(TrainingStepError) as exc:
            joint_loss(Tensor(1.0), Tensor(np.inf), Tensor(1.0), cfg, step=7)
        assert exc.value.details == {"stream": "ctc", "step": 7}

    def test_needs_a_stream(self):
        with pytest.raises(ContractError):
            joint_loss(None, None, None, JointLossConfig())

    def test_negative_lambda(self):
        with pytest.raises(ContractError):
            joint_loss(Tensor(1.0), None, None, JointLossConfig(lambda_id=-1.0))


class TestJointNetwork:
    @pytest.fixture
    def network(self, tiny_config, table):
        return JointNetwork(tiny_config, table, num_identities=3, seed=0)

    def test_losses_per_stream(self, network, tiny_config):
        images = np.random.default_rng(9).normal(size=(2, 56, 28, 3))
        streams = network.losses(images, [0, 2], [(1, 3, 5), (2, 4, 6, 8, 10, 14)], tiny_config.objective)
        assert streams.l_id.item() > 0
        assert streams.l_ctc.item() > 0
        assert streams.l_at.item() > 0

    def test_attention_stream_uses_teacher_forcing(self, network, tiny_config):
        images = np.random.default_rng(9).normal(size=(1, 56, 28, 3))
        with patch("app.model.network.decode_teacher_forced", wraps=decode_teacher_forced) as spy:
            network.losses(images, [1], [(1, 3, 5)], tiny_config.objective)
        spy.assert_called_once()
        assert spy.call_args.args[0] is network.decoder

    def test_zero_lambda_leaves_identity_head_untouched(self, network):
        objective = JointLossConfig(lambda_id=0.0)
        images = np.random.default_rng(10).normal(size=(2, 56, 28, 3))
        with Tape() as tape:
            streams = network.losses(images, [0, 2], [(1, 3, 5), (2, 4, 6)], objective)
            total = joint_loss(streams.l_id, streams.l_ctc, streams.l_at, objective)
        backward(total, tape)
        grads = dict(network.stream_parameters(objective))
        id_grads = [t.grad for name, t in grads.items() if name.startswith("id_head.")]
        assert id_grads
        assert all(g is None or not np.any(g) for g in id_grads)
        assert np.any(grads["base.stem.weight"].grad)

    def test_stream_parameters_follow_objective(self, network):
        names = [name for name, _ in network.stream_parameters(JointLossConfig(use_attention=False))]
        assert any(name.startswith("ctc_head.") for name in names)
        assert not any(name.startswith("decoder.") for name in names)

    def test_save_and_load(self, network, tiny_config, table, tmp_path):
        path = save_model(tmp_path / "m.ckpt", network)
        restored, _ = load_model(path, tiny_config, table)
        assert restored.num_identities == 3
        np.testing.assert_array_equal(restored.ctc_head.weight.values, network.ctc_head.weight.values)

    def test_load_into_other_shape_fails(self, network, table, tmp_path):
        from app.exceptions import CheckpointVersionError

        path = save_model(tmp_path / "m.ckpt", network)
        with pytest.raises(CheckpointVersionError) as exc:
            load_model(path, AppConfig.desk(), table)
        assert exc.value.details["path"] == str(path)
