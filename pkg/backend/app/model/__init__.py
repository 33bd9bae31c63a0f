"""Base model, attention decoder, objective and the joint network."""

from .decoder import (
    AttentionDecoder,
    BeamHypothesis,
    attribute_loss,
    attention_weights,
    beam_search,
    decode_teacher_forced,
    greedy_decode,
    scaled_dot_attention,
)
from .encoder import (
    BaseModel,
    EncodedSequence,
    IdHead,
    ctc_projection,
    encode_image,
    extract_reid_features,
    id_logits,
    id_loss,
    reid_feature_dim,
)
from .network import JointNetwork, StreamLosses, load_model, save_model
from .objective import LossBreakdown, breakdown, joint_loss

__all__ = [
    "AttentionDecoder",
    "BeamHypothesis",
    "attribute_loss",
    "attention_weights",
    "beam_search",
    "decode_teacher_forced",
    "greedy_decode",
    "scaled_dot_attention",
    "BaseModel",
    "EncodedSequence",
    "IdHead",
    "ctc_projection",
    "encode_image",
    "extract_reid_features",
    "id_logits",
    "id_loss",
    "reid_feature_dim",
    "JointNetwork",
    "StreamLosses",
    "load_model",
    "save_model",
    "LossBreakdown",
    "breakdown",
    "joint_loss",
]
