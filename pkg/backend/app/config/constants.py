"""Global constants for the application.

This module contains static constant definitions used across the backend.
"""

# Reserved symbols
CTC_BLANK = 0
DECODER_PAD = 0  # doubles as end-of-sequence
DEFAULT_START_SYMBOL = 100
START_ROW_NAME = "__start__"

# File magics and versions
CHECKPOINT_MAGIC = b"SEQATTR1"
CHECKPOINT_VERSION = 1
IMAGE_MAGIC = b"SIMG1"
IMAGE_SUFFIX = ".simg"

# Dataset files
MANIFEST_FIXED_COLUMNS = ("image", "pid", "camera")
CHANNEL_STATS_FILE = "channel_stats.json"
TABLE_FILE = "mapping_table.tsv"
RUN_RECORD_FILE = "run.json"
LOSS_LOG_FILE = "loss_log.csv"
EVALUATION_FILE = "evaluation.csv"
EVALUATION_COLUMNS = ("group", "accuracy")
LOSS_LOG_COLUMNS = ("step", "epoch", "l_id", "l_ctc", "l_at", "joint", "lr")

# CTC brute-force guard
BRUTE_FORCE_PATH_LIMIT = 10 ** 7

# Retrieval ranks reported alongside mAP
CMC_RANKS = (1, 5, 10)

# Re-ID feature layers
REID_LAYERS = ("conv", "fc0")

# Ablation kinds
ABLATION_KINDS = (
    "lambda_sweep",
    "joint_vs_separate",
    "feature_layer",
    "drop_attribute",
    "order_permutation",
    "hybrid_training",
)
LAMBDA_SWEEP = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0)

# Process Exit Codes
EXIT_CODES = {
    "SUCCESS": 0,
    "USAGE_ERROR": 1,
    "DATA_ERROR": 2,
    "NUMERIC_ERROR": 3,
}
