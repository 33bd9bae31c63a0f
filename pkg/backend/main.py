"""Command-line entrypoint for the seqattr backend.

This module parses the command line, dispatches to the handler of the chosen
subcommand, prints one JSON envelope to stdout and writes a ``run.json``
provenance record into the output directory. Log lines go to stderr.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure (and any unexpected exception).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

_backend_dir = Path(__file__).resolve().parent
if str(_backend_dir) not in sys.path:
    sys.path.insert(0, str(_backend_dir))

from app.config import AppConfig, load_config  # noqa: E402
from app.config.constants import (  # noqa: E402
    ABLATION_KINDS,
    CHANNEL_STATS_FILE,
    EXIT_CODES,
    REID_LAYERS,
    TABLE_FILE,
)
from app.config.loader import config_from_snapshot, config_snapshot  # noqa: E402
from app.exceptions import SeqAttrError, UsageError  # noqa: E402
from app.formatters import format_error, format_evaluation, format_success  # noqa: E402
from app.handler import (  # noqa: E402
    AblationRequest,
    AblationRunner,
    ConversionProgress,
    ConversionRequest,
    DatasetFiles,
    DatasetGenerator,
    DecodeRequest,
    EvaluationRequest,
    Evaluator,
    GenerationRequest,
    ImageConverter,
    JointTrainer,
    TrainRequest,
    decode_image,
)
from app.metrics import RetrievalProtocol  # noqa: E402
from app.utils import provenance_record, read_json, write_run_record  # noqa: E402
from app.validators import get_supported_targets  # noqa: E402
from utils import log_message, set_quiet  # noqa: E402

COMMANDS = ("gen-data", "train", "eval", "decode", "ablate", "convert-image")


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so usage errors map to exit 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="INI config file")
    common.add_argument(
        "--set", dest="overrides", action="append", default=argparse.SUPPRESS,
        metavar="SECTION.KEY=VALUE", help="override one config key (repeatable)",
    )
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for data and training")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="only log errors")
    return common


def build_parser() -> CliParser:
    common = _common_options()
    parser = CliParser(prog="seqattr-cli", description="Joint attribute recognition and re-identification")
    parser.add_argument("--replay", type=Path, help="rerun the command recorded in a run.json")
    parser.add_argument("--config", type=Path, help="INI config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path)
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)

    gen = sub.add_parser("gen-data", parents=[common], help="render the synthetic dataset")
    gen.set_defaults(handler=handle_gen_data)

    train = sub.add_parser("train", parents=[common], help="train the joint network")
    train.add_argument("--data", type=Path, help="dataset directory (default: [data] root)")
    train.add_argument("--validation", action="store_true", help="hold out validation identities")
    train.set_defaults(handler=handle_train)

    evaluate = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    evaluate.add_argument("--ckpt", type=Path, required=True)
    evaluate.add_argument("--data", type=Path, help="dataset directory holding test.csv")
    evaluate.add_argument("--manifest", type=Path, help="manifest to evaluate instead of <data>/test.csv")
    evaluate.add_argument("--layer", choices=REID_LAYERS, default="conv")
    evaluate.add_argument("--beam", type=int)
    evaluate.add_argument("--keep-same-camera", action="store_true", help="keep same-camera matches in the gallery")
    evaluate.set_defaults(handler=handle_eval)

    decode = sub.add_parser("decode", parents=[common], help="decode the attributes of one image")
    decode.add_argument("--ckpt", type=Path, required=True)
    decode.add_argument("--image", type=Path, required=True)
    decode.add_argument("--table", type=Path)
    decode.add_argument("--stats", type=Path)
    decode.add_argument("--beam", type=int)
    decode.add_argument("--greedy", action="store_true")
    decode.set_defaults(handler=handle_decode)

    ablate = sub.add_parser("ablate", parents=[common], help="run an ablation study")
    ablate.add_argument("--kind", choices=ABLATION_KINDS, required=True)
    ablate.add_argument("--data", type=Path)
    ablate.add_argument("--permutations", type=int, default=3)
    ablate.set_defaults(handler=handle_ablate)

    convert = sub.add_parser("convert-image", parents=[common], help="convert between SIMG and PNG")
    convert.add_argument("inputs", type=Path, nargs="+")
    convert.add_argument("--to", choices=get_supported_targets(), required=True)
    convert.add_argument("--overwrite", action="store_true")
    convert.set_defaults(handler=handle_convert)
    return parser


def emit(payload: Dict[str, Any]) -> None:
    """Print one JSON envelope to stdout."""
    print(json.dumps(payload, default=str))
    sys.stdout.flush()


def _data_dir(args: argparse.Namespace, cfg: AppConfig) -> Path:
    return Path(args.data) if getattr(args, "data", None) else Path(cfg.data.root)


def handle_gen_data(args: argparse.Namespace, cfg: AppConfig) -> Dict[str, Any]:
    out = args.out or Path(cfg.data.root)
    result = DatasetGenerator.process(
        GenerationRequest(cfg.data, out, cfg.encoder), lambda line: log_message("data", line)
    )
    return {
        "out": out,
        "message": result.message,
        "outputs": {p.name: str(p) for p in result.outputs},
        "data": {"train_images": len(result.dataset.train), "test_images": len(result.dataset.test)},
    }


def handle_train(args: argparse.Namespace, cfg: AppConfig) -> Dict[str, Any]:
    files = DatasetFiles.in_directory(_data_dir(args, cfg))
    out = args.out or Path("runs") / "train"
    result = JointTrainer.process(
        TrainRequest(
            config=cfg,
            train_manifest=files.train,
            table_path=files.table,
            output_directory=out,
            stats_path=files.stats,
            hold_out_validation=args.validation,
        ),
        lambda line: log_message("train", line),
    )
    log_message("checkpoint", f"saved {result.checkpoint}")
    final = result.final
    return {
        "out": out,
        "message": result.message,
        "outputs": {p.name: str(p) for p in result.outputs},
        "data": {
            "steps": result.steps,
            "final_joint": final.joint if final else None,
            "final_lr": result.epochs[-1].lr if result.epochs else cfg.train.lr,
        },
    }


def _beside_checkpoint(ckpt: Path, name: str, fallback: Path) -> Path:
    candidate = Path(ckpt).parent / name
    return candidate if candidate.is_file() else fallback


def handle_eval(args: argparse.Namespace, cfg: AppConfig) -> Dict[str, Any]:
    files = DatasetFiles.in_directory(_data_dir(args, cfg))
    out = args.out or Path(args.ckpt).parent / "eval"
    result = Evaluator.process(
        EvaluationRequest(
            config=cfg,
            checkpoint=args.ckpt,
            test_manifest=args.manifest or files.test,
            table_path=_beside_checkpoint(args.ckpt, TABLE_FILE, files.table),
            stats_path=_beside_checkpoint(args.ckpt, CHANNEL_STATS_FILE, files.stats),
            output_directory=out,
            layer_choice=args.layer,
            protocol=RetrievalProtocol(exclude_same_camera=not args.keep_same_camera),
            beam_width=args.beam,
        ),
        lambda line: log_message("eval", line),
    )
    for line in format_evaluation(result.attributes, result.ranking).splitlines():
        log_message("eval", line)
    return {
        "out": out,
        "message": result.message,
        "outputs": {p.name: str(p) for p in result.outputs},
        "data": result.summary(),
    }


def handle_decode(args: argparse.Namespace, cfg: AppConfig) -> Dict[str, Any]:
    out = args.out or Path(args.ckpt).parent / "decode"
    result = decode_image(
        DecodeRequest(
            config=cfg,
            checkpoint=args.ckpt,
            image=args.image,
            table_path=args.table,
            stats_path=args.stats,
            beam_width=args.beam,
            greedy=args.greedy,
        )
    )
    return {
        "out": out,
        "message": result.message,
        "outputs": {},
        "data": {
            "attributes": dict(result.record.attributes),
            "labels": list(result.labels),
            "log_prob": result.log_prob,
        },
    }


def handle_ablate(args: argparse.Namespace, cfg: AppConfig) -> Dict[str, Any]:
    out = args.out or Path("runs") / f"ablate-{args.kind}"
    result = AblationRunner.process(
        AblationRequest(
            kind=args.kind,
            config=cfg,
            data=DatasetFiles.in_directory(_data_dir(args, cfg)),
            output_directory=out,
            permutations=args.permutations,
        ),
        lambda line: log_message("ablate", line),
    )
    return {
        "out": out,
        "message": result.message,
        "outputs": {"table": str(result.csv_path)},
        "data": {"rows": list(result.rows)},
    }


def handle_convert(args: argparse.Namespace, cfg: AppConfig) -> Dict[str, Any]:
    out = args.out or Path("converted")

    def progress(update: ConversionProgress) -> None:
        if update.status == "completed":
            log_message("cli", f"[{update.index}/{update.total}] {update.source} -> {update.destination}")

    result = ImageConverter.convert(
        ConversionRequest(args.inputs, out, args.to, args.overwrite), progress_callback=progress
    )
    return {
        "out": out,
        "message": result.message,
        "outputs": {str(i): str(p) for i, p in enumerate(result.outputs)},
        "data": {},
    }


def _merged(args: argparse.Namespace, name: str, default: Any = None) -> Any:
    return getattr(args, name, default)


def resolve_config(args: argparse.Namespace, replay: Optional[Dict[str, Any]] = None) -> AppConfig:
    """Config from the replay record, or from ``--config`` plus ``--set`` overrides."""
    if replay is not None:
        cfg = config_from_snapshot(replay["config"])
    else:
        cfg = load_config(_merged(args, "config"), _merged(args, "overrides", []) or [])
    seed = _merged(args, "seed")
    if seed is not None:
        cfg = replace(cfg.with_train(seed=seed), data=replace(cfg.data, seed=seed))
    return cfg


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run one command and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command = "cli"
    try:
        args = parser.parse_args(argv)
        replay = None
        recorded_argv = argv
        if args.replay is not None:
            replay = read_json(args.replay)
            recorded_argv = list(replay["argv"])
            replayed = parser.parse_args(recorded_argv)
            if args.out is not None:
                replayed.out = args.out
            args = replayed
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required", details={"commands": list(COMMANDS)})
        command = args.command
        set_quiet(bool(_merged(args, "quiet", False)))

        cfg = resolve_config(args, replay)
        args.out = _merged(args, "out")
        log_message("cli", f"{command} (config={_merged(args, 'config')}, seed={cfg.train.seed})")
        outcome = args.handler(args, cfg)

        record = provenance_record(
            command, recorded_argv, config_snapshot(cfg), cfg.train.seed, outcome["outputs"]
        )
        record_path = write_run_record(outcome["out"], record)
        data = dict(outcome["data"])
        data["run_record"] = str(record_path)
        emit(format_success(command, data, outcome["message"]))
        return EXIT_CODES["SUCCESS"]
    except SeqAttrError as exc:
        log_message(command, f"{exc.code}: {exc.message}", level=logging.ERROR)
        emit(format_error(command, **exc.to_dict()))
        return exc.exit_code
    except Exception as exc:
        log_message(command, f"unexpected failure: {exc}", level=logging.ERROR)
        emit(format_error(
            command,
            str(exc),
            "FATAL_ERROR",
            {"traceback": traceback.format_exc()},
            EXIT_CODES["NUMERIC_ERROR"],
        ))
        return EXIT_CODES["NUMERIC_ERROR"]


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
