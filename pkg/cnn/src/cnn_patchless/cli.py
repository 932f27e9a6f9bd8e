"""qusnet: train, run, and score the patchless density regressor.

Exit codes follow the qus convention: 0 success, 2 bad configuration or
parameters, 3 I/O and file-format problems, 4 failures on valid input
(divergence, train/test overlap, nothing to score).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import DatasetError
from .evaluate import ManifestOverlapError, evaluate
from .infer import infer
from .loss import EmptyMaskError
from .raster import RasterFormatError
from .train import (CheckpointError, ConfigurationError, DivergenceError,
                    TrainConfig, load_checkpoint, save_checkpoint, train)


def _cmd_train(args) -> int:
    doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    try:
        cfg = TrainConfig(**doc)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    ckpt = train(cfg)
    out = save_checkpoint(ckpt, args.out)
    print(f"final train loss {ckpt.history['train'][-1]:.6g}")
    print(f"checkpoint: {out}")
    return 0


def _cmd_infer(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    out = infer(ckpt, args.input, args.out)
    print(f"map: {out}")
    return 0


def _cmd_evaluate(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    report = evaluate(ckpt, args.manifest)
    print(f"samples: {len(report.per_sample)}")
    print(report.table())
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qusnet", description="Patchless scatterer-density regression."
    )
    parser.add_argument("--version", action="version",
                        version=f"qusnet {__import__('cnn_patchless').__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train from a dataset directory")
    p.add_argument("--config", required=True, help="JSON training config")
    p.add_argument("--out", default="checkpoint.pt", help="checkpoint path")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("infer", help="predict a density map for one frame")
    p.add_argument("--ckpt", required=True, help="trained checkpoint")
    p.add_argument("--in", dest="input", required=True, help="envelope raster")
    p.add_argument("--out", required=True, help="output map raster")
    p.set_defaults(fn=_cmd_infer)

    p = sub.add_parser("evaluate", help="score a checkpoint on a test dataset")
    p.add_argument("--ckpt", required=True, help="trained checkpoint")
    p.add_argument("--manifest", required=True, help="test dataset directory")
    p.set_defaults(fn=_cmd_evaluate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    except (RasterFormatError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ManifestOverlapError, EmptyMaskError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ConfigurationError, CheckpointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
