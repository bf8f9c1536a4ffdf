"""Operator command line: train / augment / split / classify / serve / inspect-model.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric abort,
4 internal error.  FUSI_MODEL and FUSI_PORT act as fallbacks for --model
and --port.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import architectures, dataset, modelfile, service, training
from .augment import AugmentationConfig, ConfigError, TransformError
from .dataset import DatasetManifest, LayoutError, SplitRatios
from .graph import count_parameters, count_weighted_layers, estimate_memory_bytes, inspect_dump
from .imageio import DecodeError, read_image, write_image
from .tensor import ShapeError


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1 instead of 2."""

    def error(self, message):
        raise UsageError(message)


def _build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="fusiscan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="transfer-train a classifier head on a labeled image directory")
    p.add_argument("--arch", required=True, choices=architectures.ARCH_NAMES)
    p.add_argument("--data", required=True, help="dataset root with the three class directories")
    p.add_argument("--epochs", type=int, default=None, help="defaults to the per-architecture setting")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report", default=None, help="training report JSON to write")
    p.add_argument("--paper-faithful", action="store_true",
                   help="augment the whole corpus before splitting instead of augmenting only train")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--variants", type=int, default=5, help="augmented copies per training image")
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--backbone", default=None, help="model file providing pre-trained backbone weights")

    p = sub.add_parser("augment", help="expand a labeled directory with augmented copies")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variants", type=int, default=5)

    p = sub.add_parser("split", help="shuffle and split a labeled directory into a manifest")
    p.add_argument("--data", required=True)
    p.add_argument("--ratios", default="0.8,0.15,0.05")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--manifest", required=True, help="manifest JSON to write")

    p = sub.add_parser("classify", help="diagnose one leaf image with a saved model")
    p.add_argument("--model", default=None)
    p.add_argument("--image", required=True)
    p.add_argument("--threshold", type=float, default=modelfile.DEFAULT_THRESHOLD)
    p.add_argument("--json", action="store_true", help="print the service response schema")

    p = sub.add_parser("serve", help="run the offline inference service")
    p.add_argument("--model", default=None)
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--threshold", type=float, default=modelfile.DEFAULT_THRESHOLD)
    p.add_argument("--cors-origin", default=None)

    p = sub.add_parser("inspect-model", help="dump a saved model's layer table")
    p.add_argument("--model", default=None)
    return parser


def _resolve_model_path(args) -> str:
    path = args.model or os.environ.get("FUSI_MODEL")
    if not path:
        raise UsageError("--model is required (or set FUSI_MODEL)")
    return path


def _parse_ratios(text: str) -> SplitRatios:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--ratios needs three comma-separated numbers, got {text!r}")
    try:
        train, val, test = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--ratios must be numeric, got {text!r}") from None
    return SplitRatios(train, val, test)


def _cmd_train(args) -> int:
    report = dataset.load_directory_dataset(args.data)
    if args.backbone:
        model = modelfile.load_model(args.backbone)
    else:
        model = architectures.build_architecture(
            args.arch, num_classes=3, input_size=args.input_size, seed=args.seed
        )
    epochs = args.epochs or training.DEFAULT_EPOCHS.get(args.arch, 50)
    cfg = training.TrainingConfig(
        epochs=epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        momentum=args.momentum,
        seed=args.seed,
    )
    aug_cfg = AugmentationConfig(per_image_variants=args.variants)
    manifest, splits = dataset.load_split_images(
        report, SplitRatios(), args.seed, aug_cfg, paper_faithful=args.paper_faithful
    )
    sizes = manifest.split_sizes()
    print(f"splits: train={sizes[0]} validation={sizes[1]} test={sizes[2]} "
          f"(train grows to {len(splits['train'])} with augmentation)")
    result = training.transfer_train(model, splits, cfg)
    modelfile.save_model(model, args.out)
    print(result.to_table())
    print(f"model written to {args.out}")
    if args.report:
        Path(args.report).write_text(result.to_json())
        print(f"report written to {args.report}")
    return 0


def _cmd_augment(args) -> int:
    report = dataset.load_directory_dataset(args.data)
    cfg = AugmentationConfig(per_image_variants=args.variants)
    out_root = Path(args.out)
    total = 0
    for ref in report.images:
        img = ref.load()
        class_dir = out_root / img.label.dir_name
        class_dir.mkdir(parents=True, exist_ok=True)
        stem = Path(img.source_path).stem
        write_image(class_dir / f"{stem}.png", img.pixels)
        variants = dataset.expand_with_augmentation([img], cfg, args.seed)[1:]
        for i, variant in enumerate(variants):
            write_image(class_dir / f"{stem}.aug{i}.png", variant.pixels)
        total += 1 + len(variants)
    print(f"{len(report.images)} sources -> {total} images under {out_root}")
    if report.skipped:
        print(f"skipped {len(report.skipped)} undecodable files")
    return 0


def _cmd_split(args) -> int:
    report = dataset.load_directory_dataset(args.data)
    ratios = _parse_ratios(args.ratios)
    manifest = dataset.shuffle_split(report.images, ratios, args.seed)
    Path(args.manifest).write_text(manifest.to_json())
    train, val, test = manifest.split_sizes()
    print(f"manifest written to {args.manifest}: train={train} validation={val} test={test}")
    return 0


def _cmd_classify(args) -> int:
    model = modelfile.load_model(_resolve_model_path(args))
    pixels = read_image(args.image)
    diagnosis, latency_ms = modelfile.classify_timed(model, pixels, args.threshold)
    if args.json:
        print(json.dumps(diagnosis.to_response(model.architecture_name, latency_ms)))
        return 0
    print(f"diagnosis: {diagnosis.label.display_name}")
    print(f"confidence: {diagnosis.confidence:.1%}")
    for name, prob in diagnosis.per_class:
        print(f"  {name}: {prob:.4f}")
    if diagnosis.recommendation:
        print(f"recommendation: {diagnosis.recommendation}")
    return 0


def _cmd_serve(args) -> int:
    port = args.port
    if port is None:
        port = int(os.environ.get("FUSI_PORT", "8000"))
    service.serve(
        _resolve_model_path(args),
        bind_address=args.bind,
        port=port,
        threshold=args.threshold,
        cors_origin=args.cors_origin,
    )
    return 0


def _cmd_inspect(args) -> int:
    model = modelfile.load_model(_resolve_model_path(args))
    print(inspect_dump(model))
    print(f"total parameters: {count_parameters(model)}")
    print(f"weighted layers (main path): {count_weighted_layers(model)}")
    print(f"estimated memory: {estimate_memory_bytes(model)} bytes")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "augment": _cmd_augment,
    "split": _cmd_split,
    "classify": _cmd_classify,
    "serve": _cmd_serve,
    "inspect-model": _cmd_inspect,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except training.NumericAbort as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 3
    except (ShapeError, modelfile.InferenceError) as exc:
        # ShapeError is a ValueError, so this arm must come before the data-error arm
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    except (LayoutError, ConfigError, DecodeError, TransformError,
            modelfile.ModelFormatError, FileNotFoundError, NotADirectoryError,
            ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
