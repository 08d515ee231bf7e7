"""Command-line pipeline staging every experiment through files.

Each subcommand resolves its configuration (defaults <- --config file <-
flags), writes the resolved config into the output directory, and emits
CSV tables with matching PNG figures. Exit codes: 0 success, 1 usage
error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .audio_branch import (
    EvoConfig,
    FitnessConfig,
    Genome,
    GenomeBounds,
    evolve_topology,
)
from .audio_features import MfccConfig
from .config import DEFAULTS, parse_blocks, parse_int_list, resolve_config, write_config
from .convnet import BackboneSpec, BuiltinCnnBackbone, train_builtin_backbone
from .datasets import (
    SynthConfig,
    generate_synthetic,
    load_manifest_dataset,
    mfcc_matrix,
    read_wav_mono,
    write_features_csv,
)
from .evaluation import MlpClassifier, evaluate, kfold_split, write_confusion_csv
from .experiments import (
    ComparisonConfig,
    FusionArtifact,
    load_fusion_artifact,
    run_comparison,
    run_holdout,
    save_fusion_artifact,
)
from .figures import (
    save_comparison_figure,
    save_confusion_figure,
    save_history_figure,
    save_sweep_figure,
)
from .fusion import FusedClassifier, FusedPairs, PairedArrays, build_fusion_model, fusion_head_sweep, train_fusion_head
from .image_branch import head_sweep, load_image
from .network import TrainConfig, model_from_dict, model_to_dict

AUDIO_FORMAT = "scenefusion-audio/1"
IMAGE_FORMAT = "scenefusion-image/1"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--threads", type=int)


def build_parser() -> _Parser:
    parser = _Parser(prog="scenefusion", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", parents=[], help="generate a synthetic paired dataset")
    _add_common(p)
    p.add_argument("--classes", type=int)
    p.add_argument("--per-class", type=int)
    p.add_argument("--ambiguity", type=float)
    p.add_argument("--image-size", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="MFCC features of every manifest clip -> CSV")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("evolve-audio", help="evolutionary MLP topology search")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--crossover-rate", type=float)
    p.add_argument("--elitism", type=int)
    p.add_argument("--min-width", type=int)
    p.add_argument("--max-width", type=int)
    p.add_argument("--max-layers", type=int)
    p.add_argument("--fitness-folds", type=int)
    p.add_argument("--final-folds", type=int)
    p.add_argument("--fitness-epochs", type=int)
    p.set_defaults(func=cmd_evolve_audio)

    p = sub.add_parser("train-audio", help="train and cross-validate the audio MLP")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--hidden", dest="audio_hidden", help="hidden widths, e.g. 64,32")
    p.add_argument("--folds", type=int)
    p.add_argument("--epochs", dest="audio_epochs", type=int)
    p.set_defaults(func=cmd_train_audio)

    p = sub.add_parser("train-image", help="train the backbone and sweep head widths")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--widths", help="head widths to sweep, e.g. 2,4,8,16")
    p.add_argument("--folds", type=int)
    p.add_argument("--image-size", type=int)
    p.add_argument("--backbone-epochs", type=int)
    p.add_argument("--backbone-blocks")
    p.set_defaults(func=cmd_train_image)

    p = sub.add_parser("train-fusion", help="sweep and train the late-fusion head")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-model", required=True)
    p.add_argument("--image-model", required=True)
    p.add_argument("--widths")
    p.add_argument("--folds", type=int)
    p.set_defaults(func=cmd_train_fusion)

    p = sub.add_parser("baselines", help="neural vs classical comparison on one fold plan")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--image-model", help="reuse this model's frozen backbone")
    p.add_argument("--hidden", dest="audio_hidden")
    p.add_argument("--image-width", type=int)
    p.add_argument("--fusion-width", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--image-size", type=int)
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("evaluate", help="k-fold report for one model kind")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--kind", required=True, choices=["audio", "image", "fusion"])
    p.add_argument("--hidden", dest="audio_hidden")
    p.add_argument("--image-model")
    p.add_argument("--image-width", type=int)
    p.add_argument("--fusion-width", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--image-size", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("holdout", help="apply trained models to completely unseen data")
    _add_common(p)
    p.add_argument("--manifest", required=True, help="manifest of the unseen data")
    p.add_argument("--fusion-model", required=True)
    p.set_defaults(func=cmd_holdout)

    p = sub.add_parser("predict", help="class posteriors for one image/audio pair")
    _add_common(p)
    p.add_argument("--fusion-model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--audio", required=True)
    p.set_defaults(func=cmd_predict)

    return parser


def _resolve(args, keys):
    overrides = {key: getattr(args, key, None) for key in keys}
    overrides["seed"] = args.seed
    overrides["threads"] = args.threads
    return resolve_config(args.config, overrides)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _mfcc_config(cfg) -> MfccConfig:
    return MfccConfig(
        window_seconds=float(cfg["window_seconds"]),
        windows_per_clip=int(cfg["windows_per_clip"]),
        coefficients_per_window=int(cfg["coefficients_per_window"]),
        mel_filters=int(cfg["mel_filters"]),
        fft_size=int(cfg["fft_size"]),
        sample_rate=int(cfg["sample_rate"]),
    )


def _train_cfg(cfg, epochs_key, lr_key) -> TrainConfig:
    return TrainConfig(
        epochs=int(cfg[epochs_key]),
        batch_size=int(cfg["batch_size"]),
        learning_rate=float(cfg[lr_key]),
        seed=int(cfg["seed"]),
    )


def _load_dataset(cfg, manifest, class_names=None, image_size=None):
    return load_manifest_dataset(
        manifest,
        sample_rate=int(cfg["sample_rate"]),
        image_size=int(image_size if image_size is not None else cfg["image_size"]),
        class_names=class_names,
    )


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_report(out: Path, stem: str, report, class_names):
    report.class_names = list(class_names)
    report.save_json(out / f"{stem}.json")
    write_confusion_csv(report.confusion, class_names, out / f"{stem}_confusion.csv")
    save_confusion_figure(report.confusion, class_names, out / f"{stem}_confusion.png")


# --- model artifact files -------------------------------------------------


def _save_audio_model(path, model, class_names, mfcc_cfg: MfccConfig, sources):
    import dataclasses

    doc = {
        "format": AUDIO_FORMAT,
        "network": model_to_dict(model),
        "class_names": list(class_names),
        "mfcc_config": dataclasses.asdict(mfcc_cfg),
        "train_sources": sorted(sources),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def _load_audio_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != AUDIO_FORMAT:
        raise ValueError(f"{path} is not an audio model file")
    return (
        model_from_dict(doc["network"]),
        doc["class_names"],
        MfccConfig(**doc["mfcc_config"]),
        doc["train_sources"],
    )


def _save_image_model(path, backbone, head, class_names, sources):
    doc = {
        "format": IMAGE_FORMAT,
        "backbone": backbone.to_dict(),
        "head": model_to_dict(head),
        "class_names": list(class_names),
        "train_sources": sorted(sources),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def _load_image_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != IMAGE_FORMAT:
        raise ValueError(f"{path} is not an image model file")
    return (
        BuiltinCnnBackbone.from_dict(doc["backbone"]),
        model_from_dict(doc["head"]),
        doc["class_names"],
        doc["train_sources"],
    )


# --- subcommands ----------------------------------------------------------


def cmd_synth(args):
    cfg = _resolve(args, ["classes", "per_class", "ambiguity", "image_size"])
    out = _outdir(args)
    synth = SynthConfig(
        num_classes=int(cfg["classes"]),
        samples_per_class=int(cfg["per_class"]),
        ambiguity=float(cfg["ambiguity"]),
        seed=int(cfg["seed"]),
        sample_rate=int(cfg["sample_rate"]),
        image_size=int(cfg["image_size"]),
    )
    manifest = generate_synthetic(synth, out)
    write_config(cfg, out / "run_config.txt")
    print(manifest)
    return 0


def cmd_features(args):
    cfg = _resolve(args, [])
    out = _outdir(args)
    dataset = _load_dataset(cfg, args.manifest)
    features = mfcc_matrix(dataset, _mfcc_config(cfg), threads=int(cfg["threads"]))
    write_features_csv(features, dataset.labels, dataset.class_names, out / "features.csv")
    write_config(cfg, out / "run_config.txt")
    print(out / "features.csv")
    return 0


def cmd_evolve_audio(args):
    keys = [
        "population", "generations", "runs", "mutation_rate", "crossover_rate",
        "elitism", "min_width", "max_width", "max_layers",
        "fitness_folds", "final_folds", "fitness_epochs",
    ]
    cfg = _resolve(args, keys)
    out = _outdir(args)
    dataset = _load_dataset(cfg, args.manifest)
    mfcc_cfg = _mfcc_config(cfg)
    features = mfcc_matrix(dataset, mfcc_cfg, threads=int(cfg["threads"]))
    evo = EvoConfig(
        population=int(cfg["population"]),
        generations=int(cfg["generations"]),
        runs=int(cfg["runs"]),
        mutation_rate=float(cfg["mutation_rate"]),
        crossover_rate=float(cfg["crossover_rate"]),
        elitism=int(cfg["elitism"]),
        seed=int(cfg["seed"]),
        bounds=GenomeBounds(
            min_width=int(cfg["min_width"]),
            max_width=int(cfg["max_width"]),
            max_layers=int(cfg["max_layers"]),
        ),
    )
    fitness = FitnessConfig(
        folds=int(cfg["fitness_folds"]),
        final_folds=int(cfg["final_folds"]),
        train_cfg=_train_cfg(cfg, "fitness_epochs", "audio_lr"),
    )
    result = evolve_topology(features, dataset.labels, evo, fitness, threads=int(cfg["threads"]))

    _write_csv(
        out / "history.csv",
        ["run", "generation", "best_accuracy", "mean_accuracy", "best_genome", "connections"],
        [(r, g, repr(b), repr(m), genome, conns) for r, g, b, m, genome, conns in result.history],
    )
    ranked = sorted(
        enumerate(result.run_best, start=1), key=lambda item: -item[1].accuracy
    )
    _write_csv(
        out / "evolution_results.csv",
        ["simulation", "hidden_neurons", "connections", "accuracy"],
        [
            (sim, str(rec.genome), rec.connections, repr(rec.accuracy))
            for sim, rec in ranked
        ],
    )
    save_history_figure(result.history, out / "history.png")
    (out / "best_genome.txt").write_text(str(result.best.genome) + "\n")

    winner = MlpClassifier(
        list(result.best.genome.hidden_widths),
        len(dataset.class_names),
        _train_cfg(cfg, "audio_epochs", "audio_lr"),
        seed=int(cfg["seed"]),
    ).fit(features, dataset.labels)
    _save_audio_model(
        out / "audio_model.json", winner.model, dataset.class_names, mfcc_cfg, dataset.source_ids
    )
    write_config(cfg, out / "run_config.txt")
    print(f"best genome {result.best.genome} accuracy {result.best.accuracy:.4f}")
    return 0


def cmd_train_audio(args):
    cfg = _resolve(args, ["audio_hidden", "folds", "audio_epochs"])
    out = _outdir(args)
    dataset = _load_dataset(cfg, args.manifest)
    mfcc_cfg = _mfcc_config(cfg)
    features = mfcc_matrix(dataset, mfcc_cfg, threads=int(cfg["threads"]))
    hidden = parse_int_list(cfg["audio_hidden"])
    train_cfg = _train_cfg(cfg, "audio_epochs", "audio_lr")
    plan = kfold_split(len(dataset), int(cfg["folds"]), int(cfg["seed"]))
    report = evaluate(
        lambda fold: MlpClassifier(hidden, len(dataset.class_names), train_cfg, seed=int(cfg["seed"]) + fold),
        features,
        dataset.labels,
        plan,
        class_names=dataset.class_names,
    )
    _write_report(out, "audio_report", report, dataset.class_names)
    final = MlpClassifier(hidden, len(dataset.class_names), train_cfg, seed=int(cfg["seed"]))
    final.fit(features, dataset.labels)
    _save_audio_model(out / "audio_model.json", final.model, dataset.class_names, mfcc_cfg, dataset.source_ids)
    write_config(cfg, out / "run_config.txt")
    print(f"audio {int(cfg['folds'])}-fold accuracy {report.mean_accuracy:.4f}")
    return 0


def _train_backbone(cfg, dataset):
    spec = BackboneSpec(
        conv_blocks=parse_blocks(cfg["backbone_blocks"]),
        input_size=int(cfg["image_size"]),
    )
    train_cfg = TrainConfig(
        epochs=int(cfg["backbone_epochs"]),
        batch_size=int(cfg["backbone_batch"]),
        learning_rate=float(cfg["backbone_lr"]),
        seed=int(cfg["seed"]),
    )
    return train_builtin_backbone(
        dataset.images, dataset.labels, len(dataset.class_names), spec, train_cfg
    )


def cmd_train_image(args):
    cfg = _resolve(args, ["widths", "folds", "image_size", "backbone_epochs", "backbone_blocks"])
    out = _outdir(args)
    dataset = _load_dataset(cfg, args.manifest)
    backbone = _train_backbone(cfg, dataset)
    features = backbone.features(dataset.images)
    head_cfg = _train_cfg(cfg, "head_epochs", "head_lr")
    best_width, rows = head_sweep(
        features,
        dataset.labels,
        parse_int_list(cfg["widths"]),
        folds=int(cfg["folds"]),
        seed=int(cfg["seed"]),
        train_cfg=head_cfg,
        num_classes=len(dataset.class_names),
    )
    _write_csv(
        out / "image_sweep.csv",
        ["width", "mean_accuracy", "std_accuracy"],
        [(w, repr(acc), repr(std)) for w, acc, std in rows],
    )
    save_sweep_figure(rows, out / "image_sweep.png", title="Image head sweep")
    final = MlpClassifier([best_width], len(dataset.class_names), head_cfg, seed=int(cfg["seed"]))
    final.fit(features, dataset.labels)
    _save_image_model(out / "image_model.json", backbone, final.model, dataset.class_names, dataset.source_ids)
    write_config(cfg, out / "run_config.txt")
    print(f"best head width {best_width}")
    return 0


def cmd_train_fusion(args):
    cfg = _resolve(args, ["widths", "folds"])
    out = _outdir(args)
    audio_net, audio_classes, mfcc_cfg, audio_sources = _load_audio_model(args.audio_model)
    backbone, image_head, image_classes, image_sources = _load_image_model(args.image_model)
    if audio_classes != image_classes:
        raise ValueError("audio and image models disagree on the class list")
    dataset = _load_dataset(
        cfg, args.manifest, class_names=audio_classes, image_size=backbone.spec.input_size
    )
    audio_X = mfcc_matrix(dataset, mfcc_cfg, threads=int(cfg["threads"]))
    image_X = backbone.features(dataset.images)
    pairs = FusedPairs(
        audio_features=audio_X,
        image_features=image_X,
        labels=dataset.labels,
        sample_ids=dataset.sample_ids,
    )
    fusion_cfg = _train_cfg(cfg, "fusion_epochs", "fusion_lr")
    best_width, rows = fusion_head_sweep(
        audio_net,
        image_head,
        pairs,
        parse_int_list(cfg["widths"]),
        folds=int(cfg["folds"]),
        seed=int(cfg["seed"]),
        train_cfg=fusion_cfg,
    )
    _write_csv(
        out / "fusion_sweep.csv",
        ["width", "mean_accuracy", "std_accuracy"],
        [(w, repr(acc), repr(std)) for w, acc, std in rows],
    )
    save_sweep_figure(rows, out / "fusion_sweep.png", title="Fusion head sweep")
    model = build_fusion_model(audio_net, image_head, best_width, seed=int(cfg["seed"]))
    train_fusion_head(model, pairs, fusion_cfg, seed=int(cfg["seed"]))
    artifact = FusionArtifact(
        fusion=model,
        backbone=backbone,
        backbone_kind="builtin_cnn",
        feature_dim=backbone.feature_dim,
        class_names=audio_classes,
        mfcc_config=mfcc_cfg,
        train_sources=sorted(set(audio_sources) | set(image_sources) | set(dataset.source_ids)),
    )
    save_fusion_artifact(out / "fusion_model.json", artifact)
    write_config(cfg, out / "run_config.txt")
    print(f"best fusion width {best_width}")
    return 0


def _comparison_config(cfg) -> ComparisonConfig:
    return ComparisonConfig(
        audio_hidden=tuple(parse_int_list(cfg["audio_hidden"])),
        image_width=int(cfg["image_width"]),
        fusion_width=int(cfg["fusion_width"]),
        folds=int(cfg["folds"]),
        seed=int(cfg["seed"]),
        audio_train=_train_cfg(cfg, "audio_epochs", "audio_lr"),
        head_train=_train_cfg(cfg, "head_epochs", "head_lr"),
        fusion_train=_train_cfg(cfg, "fusion_epochs", "fusion_lr"),
        forest_trees=int(cfg["forest_trees"]),
        forest_depth=int(cfg["forest_depth"]),
        svm_regularization=float(cfg["svm_regularization"]),
        svm_epochs=int(cfg["svm_epochs"]),
    )


def cmd_baselines(args):
    cfg = _resolve(args, ["audio_hidden", "image_width", "fusion_width", "folds", "image_size"])
    out = _outdir(args)
    backbone = None
    if args.image_model:
        backbone, _, _, _ = _load_image_model(args.image_model)
    dataset = _load_dataset(
        cfg, args.manifest, image_size=backbone.spec.input_size if backbone else None
    )
    mfcc_cfg = _mfcc_config(cfg)
    audio_X = mfcc_matrix(dataset, mfcc_cfg, threads=int(cfg["threads"]))
    if backbone is None:
        backbone = _train_backbone(cfg, dataset)
    image_X = backbone.features(dataset.images)
    reports = run_comparison(
        audio_X, image_X, dataset.labels, len(dataset.class_names), _comparison_config(cfg)
    )
    folds = int(cfg["folds"])
    _write_csv(
        out / "comparison.csv",
        ["model", "mean_accuracy", "std_accuracy"] + [f"fold_{i}" for i in range(folds)],
        [
            (name, repr(rep.mean_accuracy), repr(rep.std_accuracy))
            + tuple(repr(a) for a in rep.fold_accuracies)
            for name, rep in reports.items()
        ],
    )
    save_comparison_figure(
        {name: rep.mean_accuracy for name, rep in reports.items()}, out / "comparison.png"
    )
    for name, rep in reports.items():
        write_confusion_csv(rep.confusion, dataset.class_names, out / f"confusion_{name}.csv")
    write_config(cfg, out / "run_config.txt")
    for name, rep in reports.items():
        print(f"{name}: {rep.mean_accuracy:.4f}")
    return 0


def cmd_evaluate(args):
    cfg = _resolve(args, ["audio_hidden", "image_width", "fusion_width", "folds", "image_size"])
    out = _outdir(args)
    backbone = None
    if args.kind in ("image", "fusion") and args.image_model:
        backbone, _, _, _ = _load_image_model(args.image_model)
    dataset = _load_dataset(
        cfg, args.manifest, image_size=backbone.spec.input_size if backbone else None
    )
    mfcc_cfg = _mfcc_config(cfg)
    plan = kfold_split(len(dataset), int(cfg["folds"]), int(cfg["seed"]))
    num_classes = len(dataset.class_names)
    seed = int(cfg["seed"])

    if args.kind == "audio":
        inputs = mfcc_matrix(dataset, mfcc_cfg, threads=int(cfg["threads"]))
        hidden = parse_int_list(cfg["audio_hidden"])
        train_cfg = _train_cfg(cfg, "audio_epochs", "audio_lr")
        factory = lambda fold: MlpClassifier(hidden, num_classes, train_cfg, seed=seed + fold)
    elif args.kind == "image":
        if backbone is None:
            backbone = _train_backbone(cfg, dataset)
        inputs = backbone.features(dataset.images)
        train_cfg = _train_cfg(cfg, "head_epochs", "head_lr")
        factory = lambda fold: MlpClassifier(
            [int(cfg["image_width"])], num_classes, train_cfg, seed=seed + fold
        )
    else:
        if backbone is None:
            backbone = _train_backbone(cfg, dataset)
        inputs = PairedArrays(
            mfcc_matrix(dataset, mfcc_cfg, threads=int(cfg["threads"])),
            backbone.features(dataset.images),
        )
        factory = lambda fold: FusedClassifier(
            parse_int_list(cfg["audio_hidden"]),
            int(cfg["image_width"]),
            int(cfg["fusion_width"]),
            num_classes,
            audio_train=_train_cfg(cfg, "audio_epochs", "audio_lr"),
            head_train=_train_cfg(cfg, "head_epochs", "head_lr"),
            fusion_train=_train_cfg(cfg, "fusion_epochs", "fusion_lr"),
            seed=seed + fold,
        )

    report = evaluate(factory, inputs, dataset.labels, plan, class_names=dataset.class_names)
    _write_report(out, f"{args.kind}_report", report, dataset.class_names)
    write_config(cfg, out / "run_config.txt")
    print(f"{args.kind} {plan.k}-fold accuracy {report.mean_accuracy:.4f}")
    return 0


def cmd_holdout(args):
    cfg = _resolve(args, [])
    out = _outdir(args)
    artifact = load_fusion_artifact(args.fusion_model)
    size = artifact.backbone.spec.input_size if artifact.backbone else None
    unseen = _load_dataset(cfg, args.manifest, class_names=artifact.class_names, image_size=size)
    results = run_holdout(artifact, unseen)
    _write_csv(
        out / "holdout.csv",
        ["approach", "correct", "incorrect", "accuracy_percent"],
        [
            (name, res.correct, res.total - res.correct, repr(100.0 * res.accuracy))
            for name, res in results.items()
        ],
    )
    for name, res in results.items():
        write_confusion_csv(res.confusion, artifact.class_names, out / f"holdout_confusion_{name}.csv")
    save_confusion_figure(
        results["fusion"].confusion,
        artifact.class_names,
        out / "holdout_confusion_fusion.png",
        title="Fusion on unseen data",
    )
    write_config(cfg, out / "run_config.txt")
    for name, res in results.items():
        print(f"{name}: {res.correct}/{res.total} = {100 * res.accuracy:.2f}%")
    return 0


def cmd_predict(args):
    cfg = _resolve(args, [])
    out = _outdir(args)
    artifact = load_fusion_artifact(args.fusion_model)
    image = load_image(args.image, size=artifact.backbone.spec.input_size)
    rate, samples = read_wav_mono(args.audio)
    if rate != artifact.mfcc_config.sample_rate:
        raise ValueError(
            f"audio sample rate {rate} != model's {artifact.mfcc_config.sample_rate}"
        )
    posteriors = artifact.predict_pair(image, samples, rate)
    doc = {
        "classes": list(artifact.class_names),
        "audio": [float(v) for v in posteriors["audio"]],
        "image": [float(v) for v in posteriors["image"]],
        "fused": [float(v) for v in posteriors["fused"]],
        "predicted": artifact.class_names[int(np.argmax(posteriors["fused"]))],
    }
    with open(out / "prediction.json", "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    write_config(cfg, out / "run_config.txt")
    print(json.dumps(doc, indent=1, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, KeyError, FileNotFoundError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
