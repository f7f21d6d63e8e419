"""Command-line driver: train, eval, predict, tsne, and split subcommands.

Configuration precedence is defaults < config file < flags. The config file
is flat key=value text using the flag names with underscores; the effective
configuration is echoed into the output directory for provenance. One
--seed flag feeds every stage with fixed offsets: the split uses seed,
CBOW uses seed+1, and the projection uses seed+2.

Exit codes are stable for scripting: 0 success, 2 usage or configuration
error, 1 runtime error. Logs go to the error stream; results go to files
and the output stream only.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .artifact_store import ModelBundle, load_model, save_model
from .cbow import CbowParams
from .corpus import Corpus, SplitSpec, load_fixture, load_isot, stratified_split
from .errors import CalibrationError, FndError, PipelineError, ValidationError
from .metrics import write_report_json, write_roc_tsv
from .pipeline import evaluate_pipeline, feature_matrix, fit_feature_state, \
    predict_texts, train_pipeline
from .preprocess import load_stopwords, preprocess_corpus
from .projection import TsneConfig, tsne, write_embedding_tsv
from .svm import SolverConfig

log = logging.getLogger("fnd")

VECTORIZER_TAGS = {"bow": "BOW", "tfidf": "TFIDF", "w2v": "W2V"}
KERNEL_TAGS = {"linear": "LINEAR", "rbf": "RBF"}

_TRAIN_DEFAULTS = {
    "vectorizer": "bow", "kernel": "linear", "cost": 1.0, "gamma": "scale",
    "min_df": 2, "test_fraction": 0.2, "seed": 42, "tolerance": 1e-3,
    "max_iter": 1_000_000, "cbow_dim": 100, "cbow_window": 5,
    "cbow_negatives": 5, "cbow_epochs": 5, "cbow_lr": 0.025,
    "cbow_min_count": 2, "threads": 1,
}
_TSNE_DEFAULTS = {
    "space": "tfidf", "dims": 2, "perplexity": 30.0, "iterations": 1000,
    "learning_rate": 200.0, "subsample": 2000, "seed": 42, "min_df": 2,
    "cbow_dim": 100, "cbow_window": 5, "cbow_negatives": 5, "cbow_epochs": 5,
    "cbow_lr": 0.025, "cbow_min_count": 2, "threads": 1,
}
_SPLIT_DEFAULTS = {"test_fraction": 0.2, "seed": 42}


@contextmanager
def _stage(name: str):
    log.info("%s: start", name)
    try:
        yield
    except FndError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name
        raise
    log.info("%s: done", name)


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(
                f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _cast_like(default, raw: str, key: str):
    try:
        if key == "gamma":
            return raw  # validated in _parse_gamma
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ValidationError(f"config key {key}: {exc}") from exc


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    file_values = _read_config_file(args.config) if getattr(args, "config", None) \
        else {}
    unknown = set(file_values) - set(defaults)
    if unknown:
        raise ValidationError(f"unknown config file keys: {sorted(unknown)}")
    merged = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in file_values:
            merged[key] = _cast_like(default, file_values[key], key)
        else:
            merged[key] = default
    return merged


def _parse_gamma(value) -> float | None:
    if value == "scale":
        return None
    try:
        gamma = float(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(
            f"gamma must be a positive number or 'scale', got {value!r}") from exc
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    return gamma


def _out_dir(args: argparse.Namespace) -> Path:
    out = args.out or os.environ.get("FND_OUT")
    if not out:
        raise ValidationError("output directory required: pass --out or set FND_OUT")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo_config(out_dir: Path, subcommand: str, cfg: dict, extra: dict) -> None:
    lines = [f"subcommand={subcommand}"]
    lines += [f"{k}={v}" for k, v in sorted({**cfg, **extra}.items())]
    (out_dir / "config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_corpus(args: argparse.Namespace) -> tuple[Corpus, str]:
    single = getattr(args, "data", None)
    real = getattr(args, "data_real", None)
    fake = getattr(args, "data_fake", None)
    if single and (real or fake):
        raise ValidationError("--data conflicts with --data-real/--data-fake")
    with _stage("ingest"):
        if single:
            corpus = load_fixture(single)
            layout = "single"
        elif real and fake:
            corpus = load_isot(real, fake)
            layout = "isot"
        else:
            raise ValidationError(
                "provide --data FILE or both --data-real and --data-fake")
    log.info("ingest: %d documents (%s), stats %s",
             len(corpus), layout, corpus.ingest_stats)
    return corpus, layout


def _cbow_params(cfg: dict, seed: int) -> CbowParams:
    return CbowParams(dim=cfg["cbow_dim"], window=cfg["cbow_window"],
                      negatives=cfg["cbow_negatives"], epochs=cfg["cbow_epochs"],
                      initial_lr=cfg["cbow_lr"],
                      min_count=cfg["cbow_min_count"], seed=seed)


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, _TRAIN_DEFAULTS)
    if cfg["vectorizer"] not in VECTORIZER_TAGS:
        raise ValidationError(f"unknown vectorizer {cfg['vectorizer']!r} "
                              f"(choose from {sorted(VECTORIZER_TAGS)})")
    if cfg["kernel"] not in KERNEL_TAGS:
        raise ValidationError(f"unknown kernel {cfg['kernel']!r} "
                              f"(choose from {sorted(KERNEL_TAGS)})")
    if not cfg["cost"] > 0:
        raise ValidationError(f"cost must be positive, got {cfg['cost']}")
    if cfg["min_df"] < 1:
        raise ValidationError(f"min_df must be >= 1, got {cfg['min_df']}")
    if cfg["threads"] < 1:
        raise ValidationError(f"threads must be >= 1, got {cfg['threads']}")
    gamma = _parse_gamma(cfg["gamma"])
    split_spec = SplitSpec(test_fraction=cfg["test_fraction"], seed=cfg["seed"])
    split_spec.validate()
    solver = SolverConfig(tolerance=cfg["tolerance"], max_iter=cfg["max_iter"],
                          seed=cfg["seed"])
    solver.validate()
    cbow_params = _cbow_params(cfg, cfg["seed"] + 1)
    cbow_params.validate()
    out_dir = _out_dir(args)

    corpus, layout = _load_corpus(args)
    _echo_config(out_dir, "train", cfg,
                 {"data_layout": layout, "out": str(out_dir)})
    with _stage("split"):
        train_part, _ = stratified_split(corpus, split_spec)
    stopwords = load_stopwords()
    with _stage("preprocess"):
        train_docs, summary = preprocess_corpus(train_part, stopwords,
                                                workers=cfg["threads"])
    log.info("preprocess: kept %d, dropped %d empty",
             summary.kept, summary.dropped_empty)

    provenance = {"seed": cfg["seed"],
                  "split": {"test_fraction": split_spec.test_fraction,
                            "seed": split_spec.seed},
                  "data_layout": layout,
                  "tool_version": __version__}
    started = time.perf_counter()
    with _stage("train"), open(out_dir / "train.log", "w",
                               encoding="utf-8") as trace:
        def progress(iteration: int, objective: float, violation: float) -> None:
            trace.write(f"iteration={iteration} dual_objective={objective!r} "
                        f"violation={violation!r}\n")

        bundle = train_pipeline(
            train_docs, vectorizer=VECTORIZER_TAGS[cfg["vectorizer"]],
            kernel=KERNEL_TAGS[cfg["kernel"]], cost=cfg["cost"], gamma=gamma,
            min_df=cfg["min_df"], cbow_params=cbow_params, solver=solver,
            stopwords=stopwords, provenance=provenance,
            workers=cfg["threads"], callback=progress)
        trace.write(f"wall_seconds={time.perf_counter() - started:.3f}\n")
    model_path = out_dir / "model.fnd"
    with _stage("save"):
        save_model(bundle, model_path)
    log.info("train: wall %.3fs, model %s",
             time.perf_counter() - started, model_path)
    print(model_path)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    threads = args.threads if args.threads is not None else 1
    if threads < 1:
        raise ValidationError(f"threads must be >= 1, got {threads}")
    out_dir = _out_dir(args)
    with _stage("load-model"):
        bundle = load_model(args.model)
    if args.vectorizer is not None:
        requested = VECTORIZER_TAGS.get(args.vectorizer)
        if requested is None:
            raise ValidationError(f"unknown vectorizer {args.vectorizer!r}")
        if requested != bundle.vectorizer_kind:
            raise PipelineError(
                f"model was trained in feature space {bundle.vectorizer_kind}, "
                f"but {requested} was requested")
    corpus, layout = _load_corpus(args)
    split_info = bundle.provenance.get("split")
    if not split_info:
        raise PipelineError("model provenance carries no split specification")
    spec = SplitSpec(test_fraction=float(split_info["test_fraction"]),
                     seed=int(split_info["seed"]))
    spec.validate()
    with _stage("split"):
        _, test_part = stratified_split(corpus, spec)
    with _stage("preprocess"):
        test_docs, summary = preprocess_corpus(test_part, bundle.stopwords,
                                               workers=threads)
    log.info("preprocess: kept %d, dropped %d empty",
             summary.kept, summary.dropped_empty)
    with _stage("evaluate"):
        report = evaluate_pipeline(bundle, test_docs)
    write_report_json(report, out_dir / "metrics.json")
    write_roc_tsv(report, out_dir / "roc.tsv")
    _echo_config(out_dir, "eval",
                 {"model": args.model, "data_layout": layout,
                  "threads": threads},
                 {"out": str(out_dir)})
    print(f"{bundle.vectorizer_kind}\t{bundle.kernel_kind}"
          f"\t{report.accuracy:.4f}\t{report.macro_precision:.4f}"
          f"\t{report.macro_recall:.4f}\t{report.macro_f1:.4f}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    with _stage("load-model"):
        bundle = load_model(args.model)
    texts: list[str] = list(args.text or [])
    if args.input:
        try:
            content = Path(args.input).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read input file: {exc}") from exc
        texts.extend(content.splitlines())
    if not texts:
        raise ValidationError("nothing to predict: pass --text or --input")
    with _stage("predict"):
        lines = predict_texts(bundle, texts)
    for line in lines:
        if line.flag != "-":
            log.warning("document produced no tokens; scored as empty vector")
        print(f"{line.label}\t{line.decision:.6f}\t{line.flag}")
    return 0


def cmd_tsne(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, _TSNE_DEFAULTS)
    if cfg["space"] not in VECTORIZER_TAGS:
        raise ValidationError(f"unknown feature space {cfg['space']!r}")
    if cfg["threads"] < 1:
        raise ValidationError(f"threads must be >= 1, got {cfg['threads']}")
    tsne_cfg = TsneConfig(out_dims=cfg["dims"], perplexity=cfg["perplexity"],
                          iterations=cfg["iterations"],
                          learning_rate=cfg["learning_rate"],
                          seed=cfg["seed"] + 2, subsample=cfg["subsample"])
    tsne_cfg.validate()
    cbow_params = _cbow_params(cfg, cfg["seed"] + 1)
    cbow_params.validate()
    out_dir = _out_dir(args)

    corpus, layout = _load_corpus(args)
    _echo_config(out_dir, "tsne", cfg,
                 {"data_layout": layout, "out": str(out_dir)})
    stopwords = load_stopwords()
    with _stage("preprocess"):
        docs, _ = preprocess_corpus(corpus, stopwords, workers=cfg["threads"])
    with _stage("vectorize"):
        # The projection is a view of the whole dataset, so the vectorizer
        # is fitted on everything it will draw.
        kind = VECTORIZER_TAGS[cfg["space"]]
        state = fit_feature_state(kind, docs, cfg["min_df"], cbow_params,
                                  workers=cfg["threads"])
        X = feature_matrix(kind, state, docs)
    with _stage("project"):
        embedding = tsne(X, [d.label for d in docs], tsne_cfg)
    out_path = out_dir / "tsne.tsv"
    write_embedding_tsv(embedding, out_path)
    log.info("project: %d points, final KL %.6f",
             embedding.coords.shape[0], embedding.final_kl)
    print(out_path)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, _SPLIT_DEFAULTS)
    spec = SplitSpec(test_fraction=cfg["test_fraction"], seed=cfg["seed"])
    spec.validate()
    out_dir = _out_dir(args)
    corpus, layout = _load_corpus(args)
    _echo_config(out_dir, "split", cfg,
                 {"data_layout": layout, "out": str(out_dir)})
    with _stage("split"):
        train_part, test_part = stratified_split(corpus, spec)

    def write_part(part: Corpus, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["text", "label"])
            for doc in part.documents:
                writer.writerow([f"{doc.title} {doc.body}".strip(),
                                 int(doc.label)])

    write_part(train_part, out_dir / "train.csv")
    write_part(test_part, out_dir / "test.csv")
    manifest = {
        "seed": spec.seed,
        "test_fraction": spec.test_fraction,
        "train": {str(int(k)): v for k, v in train_part.counts.items()},
        "test": {str(int(k)): v for k, v in test_part.counts.items()},
    }
    with open(out_dir / "split.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(out_dir / "split.json")
    return 0


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="single CSV with text,label columns")
    parser.add_argument("--data-real", help="CSV of real news articles")
    parser.add_argument("--data-fake", help="CSV of fake news articles")


def _add_cbow_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cbow-dim", type=int)
    parser.add_argument("--cbow-window", type=int)
    parser.add_argument("--cbow-negatives", type=int)
    parser.add_argument("--cbow-epochs", type=int)
    parser.add_argument("--cbow-lr", type=float)
    parser.add_argument("--cbow-min-count", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fnd", description="Fake news detection pipelines: "
        "BoW/TF-IDF/CBOW features with linear and RBF SVMs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    train = sub.add_parser("train", help="train a vectorizer+classifier bundle")
    _add_data_flags(train)
    train.add_argument("--vectorizer", choices=sorted(VECTORIZER_TAGS))
    train.add_argument("--kernel", choices=sorted(KERNEL_TAGS))
    train.add_argument("--cost", type=float)
    train.add_argument("--gamma", help="RBF width, a number or 'scale'")
    train.add_argument("--min-df", type=int)
    train.add_argument("--test-fraction", type=float)
    train.add_argument("--seed", type=int)
    train.add_argument("--tolerance", type=float)
    train.add_argument("--max-iter", type=int)
    _add_cbow_flags(train)
    train.add_argument("--threads", type=int)
    train.add_argument("--config", help="key=value config file")
    train.add_argument("--out", help="output directory (or env FND_OUT)")
    train.set_defaults(func=cmd_train)

    evalp = sub.add_parser("eval", help="evaluate a model on the held-out split")
    evalp.add_argument("--model", required=True)
    _add_data_flags(evalp)
    evalp.add_argument("--vectorizer", choices=sorted(VECTORIZER_TAGS),
                       help="guard: must match the model's feature space")
    evalp.add_argument("--threads", type=int)
    evalp.add_argument("--out", help="output directory (or env FND_OUT)")
    evalp.set_defaults(func=cmd_eval)

    predict = sub.add_parser("predict", help="classify raw text")
    predict.add_argument("--model", required=True)
    predict.add_argument("--text", action="append",
                         help="document text (repeatable)")
    predict.add_argument("--input", help="file with one document per line")
    predict.set_defaults(func=cmd_predict)

    tsnep = sub.add_parser("tsne", help="project the dataset to 2D/3D")
    _add_data_flags(tsnep)
    tsnep.add_argument("--space", choices=sorted(VECTORIZER_TAGS))
    tsnep.add_argument("--dims", type=int, choices=(2, 3))
    tsnep.add_argument("--perplexity", type=float)
    tsnep.add_argument("--iterations", type=int)
    tsnep.add_argument("--learning-rate", type=float)
    tsnep.add_argument("--subsample", type=int)
    tsnep.add_argument("--min-df", type=int)
    tsnep.add_argument("--seed", type=int)
    _add_cbow_flags(tsnep)
    tsnep.add_argument("--threads", type=int)
    tsnep.add_argument("--config", help="key=value config file")
    tsnep.add_argument("--out", help="output directory (or env FND_OUT)")
    tsnep.set_defaults(func=cmd_tsne)

    split = sub.add_parser("split", help="materialize a stratified split")
    _add_data_flags(split)
    split.add_argument("--test-fraction", type=float)
    split.add_argument("--seed", type=int)
    split.add_argument("--config", help="key=value config file")
    split.add_argument("--out", help="output directory (or env FND_OUT)")
    split.set_defaults(func=cmd_split)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, CalibrationError) as exc:
        log.error("[%s] %s", getattr(exc, "stage", "config"), exc)
        return 2
    except FndError as exc:
        log.error("[%s] %s", getattr(exc, "stage", "run"), exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
