"""Command-line harness: split, train, predict, evaluate, and end-to-end
experiment runs driven by a JSON config file.

Run layout: ``<out>/<name>/`` holds ``split-<lang>.json``, ``model.json``,
``train_log.json``, ``predictions.jsonl``, ``report.json`` and a
``manifest.json`` of sha256 content hashes. Every command is deterministic
given its config and inputs; logs go to stderr, artifacts to files.

Exit codes: 0 success, 1 internal failure, 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import traceback
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus, metrics, strategies
from .embedding import load_store
from .errors import InputError

log = logging.getLogger("esgclassify")

_STORE_KEYS = ("article", "label", "token")


@dataclass
class RunConfig:
    name: str
    catalog_path: Path
    corpora_paths: dict[str, Path]
    store_paths: dict[str, Path]
    strategy: strategies.StrategyKind
    composition: list[str]
    eval_language: str
    k: int = 1
    alpha: float = 0.7
    train_fraction: float = 0.7
    seed_split: int = 7
    seed_train: int = 11
    include_dev: bool = False
    run_dir: Path = Path("runs/run")
    hyper: dict = field(default_factory=dict)

    def strategy_config(self) -> strategies.StrategyConfig:
        cfg = strategies.StrategyConfig(alpha=self.alpha)
        for key, value in self.hyper.items():
            if not hasattr(cfg, key):
                raise InputError(f"unknown hyperparameter {key!r}")
            setattr(cfg, key, type(getattr(cfg, key))(value))
        return cfg

    def echo(self) -> dict:
        return {
            "name": self.name,
            "catalog": str(self.catalog_path),
            "corpora": {lang: str(p) for lang, p in sorted(self.corpora_paths.items())},
            "stores": {kind: str(p) for kind, p in sorted(self.store_paths.items())},
            "strategy": self.strategy.value,
            "composition": list(self.composition),
            "eval_language": self.eval_language,
            "k": self.k,
            "alpha": self.alpha,
            "train_fraction": self.train_fraction,
            "seeds": {"split": self.seed_split, "train": self.seed_train},
            "include_dev": self.include_dev,
            "hyperparameters": dict(sorted(self.hyper.items())),
        }


def load_config(path: str, overrides: argparse.Namespace) -> RunConfig:
    config_path = Path(path)
    try:
        doc = json.loads(config_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: config is not valid JSON ({exc})")
    base = config_path.resolve().parent

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base / q

    try:
        corpora = {corpus.normalize_language(lang): resolve(p)
                   for lang, p in doc["corpora"].items()}
        composition = doc.get("composition", {})
        languages = [corpus.normalize_language(t)
                     for t in composition.get("languages", list(corpora))]
        seeds = doc.get("seeds", {})
        cfg = RunConfig(
            name=doc.get("name", "run"),
            catalog_path=resolve(doc["catalog"]),
            corpora_paths=corpora,
            store_paths={k: resolve(p) for k, p in doc.get("stores", {}).items()
                         if k in _STORE_KEYS},
            strategy=strategies.parse_strategy(doc.get("strategy", "svm-ee")),
            composition=languages,
            eval_language=corpus.normalize_language(
                doc.get("eval_language", languages[0])),
            k=int(doc.get("k", 1)),
            alpha=float(doc.get("alpha", 0.7)),
            train_fraction=float(doc.get("train_fraction", 0.7)),
            seed_split=int(seeds.get("split", 7)),
            seed_train=int(seeds.get("train", 11)),
            include_dev=bool(doc.get("include_dev", False)),
            hyper=dict(doc.get("hyperparameters", {})),
        )
        cfg.run_dir = resolve(doc.get("out_dir", "runs")) / cfg.name
    except KeyError as exc:
        raise InputError(f"{path}: config is missing field {exc}")

    if getattr(overrides, "strategy", None):
        cfg.strategy = strategies.parse_strategy(overrides.strategy)
    if getattr(overrides, "k", None) is not None:
        cfg.k = overrides.k
    if getattr(overrides, "alpha", None) is not None:
        cfg.alpha = overrides.alpha
    if getattr(overrides, "seed_split", None) is not None:
        cfg.seed_split = overrides.seed_split
    if getattr(overrides, "seed_train", None) is not None:
        cfg.seed_train = overrides.seed_train
    if getattr(overrides, "include_dev", False):
        cfg.include_dev = True
    if getattr(overrides, "languages", None):
        cfg.composition = [corpus.normalize_language(t)
                           for t in overrides.languages.split(",") if t.strip()]
    if getattr(overrides, "out", None):
        cfg.run_dir = Path(overrides.out)

    if cfg.k < 1:
        raise InputError(f"k must be >= 1, got {cfg.k}")
    missing = [t for t in cfg.composition if t not in cfg.corpora_paths]
    if missing:
        raise InputError(f"composition languages without corpora: {missing}")
    if cfg.eval_language not in cfg.corpora_paths:
        raise InputError(f"eval language {cfg.eval_language!r} has no corpus")
    return cfg


@contextmanager
def _run_lock(run_dir: Path):
    lock = run_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise InputError(f"run directory is locked by another process: {lock}")
    try:
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _split_path(cfg: RunConfig, lang: str) -> Path:
    return cfg.run_dir / f"split-{lang}.json"


def _load_language(cfg: RunConfig, catalog, lang: str):
    path = cfg.corpora_paths[lang]
    if not path.exists():
        raise InputError(f"corpus file not found: {path}")
    return corpus.load_corpus(path, catalog)


def _load_stores(cfg: RunConfig, kinds) -> dict:
    stores = {}
    for kind in kinds:
        if kind not in cfg.store_paths:
            raise InputError(f"config has no {kind!r} store path")
        path = cfg.store_paths[kind]
        if not path.exists():
            raise InputError(f"store file not found: {path}")
        stores[kind] = load_store(path)
    return stores


def _required_store_kinds(kind: strategies.StrategyKind) -> tuple[str, ...]:
    return {
        strategies.StrategyKind.SVM_EE: ("article", "label"),
        strategies.StrategyKind.FFN: ("article",),
        strategies.StrategyKind.FFN_EE: ("article", "label"),
        strategies.StrategyKind.CNN_SVM: ("token",),
    }[kind]


# ---------------------------------------------------------------------------
# Subcommands


def cmd_split(cfg: RunConfig) -> None:
    catalog = corpus.load_catalog(cfg.catalog_path)
    cfg.run_dir.mkdir(parents=True, exist_ok=True)
    for lang in sorted(cfg.corpora_paths):
        articles = _load_language(cfg, catalog, lang)
        split = corpus.stratified_split(articles, cfg.train_fraction, cfg.seed_split)
        corpus.save_split(split, _split_path(cfg, lang))
        log.info("split %s: %d train / %d dev -> %s", lang,
                 len(split.train_ids), len(split.dev_ids), _split_path(cfg, lang))


def _composed_training_set(cfg: RunConfig, catalog):
    per_language = {}
    for lang in cfg.composition:
        articles = _load_language(cfg, catalog, lang)
        split_file = _split_path(cfg, lang)
        if not split_file.exists():
            raise InputError(f"missing split file {split_file}; run 'split' first")
        split = corpus.load_split(split_file)
        train, dev = corpus.split_articles(articles, split)
        per_language[lang] = train + dev if cfg.include_dev else train
    return corpus.compose_training_set(per_language, cfg.composition)


def cmd_train(cfg: RunConfig) -> None:
    catalog = corpus.load_catalog(cfg.catalog_path)
    cfg.run_dir.mkdir(parents=True, exist_ok=True)
    train_articles = _composed_training_set(cfg, catalog)
    stores = _load_stores(cfg, _required_store_kinds(cfg.strategy))
    model = strategies.train_strategy(
        cfg.strategy, train_articles, catalog, cfg.strategy_config(),
        article_store=stores.get("article"), label_store=stores.get("label"),
        token_store=stores.get("token"), seed=cfg.seed_train)
    strategies.save_model(model, cfg.run_dir / "model.json", config_echo=cfg.echo())
    train_log = {"config_echo": cfg.echo(), "n_train": len(train_articles),
                 "log": model.training_log}
    (cfg.run_dir / "train_log.json").write_text(
        json.dumps(train_log, sort_keys=True) + "\n", encoding="utf-8")
    log.info("trained %s on %d articles -> %s", cfg.strategy.value,
             len(train_articles), cfg.run_dir / "model.json")


def _prediction_articles(cfg: RunConfig, catalog, articles_path: str | None):
    if articles_path:
        path = Path(articles_path)
        if not path.exists():
            raise InputError(f"articles file not found: {path}")
        return corpus.load_corpus(path, catalog)
    articles = _load_language(cfg, catalog, cfg.eval_language)
    split_file = _split_path(cfg, cfg.eval_language)
    if not split_file.exists():
        raise InputError(f"missing split file {split_file}; run 'split' first")
    split = corpus.load_split(split_file)
    _, dev = corpus.split_articles(articles, split)
    return dev


def cmd_predict(cfg: RunConfig, model_path: str | None = None,
                articles_path: str | None = None) -> None:
    catalog = corpus.load_catalog(cfg.catalog_path)
    path = Path(model_path) if model_path else cfg.run_dir / "model.json"
    if not path.exists():
        raise InputError(f"model file not found: {path}")
    model = strategies.load_model(path)
    articles = _prediction_articles(cfg, catalog, articles_path)
    stores = _load_stores(cfg, _required_store_kinds(model.kind))
    preds = strategies.predict_many(
        model, articles, cfg.k, article_store=stores.get("article"),
        label_store=stores.get("label"), token_store=stores.get("token"))
    cfg.run_dir.mkdir(parents=True, exist_ok=True)
    strategies.save_predictions(preds, cfg.run_dir / "predictions.jsonl")
    log.info("predicted %d articles at k=%d -> %s", len(preds), cfg.k,
             cfg.run_dir / "predictions.jsonl")


def cmd_evaluate(cfg: RunConfig, predictions_path: str | None = None) -> None:
    catalog = corpus.load_catalog(cfg.catalog_path)
    path = Path(predictions_path) if predictions_path else cfg.run_dir / "predictions.jsonl"
    if not path.exists():
        raise InputError(f"predictions file not found: {path}")
    preds = strategies.load_predictions(path)
    gold = metrics.gold_map(_load_language(cfg, catalog, cfg.eval_language))
    report = metrics.evaluate_predictions(preds, gold, catalog)
    doc = metrics.report_to_dict(report)
    doc["config_echo"] = cfg.echo()
    (cfg.run_dir / "report.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    log.info("evaluated %d predictions: accuracy=%.4f microF1=%.4f macroF1=%.4f "
             "weightedF1=%.4f", report.n_articles, report.accuracy,
             report.micro_f1, report.macro_f1, report.weighted_f1)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def cmd_experiment(cfg: RunConfig) -> None:
    cfg.run_dir.mkdir(parents=True, exist_ok=True)
    with _run_lock(cfg.run_dir):
        cmd_split(cfg)
        cmd_train(cfg)
        cmd_predict(cfg)
        cmd_evaluate(cfg)
        files = sorted(p.name for p in cfg.run_dir.iterdir()
                       if p.is_file() and p.name not in ("manifest.json", ".lock"))
        manifest = {"name": cfg.name, "config": cfg.echo(),
                    "files": {name: _sha256(cfg.run_dir / name) for name in files}}
        (cfg.run_dir / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    log.info("experiment %s complete -> %s", cfg.name, cfg.run_dir / "manifest.json")


# ---------------------------------------------------------------------------
# Entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esgclassify",
        description="Multi-strategy ESG issue classification harness")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("split", "write stratified train/dev splits"),
                            ("train", "train the configured strategy"),
                            ("predict", "rank labels and emit top-k"),
                            ("evaluate", "score predictions against gold"),
                            ("experiment", "split + train + predict + evaluate")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--strategy", help="override the configured strategy")
        p.add_argument("--k", type=int, help="labels emitted per article")
        p.add_argument("--alpha", type=float, help="svm-ee fusion weight")
        p.add_argument("--seed-split", dest="seed_split", type=int)
        p.add_argument("--seed-train", dest="seed_train", type=int)
        p.add_argument("--include-dev", dest="include_dev", action="store_true",
                       help="train on train+dev (final-training mode)")
        p.add_argument("--languages", help="comma-separated composition override")
        p.add_argument("--out", help="run directory override")
        if name == "predict":
            p.add_argument("--model", help="model file (default: run dir model.json)")
            p.add_argument("--articles", help="corpus file to predict "
                           "(default: eval-language dev split)")
        if name == "evaluate":
            p.add_argument("--predictions",
                           help="predictions file (default: run dir predictions.jsonl)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        if args.command == "split":
            cmd_split(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "predict":
            cmd_predict(cfg, model_path=args.model, articles_path=args.articles)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, predictions_path=args.predictions)
        elif args.command == "experiment":
            cmd_experiment(cfg)
        return 0
    except (InputError, OSError) as exc:
        log.error("%s", exc)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


def entry() -> None:
    raise SystemExit(main())
