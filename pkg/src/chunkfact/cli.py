"""Command-line entry point: ``chunkfact <command> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import run_baseline
from .config import BASELINE_KINDS, ConfigError, ExperimentConfig, load_config
from .corpus import LABELS, CorpusError, clean_account, load_corpus, write_corpus
from .evaluation import FeatureStore, atomic_write, config_hash, derive_seed, rows_tsv, stratified_kfold
from .experiments import ablation_suite, ablation_tsv, chunk_size_sweep, chunk_sweep_tsv, run_experiment, topk_sweep, topk_tsv
from .features import write_feature_tsv
from .lexicons import load_lexicon_set
from .seqnet import hyper_search, save_checkpoint, train
from .synthetic import SyntheticSpec, write_synthetic

log = logging.getLogger("chunkfact")

COMMANDS = ("ingest", "synth", "train", "evaluate", "ablate", "sweep-chunks", "sweep-topk", "baseline")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chunkfact", description="Account-level factuality classification from chunked timelines.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def command(name, help, config_required=True):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", required=config_required, help="experiment config (TOML)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    p = command("ingest", "load, clean and summarize a corpus", config_required=False)
    p.add_argument("--corpus", help="timeline file or directory (defaults to the config's corpus path)")
    p.add_argument("--features", action="store_true", help="also export per-tweet feature TSV (needs lexicons)")

    p = command("synth", "write a synthetic corpus with fixture lexicons and a config", config_required=False)
    p.add_argument("--accounts-per-class", type=int, default=10)
    p.add_argument("--tweets", type=int, default=400)
    p.add_argument("--strength", type=float, default=0.5)
    p.add_argument("--signal-groups", default="emotion,sentiment,morality,style,embeddings")

    command("train", "train the chunk model on the whole corpus and save a checkpoint")
    command("evaluate", "cross-validated evaluation of the chunk model")
    command("ablate", "feature-group ablation table")
    command("sweep-chunks", "chunk-size sweep")
    command("sweep-topk", "top-k replied/liked/retweeted sweep")
    p = command("baseline", "cross-validated baselines")
    p.add_argument("--kind", choices=BASELINE_KINDS + ("all",), default="all")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _corpus(cfg: ExperimentConfig, path=None):
    path = path or cfg.corpus
    if path is None:
        raise ConfigError("no corpus path given")
    accounts, unusable = [], []
    for a in load_corpus(path):
        try:
            accounts.append(clean_account(a))
        except CorpusError as exc:
            log.warning("%s", exc)
            unusable.append(a.handle)
    return accounts, unusable


def _lexicons(cfg: ExperimentConfig):
    if cfg.lexicons is None:
        raise ConfigError("config has no [lexicons] section")
    lx = cfg.lexicons
    return load_lexicon_set(lx.emotion, lx.sentiment, lx.morality, lx.embeddings)


def _setup(args):
    cfg = _load(args)
    accounts, unusable = _corpus(cfg)
    lexset = _lexicons(cfg)
    plan = stratified_kfold(accounts, cfg.folds, cfg.seed, cfg.validation_fraction)
    store = FeatureStore(accounts, lexset, cfg.features)
    return cfg, accounts, unusable, lexset, plan, store


def corpus_stats(accounts) -> list[tuple]:
    rows = []
    for lab in LABELS:
        ms = [a.m for a in accounts if a.label == lab]
        rows.append((lab.slug, len(ms), max(ms, default=0), min(ms, default=0),
                     float(np.mean(ms)) if ms else float("nan"), sum(ms)))
    return rows


def cmd_ingest(args, out: Path) -> dict:
    cfg = _load(args) if args.config else ExperimentConfig()
    accounts, unusable = _corpus(cfg, args.corpus)
    write_corpus(accounts, out / "corpus.clean.jsonl.tmp")
    (out / "corpus.clean.jsonl.tmp").replace(out / "corpus.clean.jsonl")
    atomic_write(out / "corpus_stats.tsv", rows_tsv(
        ["label", "accounts", "max_tweets", "min_tweets", "avg_tweets", "total_tweets"], corpus_stats(accounts)))
    if args.features:
        lexset = _lexicons(cfg)
        from .features import featurize_tweets

        tweets = [t for a in accounts for t in a.tweets]
        write_feature_tsv(out / "features.tsv.tmp", tweets, featurize_tweets(tweets, lexset, cfg.features), lexset, cfg.features)
        (out / "features.tsv.tmp").replace(out / "features.tsv")
    return {"accounts": len(accounts), "unusable_accounts": unusable, "config": cfg}


def cmd_synth(args, out: Path) -> dict:
    groups = tuple(g.strip() for g in args.signal_groups.split(",") if g.strip())
    spec = SyntheticSpec(
        accounts_per_class=args.accounts_per_class,
        tweets_per_account=args.tweets,
        strength=args.strength,
        seed=0 if args.seed is None else args.seed,
        signal_groups=groups,
    )
    paths = write_synthetic(spec, out)
    return {"files": {k: str(v) for k, v in paths.items()}, "config": None}


def cmd_train(args, out: Path) -> dict:
    cfg, accounts, unusable, lexset, _, store = _setup(args)
    from .evaluation import _stack

    rng = np.random.default_rng(derive_seed(cfg.seed, "train-split"))
    val = []
    for lab in LABELS:
        hs = [a.handle for a in accounts if a.label == lab]
        n = int(np.floor(cfg.validation_fraction * len(hs) + 0.5))
        n = min(max(n, 1), len(hs) - 1) if len(hs) >= 2 else 0
        val.extend(hs[i] for i in sorted(rng.permutation(len(hs))[:n]))
    fit = [a.handle for a in accounts if a.handle not in set(val)]
    X, y, _ = _stack(store, fit, cfg.features, cfg.chunk_size)
    Xv, yv, gv = _stack(store, val, cfg.features, cfg.chunk_size)
    model_cfg = replace(cfg.model, seed=derive_seed(cfg.seed, "train"))
    if cfg.search_budget:
        res = hyper_search(model_cfg, cfg.search_budget, (X, y), (Xv, yv, gv), derive_seed(cfg.seed, "search"),
                           trial_log=out / "trials.jsonl")
        model, model_cfg = res.model, res.config
    else:
        model = train(X, y, model_cfg, val=(Xv, yv) if len(Xv) else None)
    save_checkpoint(out / "model.json.tmp", model.params, model.stats, model_cfg)
    (out / "model.json.tmp").replace(out / "model.json")
    keys = ["epoch", "train_loss", "val_loss", "val_macro_f1"]
    atomic_write(out / "history.tsv", rows_tsv(keys, ([h.get(k, float("nan")) for k in keys] for h in model.history)))
    return {"validation_accounts": sorted(val), "unusable_accounts": unusable, "best_epoch": model.best_epoch, "config": cfg}


def cmd_evaluate(args, out: Path) -> dict:
    cfg, accounts, unusable, lexset, plan, store = _setup(args)
    trial_log = out / "trials.jsonl" if cfg.search_budget else None
    report = run_experiment(accounts, lexset, cfg, plan, store, trial_log=trial_log)
    report.metadata["unusable_accounts"] = unusable
    report.write(out)
    atomic_write(out / "folds.json", json.dumps(plan.to_dict(), indent=2, sort_keys=True) + "\n")
    return {"macro_f1": report.macro_f1, "accuracy": report.accuracy, "config": cfg}


def cmd_ablate(args, out: Path) -> dict:
    cfg, accounts, _, lexset, plan, store = _setup(args)
    rows = ablation_suite(accounts, lexset, cfg, plan, store, jobs=args.jobs)
    atomic_write(out / "ablation.tsv", ablation_tsv(rows))
    return {"rows": len(rows), "config": cfg}


def cmd_sweep_chunks(args, out: Path) -> dict:
    cfg, accounts, _, lexset, plan, store = _setup(args)
    rows = chunk_size_sweep(accounts, lexset, cfg, plan, cfg.chunk_sizes, store, jobs=args.jobs)
    atomic_write(out / "chunk_sweep.tsv", chunk_sweep_tsv(rows))
    return {"rows": len(rows), "config": cfg}


def cmd_sweep_topk(args, out: Path) -> dict:
    cfg, accounts, _, lexset, plan, store = _setup(args)
    rows = topk_sweep(accounts, lexset, cfg, plan, cfg.topk_metrics, cfg.topk_values, store, jobs=args.jobs)
    atomic_write(out / "topk_sweep.tsv", topk_tsv(rows))
    return {"rows": len(rows), "config": cfg}


def cmd_baseline(args, out: Path) -> dict:
    cfg, accounts, _, lexset, plan, store = _setup(args)
    kinds = cfg.baselines if args.kind == "all" else (args.kind,)
    rows = []
    for kind in kinds:
        report = run_baseline(kind, accounts, lexset, cfg, plan, store)
        report.write(out, f"baseline_{kind}")
        rows.append((kind, report.accuracy, report.macro_f1))
    atomic_write(out / "baselines.tsv", rows_tsv(["kind", "accuracy", "macro_f1"], rows))
    return {"kinds": list(kinds), "config": cfg}


HANDLERS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "sweep-chunks": cmd_sweep_chunks,
    "sweep-topk": cmd_sweep_topk,
    "baseline": cmd_baseline,
}


def _manifest(args, argv, info: dict, started: datetime) -> dict:
    cfg = info.pop("config", None)
    return {
        "command": args.command,
        "argv": list(argv),
        "seed": cfg.seed if cfg is not None else args.seed,
        "config_path": args.config,
        "config_hash": config_hash(cfg.to_dict()) if cfg is not None else None,
        "config": cfg.to_dict() if cfg is not None else None,
        "versions": {
            "chunkfact": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "started_at": started.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "result": info,
    }


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.jobs < 1:
            raise UsageError(f"{parser.prog}: error: --jobs must be >= 1")
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = datetime.now(timezone.utc)
    out = Path(args.out)
    try:
        if args.config and not Path(args.config).is_file():
            raise FileNotFoundError(f"config file not found: {args.config}")
        out.mkdir(parents=True, exist_ok=True)
        info = HANDLERS[args.command](args, out)
        atomic_write(out / "manifest.json",
                     json.dumps(_manifest(args, argv, info, started), indent=2, sort_keys=True, default=str) + "\n")
    except ConfigError as exc:
        print(f"chunkfact {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # surfaced verbatim, exit 2
        print(f"chunkfact {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 2
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
