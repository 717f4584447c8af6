"""Cross-validated runs of the chunk model, ablations and sweeps."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import partial
from typing import Sequence

from .baselines import _lr_chunk_fold, run_baseline
from .corpus import Account
from .evaluation import (
    EvalReport,
    FeatureStore,
    FoldPlan,
    config_hash,
    derive_seed,
    rows_tsv,
    seqnet_fold,
)
from .features import GROUPS, FeatureConfig, feature_dim
from .lexicons import LexiconSet

log = logging.getLogger(__name__)

ABLATION_LABELS = {
    "emotion": "- Emotion",
    "sentiment": "- Sentiment",
    "morality": "- Morality",
    "style": "- Style",
    "embeddings": "- Words embeddings",
}


def _store(corpus, lexset, cfg, store):
    if store is not None:
        return store
    return FeatureStore(corpus, lexset, cfg.features)


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_experiment(corpus: Sequence[Account], lexset: LexiconSet, cfg, plan: FoldPlan,
                   store: FeatureStore | None = None, trial_log=None) -> EvalReport:
    """Chunk-level recurrent model under the account-level fold plan.

    Each fold trains on its training accounts minus the validation subset,
    selects on validation and labels test accounts by chunk majority vote.
    Accounts too short for one chunk are excluded and listed.
    """
    store = _store(corpus, lexset, cfg, store)
    seed = derive_seed(cfg.seed, "factweet")
    folds = [
        seqnet_fold(store, plan, f, cfg.features, cfg.model, cfg.chunk_size, seed, cfg.search_budget, trial_log)
        for f in range(plan.k)
    ]
    meta = {
        "kind": "factweet",
        "seed": cfg.seed,
        "config_hash": config_hash(cfg.to_dict()),
        "chunk_size": cfg.chunk_size,
        "input_dim": feature_dim(lexset, cfg.features),
        "feature_groups": list(cfg.features.enabled_groups),
        "normalize_counts": cfg.features.normalize_counts,
        "sentiment_order": lexset.sentiment_order,
        "search_budget": cfg.search_budget,
        "folds": plan.k,
        **store.chunk_metadata(cfg.chunk_size),
    }
    return EvalReport("factweet", folds, meta, cfg.aggregate)


def ablation_suite(corpus: Sequence[Account], lexset: LexiconSet, cfg, plan: FoldPlan,
                   store: FeatureStore | None = None, jobs: int = 1) -> list[tuple[str, float, float]]:
    """Rows ``(setting, accuracy, macro_f1)``: all features, then each group removed."""
    if set(cfg.features.enabled_groups) != set(GROUPS):
        raise ValueError("the ablation base config must enable every feature group")
    store = _store(corpus, lexset, cfg, store)
    settings = [("All", cfg.features)] + [(ABLATION_LABELS[g], cfg.features.without(g)) for g in GROUPS]
    scores = _map(partial(_ablation_row, corpus, lexset, cfg, plan, store), settings, jobs)
    return [(name, acc, f1) for (name, _), (acc, f1) in zip(settings, scores)]


def _ablation_row(corpus, lexset, cfg, plan, store, setting):
    name, fc = setting
    sub = replace(cfg, features=fc)
    if cfg.ablation_model == "lr_chunk":
        folds = [_lr_chunk_fold(store, plan, f, sub, fc) for f in range(plan.k)]
        report = EvalReport("lr_chunk", folds, {}, cfg.aggregate)
    else:
        report = run_experiment(corpus, lexset, sub, plan, store)
    log.info("ablation %s: acc=%.3f f1=%.3f", name, report.accuracy, report.macro_f1)
    return report.accuracy, report.macro_f1


def chunk_size_sweep(corpus: Sequence[Account], lexset: LexiconSet, cfg, plan: FoldPlan, sizes: Sequence[int],
                     store: FeatureStore | None = None, jobs: int = 1) -> list[tuple[int, float, float]]:
    """Rows ``(chunk_size, accuracy, macro_f1)`` in the order given."""
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("sizes must be non-empty and >= 1")
    store = _store(corpus, lexset, cfg, store)
    scores = _map(partial(_sweep_point, corpus, lexset, cfg, plan, store), list(sizes), jobs)
    return [(s, acc, f1) for s, (acc, f1) in zip(sizes, scores)]


def _sweep_point(corpus, lexset, cfg, plan, store, size):
    report = run_experiment(corpus, lexset, replace(cfg, chunk_size=size), plan, store)
    return report.accuracy, report.macro_f1


def topk_sweep(corpus: Sequence[Account], lexset: LexiconSet, cfg, plan: FoldPlan, metrics: Sequence[str],
               ks: Sequence[int], store: FeatureStore | None = None, jobs: int = 1) -> list[tuple[str, int, float, float]]:
    """Rows ``(metric, k, accuracy, macro_f1)`` of the top-k tweet-level LR baseline."""
    if any(k < 1 for k in ks):
        raise ValueError("k values must be >= 1")
    store = _store(corpus, lexset, cfg, store)
    cells = [(metric, k) for metric in metrics for k in ks]
    scores = _map(partial(_topk_cell, corpus, lexset, cfg, plan, store), cells, jobs)
    return [(metric, k, acc, f1) for (metric, k), (acc, f1) in zip(cells, scores)]


def _topk_cell(corpus, lexset, cfg, plan, store, cell):
    metric, k = cell
    report = run_baseline("lr_tweet_topk", corpus, lexset, replace(cfg, topk_metric=metric, topk_k=k), plan, store)
    return report.accuracy, report.macro_f1


def ablation_tsv(rows) -> str:
    return rows_tsv(["setting", "accuracy", "macro_f1"], rows)


def chunk_sweep_tsv(rows) -> str:
    return rows_tsv(["chunk_size", "accuracy", "macro_f1"], rows)


def topk_tsv(rows) -> str:
    return rows_tsv(["metric", "k", "accuracy", "macro_f1"], rows)
