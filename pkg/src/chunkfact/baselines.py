"""Comparison systems: trivial predictors, bag-of-words LR, feature LR and tweet-level recurrent model."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import N_CLASSES, Account, select_top_k
from .evaluation import (
    EvalReport,
    ExperimentError,
    FeatureStore,
    FoldPlan,
    FoldResult,
    config_hash,
    confusion_matrix,
    derive_seed,
    seqnet_fold,
)
from .features import tokenize
from .lexicons import LexiconSet
from .seqnet import Standardizer, majority_vote, softmax


@dataclass(frozen=True)
class BowVocabulary:
    index: Mapping[str, int]
    min_df: int = 2

    def __len__(self):
        return len(self.index)


def bow_tokens(text: str) -> list[str]:
    return [t.text.lower() for t in tokenize(text) if t.kind != "url"]


def build_vocabulary(accounts: Sequence[Account], min_df: int = 2) -> BowVocabulary:
    """Vocabulary of tokens that occur in at least ``min_df`` tweets (a tweet is one document)."""
    df = Counter()
    for a in accounts:
        for t in a.tweets:
            df.update(set(bow_tokens(t.text)))
    words = sorted(w for w, n in df.items() if n >= min_df)
    return BowVocabulary({w: i for i, w in enumerate(words)}, min_df)


def bow_vectorize(account: Account, vocab: BowVocabulary) -> np.ndarray:
    out = np.zeros(len(vocab))
    for t in account.tweets:
        for tok in bow_tokens(t.text):
            i = vocab.index.get(tok)
            if i is not None:
                out[i] += 1.0
    return out


# -- multinomial logistic regression -----------------------------------------

@dataclass
class LinearModel:
    weights: np.ndarray  # (C, V)
    bias: np.ndarray     # (C,)
    l2: float = 0.0
    iterations: int = 0
    grad_norm: float = float("nan")
    losses: tuple[float, ...] = ()


def lr_objective(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` (bias unpenalized), with gradients."""
    Z = X @ W.T + b
    Z -= Z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(Z).sum(axis=1, keepdims=True))
    logp = Z - logsum
    n = len(X)
    loss = -(Y * logp).sum() / n + 0.5 * l2 * float((W * W).sum())
    R = (np.exp(logp) - Y) / n
    return loss, R.T @ X + l2 * W, R.sum(axis=0)


def _loss_only(W, b, X, Y, l2):
    Z = X @ W.T + b
    Z -= Z.max(axis=1, keepdims=True)
    logp = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
    return -(Y * logp).sum() / len(X) + 0.5 * l2 * float((W * W).sum())


def lr_train(X, y, l2: float = 1e-2, seed: int = 0, tol: float = 1e-6, max_iter: int = 5000,
             n_classes: int = N_CLASSES) -> LinearModel:
    """Full-batch gradient descent with backtracking (Armijo) line search.

    Starts from zero weights, so the fit is deterministic; ``seed`` is
    accepted for interface symmetry only.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y) or len(X) == 0:
        raise ValueError("expected X of shape (n, V) with n labels")
    if len(np.unique(y)) < 2:
        raise ValueError("logistic regression needs at least two classes")
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    Y = np.eye(n_classes)[y]
    W = np.zeros((n_classes, X.shape[1]))
    b = np.zeros(n_classes)
    step = 1.0
    loss, gW, gb = lr_objective(W, b, X, Y, l2)
    losses = [loss]
    gnorm = math.sqrt(float((gW * gW).sum() + (gb * gb).sum()))
    it = 0
    while it < max_iter and gnorm > tol:
        it += 1
        step = min(step * 2.0, 1e6)
        sq = gnorm * gnorm
        while True:
            W_new, b_new = W - step * gW, b - step * gb
            new = _loss_only(W_new, b_new, X, Y, l2)
            if new <= loss - 0.5 * step * sq or step < 1e-12:
                break
            step *= 0.5
        if new > loss:
            break
        W, b = W_new, b_new
        loss, gW, gb = lr_objective(W, b, X, Y, l2)
        losses.append(loss)
        gnorm = math.sqrt(float((gW * gW).sum() + (gb * gb).sum()))
    return LinearModel(W, b, l2, it, gnorm, tuple(losses))


def lr_predict_proba(model: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None]
    if X.shape[1] != model.weights.shape[1]:
        raise ValueError(f"input dimension {X.shape[1]} does not match model dimension {model.weights.shape[1]}")
    return softmax(X @ model.weights.T + model.bias)


def lr_predict(model: LinearModel, x) -> tuple[int, np.ndarray]:
    p = lr_predict_proba(model, x)[0]
    return int(np.argmax(p)), p


# -- fold runners ------------------------------------------------------------

def _aggregate(probas: np.ndarray, how: str) -> int:
    if how == "mean_prob":
        return int(np.argmax(probas.mean(axis=0)))
    return majority_vote(probas)


def _fold_result(fold, scored, truth, preds, excluded=()) -> FoldResult:
    return FoldResult(fold, confusion_matrix(truth, preds), list(zip(scored, truth, preds)), list(excluded))


def _fit_lr(X, y, cfg, seed):
    stats = Standardizer.fit(X[:, None, :])
    return stats, lr_train(stats(X), y, l2=cfg.l2, seed=seed)


def _majority_fold(accounts, plan, fold, cfg):
    train = [accounts[h].label for h in plan.train_handles(fold)]
    counts = np.bincount([int(l) for l in train], minlength=N_CLASSES)
    cls = int(np.argmax(counts))
    test = plan.test_handles(fold)
    truth = [int(accounts[h].label) for h in test]
    return _fold_result(fold, test, truth, [cls] * len(test))


def _random_fold(accounts, plan, fold, cfg):
    rng = np.random.default_rng(derive_seed(cfg.seed, "random", fold))
    test = plan.test_handles(fold)
    truth = [int(accounts[h].label) for h in test]
    return _fold_result(fold, test, truth, [int(v) for v in rng.integers(0, N_CLASSES, len(test))])


def _bow_fold(accounts, plan, fold, cfg):
    train = [accounts[h] for h in plan.train_handles(fold)]
    vocab = build_vocabulary(train, cfg.bow_min_df)
    if len(vocab) == 0:
        raise ExperimentError(f"fold {fold}: empty bag-of-words vocabulary")
    X = np.stack([bow_vectorize(a, vocab) for a in train])
    y = np.array([int(a.label) for a in train])
    stats, model = _fit_lr(X, y, cfg, derive_seed(cfg.seed, "bow", fold))
    test = plan.test_handles(fold)
    Xt = np.stack([bow_vectorize(accounts[h], vocab) for h in test])
    preds = [int(v) for v in lr_predict_proba(model, stats(Xt)).argmax(axis=1)]
    return _fold_result(fold, test, [int(accounts[h].label) for h in test], preds)


def _tweet_rows(store: FeatureStore, handle: str, topk: tuple[str, int] | None):
    if topk is None:
        return None
    rows = store.rows[handle]
    return [rows[t.id] for t in select_top_k(store.accounts[handle], topk[0], topk[1])]


def _lr_tweet_fold(store, plan, fold, cfg, topk=None):
    fc = cfg.features
    train = plan.train_handles(fold)
    X = np.concatenate([store.tweets(h, fc, _tweet_rows(store, h, topk)) for h in train])
    y = np.concatenate([[int(store.accounts[h].label)] * len(store.tweets(h, fc, _tweet_rows(store, h, topk))) for h in train])
    stats, model = _fit_lr(X, y.astype(np.int64), cfg, derive_seed(cfg.seed, "lr_tweet", fold))
    test = plan.test_handles(fold)
    preds = [_aggregate(lr_predict_proba(model, stats(store.tweets(h, fc, _tweet_rows(store, h, topk)))),
                        cfg.tweet_aggregation) for h in test]
    return _fold_result(fold, test, [int(store.accounts[h].label) for h in test], preds)


def _lr_chunk_fold(store, plan, fold, cfg, feature_cfg=None):
    fc = feature_cfg or cfg.features
    s = cfg.chunk_size

    def flat(h):
        ck = store.chunks(h, fc, s)
        return ck.reshape(len(ck), -1)

    train = [h for h in plan.train_handles(fold) if len(store.chunks(h, fc, s))]
    test = plan.test_handles(fold)
    scored = [h for h in test if len(store.chunks(h, fc, s))]
    excluded = sorted(set(test) - set(scored))
    if not scored:
        return FoldResult(fold, np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64), [], excluded)
    if len({store.accounts[h].label for h in train}) < 2:
        raise ExperimentError(f"fold {fold}: fewer than two classes have chunks in training")
    X = np.concatenate([flat(h) for h in train])
    y = np.concatenate([[int(store.accounts[h].label)] * len(flat(h)) for h in train]).astype(np.int64)
    stats, model = _fit_lr(X, y, cfg, derive_seed(cfg.seed, "lr_chunk", fold))
    preds = [majority_vote(lr_predict_proba(model, stats(flat(h)))) for h in scored]
    return _fold_result(fold, scored, [int(store.accounts[h].label) for h in scored], preds, excluded)


def run_baseline(kind: str, corpus: Sequence[Account], lexset: LexiconSet | None, cfg, folds: FoldPlan,
                 store: FeatureStore | None = None) -> EvalReport:
    """Cross-validated report for one baseline ``kind`` (see ``config.BASELINE_KINDS``)."""
    from .config import BASELINE_KINDS

    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
    accounts = {a.handle: a for a in corpus}
    needs_features = kind in ("lr_tweet", "lr_tweet_topk", "factweet_tweet", "lr_chunk")
    if needs_features and store is None:
        if lexset is None:
            raise ValueError(f"baseline {kind!r} needs lexicons")
        store = FeatureStore(corpus, lexset, cfg.features)
    results = []
    for fold in range(folds.k):
        if kind == "majority":
            results.append(_majority_fold(accounts, folds, fold, cfg))
        elif kind == "random":
            results.append(_random_fold(accounts, folds, fold, cfg))
        elif kind == "bow_lr":
            results.append(_bow_fold(accounts, folds, fold, cfg))
        elif kind == "lr_tweet":
            results.append(_lr_tweet_fold(store, folds, fold, cfg))
        elif kind == "lr_tweet_topk":
            results.append(_lr_tweet_fold(store, folds, fold, cfg, (cfg.topk_metric, cfg.topk_k)))
        elif kind == "factweet_tweet":
            results.append(seqnet_fold(store, folds, fold, cfg.features, cfg.model, 1,
                                       derive_seed(cfg.seed, "factweet_tweet"), cfg.search_budget))
        else:
            results.append(_lr_chunk_fold(store, folds, fold, cfg))
    meta = {
        "kind": kind,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg.to_dict()),
        "folds": folds.k,
    }
    if kind == "lr_tweet_topk":
        meta["topk"] = {"metric": cfg.topk_metric, "k": cfg.topk_k}
    if kind == "lr_chunk":
        meta["chunk_size"] = cfg.chunk_size
        meta["input_dim"] = cfg.chunk_size * store.tweets(next(iter(accounts)), cfg.features).shape[1]
    if needs_features:
        meta["sentiment_order"] = store.lexset.sentiment_order
        meta["feature_groups"] = list(cfg.features.enabled_groups)
        meta["normalize_counts"] = cfg.features.normalize_counts
    if kind in ("lr_chunk",):
        meta.update(store.chunk_metadata(cfg.chunk_size))
    return EvalReport(kind, results, meta, cfg.aggregate)
