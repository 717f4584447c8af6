"""Metrics, account-level fold plans, evaluation reports and the shared feature store."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from fractions import Fraction
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import LABELS, N_CLASSES, Account, chunk_accounts, sorted_timeline
from .features import FeatureConfig, column_index, featurize_tweets
from .lexicons import LexiconSet


class ExperimentError(RuntimeError):
    pass


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary printable parts."""
    digest = hashlib.sha256("/".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


# -- metrics -----------------------------------------------------------------

def confusion_matrix(y_true: Iterable[int], y_pred: Iterable[int], n_classes: int = N_CLASSES) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[int(t), int(p)] += 1
    return cm


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    macro_f1: float
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]


def metrics(confusion) -> Metrics:
    """Accuracy, macro-F1 and per-class scores from a (true x predicted) matrix.

    Any 0/0 precision, recall or F1 counts as 0.
    """
    cm = np.asarray(confusion)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError("confusion matrix must be square")
    if np.any(cm < 0):
        raise ValueError("confusion matrix entries must be non-negative")
    total = int(cm.sum())
    if total == 0:
        raise ValueError("confusion matrix is all zeros")
    tp = np.diag(cm).astype(int)
    rows = cm.sum(axis=1).astype(int)
    cols = cm.sum(axis=0).astype(int)
    precision = tuple(int(t) / int(c) if c else 0.0 for t, c in zip(tp, cols))
    recall = tuple(int(t) / int(r) if r else 0.0 for t, r in zip(tp, rows))
    exact = [Fraction(2 * int(t), int(r + c)) if t else Fraction(0) for t, r, c in zip(tp, rows, cols)]
    # exact average so the macro score does not depend on summation order
    return Metrics(int(tp.sum()) / total, float(sum(exact) / len(exact)), precision, recall,
                   tuple(float(f) for f in exact))


# -- fold plans --------------------------------------------------------------

def _half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass
class FoldPlan:
    k: int
    assignments: dict[str, int]
    validation: list[list[str]]
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    def test_handles(self, fold: int) -> list[str]:
        return [h for h, f in self.assignments.items() if f == fold]

    def train_handles(self, fold: int) -> list[str]:
        return [h for h, f in self.assignments.items() if f != fold]

    def fit_handles(self, fold: int) -> list[str]:
        val = set(self.validation[fold])
        return [h for h in self.train_handles(fold) if h not in val]

    def to_dict(self) -> dict:
        return {"k": self.k, "seed": self.seed, "assignments": dict(sorted(self.assignments.items())),
                "validation": [sorted(v) for v in self.validation], "metadata": self.metadata}


def stratified_kfold(accounts: Sequence[Account], k: int = 5, seed: int = 0, val_fraction: float = 0.25) -> FoldPlan:
    """Account-level stratified folds plus a stratified validation subset per fold.

    Accounts are shuffled within each class, the classes are concatenated in
    label order and the result is dealt round-robin to the folds, so fold
    sizes and per-class counts both differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > len(accounts):
        raise ValueError(f"k={k} exceeds the number of accounts ({len(accounts)})")
    rng = np.random.default_rng(derive_seed(seed, "folds"))
    by_class = {lab: sorted(a.handle for a in accounts if a.label == lab) for lab in LABELS}
    empty = [lab.slug for lab, hs in by_class.items() if not hs]
    if empty:
        raise ValueError(f"classes without accounts: {empty}")
    labels = {a.handle: a.label for a in accounts}
    order = []
    for lab in LABELS:
        hs = by_class[lab]
        order.extend(hs[i] for i in rng.permutation(len(hs)))
    assignments = {h: i % k for i, h in enumerate(order)}
    validation = []
    for fold in range(k):
        vrng = np.random.default_rng(derive_seed(seed, "validation", fold))
        chosen = []
        for lab in LABELS:
            pool = [h for h in order if labels[h] == lab and assignments[h] != fold]
            n = _half_up(val_fraction * len(pool))
            if len(pool) >= 2:
                n = max(n, 1)
            n = min(n, len(pool) - 1) if len(pool) > 1 else 0
            chosen.extend(pool[i] for i in sorted(vrng.permutation(len(pool))[:n]))
        validation.append(chosen)
    partial = {lab.slug: sorted({assignments[h] for h in by_class[lab]}) for lab in LABELS if len(by_class[lab]) < k}
    return FoldPlan(k, dict(sorted(assignments.items())), validation, seed,
                    {"classes_in_subset_of_folds": partial})


# -- reports -----------------------------------------------------------------

@dataclass
class FoldResult:
    fold: int
    confusion: np.ndarray
    predictions: list[tuple[str, int, int]]  # (handle, true, predicted)
    excluded: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def n_test(self) -> int:
        return int(self.confusion.sum())

    @property
    def scores(self) -> Metrics | None:
        return metrics(self.confusion) if self.n_test else None


@dataclass
class EvalReport:
    name: str
    folds: list[FoldResult]
    metadata: dict = field(default_factory=dict)
    aggregate: str = "per_fold"

    @property
    def pooled_confusion(self) -> np.ndarray:
        return sum((f.confusion for f in self.folds), np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64))

    def _fold_mean(self, attr: str) -> float:
        vals = [getattr(f.scores, attr) for f in self.folds if f.n_test]
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def mean_accuracy(self) -> float:
        return self._fold_mean("accuracy")

    @property
    def mean_macro_f1(self) -> float:
        return self._fold_mean("macro_f1")

    @property
    def pooled(self) -> Metrics | None:
        cm = self.pooled_confusion
        return metrics(cm) if cm.sum() else None

    @property
    def accuracy(self) -> float:
        if self.aggregate == "pooled":
            return self.pooled.accuracy if self.pooled else float("nan")
        return self.mean_accuracy

    @property
    def macro_f1(self) -> float:
        if self.aggregate == "pooled":
            return self.pooled.macro_f1 if self.pooled else float("nan")
        return self.mean_macro_f1

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None or (isinstance(x, float) and np.isnan(x)) else x

        pooled = self.pooled
        return {
            "name": self.name,
            "aggregate": self.aggregate,
            "accuracy": num(self.accuracy),
            "macro_f1": num(self.macro_f1),
            "mean_accuracy": num(self.mean_accuracy),
            "mean_macro_f1": num(self.mean_macro_f1),
            "pooled_accuracy": pooled.accuracy if pooled else None,
            "pooled_macro_f1": pooled.macro_f1 if pooled else None,
            "labels": [lab.slug for lab in LABELS],
            "folds": [
                {
                    "fold": f.fold,
                    "n_test": f.n_test,
                    "accuracy": f.scores.accuracy if f.n_test else None,
                    "macro_f1": f.scores.macro_f1 if f.n_test else None,
                    "confusion": f.confusion.tolist(),
                    "excluded": sorted(f.excluded),
                    **f.extra,
                }
                for f in self.folds
            ],
            "metadata": self.metadata,
        }

    def folds_tsv(self) -> str:
        cols = [f"cm_{t.slug}_{p.slug}" for t in LABELS for p in LABELS]
        lines = ["\t".join(["fold", "n_test", "accuracy", "macro_f1", *cols])]
        for f in self.folds:
            s = f.scores
            lines.append("\t".join([
                str(f.fold), str(f.n_test),
                _fmt(s.accuracy if s else None), _fmt(s.macro_f1 if s else None),
                *(str(int(v)) for v in f.confusion.ravel()),
            ]))
        return "\n".join(lines) + "\n"

    def predictions_tsv(self) -> str:
        lines = ["fold\taccount\ttrue\tpredicted"]
        for f in self.folds:
            for handle, t, p in sorted(f.predictions):
                lines.append(f"{f.fold}\t{handle}\t{LABELS[t].slug}\t{LABELS[p].slug}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path, stem: str | None = None) -> list[Path]:
        out_dir = Path(out_dir)
        stem = stem or self.name
        return [
            atomic_write(out_dir / f"{stem}.json", json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"),
            atomic_write(out_dir / f"{stem}_folds.tsv", self.folds_tsv()),
            atomic_write(out_dir / f"{stem}_predictions.tsv", self.predictions_tsv()),
        ]


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return "NA"
    return f"{x:.6f}"


def rows_tsv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = ["\t".join(header)]
    for row in rows:
        out.append("\t".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(out) + "\n"


def atomic_write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# -- feature store -----------------------------------------------------------

class FeatureStore:
    """Per-account feature matrices over the date-sorted timeline, computed once.

    Matrices use the ``full`` feature config; sub-configs select columns, which
    gives exactly the vectors a direct featurization with that config would.
    """

    def __init__(self, accounts: Sequence[Account], lexset: LexiconSet, full: FeatureConfig):
        self.lexset = lexset
        self.full = full
        self.accounts = {a.handle: a for a in accounts}
        self.timelines = {a.handle: sorted_timeline(a) for a in accounts}
        self.rows = {h: {t.id: i for i, t in enumerate(tl)} for h, tl in self.timelines.items()}
        self.matrices = {h: featurize_tweets(tl, lexset, full) for h, tl in self.timelines.items()}

    def columns(self, cfg: FeatureConfig) -> np.ndarray | slice:
        if cfg.enabled_groups == self.full.enabled_groups:
            return slice(None)
        if cfg.normalize_counts != self.full.normalize_counts:
            raise ValueError("normalize_counts differs from the store's config")
        return column_index(self.lexset, self.full, cfg)

    def tweets(self, handle: str, cfg: FeatureConfig, rows=None) -> np.ndarray:
        m = self.matrices[handle][:, self.columns(cfg)]
        return m if rows is None else m[rows]

    def chunks(self, handle: str, cfg: FeatureConfig, chunk_size: int) -> np.ndarray:
        m = self.tweets(handle, cfg)
        n = len(m) // chunk_size
        return m[:n * chunk_size].reshape(n, chunk_size, m.shape[1])

    def chunk_metadata(self, chunk_size: int) -> dict:
        return chunk_accounts(list(self.accounts.values()), chunk_size).metadata()


# -- recurrent model fold protocol ---------------------------------------------

def _stack(store: FeatureStore, handles, cfg: FeatureConfig, chunk_size: int):
    X, y, groups = [], [], []
    for h in handles:
        ck = store.chunks(h, cfg, chunk_size)
        if len(ck):
            X.append(ck)
            y.extend([int(store.accounts[h].label)] * len(ck))
            groups.extend([h] * len(ck))
    if not X:
        dim = store.tweets(next(iter(store.accounts)), cfg).shape[1] if store.accounts else 0
        return np.zeros((0, chunk_size, dim)), np.zeros(0, dtype=np.int64), []
    return np.concatenate(X), np.asarray(y, dtype=np.int64), groups


def seqnet_fold(
    store: FeatureStore,
    plan: FoldPlan,
    fold: int,
    feature_cfg: FeatureConfig,
    model_cfg,
    chunk_size: int,
    seed: int,
    search_budget: int = 0,
    trial_log=None,
) -> FoldResult:
    """Train on the fold's training accounts minus validation, select on validation, score the test accounts."""
    from . import seqnet

    fit_X, fit_y, _ = _stack(store, plan.fit_handles(fold), feature_cfg, chunk_size)
    val_X, val_y, val_g = _stack(store, plan.validation[fold], feature_cfg, chunk_size)
    test = plan.test_handles(fold)
    scored = [h for h in test if len(store.chunks(h, feature_cfg, chunk_size))]
    excluded = sorted(set(test) - set(scored))
    if not scored:
        return FoldResult(fold, np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64), [], excluded)
    cfg = replace(model_cfg, seed=derive_seed(seed, "seqnet", fold))
    try:
        if search_budget:
            res = seqnet.hyper_search(cfg, search_budget, (fit_X, fit_y), (val_X, val_y, val_g),
                                      derive_seed(seed, "search", fold), trial_log=trial_log)
            model, chosen = res.model, res.config
        else:
            model = seqnet.train(fit_X, fit_y, cfg, val=(val_X, val_y) if len(val_X) else None)
            chosen = cfg
    except seqnet.TrainingError as exc:
        raise ExperimentError(f"fold {fold}: {exc}") from None
    preds = []
    for h in scored:
        probas = seqnet.predict_proba(model.params, model.stats, store.chunks(h, feature_cfg, chunk_size))
        preds.append((h, int(store.accounts[h].label), seqnet.majority_vote(probas)))
    cm = confusion_matrix([t for _, t, _ in preds], [p for _, _, p in preds])
    extra = {"best_epoch": model.best_epoch, "epochs_run": len(model.history), "model": chosen.to_dict()}
    return FoldResult(fold, cm, preds, excluded, extra)

