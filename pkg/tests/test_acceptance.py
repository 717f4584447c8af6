"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing run still reports the measured value next to the
pinned tolerance.
"""
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from chunkfact.baselines import run_baseline
from chunkfact.cli import dispatch
from chunkfact.config import ExperimentConfig
from chunkfact.evaluation import FeatureStore, metrics, stratified_kfold
from chunkfact.experiments import ablation_suite, run_experiment
from chunkfact.features import GROUPS, FeatureConfig, featurize_tweets, spans
from chunkfact.seqnet import PARAM_NAMES, SeqNetParams, TrainConfig, forward, loss_and_grads, loss_value
from chunkfact.synthetic import SyntheticSpec, generate_synthetic_corpus, write_synthetic

from conftest import ACCEPTANCE_LINES, reference_corpus

MAJORITY_ACC, MAJORITY_F1, MAJORITY_TOL, MAJORITY_SECONDS = 0.561, 0.180, 1e-3, 1.0
RANDOM_F1, RANDOM_TOL, RANDOM_SEEDS, RANDOM_SECONDS = 0.21, 0.03, 100, 10.0
GRAD_INSTANCES, GRAD_D, GRAD_H, GRAD_T, GRAD_REL, GRAD_SECONDS = 20, 12, 8, 5, 1e-4, 60.0
KINK_MARGIN = 1e-3
SEQ_SEEDS, SEQ_MARGIN, SEQ_SECONDS = range(5), 0.10, 600.0
ABLATION_SECONDS = 900.0
ORACLE_MATRICES = 1000
PROTOCOL = TrainConfig(epochs=40, patience=10)


def record(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_majority_baseline():
    corpus = reference_corpus()
    start = time.perf_counter()
    r = run_baseline("majority", corpus, None, ExperimentConfig(), stratified_kfold(corpus, 5, 0))
    elapsed = time.perf_counter() - start
    ok = (abs(r.accuracy - MAJORITY_ACC) <= MAJORITY_TOL and abs(r.macro_f1 - MAJORITY_F1) <= MAJORITY_TOL
          and elapsed < MAJORITY_SECONDS)
    record("majority baseline", ok,
           f"acc={r.accuracy:.4f} (target {MAJORITY_ACC}±{MAJORITY_TOL}), "
           f"F1={r.macro_f1:.4f} (target {MAJORITY_F1}±{MAJORITY_TOL}), {elapsed:.3f}s < {MAJORITY_SECONDS}s")


def test_random_baseline():
    corpus = reference_corpus()
    start = time.perf_counter()
    scores = []
    for seed in range(RANDOM_SEEDS):
        cfg = ExperimentConfig(seed=seed)
        scores.append(run_baseline("random", corpus, None, cfg, stratified_kfold(corpus, 5, seed)).macro_f1)
    elapsed = time.perf_counter() - start
    mean = float(np.mean(scores))
    ok = abs(mean - RANDOM_F1) <= RANDOM_TOL and elapsed < RANDOM_SECONDS
    record("random baseline", ok,
           f"mean F1 over {RANDOM_SEEDS} seeds={mean:.4f} (target {RANDOM_F1}±{RANDOM_TOL}), "
           f"{elapsed:.2f}s < {RANDOM_SECONDS}s")


def _relative_error(params, X, y, eps=1e-5) -> float:
    _, grads = loss_and_grads(params, X, y)
    diff = norm_a = norm_n = 0.0
    for name in PARAM_NAMES:
        arr = getattr(params, name)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up = loss_value(params, X, y)
            arr[idx] = old - eps
            down = loss_value(params, X, y)
            arr[idx] = old
            num = (up - down) / (2 * eps)
            diff += (grads[name][idx] - num) ** 2
            norm_a += grads[name][idx] ** 2
            norm_n += num ** 2
    return float(np.sqrt(diff) / max(np.sqrt(norm_a) + np.sqrt(norm_n), 1e-12))


def test_gradient_check():
    rng = np.random.default_rng(2024)
    activations = ("tanh", "relu", "selu")
    start = time.perf_counter()
    errors = []
    redrawn = 0
    while len(errors) < GRAD_INSTANCES:
        p = SeqNetParams.init(GRAD_D, GRAD_H, activations[len(errors) % 3], rng=rng)
        X = rng.normal(size=(2, GRAD_T, GRAD_D))
        y = rng.integers(0, 4, size=2)
        # relu and selu have a kink at zero that central differences cannot straddle
        if p.activation != "tanh" and np.abs(forward(p, X)[1].a_pre).min() < KINK_MARGIN:
            redrawn += 1
            continue
        errors.append(_relative_error(p, X, y))
    elapsed = time.perf_counter() - start
    worst = max(errors)
    ok = len(errors) >= GRAD_INSTANCES and worst <= GRAD_REL and elapsed < GRAD_SECONDS
    record("gradient check", ok,
           f"{len(errors)} instances (D={GRAD_D}, H={GRAD_H}, T={GRAD_T}), max rel err={worst:.2e} "
           f"<= {GRAD_REL:g}, {redrawn} redrawn near a kink, {elapsed:.1f}s < {GRAD_SECONDS:.0f}s")


@pytest.fixture(scope="module")
def comparison():
    """Mean macro-F1 per system over the seeds, plus time spent on the headline trio."""
    scores = {k: [] for k in ("factweet", "factweet_tweet", "bow_lr", "lr_chunk", "lr_tweet")}
    headline = 0.0
    for seed in SEQ_SEEDS:
        syn = generate_synthetic_corpus(SyntheticSpec(strength=0.5, seed=seed))
        cfg = ExperimentConfig(seed=seed, model=PROTOCOL)
        plan = stratified_kfold(syn.accounts, 5, seed)
        store = FeatureStore(syn.accounts, syn.lexset, cfg.features)
        start = time.perf_counter()
        scores["factweet"].append(run_experiment(syn.accounts, syn.lexset, cfg, plan, store).macro_f1)
        for kind in ("factweet_tweet", "bow_lr"):
            scores[kind].append(run_baseline(kind, syn.accounts, syn.lexset, cfg, plan, store).macro_f1)
        headline += time.perf_counter() - start
        for kind in ("lr_chunk", "lr_tweet"):
            scores[kind].append(run_baseline(kind, syn.accounts, syn.lexset, cfg, plan, store).macro_f1)
    return {k: float(np.mean(v)) for k, v in scores.items()}, headline


def test_sequence_advantage(comparison):
    means, elapsed = comparison
    gap_tweet = means["factweet"] - means["factweet_tweet"]
    gap_bow = means["factweet"] - means["bow_lr"]
    ok = gap_tweet >= SEQ_MARGIN and gap_bow >= SEQ_MARGIN and elapsed < SEQ_SECONDS
    record("sequence advantage", ok,
           f"factweet={means['factweet']:.3f}, tweet-level={means['factweet_tweet']:.3f} (gap {gap_tweet:+.3f}), "
           f"bow={means['bow_lr']:.3f} (gap {gap_bow:+.3f}), margin >= {SEQ_MARGIN}, "
           f"{elapsed:.0f}s < {SEQ_SECONDS:.0f}s")


def test_system_ordering(comparison):
    means, _ = comparison
    ok = means["lr_chunk"] >= means["lr_tweet"] and means["factweet"] >= means["lr_chunk"]
    record("system ordering", ok,
           f"factweet={means['factweet']:.3f} >= lr_chunk={means['lr_chunk']:.3f} >= lr_tweet={means['lr_tweet']:.3f}")


def test_embeddings_ablation():
    spec = SyntheticSpec(strength=1.0, signal_rate=0.8, signal_groups=("embeddings",), seed=0)
    syn = generate_synthetic_corpus(spec)
    cfg = ExperimentConfig(seed=0, model=PROTOCOL)
    plan = stratified_kfold(syn.accounts, 5, 0)
    start = time.perf_counter()
    rows = ablation_suite(syn.accounts, syn.lexset, cfg, plan)
    elapsed = time.perf_counter() - start
    full = rows[0][2]
    drops = {name: full - f1 for name, _, f1 in rows[1:]}
    largest = max(drops, key=drops.get)
    ok = len(rows) == 6 and rows[0][0] == "All" and largest == "- Words embeddings" and elapsed < ABLATION_SECONDS
    detail = ", ".join(f"{n}: {d:+.3f}" for n, d in drops.items())
    record("embeddings ablation", ok,
           f"{len(rows)} rows, All={full:.3f}, drops [{detail}], largest={largest!r}, "
           f"{elapsed:.0f}s < {ABLATION_SECONDS:.0f}s")


def _brute_force(cm):
    n = len(cm)
    f1s = []
    for c in range(n):
        tp = fp = fn = 0
        for i, j in product(range(n), repeat=2):
            if i == c and j == c:
                tp += cm[i][j]
            elif j == c:
                fp += cm[i][j]
            elif i == c:
                fn += cm[i][j]
        p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        f1s.append(2 * p * r / (p + r) if p + r else Fraction(0))
    total = sum(map(sum, cm))
    return Fraction(sum(cm[i][i] for i in range(n)), total), sum(f1s) / n, f1s


def test_metric_oracle():
    rng = np.random.default_rng(11)
    mismatches = 0
    for _ in range(ORACLE_MATRICES):
        cm = rng.integers(0, 6, size=(4, 4))
        if rng.random() < 0.2:
            cm[rng.integers(4)] = 0  # empty classes exercise the zero-F1 convention
        if not cm.sum():
            cm[0, 0] = 1
        m = metrics(cm)
        acc, macro, f1s = _brute_force(cm.tolist())
        if m.accuracy != float(acc) or m.macro_f1 != float(macro) or list(m.f1) != [float(f) for f in f1s]:
            mismatches += 1
    record("metric oracle", mismatches == 0,
           f"{ORACLE_MATRICES} random 4x4 matrices, {mismatches} disagreements with exact brute force")


def test_determinism(tmp_path):
    root = tmp_path / "fixture"
    write_synthetic(SyntheticSpec(accounts_per_class=3, tweets_per_account=60, seed=5), root,
                    model={"epochs": 3, "hidden_size": 8})
    for run in ("a", "b"):
        assert dispatch(["evaluate", "--config", str(root / "experiment.toml"), "--out", str(tmp_path / run)]) == 0
    names = ("factweet.json", "factweet_folds.tsv", "factweet_predictions.tsv", "folds.json")
    differing = [n for n in names if (tmp_path / "a" / n).read_bytes() != (tmp_path / "b" / n).read_bytes()]
    record("determinism", not differing,
           f"{len(names)} payload files compared across two evaluate runs, differing: {differing or 'none'}")


def test_feature_dimensions():
    syn = generate_synthetic_corpus(SyntheticSpec(accounts_per_class=1, tweets_per_account=40, embedding_dim=300, seed=1))
    tweets = [t for a in syn.accounts for t in a.tweets]
    full_cfg = FeatureConfig()
    full = featurize_tweets(tweets, syn.lexset, full_cfg)
    layout = spans(syn.lexset, full_cfg)
    expected = {"emotion": (0, 15), "sentiment": (15, 8), "morality": (23, 10), "style": (33, 9), "embeddings": (42, 300)}
    problems = []
    if full.shape[1] != 342 or layout != expected:
        problems.append(f"D={full.shape[1]}, spans={layout}")
    for g in GROUPS:
        off, n = layout[g]
        reduced = featurize_tweets(tweets, syn.lexset, full_cfg.without(g))
        if not np.array_equal(reduced, np.delete(full, np.s_[off:off + n], axis=1)):
            problems.append(f"removing {g} is not a column deletion of its span")
    record("feature dimensions", not problems,
           f"D={full.shape[1]} (target 342), spans {list(layout.values())}, "
           f"{len(GROUPS)} ablations checked, problems: {problems or 'none'}")
