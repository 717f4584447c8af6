"""Seeded synthetic timelines with class signatures that live in tweet order.

Every tweet is written from one of five latent topic modes. A timeline is cut
into episodes of ``period`` tweets. With probability ``strength`` an episode
is a *signature* episode: the modes walk a class-specific cycle
(``mode -> mode + class + 1 (mod 5)``), which visits every mode equally
often. Otherwise the modes are drawn i.i.d. uniformly. Either way each tweet's
mode is uniform, so the distribution of a single tweet's features is the same
for every class; only the order of tweets tells the classes apart.

A fraction ``anchor`` of signature episodes start at mode 0, which gives
position-aligned chunk models some purchase. Tweets in signature episodes
whose mode is the class's "hot" mode draw many more replies.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import LABELS, Account, Tweet, normalize_text, write_corpus
from .features import GROUPS
from .lexicons import (
    MORALITY_CATEGORIES,
    SENTIMENT_CATEGORIES,
    CategoryLexicon,
    EmbeddingTable,
    LexiconSet,
    merge_emotion_lexicons,
    write_category_lexicon,
    write_embeddings,
)

N_MODES = 5
PRIMARY_EMOTIONS = ("anger", "anticipation", "disgust", "fear", "joy", "sadness", "surprise", "trust")
SECONDARY_EMOTIONS = (
    "anger", "love", "disgust", "calmness", "fear", "despair", "joy",
    "hope", "sadness", "hate", "surprise", "like", "anticipation", "ambiguous",
)
SENTIMENT_NAMES = ("sentiment_a", "sentiment_b", "sentiment_c", "sentiment_d")
LEXICAL_GROUPS = ("emotion", "sentiment", "morality", "embeddings")
_SYLLABLES = [c + v for c in "bdfgklmnprstvz" for v in "aeiou"]


@dataclass(frozen=True)
class SyntheticSpec:
    accounts_per_class: int | tuple[int, int, int, int] = 10
    tweets_per_account: int = 400
    strength: float = 0.5
    seed: int = 0
    period: int = 20
    anchor: float = 0.5
    signal_groups: tuple[str, ...] = GROUPS
    embedding_dim: int = 16
    words_per_category: int = 4
    cluster_words: int = 12
    filler_words: int = 300
    words_per_tweet: tuple[int, int] = (8, 14)
    signal_rate: float = 0.35
    style_rate: float = 0.7

    def __post_init__(self):
        counts = self.class_counts
        if len(counts) != len(LABELS) or any(c < 1 for c in counts):
            raise ValueError("every class needs at least one account")
        if self.tweets_per_account < 1:
            raise ValueError("tweets_per_account must be positive")
        if not 0.0 <= self.strength <= 1.0 or not 0.0 <= self.anchor <= 1.0:
            raise ValueError("strength and anchor must lie in [0, 1]")
        if self.period < 1 or self.period % N_MODES:
            raise ValueError(f"period must be a positive multiple of {N_MODES}")
        if set(self.signal_groups) - set(GROUPS):
            raise ValueError(f"signal groups must be among {GROUPS}")
        lo, hi = self.words_per_tweet
        if not 1 <= lo <= hi:
            raise ValueError("words_per_tweet must be an increasing positive range")
        if min(self.embedding_dim, self.words_per_category, self.cluster_words, self.filler_words) < 1:
            raise ValueError("sizes must be positive")

    @property
    def class_counts(self) -> tuple[int, ...]:
        c = self.accounts_per_class
        return tuple(c) if isinstance(c, (tuple, list)) else (c,) * len(LABELS)


@dataclass
class SyntheticCorpus:
    spec: SyntheticSpec
    accounts: list[Account]
    lexset: LexiconSet
    emotion_primary: CategoryLexicon
    emotion_secondary: CategoryLexicon
    modes: dict[str, np.ndarray] = field(default_factory=dict)


def _words(rng, n: int, taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        w = "".join(rng.choice(_SYLLABLES, size=int(rng.integers(2, 4))))
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


class _Vocabulary:
    def __init__(self, spec: SyntheticSpec, rng):
        taken: set[str] = set()
        k = spec.words_per_category
        self.primary = {c: _words(rng, k, taken) for c in PRIMARY_EMOTIONS}
        self.secondary = {c: _words(rng, k, taken) for c in SECONDARY_EMOTIONS}
        self.sentiment = [[_words(rng, k, taken) for _ in SENTIMENT_CATEGORIES] for _ in SENTIMENT_NAMES]
        self.morality = {c: _words(rng, k, taken) for c in MORALITY_CATEGORIES}
        self.clusters = [_words(rng, spec.cluster_words, taken) for _ in range(N_MODES)]
        self.filler = _words(rng, spec.filler_words, taken)

        merged_order = list(PRIMARY_EMOTIONS) + [c for c in SECONDARY_EMOTIONS if c not in PRIMARY_EMOTIONS]
        emo_words = [self.primary[c] if c in self.primary else self.secondary[c] for c in merged_order]
        cells = [self.sentiment[i // 2][i % 2] for i in range(2 * len(SENTIMENT_NAMES))]
        mor = [self.morality[c] for c in MORALITY_CATEGORIES]
        self.pools = {
            "emotion": [sum(emo_words[3 * m:3 * m + 3], []) for m in range(N_MODES)],
            "sentiment": [cells[m] + (cells[m + 5] if m + 5 < len(cells) else []) for m in range(N_MODES)],
            "morality": [mor[2 * m] + mor[2 * m + 1] for m in range(N_MODES)],
            "embeddings": self.clusters,
        }

        d = spec.embedding_dim
        vocab = [w for ws in self.primary.values() for w in ws] + [w for ws in self.secondary.values() for w in ws]
        vocab += [w for lex in self.sentiment for ws in lex for w in ws]
        vocab += [w for ws in self.morality.values() for w in ws] + self.filler
        centroids = rng.normal(size=(N_MODES, d))
        centroids *= 3.0 / np.linalg.norm(centroids, axis=1, keepdims=True)
        rows = [rng.normal(scale=0.5, size=d) for _ in vocab]
        for m, ws in enumerate(self.clusters):
            vocab += ws
            rows += [centroids[m] + rng.normal(scale=0.5, size=d) for _ in ws]
        self.embeddings = EmbeddingTable(tuple(vocab), np.asarray(rows))

    def lexicons(self):
        def lex(name, cats, words):
            entries = {}
            for i, c in enumerate(cats):
                for w in words[c] if isinstance(words, dict) else words[i]:
                    entries.setdefault(w, set()).add(i)
            return CategoryLexicon(name, tuple(cats), {w: frozenset(v) for w, v in entries.items()})

        primary = lex("emotion_primary", PRIMARY_EMOTIONS, self.primary)
        secondary = lex("emotion_secondary", SECONDARY_EMOTIONS, self.secondary)
        sentiment = tuple(lex(n, SENTIMENT_CATEGORIES, self.sentiment[i]) for i, n in enumerate(SENTIMENT_NAMES))
        morality = lex("morality", MORALITY_CATEGORIES, self.morality)
        lexset = LexiconSet(merge_emotion_lexicons(primary, secondary), sentiment, morality, self.embeddings)
        return lexset, primary, secondary


def mode_sequence(rng, n: int, cls: int, spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Latent modes for one timeline plus a mask of tweets in signature episodes."""
    modes = np.empty(n, dtype=np.int64)
    signature = np.zeros(n, dtype=bool)
    step = cls + 1
    for start in range(0, n, spec.period):
        L = min(spec.period, n - start)
        if rng.random() < spec.strength:
            m0 = 0 if rng.random() < spec.anchor else int(rng.integers(N_MODES))
            modes[start:start + L] = (m0 + step * np.arange(L)) % N_MODES
            signature[start:start + L] = True
        else:
            modes[start:start + L] = rng.integers(N_MODES, size=L)
    return modes, signature


def _pick(rng, items: list[str]) -> str:
    return items[int(rng.integers(len(items)))]


def _style(words: list[str], mode: int, rng, vocab: _Vocabulary) -> list[str]:
    i = int(rng.integers(len(words)))
    if mode == 0:
        words[i] = words[i] + "!!!"
    elif mode == 1:
        words[-1] = words[-1] + "??"
    elif mode == 2:
        words[i] = words[i].upper()
    elif mode == 3:
        words.insert(i, "#" + _pick(rng, vocab.filler))
    else:
        words.insert(i, "@" + _pick(rng, vocab.filler))
    return words


def _tweet_text(mode: int, rng, spec: SyntheticSpec, vocab: _Vocabulary) -> str:
    lo, hi = spec.words_per_tweet
    n = int(rng.integers(lo, hi + 1))
    words = []
    for _ in range(n):
        if rng.random() < spec.signal_rate:
            group = LEXICAL_GROUPS[int(rng.integers(len(LEXICAL_GROUPS)))]
            src = mode if group in spec.signal_groups else int(rng.integers(N_MODES))
            words.append(_pick(rng, vocab.pools[group][src]))
        else:
            words.append(_pick(rng, vocab.filler))
    if rng.random() < spec.style_rate:
        src = mode if "style" in spec.signal_groups else int(rng.integers(N_MODES))
        words = _style(words, src, rng, vocab)
    return " ".join(words)


def generate_synthetic_corpus(spec: SyntheticSpec) -> SyntheticCorpus:
    rng = np.random.default_rng(spec.seed)
    vocab = _Vocabulary(spec, rng)
    lexset, primary, secondary = vocab.lexicons()
    accounts, modes = [], {}
    base = datetime(2019, 1, 1, tzinfo=timezone.utc)
    for label, count in zip(LABELS, spec.class_counts):
        for j in range(count):
            handle = f"{label.slug}_{j:03d}"
            seq, sig = mode_sequence(rng, spec.tweets_per_account, int(label), spec)
            hot = int(label) % N_MODES
            ts = base + timedelta(days=int(rng.integers(0, 30)))
            seen, tweets = set(), []
            for i, (m, s) in enumerate(zip(seq, sig)):
                text = _tweet_text(int(m), rng, spec, vocab)
                while normalize_text(text) in seen:
                    text = _tweet_text(int(m), rng, spec, vocab)
                seen.add(normalize_text(text))
                ts = ts + timedelta(seconds=int(rng.integers(600, 21600)))
                tweets.append(Tweet(
                    id=f"{handle}-{i:05d}",
                    text=text,
                    timestamp=ts,
                    replies=int(rng.poisson(30.0 if s and m == hot else 3.0)),
                    likes=int(rng.poisson(8.0)),
                    retweets=int(rng.poisson(4.0)),
                ))
            accounts.append(Account(handle, label, tuple(tweets)))
            modes[handle] = seq
    accounts.sort(key=lambda a: a.handle)
    return SyntheticCorpus(spec, accounts, lexset, primary, secondary, modes)


def write_synthetic(spec: SyntheticSpec, out_dir: str | Path, model: dict | None = None) -> dict[str, Path]:
    """Write the corpus, fixture lexicons, embeddings and a matching experiment config."""
    from .config import ExperimentConfig, LexiconPaths, dump_config
    from .seqnet import TrainConfig

    out = Path(out_dir)
    (out / "lexicons").mkdir(parents=True, exist_ok=True)
    syn = generate_synthetic_corpus(spec)
    paths = {
        "corpus": out / "corpus.jsonl",
        "emotion_primary": out / "lexicons" / "emotion_primary.tsv",
        "emotion_secondary": out / "lexicons" / "emotion_secondary.tsv",
        "morality": out / "lexicons" / "morality.tsv",
        "embeddings": out / "lexicons" / "embeddings.txt",
        "spec": out / "synthetic_spec.json",
        "config": out / "experiment.toml",
    }
    write_corpus(syn.accounts, paths["corpus"])
    write_category_lexicon(syn.emotion_primary, paths["emotion_primary"])
    write_category_lexicon(syn.emotion_secondary, paths["emotion_secondary"])
    write_category_lexicon(syn.lexset.morality, paths["morality"])
    sentiment = []
    for lex in syn.lexset.sentiment:
        p = out / "lexicons" / f"{lex.name}.tsv"
        write_category_lexicon(lex, p)
        sentiment.append(p)
        paths[lex.name] = p
    write_embeddings(syn.lexset.embeddings, paths["embeddings"])
    paths["spec"].write_text(json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    cfg = ExperimentConfig(
        corpus=paths["corpus"],
        lexicons=LexiconPaths(
            (paths["emotion_primary"], paths["emotion_secondary"]), tuple(sentiment),
            paths["morality"], paths["embeddings"]),
        model=TrainConfig(**(model or {})),
        seed=spec.seed,
    )
    paths["config"].write_text(dump_config(cfg, out), encoding="utf-8")
    return paths
