"""Per-tweet feature vectors: lexicon counts, style counts and averaged embeddings."""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .corpus import Chunk, Tweet
from .lexicons import SENTIMENT_CATEGORIES, CategoryLexicon, EmbeddingTable, LexiconSet

GROUPS = ("emotion", "sentiment", "morality", "style", "embeddings")
STYLE_NAMES = (
    "question_marks", "exclamation_marks", "char_runs", "letter_runs",
    "urls", "hashtags", "mentions", "upper_ratio", "length",
)
MAX_TWEET_CHARS = 280


class Token(NamedTuple):
    text: str
    kind: str = "word"  # word | url | hashtag | mention


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct(s: str) -> str:
    i, j = 0, len(s)
    while i < j and _is_punct(s[i]):
        i += 1
    while j > i and _is_punct(s[j - 1]):
        j -= 1
    return s[i:j]


def tokenize(text: str) -> list[Token]:
    tokens = []
    for raw in text.split():
        low = raw.lower()
        if low.startswith(("http://", "https://")):
            tokens.append(Token(raw, "url"))
        elif raw.startswith("#") and len(raw) > 1:
            tokens.append(Token(raw, "hashtag"))
        elif raw.startswith("@") and len(raw) > 1:
            tokens.append(Token(raw, "mention"))
        else:
            word = _strip_punct(raw).lower()
            if word:
                tokens.append(Token(word))
    return tokens


def category_features(tokens: Sequence[Token], lex: CategoryLexicon, normalize: bool = True) -> np.ndarray:
    out = np.zeros(len(lex.categories))
    for tok in tokens:
        if tok.kind == "word":
            for c in lex.lookup(tok.text):
                out[c] += 1.0
    if normalize and tokens:
        out /= len(tokens)
    return out


def _runs(text: str) -> Iterable[tuple[str, int]]:
    for ch, grp in groupby(text):
        yield ch, sum(1 for _ in grp)


def style_features(text: str, tokens: Sequence[Token]) -> np.ndarray:
    """Nine stylistic components in STYLE_NAMES order.

    Runs are maximal blocks of one repeated character; whitespace runs are not
    counted as character runs.
    """
    runs = list(_runs(text))
    letters = [ch for ch in text if ch.isalpha()]
    kinds = [t.kind for t in tokens]
    return np.array([
        text.count("?"),
        text.count("!"),
        sum(1 for ch, n in runs if n >= 2 and not ch.isspace()),
        sum(1 for ch, n in runs if n >= 3 and ch.isalpha()),
        kinds.count("url"),
        kinds.count("hashtag"),
        kinds.count("mention"),
        sum(ch.isupper() for ch in letters) / len(letters) if letters else 0.0,
        len(text) / MAX_TWEET_CHARS,
    ], dtype=np.float64)


def embedding_features(tokens: Sequence[Token], table: EmbeddingTable) -> np.ndarray:
    hits = [table.index[t.text] for t in tokens if t.kind == "word" and t.text in table.index]
    if not hits:
        return np.zeros(table.dim)
    return table.vectors[hits].mean(axis=0)


@dataclass(frozen=True)
class FeatureConfig:
    enabled_groups: tuple[str, ...] = GROUPS
    normalize_counts: bool = True

    def __post_init__(self):
        unknown = set(self.enabled_groups) - set(GROUPS)
        if unknown:
            raise ValueError(f"unknown feature groups: {sorted(unknown)}")
        if not self.enabled_groups:
            raise ValueError("at least one feature group must be enabled")
        # canonical order regardless of how the groups were listed
        object.__setattr__(self, "enabled_groups", tuple(g for g in GROUPS if g in self.enabled_groups))

    def without(self, group: str) -> "FeatureConfig":
        return FeatureConfig(tuple(g for g in self.enabled_groups if g != group), self.normalize_counts)


def group_sizes(lexset: LexiconSet) -> dict[str, int]:
    return {
        "emotion": len(lexset.emotion),
        "sentiment": len(SENTIMENT_CATEGORIES) * len(lexset.sentiment),
        "morality": len(lexset.morality),
        "style": len(STYLE_NAMES),
        "embeddings": lexset.embeddings.dim,
    }


def spans(lexset: LexiconSet, cfg: FeatureConfig) -> dict[str, tuple[int, int]]:
    sizes = group_sizes(lexset)
    out, offset = {}, 0
    for g in cfg.enabled_groups:
        out[g] = (offset, sizes[g])
        offset += sizes[g]
    return out


def feature_dim(lexset: LexiconSet, cfg: FeatureConfig) -> int:
    sizes = group_sizes(lexset)
    return sum(sizes[g] for g in cfg.enabled_groups)


def feature_names(lexset: LexiconSet, cfg: FeatureConfig) -> list[str]:
    names = {
        "emotion": [f"emotion:{c}" for c in lexset.emotion.categories],
        "sentiment": [f"sentiment:{lex.name}:{c}" for lex in lexset.sentiment for c in SENTIMENT_CATEGORIES],
        "morality": [f"morality:{c}" for c in lexset.morality.categories],
        "style": [f"style:{n}" for n in STYLE_NAMES],
        "embeddings": [f"embeddings:{i}" for i in range(lexset.embeddings.dim)],
    }
    return [n for g in cfg.enabled_groups for n in names[g]]


def _sentiment(tokens, lex: CategoryLexicon, normalize: bool) -> np.ndarray:
    raw = category_features(tokens, lex, normalize)
    order = [c.lower() for c in lex.categories]
    return raw[[order.index(c) for c in SENTIMENT_CATEGORIES]]


@dataclass(frozen=True)
class TweetVector:
    values: np.ndarray
    spans: dict[str, tuple[int, int]]

    def group(self, name: str) -> np.ndarray:
        off, n = self.spans[name]
        return self.values[off:off + n]


def tweet_features(text: str, lexset: LexiconSet, cfg: FeatureConfig) -> np.ndarray:
    tokens = tokenize(text)
    norm = cfg.normalize_counts
    parts = []
    for g in cfg.enabled_groups:
        if g == "emotion":
            parts.append(category_features(tokens, lexset.emotion, norm))
        elif g == "sentiment":
            parts.extend(_sentiment(tokens, lex, norm) for lex in lexset.sentiment)
        elif g == "morality":
            parts.append(category_features(tokens, lexset.morality, norm))
        elif g == "style":
            parts.append(style_features(text, tokens))
        else:
            parts.append(embedding_features(tokens, lexset.embeddings))
    return np.concatenate(parts)


def featurize_tweet(tweet: Tweet, lexset: LexiconSet, cfg: FeatureConfig) -> TweetVector:
    return TweetVector(tweet_features(tweet.text, lexset, cfg), spans(lexset, cfg))


def featurize_chunk(chunk: Chunk, lexset: LexiconSet, cfg: FeatureConfig) -> list[TweetVector]:
    return [featurize_tweet(t, lexset, cfg) for t in chunk.tweets]


def featurize_tweets(tweets: Sequence[Tweet], lexset: LexiconSet, cfg: FeatureConfig) -> np.ndarray:
    """Stack tweet vectors into an ``(n, D)`` matrix."""
    dim = feature_dim(lexset, cfg)
    out = np.zeros((len(tweets), dim))
    for i, t in enumerate(tweets):
        out[i] = tweet_features(t.text, lexset, cfg)
    return out


def column_index(lexset: LexiconSet, full: FeatureConfig, sub: FeatureConfig) -> np.ndarray:
    """Columns of a ``full``-config matrix that make up the ``sub`` config."""
    full_spans = spans(lexset, full)
    missing = set(sub.enabled_groups) - set(full.enabled_groups)
    if missing:
        raise ValueError(f"groups {sorted(missing)} are not in the full config")
    return np.concatenate([np.arange(full_spans[g][0], sum(full_spans[g])) for g in sub.enabled_groups])


def write_feature_tsv(path: str | Path, tweets: Sequence[Tweet], matrix: np.ndarray, lexset: LexiconSet, cfg: FeatureConfig) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(["tweet_id", *feature_names(lexset, cfg)]) + "\n")
        for tweet, row in zip(tweets, matrix):
            fh.write("\t".join([tweet.id, *(repr(float(v)) for v in row)]) + "\n")
