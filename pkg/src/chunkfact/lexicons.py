"""Category lexicons and word-embedding tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

MORALITY_CATEGORIES = (
    "care", "harm", "fairness", "cheating", "loyalty",
    "betrayal", "authority", "subversion", "sanctity", "degradation",
)
SENTIMENT_CATEGORIES = ("positive", "negative")
N_EMOTIONS = 15
N_SENTIMENT_LEXICONS = 4


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class CategoryLexicon:
    name: str
    categories: tuple[str, ...]
    entries: Mapping[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.categories)) != len(self.categories):
            raise LexiconError(f"{self.name}: duplicate category names")
        n = len(self.categories)
        for word, cats in self.entries.items():
            if word != word.lower():
                raise LexiconError(f"{self.name}: entry {word!r} is not lowercased")
            if any(c < 0 or c >= n for c in cats):
                raise LexiconError(f"{self.name}: entry {word!r} references an invalid category")

    def __len__(self):
        return len(self.categories)

    def lookup(self, word: str) -> frozenset[int]:
        return self.entries.get(word, frozenset())

    def index(self, category: str) -> int:
        return self.categories.index(category)


def load_category_lexicon(path: str | Path, name: str | None = None) -> CategoryLexicon:
    """Read a ``word<TAB>category`` file; ``#`` starts a comment line."""
    path = Path(path)
    categories: list[str] = []
    cat_index: dict[str, int] = {}
    entries: dict[str, set[int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise LexiconError(f"{path}:{lineno}: expected word<TAB>category")
            word, category = (s.strip() for s in line.split("\t", 1))
            if not word or not category:
                raise LexiconError(f"{path}:{lineno}: empty word or category")
            if category not in cat_index:
                cat_index[category] = len(categories)
                categories.append(category)
            entries.setdefault(word.lower(), set()).add(cat_index[category])
    if not categories:
        raise LexiconError(f"{path}: lexicon defines no categories")
    return CategoryLexicon(
        name or path.stem,
        tuple(categories),
        {w: frozenset(c) for w, c in entries.items()},
    )


def write_category_lexicon(lexicon: CategoryLexicon, path: str | Path) -> None:
    """Write entries grouped by category so a reload keeps the category order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {lexicon.name}\n")
        for c, category in enumerate(lexicon.categories):
            for word in sorted(w for w, cats in lexicon.entries.items() if c in cats):
                fh.write(f"{word}\t{category}\n")


def polarity_lexicon(name: str, scores: Mapping[str, float], threshold: float = 0.0) -> CategoryLexicon:
    """Binarize graded polarity scores into a positive/negative lexicon.

    Scores above ``threshold`` are positive, below ``-threshold`` negative;
    anything in between is left out.
    """
    entries = {}
    for word, score in scores.items():
        if score > threshold:
            entries[word.lower()] = frozenset({0})
        elif score < -threshold:
            entries[word.lower()] = frozenset({1})
    return CategoryLexicon(name, SENTIMENT_CATEGORIES, entries)


def merge_emotion_lexicons(primary: CategoryLexicon, secondary: CategoryLexicon) -> CategoryLexicon:
    """Append the secondary lexicon's categories that the primary lacks.

    Names are compared case-insensitively. Only secondary entries for the
    appended categories are taken over; overlapping categories keep the
    primary's word lists.
    """
    known = {c.lower() for c in primary.categories}
    categories = list(primary.categories)
    remap: dict[int, int] = {}
    for i, cat in enumerate(secondary.categories):
        if cat.lower() not in known:
            known.add(cat.lower())
            remap[i] = len(categories)
            categories.append(cat)
    entries = {w: set(c) for w, c in primary.entries.items()}
    for word, cats in secondary.entries.items():
        new = {remap[c] for c in cats if c in remap}
        if new:
            entries.setdefault(word, set()).update(new)
    return CategoryLexicon(
        primary.name if not remap else f"{primary.name}+{secondary.name}",
        tuple(categories),
        {w: frozenset(c) for w, c in entries.items()},
    )


@dataclass(frozen=True)
class EmbeddingTable:
    words: tuple[str, ...]
    vectors: np.ndarray
    index: Mapping[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise LexiconError("embedding matrix shape does not match vocabulary")
        if self.vectors.shape[1] < 1:
            raise LexiconError("embedding dimension must be positive")
        if not np.all(np.isfinite(self.vectors)):
            raise LexiconError("embedding vectors must be finite")
        if not self.index:
            object.__setattr__(self, "index", {w: i for i, w in enumerate(self.words)})

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def get(self, word: str) -> np.ndarray | None:
        i = self.index.get(word)
        return None if i is None else self.vectors[i]


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read ``word v1 ... vd`` lines. Words are lowercased; the first spelling wins."""
    path = Path(path)
    words: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\r\n").split(" ")
            if not line.strip():
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim < 1:
                    raise LexiconError(f"{path}:{lineno}: no vector components")
            if len(values) != dim:
                raise LexiconError(f"{path}:{lineno}: expected {dim} components, got {len(values)}")
            try:
                vec = [float(v) for v in values]
            except ValueError:
                raise LexiconError(f"{path}:{lineno}: non-numeric component") from None
            if not all(math.isfinite(v) for v in vec):
                raise LexiconError(f"{path}:{lineno}: non-finite component")
            key = word.lower()
            if key in seen:
                continue
            seen.add(key)
            words.append(key)
            rows.append(vec)
    if dim is None:
        raise LexiconError(f"{path}: empty embedding file")
    return EmbeddingTable(tuple(words), np.asarray(rows, dtype=np.float64).reshape(len(rows), dim))


def write_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for word, vec in zip(table.words, table.vectors):
            fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def _check_categories(lex: CategoryLexicon, expected: Sequence[str], what: str) -> None:
    if sorted(c.lower() for c in lex.categories) != sorted(expected):
        raise LexiconError(f"{what} lexicon {lex.name!r} must have categories {list(expected)}, got {list(lex.categories)}")


@dataclass(frozen=True)
class LexiconSet:
    emotion: CategoryLexicon
    sentiment: tuple[CategoryLexicon, ...]
    morality: CategoryLexicon
    embeddings: EmbeddingTable

    def __post_init__(self):
        if len(self.emotion) != N_EMOTIONS:
            raise LexiconError(f"emotion lexicon must have {N_EMOTIONS} categories, got {len(self.emotion)}")
        if len(self.sentiment) != N_SENTIMENT_LEXICONS:
            raise LexiconError(f"expected {N_SENTIMENT_LEXICONS} sentiment lexicons, got {len(self.sentiment)}")
        for lex in self.sentiment:
            _check_categories(lex, SENTIMENT_CATEGORIES, "sentiment")
        _check_categories(self.morality, MORALITY_CATEGORIES, "morality")

    @property
    def sentiment_order(self) -> list[str]:
        return [lex.name for lex in self.sentiment]


def load_lexicon_set(
    emotion: Sequence[str | Path],
    sentiment: Sequence[str | Path],
    morality: str | Path,
    embeddings: str | Path,
) -> LexiconSet:
    """Assemble a LexiconSet from files.

    ``emotion`` holds one path, or two paths that are merged primary-first.
    ``sentiment`` holds exactly four paths; their order fixes the feature layout.
    """
    emotion = list(emotion)
    if not 1 <= len(emotion) <= 2:
        raise LexiconError("emotion takes one or two lexicon paths")
    emo = load_category_lexicon(emotion[0])
    if len(emotion) == 2:
        emo = merge_emotion_lexicons(emo, load_category_lexicon(emotion[1]))
    return LexiconSet(
        emotion=emo,
        sentiment=tuple(load_category_lexicon(p) for p in sentiment),
        morality=load_category_lexicon(morality),
        embeddings=load_embeddings(embeddings),
    )
