from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from chunkfact.corpus import Account, Label, Tweet
from chunkfact.lexicons import (
    MORALITY_CATEGORIES,
    SENTIMENT_CATEGORIES,
    CategoryLexicon,
    EmbeddingTable,
    LexiconSet,
)
from chunkfact.synthetic import SyntheticSpec, generate_synthetic_corpus

T0 = datetime(2020, 1, 1, tzinfo=timezone.utc)


def tweet(i, text="x", minutes=None, **counts) -> Tweet:
    ts = T0 + timedelta(minutes=i if minutes is None else minutes)
    return Tweet(str(i), text, ts, **counts)


def account(handle, label=Label.PROPAGANDA, texts=(), n=None) -> Account:
    if n is not None:
        texts = [f"tweet number {i}" for i in range(n)]
    return Account(handle, label, tuple(tweet(i, t) for i, t in enumerate(texts)))


def reference_corpus() -> list[Account]:
    """Single-tweet accounts with the reference class counts 96/36/7/32."""
    return [account(f"{lab.slug}{j:03d}", lab, ["x"]) for lab, n in zip(Label, (96, 36, 7, 32)) for j in range(n)]


def make_lexset(dim: int = 300, seed: int = 0) -> LexiconSet:
    """Lexicons with the production category counts and a random embedding table."""
    rng = np.random.default_rng(seed)
    emo = CategoryLexicon("emo", tuple(f"e{i}" for i in range(15)), {f"emo{i}": frozenset({i}) for i in range(15)})
    sent = tuple(
        CategoryLexicon(f"sent{j}", SENTIMENT_CATEGORIES, {f"good{j}": frozenset({0}), f"bad{j}": frozenset({1})})
        for j in range(4)
    )
    mor = CategoryLexicon("mfd", MORALITY_CATEGORIES, {c: frozenset({i}) for i, c in enumerate(MORALITY_CATEGORIES)})
    words = ("happy", "sad", "harm", "care", "emo0", "good0")
    table = EmbeddingTable(words, rng.normal(size=(len(words), dim)))
    return LexiconSet(emo, sent, mor, table)


@pytest.fixture(scope="session")
def lexset300():
    return make_lexset(300)


@pytest.fixture(scope="session")
def small_synth():
    return generate_synthetic_corpus(SyntheticSpec(accounts_per_class=3, tweets_per_account=60, seed=3))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
