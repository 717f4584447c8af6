"""Account timelines: loading, cleaning, chronological chunking and top-k selection."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

URL_RE = re.compile(r"https?://\S+", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")

METRICS = ("replies", "likes", "retweets")


class CorpusError(ValueError):
    pass


class Label(IntEnum):
    PROPAGANDA = 0
    CLICKBAIT = 1
    HOAX = 2
    REAL = 3

    @classmethod
    def parse(cls, value: str) -> "Label":
        try:
            return cls[value.strip().upper()]
        except (KeyError, AttributeError):
            raise CorpusError(f"unknown label {value!r}") from None

    @property
    def slug(self) -> str:
        return self.name.lower()


LABELS = tuple(Label)
N_CLASSES = len(LABELS)


@dataclass(frozen=True)
class Tweet:
    id: str
    text: str
    timestamp: datetime
    replies: int = 0
    likes: int = 0
    retweets: int = 0

    def __post_init__(self):
        if not self.id:
            raise CorpusError("tweet id must be non-empty")
        for name in METRICS:
            if getattr(self, name) < 0:
                raise CorpusError(f"tweet {self.id}: {name} must be >= 0")

    @property
    def sort_key(self):
        return (self.timestamp, self.id)


@dataclass(frozen=True)
class Account:
    handle: str
    label: Label
    tweets: tuple[Tweet, ...] = field(default_factory=tuple)

    @property
    def m(self) -> int:
        return len(self.tweets)


@dataclass(frozen=True)
class Chunk:
    account_handle: str
    index: int
    tweets: tuple[Tweet, ...]
    label: Label


def parse_timestamp(value: str) -> datetime:
    s = value.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    ts = datetime.fromisoformat(s)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _count(record: dict, key: str) -> int:
    value = record.get(key, 0)
    if isinstance(value, bool) or not isinstance(value, int):
        raise CorpusError(f"{key} must be an integer, got {value!r}")
    if value < 0:
        raise CorpusError(f"{key} must be non-negative, got {value}")
    return value


def _parse_record(record: dict) -> tuple[str, Label, Tweet]:
    if not isinstance(record, dict):
        raise CorpusError("record is not a JSON object")
    for key in ("id", "account", "label", "text", "created_at"):
        if key not in record:
            raise CorpusError(f"missing field {key!r}")
    handle = str(record["account"])
    if not handle:
        raise CorpusError("empty account handle")
    label = Label.parse(str(record["label"]))
    try:
        ts = parse_timestamp(str(record["created_at"]))
    except ValueError as exc:
        raise CorpusError(f"bad created_at: {exc}") from None
    tweet = Tweet(
        id=str(record["id"]),
        text=str(record["text"]),
        timestamp=ts,
        replies=_count(record, "replies"),
        likes=_count(record, "likes"),
        retweets=_count(record, "retweets"),
    )
    return handle, label, tweet


def _corpus_files(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.is_file() and p.suffix in (".jsonl", ".json", ".ndjson"))
    return [path]


def load_corpus(path: str | Path) -> list[Account]:
    """Read newline-delimited tweet records from a file or directory.

    Records are grouped by account handle; the result is sorted by handle and
    each account keeps its tweets in file order.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    labels: dict[str, Label] = {}
    tweets: dict[str, list[Tweet]] = {}
    seen_ids: dict[str, set[str]] = {}
    for file in _corpus_files(path):
        with open(file, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    handle, label, tweet = _parse_record(json.loads(line))
                except (json.JSONDecodeError, CorpusError) as exc:
                    raise CorpusError(f"{file}:{lineno}: {exc}") from None
                if labels.setdefault(handle, label) != label:
                    raise CorpusError(f"{file}:{lineno}: account {handle!r} has conflicting labels")
                ids = seen_ids.setdefault(handle, set())
                if tweet.id in ids:
                    raise CorpusError(f"{file}:{lineno}: duplicate tweet id {tweet.id!r} for account {handle!r}")
                ids.add(tweet.id)
                tweets.setdefault(handle, []).append(tweet)
    return [Account(h, labels[h], tuple(tweets[h])) for h in sorted(tweets)]


def tweet_record(account: Account, tweet: Tweet) -> dict:
    return {
        "id": tweet.id,
        "account": account.handle,
        "label": account.label.slug,
        "text": tweet.text,
        "created_at": format_timestamp(tweet.timestamp),
        "replies": tweet.replies,
        "likes": tweet.likes,
        "retweets": tweet.retweets,
    }


def write_corpus(accounts: Iterable[Account], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for account in accounts:
            for tweet in account.tweets:
                fh.write(json.dumps(tweet_record(account, tweet), ensure_ascii=False, sort_keys=True))
                fh.write("\n")


def strip_urls(text: str) -> str:
    return URL_RE.sub(" ", text)


def normalize_text(text: str) -> str:
    """Comparison key for duplicate detection: URLs removed, lowercased, whitespace collapsed."""
    return _WS_RE.sub(" ", strip_urls(text).lower()).strip()


def is_link_only(text: str) -> bool:
    # covers empty text and media placeholders rendered as bare links
    return not strip_urls(text).strip()


def clean_account(account: Account) -> Account:
    kept = []
    seen = set()
    for tweet in account.tweets:
        if is_link_only(tweet.text):
            continue
        key = normalize_text(tweet.text)
        if key in seen:
            continue
        seen.add(key)
        kept.append(tweet)
    if not kept:
        raise CorpusError(f"account {account.handle!r} has no usable tweets after cleaning")
    return replace(account, tweets=tuple(kept))


def sorted_timeline(account: Account) -> list[Tweet]:
    return sorted(account.tweets, key=lambda t: t.sort_key)


def chunk_timeline(account: Account, chunk_size: int) -> list[Chunk]:
    """Split the date-sorted timeline into consecutive chunks of exactly ``chunk_size``.

    The trailing ``m % chunk_size`` tweets are dropped. Accounts shorter than
    one chunk yield no chunks and log a warning.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    timeline = sorted_timeline(account)
    n = len(timeline) // chunk_size
    if n == 0:
        log.warning("account %s has %d tweets < chunk size %d; no chunks", account.handle, len(timeline), chunk_size)
    return [
        Chunk(account.handle, i, tuple(timeline[i * chunk_size:(i + 1) * chunk_size]), account.label)
        for i in range(n)
    ]


@dataclass
class ChunkedCorpus:
    chunks: dict[str, list[Chunk]]
    dropped: dict[str, int]
    excluded: list[str]

    def metadata(self) -> dict:
        return {
            "dropped_tail_tweets": dict(sorted(self.dropped.items())),
            "dropped_tail_total": sum(self.dropped.values()),
            "excluded_accounts": sorted(self.excluded),
        }


def chunk_accounts(accounts: Sequence[Account], chunk_size: int) -> ChunkedCorpus:
    chunks, dropped, excluded = {}, {}, []
    for account in accounts:
        cks = chunk_timeline(account, chunk_size)
        dropped[account.handle] = account.m - len(cks) * chunk_size
        if cks:
            chunks[account.handle] = cks
        else:
            excluded.append(account.handle)
    return ChunkedCorpus(chunks, dropped, excluded)


def select_top_k(account: Account, metric: str, k: int) -> list[Tweet]:
    """The ``k`` tweets with the highest ``metric``, highest first.

    Ties go to the earlier tweet (timestamp, then id).
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(account.tweets, key=lambda t: (-getattr(t, metric), t.timestamp, t.id))
    return ranked[:k]
