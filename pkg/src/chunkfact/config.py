"""Declarative experiment configuration (TOML)."""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .corpus import METRICS
from .features import GROUPS, FeatureConfig
from .seqnet import TrainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BASELINE_KINDS = ("majority", "random", "bow_lr", "lr_tweet", "lr_tweet_topk", "factweet_tweet", "lr_chunk")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LexiconPaths:
    emotion: tuple[Path, ...]
    sentiment: tuple[Path, ...]
    morality: Path
    embeddings: Path


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: Path | None = None
    lexicons: LexiconPaths | None = None
    features: FeatureConfig = field(default_factory=FeatureConfig)
    model: TrainConfig = field(default_factory=TrainConfig)
    search_budget: int = 0
    chunk_size: int = 20
    chunk_sizes: tuple[int, ...] = (1, 5, 10, 20, 40)
    folds: int = 5
    validation_fraction: float = 0.25
    aggregate: str = "per_fold"
    seed: int = 0
    baselines: tuple[str, ...] = BASELINE_KINDS
    l2: float = 1e-2
    bow_min_df: int = 2
    tweet_aggregation: str = "majority"
    topk_metric: str = "replies"
    topk_k: int = 500
    topk_metrics: tuple[str, ...] = METRICS
    topk_values: tuple[int, ...] = (10, 50, 100, 500)
    ablation_model: str = "factweet"

    def __post_init__(self):
        if self.chunk_size < 1 or any(s < 1 for s in self.chunk_sizes) or not self.chunk_sizes:
            raise ConfigError("chunk sizes must be >= 1")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.aggregate not in ("per_fold", "pooled"):
            raise ConfigError("aggregate must be per_fold or pooled")
        if self.tweet_aggregation not in ("majority", "mean_prob"):
            raise ConfigError("tweet_aggregation must be majority or mean_prob")
        unknown = set(self.baselines) - set(BASELINE_KINDS)
        if unknown:
            raise ConfigError(f"unknown baseline kinds: {sorted(unknown)}")
        if self.topk_metric not in METRICS or set(self.topk_metrics) - set(METRICS):
            raise ConfigError(f"top-k metrics must be among {METRICS}")
        if self.topk_k < 1 or any(k < 1 for k in self.topk_values):
            raise ConfigError("top-k values must be >= 1")
        if self.ablation_model not in ("factweet", "lr_chunk"):
            raise ConfigError("ablation_model must be factweet or lr_chunk")
        if self.l2 < 0 or self.search_budget < 0:
            raise ConfigError("l2 and search_budget must be non-negative")

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["features"] = {"groups": list(self.features.enabled_groups), "normalize_counts": self.features.normalize_counts}
        return _plain(d)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _take(section: dict, key: str, default, kind=None):
    if key not in section:
        return default
    value = section.pop(key)
    return kind(value) if kind else value


def _check_empty(name: str, section: dict) -> None:
    if section:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(section)}")


def parse_config(doc: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    base = Path(base_dir)
    doc = {k: (dict(v) if isinstance(v, dict) else v) for k, v in doc.items()}

    def path(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    kw = {}
    top = {k: doc.pop(k) for k in list(doc) if not isinstance(doc[k], dict)}
    kw["seed"] = int(top.pop("seed", 0))
    _check_empty("top level", top)

    corpus = doc.pop("corpus", {})
    if "path" in corpus:
        kw["corpus"] = path(corpus.pop("path"))
    _check_empty("corpus", corpus)

    lex = doc.pop("lexicons", None)
    if lex is not None:
        try:
            emotion = lex.pop("emotion")
            emotion = [emotion] if isinstance(emotion, str) else emotion
            kw["lexicons"] = LexiconPaths(
                emotion=tuple(path(p) for p in emotion),
                sentiment=tuple(path(p) for p in lex.pop("sentiment")),
                morality=path(lex.pop("morality")),
                embeddings=path(lex.pop("embeddings")),
            )
        except KeyError as exc:
            raise ConfigError(f"[lexicons] is missing {exc.args[0]!r}") from None
        _check_empty("lexicons", lex)

    feat = doc.pop("features", {})
    try:
        kw["features"] = FeatureConfig(
            tuple(_take(feat, "groups", GROUPS)), bool(_take(feat, "normalize_counts", True)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _check_empty("features", feat)

    model = doc.pop("model", {})
    kw["search_budget"] = int(_take(model, "search_budget", 0))
    try:
        kw["model"] = TrainConfig.from_dict(model)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[model]: {exc}") from None

    chunks = doc.pop("chunks", {})
    kw["chunk_size"] = int(_take(chunks, "size", 20))
    kw["chunk_sizes"] = tuple(_take(chunks, "sweep", (1, 5, 10, 20, 40)))
    _check_empty("chunks", chunks)

    folds = doc.pop("folds", {})
    kw["folds"] = int(_take(folds, "k", 5))
    kw["validation_fraction"] = float(_take(folds, "validation_fraction", 0.25))
    kw["aggregate"] = str(_take(folds, "aggregate", "per_fold"))
    _check_empty("folds", folds)

    bl = doc.pop("baselines", {})
    kw["baselines"] = tuple(_take(bl, "kinds", BASELINE_KINDS))
    kw["l2"] = float(_take(bl, "l2", 1e-2))
    kw["bow_min_df"] = int(_take(bl, "bow_min_df", 2))
    kw["tweet_aggregation"] = str(_take(bl, "tweet_aggregation", "majority"))
    kw["topk_metric"] = str(_take(bl, "topk_metric", "replies"))
    kw["topk_k"] = int(_take(bl, "topk_k", 500))
    _check_empty("baselines", bl)

    topk = doc.pop("topk", {})
    kw["topk_metrics"] = tuple(_take(topk, "metrics", METRICS))
    kw["topk_values"] = tuple(int(k) for k in _take(topk, "k", (10, 50, 100, 500)))
    _check_empty("topk", topk)

    abl = doc.pop("ablation", {})
    kw["ablation_model"] = str(_take(abl, "model", "factweet"))
    _check_empty("ablation", abl)

    if doc:
        raise ConfigError(f"unknown sections: {sorted(doc)}")
    return ExperimentConfig(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, path.parent)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_config(cfg: ExperimentConfig, base_dir: str | Path | None = None) -> str:
    """Render a config back to TOML; paths are made relative to ``base_dir`` when possible."""
    def rel(p: Path) -> str:
        if base_dir is not None:
            try:
                return str(Path(p).relative_to(base_dir))
            except ValueError:
                pass
        return str(p)

    out = [f"seed = {cfg.seed}", ""]
    if cfg.corpus is not None:
        out += ["[corpus]", f"path = {_toml_value(rel(cfg.corpus))}", ""]
    if cfg.lexicons is not None:
        lx = cfg.lexicons
        out += [
            "[lexicons]",
            f"emotion = {_toml_value([rel(p) for p in lx.emotion])}",
            f"sentiment = {_toml_value([rel(p) for p in lx.sentiment])}",
            f"morality = {_toml_value(rel(lx.morality))}",
            f"embeddings = {_toml_value(rel(lx.embeddings))}",
            "",
        ]
    out += ["[features]", f"groups = {_toml_value(cfg.features.enabled_groups)}",
            f"normalize_counts = {_toml_value(cfg.features.normalize_counts)}", ""]
    out += ["[model]", f"search_budget = {cfg.search_budget}"]
    out += [f"{k} = {_toml_value(0.0 if v is None else v)}" for k, v in cfg.model.to_dict().items()]
    out += ["", "[chunks]", f"size = {cfg.chunk_size}", f"sweep = {_toml_value(cfg.chunk_sizes)}", ""]
    out += ["[folds]", f"k = {cfg.folds}", f"validation_fraction = {cfg.validation_fraction!r}",
            f"aggregate = {_toml_value(cfg.aggregate)}", ""]
    out += ["[baselines]", f"kinds = {_toml_value(cfg.baselines)}", f"l2 = {cfg.l2!r}",
            f"bow_min_df = {cfg.bow_min_df}", f"tweet_aggregation = {_toml_value(cfg.tweet_aggregation)}",
            f"topk_metric = {_toml_value(cfg.topk_metric)}", f"topk_k = {cfg.topk_k}", ""]
    out += ["[topk]", f"metrics = {_toml_value(cfg.topk_metrics)}", f"k = {_toml_value(cfg.topk_values)}", ""]
    out += ["[ablation]", f"model = {_toml_value(cfg.ablation_model)}", ""]
    return "\n".join(out)
