"""Account-level factuality classification from chronologically chunked tweet timelines."""

__version__ = "0.1.0"

from .corpus import Account, Chunk, Label, Tweet, chunk_timeline, clean_account, load_corpus, select_top_k
from .features import FeatureConfig, TweetVector, featurize_chunk, featurize_tweet, tokenize
from .lexicons import CategoryLexicon, EmbeddingTable, LexiconSet, load_category_lexicon, load_embeddings
from .seqnet import SeqNetParams, TrainConfig, predict_account, predict_chunk, train

__all__ = [
    "Account", "Chunk", "Label", "Tweet", "chunk_timeline", "clean_account", "load_corpus", "select_top_k",
    "FeatureConfig", "TweetVector", "featurize_chunk", "featurize_tweet", "tokenize",
    "CategoryLexicon", "EmbeddingTable", "LexiconSet", "load_category_lexicon", "load_embeddings",
    "SeqNetParams", "TrainConfig", "predict_account", "predict_chunk", "train",
]
