"""LSTM + attention chunk classifier with hand-written backpropagation.

A chunk is a ``(T, D)`` matrix of tweet vectors. The LSTM runs over the T
tweets from a zero state; additive attention pools the hidden states into a
single context vector that feeds a 4-way softmax. Accounts are labelled by a
majority vote over their chunks.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import LABELS, N_CLASSES, Label

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
ACTIVATIONS = ("relu", "selu", "tanh")
OPTIMIZERS = ("sgd", "adam", "rmsprop")
PARAM_NAMES = ("W_x", "W_h", "b", "W_a", "b_a", "u", "W_o", "b_o")
STD_FLOOR = 1e-8

_SELU_ALPHA = 1.6732632423543772
_SELU_SCALE = 1.0507009873554805


class TrainingError(RuntimeError):
    pass


def _act(name: str, x: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(x)
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "selu":
        return _SELU_SCALE * np.where(x > 0, x, _SELU_ALPHA * np.expm1(np.minimum(x, 0.0)))
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # y = act(x)
    if name == "tanh":
        return 1.0 - y * y
    if name == "relu":
        return (x > 0).astype(x.dtype)
    return np.where(x > 0, _SELU_SCALE, y + _SELU_SCALE * _SELU_ALPHA)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class SeqNetParams:
    W_x: np.ndarray  # (4H, D) gates in order i, f, g, o
    W_h: np.ndarray  # (4H, H)
    b: np.ndarray    # (4H,)
    W_a: np.ndarray  # (H, H)
    b_a: np.ndarray  # (H,)
    u: np.ndarray    # (H,)
    W_o: np.ndarray  # (C, H)
    b_o: np.ndarray  # (C,)
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        H, D = self.hidden_size, self.input_dim
        expected = {
            "W_x": (4 * H, D), "W_h": (4 * H, H), "b": (4 * H,),
            "W_a": (H, H), "b_a": (H,), "u": (H,),
            "W_o": (N_CLASSES, H), "b_o": (N_CLASSES,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def input_dim(self) -> int:
        return self.W_x.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.W_h.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def copy(self) -> "SeqNetParams":
        return replace(self, **{n: a.copy() for n, a in self.arrays().items()})

    @classmethod
    def init(cls, input_dim: int, hidden_size: int, activation: str = "tanh", rng=None) -> "SeqNetParams":
        """Glorot-uniform weights, forget-gate bias 1, other biases 0."""
        rng = np.random.default_rng(rng)
        D, H = input_dim, hidden_size

        def glorot(rows, cols):
            lim = math.sqrt(6.0 / (rows + cols))
            return rng.uniform(-lim, lim, size=(rows, cols))

        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        return cls(
            W_x=glorot(4 * H, D), W_h=glorot(4 * H, H), b=b,
            W_a=glorot(H, H), b_a=np.zeros(H), u=glorot(1, H)[0],
            W_o=glorot(N_CLASSES, H), b_o=np.zeros(N_CLASSES),
            activation=activation,
        )


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        flat = X.reshape(-1, X.shape[-1])
        return cls(flat.mean(axis=0), np.maximum(flat.std(axis=0), STD_FLOOR))

    @classmethod
    def identity(cls, dim: int) -> "Standardizer":
        return cls(np.zeros(dim), np.ones(dim))

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


# -- forward / backward ------------------------------------------------------

@dataclass
class _Cache:
    x: np.ndarray
    gates: list
    cs: list
    hs: np.ndarray
    h_att: np.ndarray
    a_pre: np.ndarray
    a: np.ndarray
    alpha: np.ndarray
    ctx: np.ndarray
    att_mask: np.ndarray | None


def _check_input(params: SeqNetParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] < 1:
        raise ValueError("expected input of shape (batch, T, D) with T >= 1")
    if X.shape[2] != params.input_dim:
        raise ValueError(f"input dimension {X.shape[2]} does not match model dimension {params.input_dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite values in model input")
    return X


def _lstm(params: SeqNetParams, x: np.ndarray):
    B, T, _ = x.shape
    H = params.hidden_size
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    xw = x @ params.W_x.T + params.b
    hs = np.empty((B, T, H))
    gates, cs = [], [c]
    for t in range(T):
        z = xw[:, t] + h @ params.W_h.T
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = _sigmoid(z[:, 3 * H:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[:, t] = h
        gates.append((i, f, g, o, tc))
        cs.append(c)
    return hs, gates, cs


def lstm_forward(params: SeqNetParams, seq, dropout: float = 0.0, training: bool = False, rng=None) -> np.ndarray:
    """Hidden states ``h_1..h_T`` for one sequence (``(T, D)`` -> ``(T, H)``).

    Inverted dropout is applied to the inputs only when ``training``.
    """
    x = _check_input(params, seq)
    if training and dropout > 0:
        x = x * _dropout_mask(np.random.default_rng(rng), x.shape, dropout)
    return _lstm(params, x)[0][0]


def attention_pool(params: SeqNetParams, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Context vector and attention weights for hidden states ``(T, H)``."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] < 1:
        raise ValueError("expected hidden states of shape (T, H) with T >= 1")
    a = _act(params.activation, h @ params.W_a.T + params.b_a)
    alpha = softmax(a @ params.u)
    return alpha @ h, alpha


def _dropout_mask(rng, shape, rate):
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


def forward(params: SeqNetParams, X: np.ndarray, in_mask=None, att_mask=None) -> tuple[np.ndarray, _Cache]:
    """Logits ``(B, C)`` for a batch of chunks plus the backward cache."""
    X = _check_input(params, X)
    x = X if in_mask is None else X * in_mask
    hs, gates, cs = _lstm(params, x)
    h_att = hs if att_mask is None else hs * att_mask
    a_pre = h_att @ params.W_a.T + params.b_a
    a = _act(params.activation, a_pre)
    alpha = softmax(a @ params.u, axis=1)
    ctx = np.einsum("bt,bth->bh", alpha, hs)
    logits = ctx @ params.W_o.T + params.b_o
    return logits, _Cache(x, gates, cs, hs, h_att, a_pre, a, alpha, ctx, att_mask)


def backward(params: SeqNetParams, cache: _Cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    H = params.hidden_size
    B, T, _ = cache.x.shape
    grads = {}
    grads["W_o"] = dlogits.T @ cache.ctx
    grads["b_o"] = dlogits.sum(axis=0)
    dctx = dlogits @ params.W_o

    # attention
    dalpha = np.einsum("bh,bth->bt", dctx, cache.hs)
    dhs = cache.alpha[:, :, None] * dctx[:, None, :]
    de = cache.alpha * (dalpha - (cache.alpha * dalpha).sum(axis=1, keepdims=True))
    grads["u"] = np.einsum("bt,bth->h", de, cache.a)
    da_pre = de[:, :, None] * params.u * _act_grad(params.activation, cache.a_pre, cache.a)
    grads["W_a"] = np.einsum("bti,btj->ij", da_pre, cache.h_att)
    grads["b_a"] = da_pre.sum(axis=(0, 1))
    dh_att = da_pre @ params.W_a
    dhs = dhs + (dh_att if cache.att_mask is None else dh_att * cache.att_mask)

    # LSTM, back through time
    dz_all = np.empty((B, T, 4 * H))
    dW_h = np.zeros_like(params.W_h)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i, f, g, o, tc = cache.gates[t]
        c_prev = cache.cs[t]
        dh = dhs[:, t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dz = dz_all[:, t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = do * o * (1.0 - o)
        dc_next = dc * f
        if t > 0:
            dW_h += dz.T @ cache.hs[:, t - 1]
        dh_next = dz @ params.W_h
    grads["W_h"] = dW_h
    grads["W_x"] = np.einsum("btk,btd->kd", dz_all, cache.x)
    grads["b"] = dz_all.sum(axis=(0, 1))
    return grads


def cross_entropy(logits: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Mean (optionally sample-weighted) cross-entropy and its gradient w.r.t. logits."""
    B = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    w = np.ones(B) if weights is None else weights
    nll = -logp[np.arange(B), y]
    dlogits = np.exp(logp)
    dlogits[np.arange(B), y] -= 1.0
    dlogits *= (w / B)[:, None]
    return float((w * nll).sum() / B), dlogits


def loss_and_grads(params: SeqNetParams, X, y, weights=None, in_mask=None, att_mask=None):
    logits, cache = forward(params, X, in_mask, att_mask)
    loss, dlogits = cross_entropy(logits, np.asarray(y), weights)
    return loss, backward(params, cache, dlogits)


def loss_value(params: SeqNetParams, X, y, weights=None, in_mask=None, att_mask=None) -> float:
    logits, _ = forward(params, X, in_mask, att_mask)
    return cross_entropy(logits, np.asarray(y), weights)[0]


# -- prediction --------------------------------------------------------------

@dataclass(frozen=True)
class ChunkPrediction:
    probabilities: np.ndarray
    predicted: Label


def predict_proba(params: SeqNetParams, stats: Standardizer, X: np.ndarray, batch: int = 512) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    out = [softmax(forward(params, stats(X[s:s + batch]))[0]) for s in range(0, len(X), batch)]
    return np.concatenate(out) if out else np.zeros((0, N_CLASSES))


def predict_chunk(params: SeqNetParams, stats: Standardizer, chunk_features) -> ChunkPrediction:
    if not isinstance(chunk_features, np.ndarray) and len(chunk_features) and hasattr(chunk_features[0], "values"):
        chunk_features = np.stack([tv.values for tv in chunk_features])
    p = predict_proba(params, stats, np.asarray(chunk_features))[0]
    return ChunkPrediction(p, LABELS[int(np.argmax(p))])


def majority_vote(probas: np.ndarray) -> int:
    """Most frequent argmax; ties by highest mean probability, then lowest index."""
    probas = np.asarray(probas)
    if probas.ndim != 2 or len(probas) == 0:
        raise ValueError("majority vote needs at least one prediction")
    counts = np.bincount(probas.argmax(axis=1), minlength=probas.shape[1])
    tied = np.flatnonzero(counts == counts.max())
    if len(tied) == 1:
        return int(tied[0])
    means = probas.mean(axis=0)[tied]
    return int(tied[np.flatnonzero(means == means.max())[0]])


def predict_account(params: SeqNetParams, stats: Standardizer, chunks) -> tuple[Label, list[ChunkPrediction]]:
    """Account label by majority vote over its chunk predictions."""
    if len(chunks) == 0:
        raise ValueError("account has no chunks")
    X = np.stack([np.asarray(c) if isinstance(c, np.ndarray) else np.stack([tv.values for tv in c]) for c in chunks])
    probas = predict_proba(params, stats, X)
    preds = [ChunkPrediction(p, LABELS[int(np.argmax(p))]) for p in probas]
    return LABELS[majority_vote(probas)], preds


# -- training ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-2
    dropout: float = 0.0
    attention_dropout: float = 0.0
    batch_size: int = 16
    epochs: int = 30
    seed: int = 0
    patience: int = 0  # 0 disables early stopping
    hidden_size: int = 16
    activation: str = "tanh"
    class_weights: bool = False
    clip_norm: float | None = 5.0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if not 1e-5 <= self.learning_rate <= 1e-1:
            raise ValueError("learning_rate must lie in [1e-5, 1e-1]")
        for name in ("dropout", "attention_dropout"):
            if not 0.0 <= getattr(self, name) <= 0.9:
                raise ValueError(f"{name} must lie in [0, 0.9]")
        if self.batch_size < 1 or self.hidden_size < 1 or self.epochs < 0 or self.patience < 0:
            raise ValueError("batch_size and hidden_size must be positive; epochs and patience non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown model settings: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


class _Optimizer:
    def __init__(self, kind: str, lr: float):
        self.kind, self.lr = kind, lr
        self.state: dict = {}
        self.t = 0

    def step(self, arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, p in arrays.items():
            g = grads[name]
            if self.kind == "sgd":
                p -= self.lr * g
            elif self.kind == "rmsprop":
                v = self.state.setdefault(name, np.zeros_like(p))
                v *= 0.9
                v += 0.1 * g * g
                p -= self.lr * g / (np.sqrt(v) + 1e-8)
            else:
                m, v = self.state.setdefault(name, (np.zeros_like(p), np.zeros_like(p)))
                m *= 0.9
                m += 0.1 * g
                v *= 0.999
                v += 0.001 * g * g
                mhat = m / (1 - 0.9 ** self.t)
                vhat = v / (1 - 0.999 ** self.t)
                p -= self.lr * mhat / (np.sqrt(vhat) + 1e-8)


def macro_f1_score(y_true, y_pred, n_classes: int = N_CLASSES) -> float:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    f1 = []
    for c in range(n_classes):
        tp = np.sum((y_true == c) & (y_pred == c))
        denom = np.sum(y_true == c) + np.sum(y_pred == c)
        f1.append(2.0 * tp / denom if tp else 0.0)
    return float(np.mean(f1))


def class_weight_vector(y: np.ndarray) -> np.ndarray:
    counts = np.bincount(y, minlength=N_CLASSES).astype(float)
    w = np.where(counts > 0, len(y) / (N_CLASSES * np.maximum(counts, 1)), 0.0)
    return w


@dataclass
class TrainResult:
    params: SeqNetParams
    stats: Standardizer
    history: list[dict] = field(default_factory=list)
    best_epoch: int | None = None


def train(X: np.ndarray, y: np.ndarray, cfg: TrainConfig, val: tuple[np.ndarray, np.ndarray] | None = None,
          require_all_classes: bool = True) -> TrainResult:
    """Fit the chunk model on raw (unstandardized) features ``X`` of shape ``(N, T, D)``.

    Standardization statistics come from the training tweets only. With a
    validation split the parameters from the epoch with the best validation
    macro-F1 (lower validation loss breaks ties) are returned. Every label must
    have training chunks unless ``require_all_classes`` is off.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 3 or len(X) != len(y) or len(X) == 0:
        raise ValueError("expected X of shape (N, T, D) and N labels")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite values in training input")
    missing = [LABELS[c].slug for c in range(N_CLASSES) if not np.any(y == c)]
    if missing and require_all_classes:
        raise TrainingError(f"classes absent from training split: {missing}")
    rng = np.random.default_rng(cfg.seed)
    params = SeqNetParams.init(X.shape[2], cfg.hidden_size, cfg.activation, rng)
    stats = Standardizer.fit(X)
    result = TrainResult(params, stats)
    if cfg.epochs == 0:
        return result

    Xs = stats(X)
    Xv = yv = None
    if val is not None and len(val[0]):
        Xv, yv = stats(np.asarray(val[0], dtype=np.float64)), np.asarray(val[1], dtype=np.int64)
    weights = class_weight_vector(y) if cfg.class_weights else None
    opt = _Optimizer(cfg.optimizer, cfg.learning_rate)
    arrays = params.arrays()
    best_key, best_params, stale = None, None, 0
    N = len(Xs)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(N)
        total = 0.0
        for s in range(0, N, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            xb = Xs[idx]
            in_mask = _dropout_mask(rng, xb.shape, cfg.dropout) if cfg.dropout > 0 else None
            att_mask = (_dropout_mask(rng, xb.shape[:2] + (cfg.hidden_size,), cfg.attention_dropout)
                        if cfg.attention_dropout > 0 else None)
            wb = None if weights is None else weights[y[idx]]
            loss, grads = loss_and_grads(params, xb, y[idx], wb, in_mask, att_mask)
            if not math.isfinite(loss):
                raise TrainingError(f"training diverged: non-finite loss at epoch {epoch}")
            if cfg.clip_norm:
                norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
                if norm > cfg.clip_norm:
                    for g in grads.values():
                        g *= cfg.clip_norm / norm
            opt.step(arrays, grads)
            total += loss * len(idx)
        record = {"epoch": epoch, "train_loss": total / N}
        if not all(np.all(np.isfinite(a)) for a in arrays.values()):
            raise TrainingError(f"training diverged: non-finite parameters at epoch {epoch}")
        if Xv is not None:
            logits = np.concatenate([forward(params, Xv[s:s + 512])[0] for s in range(0, len(Xv), 512)])
            vloss = cross_entropy(logits, yv)[0]
            vf1 = macro_f1_score(yv, logits.argmax(axis=1))
            record.update(val_loss=vloss, val_macro_f1=vf1)
            key = (vf1, -vloss)
            if best_key is None or key > best_key:
                best_key, best_params, stale = key, params.copy(), 0
                result.best_epoch = epoch
            else:
                stale += 1
        result.history.append(record)
        if Xv is not None and cfg.patience and stale >= cfg.patience:
            log.debug("early stop at epoch %d", epoch)
            break
    if best_params is not None:
        result.params = best_params
    return result


# -- hyper-parameter search --------------------------------------------------

DEFAULT_SPACE = {
    "hidden_size": (16, 32, 64),
    "dropout": (0.0, 0.9),
    "activation": ACTIVATIONS,
    "optimizer": OPTIMIZERS,
    "learning_rate": (1e-1, 1e-2, 1e-3, 1e-4, 1e-5),
    "batch_size": (4, 8, 16),
}


def sample_configs(base: TrainConfig, budget: int, seed: int, space: dict | None = None) -> list[TrainConfig]:
    """Random draws from the search grid; dropout is uniform over its range."""
    space = space or DEFAULT_SPACE
    rng = np.random.default_rng(seed)
    out = []
    for trial in range(budget):
        lo, hi = space["dropout"]
        out.append(replace(
            base,
            hidden_size=int(rng.choice(space["hidden_size"])),
            dropout=round(float(rng.uniform(lo, hi)), 6),
            activation=str(rng.choice(space["activation"])),
            optimizer=str(rng.choice(space["optimizer"])),
            learning_rate=float(rng.choice(space["learning_rate"])),
            batch_size=int(rng.choice(space["batch_size"])),
            seed=int(seed * 1_000_003 + trial) % (2**63),
        ))
    return out


def account_macro_f1(params, stats, X, y, groups) -> float:
    """Macro-F1 over accounts, each labelled by majority vote of its chunks."""
    probas = predict_proba(params, stats, X)
    groups = np.asarray(groups)
    y = np.asarray(y)
    truth, pred = [], []
    for g in dict.fromkeys(groups.tolist()):
        sel = groups == g
        truth.append(int(y[sel][0]))
        pred.append(majority_vote(probas[sel]))
    return macro_f1_score(truth, pred)


@dataclass
class SearchResult:
    config: TrainConfig
    model: TrainResult
    trials: list[dict]


def hyper_search(
    base: TrainConfig,
    budget: int,
    train_data: tuple[np.ndarray, np.ndarray],
    val_data: tuple[np.ndarray, np.ndarray, Sequence],
    seed: int,
    space: dict | None = None,
    trial_log: str | Path | None = None,
) -> SearchResult:
    """Random search selected by account-level validation macro-F1 (earlier trial wins ties)."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    Xv, yv, gv = val_data
    if len(Xv) == 0:
        raise ValueError("empty validation split")
    best = None
    trials = []
    for trial, cfg in enumerate(sample_configs(base, budget, seed, space)):
        try:
            model = train(*train_data, cfg, val=(Xv, yv))
            score = account_macro_f1(model.params, model.stats, Xv, yv, gv)
        except TrainingError as exc:
            log.info("trial %d failed: %s", trial, exc)
            model, score = None, float("-inf")
        trials.append({"trial": trial, "config": cfg.to_dict(), "val_macro_f1": score})
        if model is not None and (best is None or score > best[0]):
            best = (score, cfg, model)
    if trial_log is not None:
        with open(trial_log, "a", encoding="utf-8") as fh:
            for rec in trials:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    if best is None:
        raise TrainingError("every search trial diverged")
    return SearchResult(best[1], best[2], trials)


# -- checkpoints -------------------------------------------------------------

def _pack(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel(order="C")]}


def _unpack(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])


def save_checkpoint(path: str | Path, params: SeqNetParams, stats: Standardizer, config: TrainConfig | None = None) -> None:
    doc = {
        "format": "chunkfact-seqnet",
        "version": CHECKPOINT_VERSION,
        "input_dim": params.input_dim,
        "hidden_size": params.hidden_size,
        "activation": params.activation,
        "labels": [lab.slug for lab in LABELS],
        "params": {n: _pack(a) for n, a in params.arrays().items()},
        "standardization": {"mean": _pack(stats.mean), "std": _pack(stats.std)},
        "config": None if config is None else config.to_dict(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[SeqNetParams, Standardizer, TrainConfig | None]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != "chunkfact-seqnet" or "version" not in doc:
        raise ValueError(f"{path}: not a model checkpoint")
    if doc["version"] != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc['version']}")
    if doc["labels"] != [lab.slug for lab in LABELS]:
        raise ValueError(f"{path}: label ordering mismatch")
    params = SeqNetParams(**{n: _unpack(doc["params"][n]) for n in PARAM_NAMES}, activation=doc["activation"])
    if params.input_dim != doc["input_dim"] or params.hidden_size != doc["hidden_size"]:
        raise ValueError(f"{path}: inconsistent dimensions")
    stats = Standardizer(_unpack(doc["standardization"]["mean"]), _unpack(doc["standardization"]["std"]))
    cfg = None if doc.get("config") is None else TrainConfig.from_dict(doc["config"])
    return params, stats, cfg
