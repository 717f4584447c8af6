import json

import numpy as np
import pytest

from chunkfact.corpus import Label
from chunkfact.seqnet import (
    PARAM_NAMES,
    SeqNetParams,
    Standardizer,
    TrainConfig,
    TrainingError,
    attention_pool,
    forward,
    hyper_search,
    load_checkpoint,
    loss_and_grads,
    loss_value,
    lstm_forward,
    majority_vote,
    predict_account,
    predict_chunk,
    predict_proba,
    sample_configs,
    save_checkpoint,
    softmax,
    train,
)


def numeric_grad(params, X, y, name, eps=1e-6):
    arr = getattr(params, name)
    g = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        old = arr[idx]
        arr[idx] = old + eps
        up = loss_value(params, X, y)
        arr[idx] = old - eps
        down = loss_value(params, X, y)
        arr[idx] = old
        g[idx] = (up - down) / (2 * eps)
    return g


def zeros(D, H, act="tanh"):
    return SeqNetParams(
        W_x=np.zeros((4 * H, D)), W_h=np.zeros((4 * H, H)), b=np.zeros(4 * H),
        W_a=np.zeros((H, H)), b_a=np.zeros(H), u=np.zeros(H),
        W_o=np.zeros((4, H)), b_o=np.zeros(4), activation=act,
    )


class TestLSTM:
    def test_zero_params_give_zero_states(self):
        rng = np.random.default_rng(0)
        h = lstm_forward(zeros(3, 1), rng.normal(size=(6, 3)))
        np.testing.assert_array_equal(h, np.zeros((6, 1)))

    def test_scalar_step(self):
        p = zeros(1, 1)
        p.W_x[:, 0] = [0.5, -0.3, 0.8, 1.2]
        p.b[:] = [0.1, 1.0, -0.2, 0.0]
        # i = s(1.1), g = tanh(1.4), o = s(2.4), c = i*g, h = o*tanh(c)
        assert lstm_forward(p, [[2.0]])[0, 0] == pytest.approx(0.5328424793501374, abs=1e-12)

    def test_eval_mode_ignores_rng(self):
        p = SeqNetParams.init(4, 3, rng=1)
        x = np.random.default_rng(2).normal(size=(5, 4))
        a = lstm_forward(p, x, dropout=0.5, training=False, rng=1)
        b = lstm_forward(p, x, dropout=0.5, training=False, rng=99)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, lstm_forward(p, x, dropout=0.5, training=True, rng=1))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            lstm_forward(SeqNetParams.init(4, 2, rng=0), np.zeros((3, 5)))


class TestAttention:
    def test_single_step(self):
        p = SeqNetParams.init(2, 3, rng=0)
        h = np.array([[0.1, -0.2, 0.3]])
        ctx, alpha = attention_pool(p, h)
        np.testing.assert_array_equal(alpha, [1.0])
        np.testing.assert_allclose(ctx, h[0])

    def test_identical_states(self):
        p = SeqNetParams.init(2, 3, activation="selu", rng=0)
        h = np.tile([0.4, 0.1, -0.7], (4, 1))
        ctx, alpha = attention_pool(p, h)
        np.testing.assert_allclose(alpha, np.full(4, 0.25))
        np.testing.assert_allclose(ctx, h[0])

    def test_two_states_by_hand(self):
        p = zeros(1, 1)
        p.W_a[0, 0] = 1.0
        p.u[0] = 2.0
        ctx, alpha = attention_pool(p, np.array([[0.5], [-0.25]]))
        # e = 2 tanh(h); alpha_1 = 1 / (1 + exp(e_2 - e_1))
        assert alpha[0] == pytest.approx(0.8044073538442122, abs=1e-12)
        assert ctx[0] == pytest.approx(0.3533055153831592, abs=1e-12)


class TestHead:
    def test_zero_head_is_uniform(self):
        p = SeqNetParams.init(3, 2, rng=0)
        p.W_o[:] = 0
        p.b_o[:] = 0
        probs = predict_proba(p, Standardizer.identity(3), np.ones((2, 5, 3)))
        np.testing.assert_allclose(probs, 0.25)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(0)
        for trial in range(1000):
            p = SeqNetParams.init(3, 2, activation=("relu", "selu", "tanh")[trial % 3], rng=trial)
            p.W_o *= 10
            logits, _ = forward(p, rng.normal(size=(1, 3, 3)))
            assert abs(softmax(logits).sum() - 1.0) <= 1e-6

    def test_dominant_logit(self):
        p = zeros(2, 2)
        p.b_o[:] = [8.0, 1.0, 0.5, 0.0]
        pred = predict_chunk(p, Standardizer.identity(2), np.zeros((3, 2)))
        assert pred.predicted is Label.PROPAGANDA
        assert pred.probabilities[0] == pytest.approx(np.exp(8) / (np.exp(8) + np.exp(1) + np.exp(0.5) + 1))


@pytest.mark.parametrize("activation", ["tanh", "relu", "selu"])
def test_gradients_match_finite_differences(activation):
    rng = np.random.default_rng(7)
    p = SeqNetParams.init(4, 3, activation, rng=rng)
    p.b_a += 0.3  # keep relu pre-activations off the kink
    X = rng.normal(size=(3, 4, 4))
    y = np.array([0, 2, 3])
    _, grads = loss_and_grads(p, X, y)
    for name in PARAM_NAMES:
        num = numeric_grad(p, X, y, name)
        np.testing.assert_allclose(grads[name], num, rtol=1e-5, atol=1e-8, err_msg=name)


def test_gradients_with_dropout_masks():
    rng = np.random.default_rng(3)
    p = SeqNetParams.init(3, 2, rng=rng)
    X = rng.normal(size=(2, 3, 3))
    y = np.array([1, 0])
    in_mask = (rng.random(X.shape) < 0.7) / 0.7
    att_mask = (rng.random((2, 3, 2)) < 0.7) / 0.7
    _, grads = loss_and_grads(p, X, y, in_mask=in_mask, att_mask=att_mask)
    eps = 1e-6
    for name in PARAM_NAMES:
        arr = getattr(p, name)
        idx = tuple(0 for _ in arr.shape)
        old = arr[idx]
        arr[idx] = old + eps
        up = loss_value(p, X, y, in_mask=in_mask, att_mask=att_mask)
        arr[idx] = old - eps
        down = loss_value(p, X, y, in_mask=in_mask, att_mask=att_mask)
        arr[idx] = old
        assert grads[name][idx] == pytest.approx((up - down) / (2 * eps), rel=1e-5, abs=1e-9)


class TestVote:
    def test_strict_majority(self):
        probas = np.eye(4)[[0, 0, 3]]
        assert majority_vote(probas) == 0

    def test_tie_by_mean_probability(self):
        probas = np.array([[0.6, 0.1, 0.1, 0.2], [0.4, 0.0, 0.05, 0.55]])
        assert majority_vote(probas) == Label.PROPAGANDA

    def test_tie_flips_with_probabilities(self):
        probas = np.array([[0.5, 0.1, 0.1, 0.3], [0.2, 0.0, 0.0, 0.8]])
        assert majority_vote(probas) == Label.REAL

    def test_full_tie_lowest_index(self):
        assert majority_vote(np.array([[0.0, 0.5, 0.5, 0.0]])) == 1

    def test_single_chunk(self):
        assert majority_vote(np.eye(4)[[2]]) == Label.HOAX

    def test_predict_account(self):
        p = zeros(2, 2)
        p.b_o[:] = [0, 0, 3, 0]
        label, chunks = predict_account(p, Standardizer.identity(2), [np.zeros((4, 2))] * 3)
        assert label is Label.HOAX
        assert len(chunks) == 3


def separable(n=50, T=5, D=6, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, T, D))
    X[:, :, 0] += np.where(y == 0, -2.0, 2.0)[:, None]
    return X, y


class TestTrain:
    def test_zero_epochs(self):
        X, y = separable()
        res = train(X, y, TrainConfig(epochs=0, hidden_size=8), require_all_classes=False)
        assert res.history == []
        init = SeqNetParams.init(6, 8, "tanh", np.random.default_rng(0))
        for name in PARAM_NAMES:
            np.testing.assert_array_equal(getattr(res.params, name), getattr(init, name))

    def test_separable_task(self):
        X, y = separable()
        # the linear oracle separates these chunks first
        from chunkfact.baselines import lr_train, lr_predict_proba

        flat = X.reshape(len(X), -1)
        lr = lr_train(flat, y, l2=0.0)
        assert (lr_predict_proba(lr, flat).argmax(axis=1) == y).all()
        res = train(X, y, TrainConfig(epochs=200, hidden_size=8, learning_rate=1e-2), require_all_classes=False)
        pred = predict_proba(res.params, res.stats, X).argmax(axis=1)
        assert (pred == y).mean() == 1.0

    def test_missing_class(self):
        X, y = separable()
        with pytest.raises(TrainingError, match="clickbait"):
            train(X, y * 2, TrainConfig(epochs=1))

    def test_bit_identical(self):
        X, y = separable(40)
        y = np.arange(40) % 4
        cfg = TrainConfig(epochs=5, dropout=0.3, attention_dropout=0.2, seed=11)
        a = train(X, y, cfg)
        b = train(X, y, cfg)
        assert a.history[-1]["train_loss"] == b.history[-1]["train_loss"]
        for name in PARAM_NAMES:
            assert np.array_equal(getattr(a.params, name), getattr(b.params, name))

    @pytest.mark.parametrize("opt", ["sgd", "adam", "rmsprop"])
    def test_one_step_lowers_loss(self, opt):
        X, y = separable(16)
        y = np.arange(16) % 4
        lr = {"sgd": 1e-1, "adam": 1e-3, "rmsprop": 1e-3}[opt]
        cfg = TrainConfig(optimizer=opt, learning_rate=lr, epochs=1, batch_size=16, hidden_size=4, clip_norm=None)
        before = train(X, y, TrainConfig(epochs=0, hidden_size=4))
        after = train(X, y, cfg)
        Xs = before.stats(X)
        assert loss_value(after.params, Xs, y) < loss_value(before.params, Xs, y)

    def test_standardizer_from_train_only(self):
        X, y = separable(8)
        y = np.arange(8) % 4
        res = train(X, y, TrainConfig(epochs=0))
        np.testing.assert_allclose(res.stats.mean, X.reshape(-1, 6).mean(axis=0))
        const = np.ones((8, 5, 6))
        assert np.all(Standardizer.fit(const).std >= 1e-8)

    def test_validation_restores_best(self):
        X, y = separable(24)
        y = np.arange(24) % 4
        res = train(X, y, TrainConfig(epochs=6, patience=2), val=(X[:8], y[:8]))
        assert 1 <= res.best_epoch <= 6
        assert {"val_loss", "val_macro_f1"} <= set(res.history[0])

    def test_divergence_names_epoch(self, monkeypatch):
        import chunkfact.seqnet as sn

        X, y = separable(8)
        y = np.arange(8) % 4
        real = sn.loss_and_grads
        calls = iter(range(100))

        def flaky(*args, **kw):
            loss, grads = real(*args, **kw)
            return (float("nan") if next(calls) == 2 else loss), grads

        monkeypatch.setattr(sn, "loss_and_grads", flaky)
        with pytest.raises(TrainingError, match="epoch 2"):
            train(X, y, TrainConfig(epochs=3, batch_size=4))

    def test_non_finite_input_rejected(self):
        X, y = separable(8)
        X[0, 0, 0] = np.inf
        with pytest.raises(ValueError):
            train(X, np.arange(8) % 4, TrainConfig(epochs=1))


class TestSearch:
    def data(self):
        X, _ = separable(32, seed=4)
        y = np.arange(32) % 4
        groups = [f"acct{i % 8}" for i in range(32)]
        return X, y, groups

    def test_budget_one(self):
        X, y, g = self.data()
        base = TrainConfig(epochs=2)
        res = hyper_search(base, 1, (X, y), (X[:8], y[:8], g[:8]), seed=5)
        assert res.config == sample_configs(base, 1, 5)[0]
        assert len(res.trials) == 1

    def test_grid_sampling_reproducible(self):
        a = sample_configs(TrainConfig(), 6, seed=9)
        assert a == sample_configs(TrainConfig(), 6, seed=9)
        for c in a:
            assert c.hidden_size in (16, 32, 64) and c.batch_size in (4, 8, 16)
            assert 0.0 <= c.dropout <= 0.9

    def test_best_trial_selected(self, monkeypatch, tmp_path):
        import chunkfact.seqnet as sn

        scores = iter([0.4, 0.6])
        monkeypatch.setattr(sn, "account_macro_f1", lambda *a: next(scores))
        X, y, g = self.data()
        base = TrainConfig(epochs=1)
        res = hyper_search(base, 2, (X, y), (X[:8], y[:8], g[:8]), seed=1, trial_log=tmp_path / "t.jsonl")
        assert res.config == sample_configs(base, 2, 1)[1]
        lines = (tmp_path / "t.jsonl").read_text().splitlines()
        assert [json.loads(line)["val_macro_f1"] for line in lines] == [0.4, 0.6]


def test_checkpoint_round_trip(tmp_path):
    X, _ = separable(8)
    y = np.arange(8) % 4
    cfg = TrainConfig(epochs=1, activation="selu")
    res = train(X, y, cfg)
    save_checkpoint(tmp_path / "m.json", res.params, res.stats, cfg)
    params, stats, back = load_checkpoint(tmp_path / "m.json")
    assert back == cfg
    np.testing.assert_array_equal(predict_proba(params, stats, X), predict_proba(res.params, res.stats, X))


def test_checkpoint_rejects_other_files(tmp_path):
    (tmp_path / "x.json").write_text('{"format": "other"}')
    with pytest.raises(ValueError, match="not a model checkpoint"):
        load_checkpoint(tmp_path / "x.json")
