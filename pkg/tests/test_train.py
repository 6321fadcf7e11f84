import json

import numpy as np
import pytest

from orim.data import Dataset, Split, load_mnist, split_dataset
from orim.errors import DimensionError, DivergenceError
from orim.gcnn import (
    Architecture,
    Network,
    SoftmaxCrossEntropy,
    load_checkpoint,
    save_checkpoint,
)
from orim.train import Adam, History, SGDMomentum, TrainConfig, evaluate, train


@pytest.fixture(scope="module")
def mnist_small():
    return split_dataset(load_mnist(), 100, 50, 1000, seed=0)


def small_config(**kw):
    base = dict(epochs=1, batch_size=50, channels=4, seed=1)
    base.update(kw)
    return TrainConfig(**base)


def test_one_epoch_smoke(mnist_small, tmp_path):
    tr, va, _ = mnist_small
    res = train(small_config(), tr, va, tmp_path)
    losses = res.history.series("train", "loss")
    assert len(losses) == 1 and np.isfinite(losses[0])
    header = (tmp_path / "metrics.csv").read_text().splitlines()[0]
    assert header == "epoch,split,loss,accuracy"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["schema"] == "orim/1" and summary["best_epoch"] == 1
    assert (tmp_path / "best" / "params.bin").exists()


def test_same_seed_same_trace(mnist_small):
    tr, va, _ = mnist_small
    a = train(small_config(epochs=2, variant="gcnn-flatten"), tr, va)
    b = train(small_config(epochs=2, variant="gcnn-flatten"), tr, va)
    assert a.history.rows == b.history.rows
    np.testing.assert_array_equal(a.model.get_flat(), b.model.get_flat())


def test_best_validation_weights_are_kept(mnist_small):
    tr, va, _ = mnist_small
    res = train(small_config(epochs=3, variant="cnn-flatten", learning_rate=3e-3), tr, va)
    best = max(res.history.series("val", "accuracy"))
    assert res.history.best_val_accuracy == best
    assert evaluate(res.model, va).accuracy == pytest.approx(best)


def test_sgd_momentum_runs(mnist_small):
    tr, _, _ = mnist_small
    res = train(small_config(optimizer="sgd", learning_rate=1e-2, variant="cnn-flatten"), tr)
    assert np.isfinite(res.history.series("train", "loss")[0])


def test_divergence_is_reported(mnist_small):
    tr, _, _ = mnist_small
    with pytest.raises(DivergenceError), np.errstate(all="ignore"):
        train(small_config(variant="cnn-flatten", optimizer="sgd", learning_rate=1e12), tr)


def test_evaluate_is_repeatable_and_near_chance_untrained(mnist_small):
    _, _, te = mnist_small
    model = Network(Architecture(channels=4, seed=2))
    a, b = evaluate(model, te), evaluate(model, te)
    assert a.accuracy == b.accuracy and a.loss == b.loss
    np.testing.assert_array_equal(a.confusion, b.confusion)
    assert a.confusion.sum() == 1000
    assert abs(a.accuracy - 0.10) <= 0.03


def test_evaluate_rejects_wrong_size():
    model = Network(Architecture(channels=2))
    ds = Dataset(np.zeros((2, 28, 28)), np.zeros(2, dtype=int), Split.TEST)
    with pytest.raises(DimensionError):
        evaluate(model, ds)


def test_group_rotated_test_images_get_identical_predictions(mnist_small):
    _, _, te = mnist_small
    model = Network(Architecture(channels=4, seed=3), dtype=np.float64)
    sub = Dataset(te.images[:64], te.labels[:64], Split.TEST)
    base = model.predict(sub.images)
    for k in (1, 2, 3):
        rot = model.predict(np.rot90(sub.images, k, axes=(1, 2)))
        np.testing.assert_array_equal(rot.argmax(axis=1), base.argmax(axis=1))
        assert np.max(np.abs(rot - base)) <= 1e-4 * np.max(np.abs(base))


def test_checkpoint_round_trip(tmp_path):
    model = Network(Architecture(variant="gcnn-orim", channels=3, seed=4))
    save_checkpoint(model, tmp_path, {"note": "x"})
    manifest = json.loads((tmp_path / "model.json").read_text())
    assert manifest["schema"] == "orim/1" and manifest["note"] == "x"
    assert (tmp_path / "params.bin").stat().st_size == 8 * model.n_parameters()
    again = load_checkpoint(tmp_path)
    np.testing.assert_array_equal(again.get_flat(), model.get_flat())
    x = np.random.default_rng(0).random((2, 32, 32))
    np.testing.assert_array_equal(again.forward(x), model.forward(x))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(variant="resnet")
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")
    with pytest.raises(ValueError):
        TrainConfig(family="pzm", p_max=40)


def test_optimizers_step_toward_lower_loss():
    rng = np.random.default_rng(5)
    for opt in (Adam(1e-2), SGDMomentum(1e-2)):
        model = Network(Architecture(variant="cnn-flatten", channels=2, input_size=8),
                        dtype=np.float64)
        x = rng.random((8, 8, 8))
        y = rng.integers(0, 10, 8)
        ce = SoftmaxCrossEntropy()
        first = ce.forward(model.forward(x), y)
        for _ in range(20):
            ce.forward(model.forward(x), y)
            model.backward(ce.backward())
            opt.step(model)
        assert ce.forward(model.forward(x), y) < first


def test_history_csv(tmp_path):
    h = History()
    h.add(1, "train", 0.5, 0.9)
    h.write_csv(tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text().splitlines()[1] == "1,train,0.5,0.9"
