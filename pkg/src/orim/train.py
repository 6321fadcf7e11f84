"""Training loop, evaluation and metric logging for the desk-scale models."""

from __future__ import annotations

import csv
import enum
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from orim.basis import MomentSpec
from orim.data import Dataset
from orim.errors import DimensionError, DivergenceError
from orim.gcnn.layers import SoftmaxCrossEntropy
from orim.gcnn.model import Architecture, Network, Variant, save_checkpoint

log = logging.getLogger(__name__)


class Optimizer(enum.Enum):
    ADAM = "adam"
    SGD_MOMENTUM = "sgd"


@dataclass
class TrainConfig:
    variant: str = Variant.GCNN_ORIM.value
    family: str = "pzm"
    p_max: int = 5
    central: bool = False
    group: str = "p4m"
    channels: int = 10
    epochs: int = 15
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = Optimizer.ADAM.value
    momentum: float = 0.9
    seed: int = 7
    train_n: int = 5000
    val_n: int = 1000
    test_n: int = 2000

    def __post_init__(self):
        Variant(self.variant)
        Optimizer(self.optimizer)
        if self.variant == Variant.GCNN_ORIM.value:
            MomentSpec(self.family, self.p_max)

    def architecture(self, input_size=32, n_classes=10) -> Architecture:
        channels = self.channels
        return Architecture(self.variant, self.group, channels, self.family, self.p_max,
                            self.central, input_size, n_classes, self.seed)


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.state = {}

    def step(self, model: Network):
        self.t += 1
        for layer, name, arr in model.parameters():
            g = layer.grads[name]
            m, v = self.state.get((id(layer), name), (np.zeros_like(arr), np.zeros_like(arr)))
            m = self.b1 * m + (1 - self.b1) * g
            v = self.b2 * v + (1 - self.b2) * g * g
            self.state[(id(layer), name)] = (m, v)
            mhat = m / (1 - self.b1**self.t)
            vhat = v / (1 - self.b2**self.t)
            setattr(layer, name, (arr - self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(arr.dtype))


class SGDMomentum:
    def __init__(self, lr=1e-2, momentum=0.9):
        self.lr, self.momentum = lr, momentum
        self.velocity = {}

    def step(self, model: Network):
        for layer, name, arr in model.parameters():
            key = (id(layer), name)
            v = self.momentum * self.velocity.get(key, 0.0) - self.lr * layer.grads[name]
            self.velocity[key] = v
            setattr(layer, name, (arr + v).astype(arr.dtype))


def make_optimizer(config: TrainConfig):
    if Optimizer(config.optimizer) is Optimizer.ADAM:
        return Adam(config.learning_rate)
    return SGDMomentum(config.learning_rate, config.momentum)


@dataclass
class EvalResult:
    accuracy: float
    loss: float
    confusion: np.ndarray = field(repr=False)


def evaluate(model: Network, ds: Dataset, batch_size=256) -> EvalResult:
    if ds.images.shape[1:] != (model.arch.input_size, model.arch.input_size):
        raise DimensionError(
            f"model expects {model.arch.input_size}x{model.arch.input_size} images, "
            f"dataset has {ds.images.shape[1:]}")
    logits = model.predict(ds.images, batch_size)
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-logp[np.arange(len(ds)), ds.labels].mean()) if len(ds) else float("nan")
    pred = logits.argmax(axis=1)
    C = model.arch.n_classes
    confusion = np.zeros((C, C), dtype=np.int64)
    np.add.at(confusion, (ds.labels, pred), 1)
    acc = float((pred == ds.labels).mean()) if len(ds) else float("nan")
    return EvalResult(acc, loss, confusion)


@dataclass
class History:
    rows: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = -1.0

    def add(self, epoch, split, loss, accuracy):
        self.rows.append({"epoch": epoch, "split": split, "loss": loss, "accuracy": accuracy})

    def series(self, split, key):
        return [r[key] for r in self.rows if r["split"] == split]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["epoch", "split", "loss", "accuracy"])
            w.writeheader()
            w.writerows(self.rows)


@dataclass
class TrainResult:
    model: Network
    history: History
    config: TrainConfig
    seconds: float


def train(config: TrainConfig, train_ds: Dataset, val_ds: Dataset | None = None,
          out_dir=None, dtype=np.float32) -> TrainResult:
    """Mini-batch training; the returned model holds the best-validation weights.

    Without a validation set the final weights are kept. ``out_dir`` receives
    ``metrics.csv``, ``summary.json`` and the best checkpoint under ``best/``.
    """
    arch = config.architecture(train_ds.size, train_ds.n_classes)
    model = Network(arch, dtype)
    opt = make_optimizer(config)
    loss_fn = SoftmaxCrossEntropy()
    rng = np.random.default_rng(config.seed)
    history = History()
    best = model.get_flat()
    start = time.perf_counter()
    images = train_ds.images.astype(dtype)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_ds))
        total_loss, correct = 0.0, 0
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo:lo + config.batch_size]
            logits = model.forward(images[idx])
            loss = loss_fn.forward(logits.astype(np.float64), train_ds.labels[idx])
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"loss became {loss} at epoch {epoch}, batch starting {lo}; "
                    f"try a smaller learning rate than {config.learning_rate}")
            model.backward(loss_fn.backward().astype(dtype))
            opt.step(model)
            total_loss += loss * len(idx)
            correct += int((logits.argmax(axis=1) == train_ds.labels[idx]).sum())
        history.add(epoch, "train", total_loss / len(order), correct / len(order))
        if val_ds is not None and len(val_ds):
            ev = evaluate(model, val_ds)
            history.add(epoch, "val", ev.loss, ev.accuracy)
            if ev.accuracy > history.best_val_accuracy:
                history.best_val_accuracy = ev.accuracy
                history.best_epoch = epoch
                best = model.get_flat()
            log.info("epoch %d train_loss %.4f val_acc %.4f", epoch, total_loss / len(order),
                     ev.accuracy)
        else:
            best = model.get_flat()
            history.best_epoch = epoch
    model.set_flat(best)
    seconds = time.perf_counter() - start
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        history.write_csv(out_dir / "metrics.csv")
        save_checkpoint(model, out_dir / "best", {"config": asdict(config)})
        (out_dir / "summary.json").write_text(json.dumps({
            "schema": "orim/1",
            "config": asdict(config),
            "n_parameters": model.n_parameters(),
            "best_epoch": history.best_epoch,
            "best_val_accuracy": history.best_val_accuracy,
            "seconds": seconds,
        }, indent=2))
    return TrainResult(model, history, config, seconds)
