"""Transfer-learning loop: frozen backbone, trainable dense head, SGD with momentum.

Because the backbone (including batch-norm statistics) is frozen, its output
for a given image never changes; features are therefore computed once per
split and the head trains on the cached vectors.  That is numerically
identical to re-running the backbone every batch and keeps desk-scale runs
fast.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import layers
from .dataset import to_model_input
from .graph import ModelSpec, forward
from .imageio import LabeledImage
from .tensor import Rng, Tensor

EVAL_BATCH = 32


class NumericAbort(RuntimeError):
    """Training hit a NaN loss; carries the epoch/batch diagnostics."""

    def __init__(self, epoch: int, batch: int, max_abs_logit: float):
        self.epoch = epoch
        self.batch = batch
        self.max_abs_logit = max_abs_logit
        super().__init__(
            f"NaN loss at epoch {epoch}, batch {batch} (max |logit| = {max_abs_logit:g})"
        )


@dataclass
class TrainingConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.001
    momentum: float = 0.9
    seed: int = 0
    freeze_backbone: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")


# Published table settings: 50 epochs for the residual net, 150 for the inception net.
DEFAULT_EPOCHS = {
    "resnet152": 50,
    "tiny-residual": 50,
    "inceptionv3": 150,
    "tiny-inception": 150,
}


@dataclass
class EpochMetrics:
    epoch_index: int
    train_loss: float
    train_accuracy: float
    validation_loss: float
    validation_accuracy: float
    seconds_elapsed: float


@dataclass
class TrainingReport:
    """Per-epoch metrics plus the single end-of-training test evaluation."""

    per_epoch: list[EpochMetrics]
    final_validation_accuracy: float
    test_accuracy: float
    final_loss: float
    mean_seconds_per_epoch: float
    architecture_name: str
    config: TrainingConfig

    def to_json(self) -> str:
        doc = {
            "architectureName": self.architecture_name,
            "config": {
                "epochs": self.config.epochs,
                "batchSize": self.config.batch_size,
                "learningRate": self.config.learning_rate,
                "momentum": self.config.momentum,
                "seed": self.config.seed,
                "freezeBackbone": self.config.freeze_backbone,
            },
            "perEpoch": [
                {
                    "epochIndex": m.epoch_index,
                    "trainLoss": m.train_loss,
                    "trainAccuracy": m.train_accuracy,
                    "validationLoss": m.validation_loss,
                    "validationAccuracy": m.validation_accuracy,
                    "secondsElapsed": m.seconds_elapsed,
                }
                for m in self.per_epoch
            ],
            "finalValidationAccuracy": self.final_validation_accuracy,
            "testAccuracy": self.test_accuracy,
            "finalLoss": self.final_loss,
            "meanSecondsPerEpoch": self.mean_seconds_per_epoch,
        }
        return json.dumps(doc, indent=2)

    def to_table(self) -> str:
        """Aligned text table with the published result-table columns."""
        header = ["Model", "Validation accuracy", "Test accuracy", "Epoch", "Time(s/epoch)", "Loss"]
        row = [
            self.architecture_name,
            f"{self.final_validation_accuracy:.3f}",
            f"{self.test_accuracy:.3f}",
            str(len(self.per_epoch)),
            f"{self.mean_seconds_per_epoch:.1f}",
            f"{self.final_loss:.4f}",
        ]
        widths = [max(len(h), len(r)) for h, r in zip(header, row)]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(header, widths)),
            "  ".join(r.ljust(w) for r, w in zip(row, widths)),
        ]
        return "\n".join(lines)


def sgd_momentum_step(params, grads, velocity, lr: float, momentum: float):
    """v <- momentum*v - lr*g;  p <- p + v.  Returns (params, velocity) as new arrays."""
    new_params = []
    new_velocity = []
    for p, g, v in zip(params, grads, velocity):
        pa = p.array if isinstance(p, Tensor) else np.asarray(p)
        ga = g.array if isinstance(g, Tensor) else np.asarray(g)
        va = v.array if isinstance(v, Tensor) else np.asarray(v)
        v_next = momentum * va - lr * ga
        new_params.append(pa + v_next)
        new_velocity.append(v_next)
    return new_params, new_velocity


def _head_node(model: ModelSpec):
    """The trainable dense head: the dense node feeding the softmax output."""
    softmax_node = model.node(model.output_id)
    dense = model.node(softmax_node.inputs[0])
    if dense.kind != "dense":
        raise ValueError("model head must be a dense layer followed by softmax")
    return dense


def backbone_features(model: ModelSpec, images: Sequence[LabeledImage], batch: int = EVAL_BATCH) -> np.ndarray:
    """Frozen-backbone feature vectors (the dense head's input) for a list of images."""
    feature_src = _head_node(model).inputs[0]
    chunks = []
    for start in range(0, len(images), batch):
        x = to_model_input(images[start : start + batch], model.input_size)
        chunks.append(forward(model, x, until=feature_src).array)
    return np.concatenate(chunks, axis=0) if chunks else np.empty((0, 0), dtype=np.float32)


def _head_eval(features: np.ndarray, labels: np.ndarray, params: layers.DenseParams) -> tuple[float, float]:
    logits = layers.dense_forward(features, params)
    probs = layers.softmax(logits)
    loss = layers.cross_entropy(probs, labels)
    accuracy = float((probs.argmax(axis=1) == labels).mean())
    return accuracy, loss


def reinitialize_head(model: ModelSpec, seed: int):
    """Fresh He-normal weights and zero bias for the dense head (in place)."""
    dense = _head_node(model)
    out_f, in_f = dense.params.weights.dims
    rng = Rng(seed).child(1)  # dedicated head-init stream
    std = (2.0 / in_f) ** 0.5
    dense.params.weights.array[:] = rng.normal_array((out_f, in_f), 0.0, std)
    dense.params.bias.array[:] = 0.0


def transfer_train(
    model: ModelSpec,
    splits: dict[str, list[LabeledImage]],
    cfg: TrainingConfig,
) -> TrainingReport:
    """Train the dense head on the train split; evaluate test exactly once at the end.

    Per epoch: seeded reshuffle of the train split, mini-batch forward,
    softmax cross-entropy, backward through the head only, SGD-with-momentum
    update.  Metrics are measured at the end of each epoch.  A NaN loss
    aborts immediately.
    """
    if not cfg.freeze_backbone:
        raise ValueError("only frozen-backbone transfer training is supported")
    train = splits.get("train", [])
    validation = splits.get("validation", [])
    test = splits.get("test", [])
    if not train:
        raise ValueError("train split is empty")
    if not validation:
        raise ValueError("validation split is empty")

    reinitialize_head(model, cfg.seed)
    dense = _head_node(model)

    feats = {
        "train": backbone_features(model, train),
        "validation": backbone_features(model, validation),
        "test": backbone_features(model, test) if test else None,
    }
    labels = {
        "train": np.array([img.label for img in train], dtype=np.int64),
        "validation": np.array([img.label for img in validation], dtype=np.int64),
        "test": np.array([img.label for img in test], dtype=np.int64) if test else None,
    }

    w = dense.params.weights.array.copy()
    b = dense.params.bias.array.copy()
    vel = [np.zeros_like(w), np.zeros_like(b)]
    rng = Rng(cfg.seed).child(2)
    n = len(train)
    per_epoch = []
    for epoch in range(cfg.epochs):
        t0 = time.monotonic()
        order = rng.shuffle(n)
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            xb = feats["train"][idx]
            yb = labels["train"][idx]
            params = layers.DenseParams(Tensor(w), Tensor(b))
            logits = layers.dense_forward(xb, params)
            probs = layers.softmax(logits)
            loss = layers.cross_entropy(probs, yb)
            if np.isnan(loss):
                raise NumericAbort(epoch, bi, float(np.max(np.abs(logits))))
            grad_logits = layers.softmax_xent_backward(logits, yb)
            _, grad_w, grad_b = layers.dense_backward(xb, params, grad_logits)
            (w, b), vel = sgd_momentum_step([w, b], [grad_w, grad_b], vel, cfg.learning_rate, cfg.momentum)
        params = layers.DenseParams(Tensor(w), Tensor(b))
        train_acc, train_loss = _head_eval(feats["train"], labels["train"], params)
        val_acc, val_loss = _head_eval(feats["validation"], labels["validation"], params)
        per_epoch.append(
            EpochMetrics(epoch, train_loss, train_acc, val_loss, val_acc, time.monotonic() - t0)
        )

    dense.params.weights.array[:] = w
    dense.params.bias.array[:] = b

    if test:
        test_acc, _ = _head_eval(feats["test"], labels["test"], layers.DenseParams(Tensor(w), Tensor(b)))
    else:
        test_acc = float("nan")
    last = per_epoch[-1]
    return TrainingReport(
        per_epoch=per_epoch,
        final_validation_accuracy=last.validation_accuracy,
        test_accuracy=test_acc,
        final_loss=last.validation_loss,
        mean_seconds_per_epoch=float(np.mean([m.seconds_elapsed for m in per_epoch])),
        architecture_name=model.architecture_name,
        config=cfg,
    )


def evaluate(model: ModelSpec, images: Sequence[LabeledImage]) -> tuple[float, float]:
    """(accuracy, mean loss) of the full model on labeled images; mutates nothing."""
    if not images:
        raise ValueError("cannot evaluate an empty split")
    labels = np.array([img.label for img in images], dtype=np.int64)
    hits = 0
    losses = []
    for start in range(0, len(images), EVAL_BATCH):
        chunk = images[start : start + EVAL_BATCH]
        probs = forward(model, to_model_input(chunk, model.input_size)).array
        y = labels[start : start + EVAL_BATCH]
        hits += int((probs.argmax(axis=1) == y).sum())
        losses.append(layers.cross_entropy(probs, y) * len(chunk))
    return hits / len(images), float(np.sum(losses) / len(images))
