"""Minibatch training, evaluation and text checkpoints for :class:`SSNModel`."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np

from ssx.errors import ValidationError
from ssx.ssn import LayerConfig, ModelConfig, Sample, SSNModel, loss_and_grad
from ssx.rng import make_rng

__all__ = [
    "MetricRow",
    "TrainConfig",
    "dumps_checkpoint",
    "evaluate",
    "gradient_check",
    "loads_checkpoint",
    "metrics_csv",
    "train",
]

CHECKPOINT_HEADER = "# ssx-checkpoint v1"


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    epochs: int = 50
    batch_size: int = 16
    seed: int = 0
    optimizer: str = "adam"
    gate_noise: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.optimizer not in ("sgd", "adam"):
            raise ValidationError("optimizer must be 'sgd' or 'adam'")
        if self.lr < 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValidationError("lr and epochs must be non-negative, batch_size positive")


@dataclass(frozen=True)
class MetricRow:
    epoch: int
    split: str
    loss: float
    accuracy: float


class _Adam:
    def __init__(self, cfg: TrainConfig, params):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads) -> None:
        c = self.cfg
        self.t += 1
        for k in sorted(params):
            self.m[k] = c.beta1 * self.m[k] + (1 - c.beta1) * grads[k]
            self.v[k] = c.beta2 * self.v[k] + (1 - c.beta2) * grads[k] ** 2
            mhat = self.m[k] / (1 - c.beta1**self.t)
            vhat = self.v[k] / (1 - c.beta2**self.t)
            params[k] -= c.lr * mhat / (np.sqrt(vhat) + c.adam_eps)


class _SGD:
    def __init__(self, cfg: TrainConfig, params):
        self.lr = cfg.lr

    def step(self, params, grads) -> None:
        for k in sorted(params):
            params[k] -= self.lr * grads[k]


def _noise_for(model: SSNModel, rng: np.random.Generator, count: int):
    layers = [(l, layer) for l, layer in enumerate(model.config.layers) if layer.routing_k is not None]
    if not layers:
        return None
    return [{l: {g: rng.standard_normal(len(m)) for g, m in layer.groups().items()} for l, layer in layers} for _ in range(count)]


def evaluate(model: SSNModel, data: Sequence[Sample]) -> tuple[float, float]:
    """Mean cross-entropy and accuracy (noise off)."""
    if not data:
        raise ValidationError("empty dataset")
    loss, _, logits = loss_and_grad(model, data, need_grad=False)
    acc = float(np.mean(np.argmax(logits, axis=1) == np.array([s.label for s in data])))
    return float(loss), acc


def train(model: SSNModel, train_set: Sequence[Sample], config: TrainConfig, val_set: Sequence[Sample] | None = None):
    """Train a copy of ``model``; returns ``(trained model, metric rows)``.

    Batches are drawn from a seeded shuffle and gradients are accumulated in
    batch order, so runs are bit-for-bit repeatable.
    """
    if not train_set:
        raise ValidationError("empty dataset")
    model = model.copy()
    rng = make_rng(config.seed, 1)
    opt = (_Adam if config.optimizer == "adam" else _SGD)(config, model.params)
    trace: list[MetricRow] = []
    n = len(train_set)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = [train_set[i] for i in order[start : start + config.batch_size]]
            noise = _noise_for(model, rng, len(batch)) if config.gate_noise else None
            _, grads, _ = loss_and_grad(model, batch, noise)
            opt.step(model.params, grads)
        loss, acc = evaluate(model, train_set)
        trace.append(MetricRow(epoch, "train", loss, acc))
        if val_set:
            loss, acc = evaluate(model, val_set)
            trace.append(MetricRow(epoch, "val", loss, acc))
    return model, trace


def metrics_csv(rows: Sequence[MetricRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "split", "loss", "accuracy"])
    for r in rows:
        w.writerow([r.epoch, r.split, repr(r.loss), repr(r.accuracy)])
    return buf.getvalue()


def gradient_check(model: SSNModel, batch: Sequence[Sample], noise=None, *, step: float = 1e-5, floor: float = 1e-6, atol: float = 0.0) -> float:
    """Largest ``(|analytic - numeric| - atol)+ / max(|analytic|, |numeric|, floor)`` over all parameters.

    Numeric derivatives are central differences with the given step; ``atol``
    discounts their rounding noise (about ``1e-16 |loss| / step``).
    """
    _, grads, _ = loss_and_grad(model, batch, noise)
    worst = 0.0
    for k, v in model.params.items():
        for idx in np.ndindex(v.shape):
            old = v[idx]
            v[idx] = old + step
            plus = loss_and_grad(model, batch, noise, need_grad=False)[0]
            v[idx] = old - step
            minus = loss_and_grad(model, batch, noise, need_grad=False)[0]
            v[idx] = old
            num = (plus - minus) / (2 * step)
            ana = grads[k][idx]
            worst = max(worst, max(abs(ana - num) - atol, 0.0) / max(abs(ana), abs(num), floor))
    return worst


# -- checkpoints ----------------------------------------------------------------------


def _config_json(config: ModelConfig) -> str:
    return json.dumps(asdict(config), sort_keys=True)


def _config_from_json(text: str) -> ModelConfig:
    raw = json.loads(text)
    layers = []
    for layer in raw.pop("layers"):
        layer["relations"] = tuple(layer["relations"])
        layer["custom_dims"] = tuple(tuple(x) for x in layer["custom_dims"])
        layers.append(LayerConfig(**layer))
    if raw.get("readout_dims") is not None:
        raw["readout_dims"] = tuple(raw["readout_dims"])
    return ModelConfig(tuple(layers), **raw)


def dumps_checkpoint(model: SSNModel) -> str:
    lines = [CHECKPOINT_HEADER, "config " + _config_json(model.config)]
    for name in sorted(model.params):
        arr = model.params[name]
        lines.append(f"tensor {name} {','.join(map(str, arr.shape))}")
        lines.append(" ".join(repr(float(x)) for x in arr.ravel()))
    return "\n".join(lines) + "\n"


def loads_checkpoint(text: str) -> SSNModel:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CHECKPOINT_HEADER:
        raise ValidationError("line 1: missing checkpoint header")
    if len(lines) < 2 or not lines[1].startswith("config "):
        raise ValidationError("line 2: expected the config line")
    try:
        config = _config_from_json(lines[1][len("config ") :])
    except (ValueError, TypeError, KeyError) as exc:
        raise ValidationError(f"line 2: bad config ({exc})") from None
    params = {}
    i = 2
    while i < len(lines):
        head = lines[i].split()
        if not head:
            i += 1
            continue
        if head[0] != "tensor" or len(head) not in (2, 3):
            raise ValidationError(f"line {i + 1}: expected 'tensor <name> <shape>'")
        shape = tuple(int(x) for x in head[2].split(",")) if len(head) == 3 else ()
        body = lines[i + 1] if i + 1 < len(lines) else ""
        try:
            values = np.array([float(x) for x in body.split()], dtype=np.float64)
            params[head[1]] = values.reshape(shape)
        except ValueError:
            raise ValidationError(f"line {i + 2}: tensor {head[1]} does not match shape {shape}") from None
        i += 2
    return SSNModel(config, params)
