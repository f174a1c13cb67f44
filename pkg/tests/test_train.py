from __future__ import annotations

import numpy as np
import pytest

from oracles import random_digraph
from ssx.complex import build_flag_complex
from ssx.errors import ValidationError
from ssx.rng import make_rng
from ssx.ssn import LayerConfig, ModelConfig, Sample, SSNModel, Structure
from ssx.train import (
    MetricRow,
    TrainConfig,
    dumps_checkpoint,
    evaluate,
    loads_checkpoint,
    metrics_csv,
    train,
)


def toy_task(seed, count=24):
    """Label is the sign of the mean vertex feature; linearly separable."""
    rng = make_rng(seed, 20)
    out = []
    for b in range(count):
        cx = build_flag_complex(random_digraph(rng, 5, 0.4), 1)
        label = b % 2
        X = rng.standard_normal((cx.num_simplices, 2)) * 0.3
        X[:, 0] += 1.0 if label else -1.0
        out.append(Sample(Structure(cx), X, label))
    return out


def toy_model(seed=0, routing_k=None):
    layers = (LayerConfig(("r_sym",), 2, 4, num_dims=2, routing_k=routing_k), LayerConfig(("r_sym",), 4, 4, num_dims=2, activation="identity"))
    return SSNModel.init(ModelConfig(layers, readout="mean", readout_dims=(0,), num_classes=2), seed)


def test_zero_learning_rate_leaves_parameters_unchanged():
    model = toy_model()
    trained, trace = train(model, toy_task(0), TrainConfig(lr=0.0, epochs=2, batch_size=5, optimizer="sgd"))
    for k, v in model.params.items():
        assert np.array_equal(trained.params[k], v)
    assert len(trace) == 2 and trace[0].loss == trace[1].loss


def test_training_does_not_mutate_input_model():
    model = toy_model()
    before = {k: v.copy() for k, v in model.params.items()}
    train(model, toy_task(0), TrainConfig(epochs=1))
    assert all(np.array_equal(before[k], model.params[k]) for k in before)


@pytest.mark.parametrize("optimizer", ["adam", "sgd"])
def test_separable_toy_task_is_learned(optimizer):
    data = toy_task(1)
    lr = 0.05 if optimizer == "adam" else 0.2
    trained, trace = train(toy_model(1), data, TrainConfig(lr=lr, epochs=40, batch_size=8, optimizer=optimizer))
    loss, acc = evaluate(trained, data)
    assert acc == 1.0
    assert trace[-1].loss < trace[0].loss


def test_training_is_bitwise_deterministic():
    data = toy_task(2)
    cfg = TrainConfig(epochs=3, batch_size=4, seed=5)
    a, ta = train(toy_model(3, routing_k=1), data, cfg)
    b, tb = train(toy_model(3, routing_k=1), data, cfg)
    assert ta == tb
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


def test_validation_rows_are_recorded():
    data = toy_task(3)
    _, trace = train(toy_model(), data[:16], TrainConfig(epochs=2), data[16:])
    assert [(r.epoch, r.split) for r in trace] == [(1, "train"), (1, "val"), (2, "train"), (2, "val")]


def test_checkpoint_round_trip_is_bit_exact():
    model = toy_model(4, routing_k=1)
    rng = make_rng(4)
    for k in model.params:
        model.params[k] = model.params[k] + rng.standard_normal(model.params[k].shape) * 1e-17 + np.pi / 7
    text = dumps_checkpoint(model)
    back = loads_checkpoint(text)
    assert back.config == model.config
    for k, v in model.params.items():
        assert back.params[k].tobytes() == v.tobytes()
    assert dumps_checkpoint(back) == text
    X = toy_task(4)[0]
    assert np.array_equal(back.logits(X.structure, X.X), model.logits(X.structure, X.X))


@pytest.mark.parametrize(
    "text",
    [
        "",
        "# ssx-checkpoint v1\n",
        "# ssx-checkpoint v1\nconfig {not json}\n",
        "# ssx-checkpoint v0\nconfig {}\n",
    ],
)
def test_bad_checkpoints_are_rejected(text):
    with pytest.raises(ValidationError):
        loads_checkpoint(text)


def test_checkpoint_shape_mismatch_is_rejected():
    lines = dumps_checkpoint(toy_model()).splitlines()
    lines[3] = lines[3] + " 1.0"
    with pytest.raises(ValidationError):
        loads_checkpoint("\n".join(lines))


def test_metrics_csv():
    rows = [MetricRow(1, "train", 0.5, 0.75), MetricRow(1, "val", 0.1 + 0.2, 1.0)]
    text = metrics_csv(rows)
    assert text.splitlines() == ["epoch,split,loss,accuracy", "1,train,0.5,0.75", "1,val,0.30000000000000004,1.0"]


def test_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(optimizer="lbfgs")
    with pytest.raises(ValidationError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValidationError):
        train(toy_model(), [], TrainConfig())
    with pytest.raises(ValidationError):
        evaluate(toy_model(), [])
