"""From-scratch feedforward network: forward pass, backprop, SGD with
momentum, RMS-error evaluation, and a bit-exact text model format.

The network is a plain multilayer perceptron with a scalar linear output.
Training minimizes mean squared error over mini-batches; all randomness
(weight init, batch shuffling) flows from one seeded generator, so training
is fully deterministic given (seed, dataset, config).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from loblab.tape import Dataset, NormConstants

ACTIVATIONS = ("tanh", "relu")


class ModelConfigError(ValueError):
    """Raised for inconsistent layer sizes or unknown activation tags."""


class ModelFormatError(ValueError):
    """Raised when a model file is truncated, misshapen, or mislabelled."""


class TrainingDiverged(RuntimeError):
    """Raised when weights or loss go non-finite; names the epoch."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch}: non-finite values")
        self.epoch = epoch


@dataclass
class MlpModel:
    layer_sizes: list[int]
    weights: list[np.ndarray]          # weights[k] has shape (out, in)
    biases: list[np.ndarray]           # biases[k] has shape (out,)
    hidden_activation: str
    constants: NormConstants

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            hidden_activation=self.hidden_activation,
            constants=self.constants,
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    sgd_momentum: float = 0.9
    rng_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ModelConfigError("epochs and batch_size must be positive")
        if self.learning_rate < 0:
            raise ModelConfigError("learning_rate must be non-negative")
        if not 0.0 <= self.sgd_momentum < 1.0:
            raise ModelConfigError("sgd_momentum must be in [0, 1)")


def mlp_init(
    layer_sizes: list[int],
    activation: str,
    rng: np.random.Generator,
    constants: NormConstants,
) -> MlpModel:
    """Glorot-uniform weights, zero biases: U(-r, r), r = sqrt(6/(fan_in+fan_out))."""
    if len(layer_sizes) < 3:
        raise ModelConfigError(
            f"need input, at least one hidden, and output layer; got {layer_sizes}"
        )
    if any(n < 1 for n in layer_sizes):
        raise ModelConfigError(f"layer sizes must be positive: {layer_sizes}")
    if activation not in ACTIVATIONS:
        raise ModelConfigError(f"unknown activation {activation!r}; use one of {ACTIVATIONS}")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        r = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(list(layer_sizes), weights, biases, activation, constants)


def _activate(z: np.ndarray, tag: str) -> np.ndarray:
    return np.tanh(z) if tag == "tanh" else np.maximum(z, 0.0)


def _activate_grad(z: np.ndarray, tag: str) -> np.ndarray:
    if tag == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    return (z > 0.0).astype(z.dtype)


def forward_batch(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Outputs for a (n, d_in) batch, shape (n,). Output layer is linear."""
    if x.ndim != 2 or x.shape[1] != model.layer_sizes[0]:
        raise ModelConfigError(
            f"input shape {x.shape} incompatible with input size {model.layer_sizes[0]}"
        )
    h = x
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        h = z if k == last else _activate(z, model.hidden_activation)
    return h[:, 0]


def mlp_forward(model: MlpModel, features) -> float:
    """Scalar output for a single feature vector."""
    x = np.asarray(features, dtype=np.float64).reshape(1, -1)
    return float(forward_batch(model, x))


def loss_and_gradients(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Mean-squared-error loss over (x, y) and its gradients per layer."""
    n = x.shape[0]
    last = len(model.weights) - 1
    pre: list[np.ndarray] = []
    post = [x]
    h = x
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        pre.append(z)
        h = z if k == last else _activate(z, model.hidden_activation)
        post.append(h)
    pred = post[-1][:, 0]
    err = pred - y
    loss = float(np.mean(err * err))

    grad_w = [np.empty_like(w) for w in model.weights]
    grad_b = [np.empty_like(b) for b in model.biases]
    dz = (2.0 / n) * err[:, None]
    for k in range(last, -1, -1):
        grad_w[k] = dz.T @ post[k]
        grad_b[k] = dz.sum(axis=0)
        if k > 0:
            dh = dz @ model.weights[k]
            dz = dh * _activate_grad(pre[k - 1], model.hidden_activation)
    return loss, grad_w, grad_b


def rms_error(model: MlpModel, x: np.ndarray, y: np.ndarray) -> float:
    """sqrt(mean((prediction - target)^2)) over a nonempty partition."""
    if len(y) == 0:
        raise ValueError("rms_error over an empty partition")
    pred = forward_batch(model, x)
    return float(np.sqrt(np.mean((pred - y) ** 2)))


@dataclass
class TrainHistory:
    train_rms: list[float] = field(default_factory=list)
    test_rms: list[float] = field(default_factory=list)


def mlp_train(
    model: MlpModel, dataset: Dataset, config: TrainConfig
) -> tuple[MlpModel, TrainHistory]:
    """Mini-batch SGD with momentum on squared error over the train partition.

    RMS error on both partitions is recorded after every epoch. The input
    model is left untouched; the trained copy is returned.
    """
    x_train, y_train = dataset.train_arrays()
    x_test, y_test = dataset.test_arrays()
    if len(y_train) == 0 or len(y_test) == 0:
        raise ValueError("both dataset partitions must be nonempty")

    model = model.copy()
    rng = np.random.default_rng(config.rng_seed)
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    history = TrainHistory()
    n = len(y_train)

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grad_w, grad_b = loss_and_gradients(model, x_train[idx], y_train[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(epoch)
            for k in range(len(model.weights)):
                vel_w[k] = config.sgd_momentum * vel_w[k] + grad_w[k]
                vel_b[k] = config.sgd_momentum * vel_b[k] + grad_b[k]
                model.weights[k] -= config.learning_rate * vel_w[k]
                model.biases[k] -= config.learning_rate * vel_b[k]
        if any(not np.all(np.isfinite(w)) for w in model.weights):
            raise TrainingDiverged(epoch)
        history.train_rms.append(rms_error(model, x_train, y_train))
        history.test_rms.append(rms_error(model, x_test, y_test))

    return model, history


# -- model file ----------------------------------------------------------

_MAGIC = "loblab-model v1"


def _fmt(x: float) -> str:
    return "%.17g" % x


def model_to_text(model: MlpModel) -> str:
    lines = [
        _MAGIC,
        "layer_sizes: " + " ".join(str(n) for n in model.layer_sizes),
        f"hidden_activation: {model.hidden_activation}",
        f"p_max: {model.constants.p_max}",
        f"q_norm: {model.constants.q_norm}",
        f"t_max: {model.constants.t_max}",
    ]
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"weights {k}: {w.shape[0]} {w.shape[1]}")
        for row in w:
            lines.append(" ".join(_fmt(v) for v in row))
        lines.append(f"biases {k}: {b.shape[0]}")
        lines.append(" ".join(_fmt(v) for v in b))
    return "\n".join(lines) + "\n"


def save_model(model: MlpModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(model_to_text(model))


class _LineReader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, context: str) -> str:
        if self.pos >= len(self.lines):
            raise ModelFormatError(f"truncated model file: expected {context}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect_tag(self, tag: str) -> str:
        line = self.next(f"'{tag}' line")
        if not line.startswith(tag + ":"):
            raise ModelFormatError(f"expected {tag!r} line, got {line!r}")
        return line[len(tag) + 1 :].strip()


def model_from_text(text: str) -> MlpModel:
    reader = _LineReader(text)
    if reader.next("magic header") != _MAGIC:
        raise ModelFormatError(f"not a {_MAGIC!r} file")
    try:
        layer_sizes = [int(tok) for tok in reader.expect_tag("layer_sizes").split()]
    except ValueError:
        raise ModelFormatError("layer_sizes must be integers") from None
    activation = reader.expect_tag("hidden_activation")
    if activation not in ACTIVATIONS:
        raise ModelFormatError(f"unknown activation {activation!r}")
    try:
        constants = NormConstants(
            p_max=int(reader.expect_tag("p_max")),
            q_norm=int(reader.expect_tag("q_norm")),
            t_max=int(reader.expect_tag("t_max")),
        )
    except ValueError as exc:
        raise ModelFormatError(f"bad normalization constants: {exc}") from None
    if len(layer_sizes) < 3:
        raise ModelFormatError(f"layer_sizes too short: {layer_sizes}")

    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(layer_sizes, layer_sizes[1:])):
        shape = reader.expect_tag(f"weights {k}").split()
        if shape != [str(fan_out), str(fan_in)]:
            raise ModelFormatError(
                f"layer {k} weights: expected shape {fan_out} {fan_in}, "
                f"got {' '.join(shape)}"
            )
        rows = []
        for i in range(fan_out):
            row = reader.next(f"weights {k} row {i}").split()
            if len(row) != fan_in:
                raise ModelFormatError(
                    f"layer {k} weights row {i}: expected {fan_in} values, got {len(row)}"
                )
            rows.append([float(v) for v in row])
        weights.append(np.array(rows, dtype=np.float64))
        size = reader.expect_tag(f"biases {k}")
        if size != str(fan_out):
            raise ModelFormatError(f"layer {k} biases: expected size {fan_out}, got {size}")
        bias_row = reader.next(f"biases {k} values").split()
        if len(bias_row) != fan_out:
            raise ModelFormatError(
                f"layer {k} biases: expected {fan_out} values, got {len(bias_row)}"
            )
        biases.append(np.array([float(v) for v in bias_row], dtype=np.float64))
    return MlpModel(layer_sizes, weights, biases, activation, constants)


def load_model(path) -> MlpModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read())
