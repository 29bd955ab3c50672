"""Small feedforward networks trained by backpropagation.

Topologies have one or two hidden layers, each with its own transfer function,
and a logistic output layer. Training is per-pattern gradient descent on the
squared error, with an optional momentum term, learning-rate halving on a
validation plateau, and best-validation snapshotting.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numba.typed import List as TypedList

from . import _kernels
from .data import FactorSchema, NormalizationParams, ProjectRecord, TARGET_HI, TARGET_LO, denormalize_target, encode_values
from .metrics import rms, tolerance_correct

MAX_HIDDEN_LAYERS = 2


class Transfer(enum.Enum):
    SIGMOID = "sigmoid"
    TANGENT = "tangent"

    @property
    def code(self) -> int:
        return _kernels.SIGMOID if self is Transfer.SIGMOID else _kernels.TANH

    def __call__(self, z):
        if self is Transfer.SIGMOID:
            return 1.0 / (1.0 + np.exp(-z))
        return np.tanh(z)

    def slope(self, a):
        if self is Transfer.SIGMOID:
            return a * (1.0 - a)
        return 1.0 - a * a


class TopologyError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")


@dataclass(frozen=True)
class NetworkTopology:
    input_nodes: int
    hidden: tuple[tuple[int, Transfer], ...]
    output_nodes: int = 1

    def __post_init__(self):
        if not 1 <= len(self.hidden) <= MAX_HIDDEN_LAYERS:
            raise TopologyError(f"at most two hidden layers (got {len(self.hidden)})")
        if self.input_nodes < 1 or self.output_nodes < 1:
            raise TopologyError("input and output node counts must be >= 1")
        if any(n < 1 for n, _ in self.hidden):
            raise TopologyError("every hidden layer needs at least one node")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_nodes, *(n for n, _ in self.hidden), self.output_nodes]

    @property
    def transfers(self) -> list[Transfer]:
        # output node is always logistic
        return [t for _, t in self.hidden] + [Transfer.SIGMOID]

    def __str__(self) -> str:
        sizes = "-".join(str(n) for n in self.layer_sizes)
        names = {t.value for _, t in self.hidden}
        tf = names.pop() if len(names) == 1 else ",".join(t.value for _, t in self.hidden)
        return f"{sizes}:{tf}"

    @classmethod
    def parse(cls, text: str) -> "NetworkTopology":
        """Parse ``I-H1[-H2]-O[:transfer]``; transfer is one name or a comma list per hidden layer."""
        m = re.fullmatch(r"\s*(\d+(?:-\d+)+)\s*(?::\s*([a-z,]+))?\s*", text.lower())
        if not m:
            raise TopologyError(f"malformed topology {text!r}; expected I-H1[-H2]-O[:sigmoid|tangent]")
        sizes = [int(s) for s in m.group(1).split("-")]
        if len(sizes) < 3:
            raise TopologyError(f"topology {text!r} needs at least one hidden layer")
        hidden = sizes[1:-1]
        if len(hidden) > MAX_HIDDEN_LAYERS:
            raise TopologyError(f"at most two hidden layers (got {len(hidden)})")
        names = (m.group(2) or "sigmoid").split(",")
        if len(names) == 1:
            names = names * len(hidden)
        if len(names) != len(hidden):
            raise TopologyError(f"topology {text!r}: {len(names)} transfer names for {len(hidden)} hidden layers")
        try:
            tfs = [Transfer("tangent" if n in ("tanh", "tangent") else n) for n in names]
        except ValueError as exc:
            raise TopologyError(f"unknown transfer function in {text!r}") from exc
        return cls(sizes[0], tuple(zip(hidden, tfs)), sizes[-1])

    def to_json(self) -> dict:
        return {
            "input_nodes": self.input_nodes,
            "hidden": [[n, t.value] for n, t in self.hidden],
            "output_nodes": self.output_nodes,
            "output_transfer": Transfer.SIGMOID.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NetworkTopology":
        return cls(int(obj["input_nodes"]), tuple((int(n), Transfer(t)) for n, t in obj["hidden"]), int(obj["output_nodes"]))


@dataclass(frozen=True)
class Network:
    topology: NetworkTopology
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    init_seed: int | None = None

    def __post_init__(self):
        sizes = self.topology.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise TopologyError("layer count does not match topology")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
                raise TopologyError(f"layer {l}: got W{W.shape}, b{b.shape}, expected ({sizes[l + 1]}, {sizes[l]})")

    def copy_params(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        return [np.array(W, dtype=float) for W in self.weights], [np.array(b, dtype=float) for b in self.biases]

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for pair in zip(self.weights, self.biases) for p in pair])

    def with_flat_params(self, flat: np.ndarray) -> "Network":
        Ws, bs, k = [], [], 0
        for W, b in zip(self.weights, self.biases):
            Ws.append(flat[k:k + W.size].reshape(W.shape).copy())
            k += W.size
            bs.append(flat[k:k + b.size].copy())
            k += b.size
        return make_network(self.topology, Ws, bs, self.init_seed)


def make_network(topology, weights, biases, init_seed=None) -> Network:
    Ws = []
    for W in weights:
        W = np.array(W, dtype=float)
        W.setflags(write=False)
        Ws.append(W)
    bs = []
    for b in biases:
        b = np.array(b, dtype=float)
        b.setflags(write=False)
        bs.append(b)
    return Network(topology, tuple(Ws), tuple(bs), init_seed)


def init_network(topology: NetworkTopology, seed: int) -> Network:
    """Weights and biases ~ U[-0.5, 0.5] from a PCG64 generator seeded with ``seed``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = topology.layer_sizes
    Ws, bs = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        Ws.append(rng.uniform(-0.5, 0.5, size=(n_out, n_in)))
        bs.append(rng.uniform(-0.5, 0.5, size=n_out))
    return make_network(topology, Ws, bs, seed)


def _activations(network: Network, x: np.ndarray) -> list[np.ndarray]:
    x = np.asarray(x, dtype=float)
    if x.shape != (network.topology.input_nodes,):
        raise ValueError(f"input has shape {x.shape}, network expects ({network.topology.input_nodes},)")
    acts = [x]
    for W, b, tf in zip(network.weights, network.biases, network.topology.transfers):
        acts.append(tf(W @ acts[-1] + b))
    return acts


def forward(network: Network, x) -> float | np.ndarray:
    out = _activations(network, x)[-1]
    return float(out[0]) if out.size == 1 else out


def forward_batch(network: Network, X: np.ndarray) -> np.ndarray:
    """Outputs for every row of X, shape (n,) for single-output networks."""
    X = np.asarray(X, dtype=float)
    A = X.T
    for W, b, tf in zip(network.weights, network.biases, network.topology.transfers):
        A = tf(W @ A + b[:, None])
    return A[0] if A.shape[0] == 1 else A.T


class Gradient(NamedTuple):
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for pair in zip(self.weights, self.biases) for p in pair])


def squared_error(network: Network, x, target) -> float:
    out = _activations(network, x)[-1]
    return float(np.sum((out - np.asarray(target, dtype=float)) ** 2))


def gradient(network: Network, x, target) -> Gradient:
    """Analytic gradient of the squared error (output - target)^2."""
    acts = _activations(network, x)
    tfs = network.topology.transfers
    target = np.atleast_1d(np.asarray(target, dtype=float))
    if target.shape != acts[-1].shape:
        raise ValueError(f"target has shape {target.shape}, network outputs {acts[-1].shape}")
    L = len(network.weights)
    gW: list[np.ndarray] = [None] * L  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * L  # type: ignore[list-item]
    delta = 2.0 * (acts[-1] - target) * tfs[-1].slope(acts[-1])
    for l in range(L - 1, -1, -1):
        gW[l] = np.outer(delta, acts[l])
        gb[l] = delta.copy()
        if l > 0:
            delta = (network.weights[l].T @ delta) * tfs[l - 1].slope(acts[l])
    return Gradient(gW, gb)


def _extended_loss(network: Network, flat: np.ndarray, x: np.ndarray, target: np.ndarray) -> np.longdouble:
    a = x
    k = 0
    for W, b, tf in zip(network.weights, network.biases, network.topology.transfers):
        Wl = flat[k:k + W.size].reshape(W.shape)
        k += W.size
        bl = flat[k:k + b.size]
        k += b.size
        z = Wl @ a + bl
        a = 1 / (1 + np.exp(-z)) if tf is Transfer.SIGMOID else np.tanh(z)
    return np.sum((a - target) ** 2)


def finite_difference_gradient(network: Network, x, target, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient over the flattened parameter vector.

    Evaluated in extended precision so that cancellation in the difference
    does not swamp small gradient components.
    """
    theta = network.flat_params().astype(np.longdouble)
    x = np.asarray(x, dtype=np.longdouble)
    target = np.atleast_1d(np.asarray(target, dtype=np.longdouble))
    grad = np.empty(theta.size)
    for i in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (_extended_loss(network, up, x, target) - _extended_loss(network, dn, x, target)) / (up[i] - dn[i])
    return grad


# ------------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainingConfig:
    initial_learning_rate: float = 0.25
    lr_decay: float = 0.5
    momentum: float = 0.0
    max_epochs: int = 20000
    patience_epochs: int = 200
    plateau_epsilon: float = 1e-5
    training_tolerance: float = 0.1
    shuffle_seed: int = 0
    full_batch: bool = False

    def __post_init__(self):
        for name in ("initial_learning_rate", "lr_decay"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.max_epochs < 1 or self.patience_epochs < 1:
            raise ValueError("max_epochs and patience_epochs must be >= 1")
        if self.plateau_epsilon < 0:
            raise ValueError("plateau_epsilon must be >= 0")
        if not 0.0 < self.training_tolerance < 1.0:
            raise ValueError("training_tolerance must be in (0, 1)")

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class TrainingReport:
    epochs_run: int
    best_epoch: int
    train_rms: float
    validation_rms: float
    fraction_correct: float
    stop_reason: str  # "plateau" | "max_epochs"
    final_learning_rate: float
    train_trace: tuple[float, ...] = field(repr=False)
    validation_trace: tuple[float, ...] = field(repr=False)

    def summary(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "train_rms": self.train_rms,
            "validation_rms": self.validation_rms,
            "fraction_correct": self.fraction_correct,
            "stop_reason": self.stop_reason,
            "final_learning_rate": self.final_learning_rate,
        }


def _as_2d_targets(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return y.reshape(-1, 1) if y.ndim == 1 else y


def _batch_step(Ws, bs, vWs, vbs, tfs, X, Y, lr, momentum):
    acts = [X.T]
    for W, b, tf in zip(Ws, bs, tfs):
        acts.append(tf(W @ acts[-1] + b[:, None]))
    n = X.shape[0]
    delta = 2.0 * (acts[-1] - Y.T) * tfs[-1].slope(acts[-1])
    for l in range(len(Ws) - 1, -1, -1):
        gW = delta @ acts[l].T / n
        gb = delta.mean(axis=1)
        if l > 0:
            delta = (Ws[l].T @ delta) * tfs[l - 1].slope(acts[l])
        vWs[l] *= momentum
        vWs[l] -= lr * gW
        Ws[l] += vWs[l]
        vbs[l] *= momentum
        vbs[l] -= lr * gb
        bs[l] += vbs[l]


def train(
    network: Network,
    train_set: tuple[np.ndarray, np.ndarray],
    validation_set: tuple[np.ndarray, np.ndarray],
    config: TrainingConfig = TrainingConfig(),
) -> tuple[Network, TrainingReport]:
    """Train by backpropagation; returns the best-validation snapshot and its report."""
    X = np.ascontiguousarray(train_set[0], dtype=float)
    Y = np.ascontiguousarray(_as_2d_targets(train_set[1]))
    Xv = np.ascontiguousarray(validation_set[0], dtype=float)
    Yv = np.ascontiguousarray(_as_2d_targets(validation_set[1]))
    if len(X) == 0 or len(Xv) == 0:
        raise ValueError("training and validation sets must be non-empty")
    if X.shape[1] != network.topology.input_nodes or Xv.shape[1] != network.topology.input_nodes:
        raise ValueError("input width does not match topology")

    Ws_np, bs_np = network.copy_params()
    vW_np = [np.zeros_like(W) for W in Ws_np]
    vb_np = [np.zeros_like(b) for b in bs_np]
    Ws, bs, vWs, vbs = (TypedList(a) for a in (Ws_np, bs_np, vW_np, vb_np))
    tfs = network.topology.transfers
    codes = np.array([t.code for t in tfs], dtype=np.int64)
    rng = np.random.Generator(np.random.PCG64(config.shuffle_seed))

    lr = config.initial_learning_rate
    best_val = math.inf
    plateau_ref = math.inf
    since_improve = 0
    best_params = network.copy_params()
    best_epoch = 0
    best_train = math.inf
    train_trace: list[float] = []
    val_trace: list[float] = []
    stop_reason = "max_epochs"

    for epoch in range(1, config.max_epochs + 1):
        if config.full_batch:
            _batch_step(Ws_np, bs_np, vW_np, vb_np, tfs, X, Y, lr, config.momentum)
        else:
            _kernels.online_epoch(Ws, bs, vWs, vbs, codes, X, Y, rng.permutation(len(X)), lr, config.momentum)
        tr = float(np.sqrt(np.mean((_kernels.forward_batch(Ws, bs, codes, X) - Y) ** 2)))
        va = float(np.sqrt(np.mean((_kernels.forward_batch(Ws, bs, codes, Xv) - Yv) ** 2)))
        if not (math.isfinite(tr) and math.isfinite(va)):
            raise TrainingDiverged(epoch)
        train_trace.append(tr)
        val_trace.append(va)
        if va < best_val:
            best_val, best_train, best_epoch = va, tr, epoch
            best_params = ([W.copy() for W in Ws_np], [b.copy() for b in bs_np])
        if va < plateau_ref - config.plateau_epsilon:
            plateau_ref = va
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= config.patience_epochs:
                stop_reason = "plateau"
                break
            if since_improve % max(1, config.patience_epochs // 2) == 0:
                lr *= config.lr_decay

    best = make_network(network.topology, *best_params, init_seed=network.init_seed)
    out = forward_batch(best, X).reshape(len(X), -1)
    correct = [
        tolerance_correct(o, t, config.training_tolerance, TARGET_HI - TARGET_LO)
        for o, t in zip(out.ravel(), Y.ravel())
    ]
    report = TrainingReport(
        epochs_run=len(val_trace),
        best_epoch=best_epoch,
        train_rms=best_train,
        validation_rms=best_val,
        fraction_correct=sum(correct) / len(correct),
        stop_reason=stop_reason,
        final_learning_rate=lr,
        train_trace=tuple(train_trace),
        validation_trace=tuple(val_trace),
    )
    return best, report


def predict(network: Network, record: ProjectRecord | Sequence, schema: FactorSchema, norm: NormalizationParams) -> float:
    """Overhead percentage predicted for one project record."""
    values = record.values if isinstance(record, ProjectRecord) else record
    x = encode_values(values, schema, norm)
    return denormalize_target(forward(network, x), norm).pct


def network_rms(network: Network, X: np.ndarray, y: np.ndarray) -> float:
    return rms(np.ravel(y), np.ravel(forward_batch(network, X)))
