"""Supervised regression from instance features to demand labels.

Two predictors trained on mean squared error: exact ridge least squares
(normal equations) and a small ReLU network trained with mini-batch
gradient descent plus momentum. Features are standardized with
statistics fitted on the training split only; labels stay in raw demand
units so predictions feed surrogates directly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, TrainingDivergedError

log = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "val", "test")


@dataclass
class Dataset:
    features: np.ndarray            # (N, d)
    labels: np.ndarray              # (N, n)
    instance_ids: tuple[str, ...]
    split: np.ndarray               # (N,) of 'train' / 'val' / 'test'

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        self.split = np.asarray(self.split, dtype="<U5")
        self.instance_ids = tuple(self.instance_ids)
        N = self.features.shape[0]
        if self.labels.shape[0] != N or self.split.shape[0] != N or len(self.instance_ids) != N:
            raise ModelError("dataset arrays must agree on the number of examples")
        if not np.all(np.isin(self.split, SPLIT_NAMES)):
            raise ModelError("split labels must be train/val/test (disjoint, exhaustive)")

    def subset(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        mask = self.split == name
        return self.features[mask], self.labels[mask]


def make_split(n_examples: int, seed: int,
               fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)) -> np.ndarray:
    """Deterministic random partition into train/val/test."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ModelError("split fractions must sum to 1")
    order = np.random.default_rng(seed).permutation(n_examples)
    n_train = int(n_examples * fractions[0])
    n_val = int(n_examples * fractions[1])
    split = np.empty(n_examples, dtype="<U5")
    split[order[:n_train]] = "train"
    split[order[n_train:n_train + n_val]] = "val"
    split[order[n_train + n_val:]] = "test"
    return split


@dataclass
class Model:
    """A trained predictor: standardize, affine/ReLU stack, raw-unit output."""

    kind: str                                   # 'LR' | 'ANN'
    layers: list[tuple[np.ndarray, np.ndarray]]  # (W: (d_in, d_out), b: (d_out,))
    feat_mean: np.ndarray
    feat_std: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[1]


def fit_standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)   # constant columns pass through
    return mean, std


def forward(layers, X: np.ndarray) -> np.ndarray:
    """Hidden layers ReLU, final layer linear. X is already standardized."""
    h = X
    for W, b in layers[:-1]:
        h = np.maximum(h @ W + b, 0.0)
    W, b = layers[-1]
    return h @ W + b


def mse(pred: np.ndarray, Y: np.ndarray) -> float:
    return float(np.mean((pred - Y) ** 2))


def loss_and_gradients(layers, X: np.ndarray, Y: np.ndarray):
    """MSE and its gradients w.r.t. every weight and bias (backprop)."""
    acts = [X]
    pre = []
    h = X
    for W, b in layers[:-1]:
        z = h @ W + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    W, b = layers[-1]
    pred = h @ W + b

    loss = mse(pred, Y)
    grads = [None] * len(layers)
    delta = 2.0 * (pred - Y) / pred.size
    for l in range(len(layers) - 1, -1, -1):
        grads[l] = (acts[l].T @ delta, delta.sum(axis=0))
        if l > 0:
            delta = (delta @ layers[l][0].T) * (pre[l - 1] > 0.0)
    return loss, grads


def train_lr(ds: Dataset, ridge: float = 0.0) -> Model:
    """Exact regularized least squares via the normal equations.

    A singular system with ridge = 0 is retried with a minimal 1e-8 ridge.
    The bias column is never penalized.
    """
    X_train, Y_train = ds.subset("train")
    if X_train.shape[0] < 2:
        raise ModelError("linear regression needs at least 2 training examples")
    mean, std = fit_standardizer(X_train)
    Xs = (X_train - mean) / std
    N, d = Xs.shape
    Xa = np.hstack([Xs, np.ones((N, 1))])
    gram = Xa.T @ Xa
    rhs = Xa.T @ Y_train

    used_ridge = ridge
    penalty = np.eye(d + 1)
    penalty[d, d] = 0.0
    while True:
        try:
            theta = np.linalg.solve(gram + used_ridge * penalty, rhs)
            break
        except np.linalg.LinAlgError:
            if used_ridge > 0:
                raise
            used_ridge = 1e-8
    W, b = theta[:d], theta[d]

    model = Model(kind="LR", layers=[(W, b)], feat_mean=mean, feat_std=std,
                  meta={"ridge": used_ridge})
    model.meta["train_mse"] = mse(forward(model.layers, Xs), Y_train)
    X_val, Y_val = ds.subset("val")
    if X_val.shape[0]:
        model.meta["val_mse"] = mse(forward(model.layers, (X_val - mean) / std), Y_val)
    return model


@dataclass
class TrainOptions:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 400
    patience: int = 20                  # early stopping on validation MSE
    decay_every: int = 100              # step decay of the learning rate
    decay_factor: float = 0.5


def _init_layers(dims: list[int], label_mean: np.ndarray, rng) -> list:
    layers = []
    for l, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        scale = np.sqrt(2.0 / d_in) if l < len(dims) - 2 else np.sqrt(1.0 / d_in)
        W = rng.normal(0.0, scale, size=(d_in, d_out))
        b = np.zeros(d_out)
        if l == len(dims) - 2:
            b = label_mean.copy()       # start predictions at the label mean
        layers.append((W, b))
    return layers


def train_ann(ds: Dataset, hidden: tuple[int, ...] = (64, 32),
              options: TrainOptions | None = None, seed: int = 0) -> Model:
    """Mini-batch gradient descent with momentum; deterministic per seed.

    hidden=() trains a plain linear model by gradient descent. Training
    aborts with the offending step recorded if the loss leaves the
    floating range. Returns the parameters that were best on validation.
    """
    opt = options or TrainOptions()
    X_train, Y_train = ds.subset("train")
    X_val, Y_val = ds.subset("val")
    if X_train.shape[0] < 1:
        raise ModelError("no training examples")
    mean, std = fit_standardizer(X_train)
    Xs = (X_train - mean) / std
    Xv = (X_val - mean) / std if X_val.shape[0] else None

    rng = np.random.default_rng(seed)
    dims = [Xs.shape[1], *hidden, Y_train.shape[1]]
    layers = _init_layers(dims, Y_train.mean(axis=0), rng)
    velocity = [(np.zeros_like(W), np.zeros_like(b)) for W, b in layers]

    best_val = float("inf")
    best_layers = [(W.copy(), b.copy()) for W, b in layers]
    best_epoch = 0
    history = []
    stale = 0
    lr = opt.learning_rate
    N = Xs.shape[0]

    for epoch in range(1, opt.max_epochs + 1):
        if epoch > 1 and opt.decay_every and (epoch - 1) % opt.decay_every == 0:
            lr *= opt.decay_factor
        order = rng.permutation(N)
        for step, start in enumerate(range(0, N, opt.batch_size)):
            batch = order[start:start + opt.batch_size]
            # overflow here is handled explicitly via the divergence check
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_and_gradients(layers, Xs[batch], Y_train[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"training loss {loss!r} at epoch {epoch} step {step}", epoch, step)
            new_layers = []
            new_velocity = []
            for (W, b), (vW, vb), (gW, gb) in zip(layers, velocity, grads):
                vW = opt.momentum * vW - lr * gW
                vb = opt.momentum * vb - lr * gb
                new_layers.append((W + vW, b + vb))
                new_velocity.append((vW, vb))
            layers, velocity = new_layers, new_velocity

        train_mse = mse(forward(layers, Xs), Y_train)
        val_mse = mse(forward(layers, Xv), Y_val) if Xv is not None else train_mse
        history.append((epoch, train_mse, val_mse))
        if val_mse < best_val - 1e-12:
            best_val = val_mse
            best_layers = [(W.copy(), b.copy()) for W, b in layers]
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= opt.patience:
                break

    model = Model(kind="ANN", layers=best_layers, feat_mean=mean, feat_std=std,
                  meta={
                      "hidden": list(hidden), "seed": seed,
                      "learning_rate": opt.learning_rate, "momentum": opt.momentum,
                      "batch_size": opt.batch_size, "decay_every": opt.decay_every,
                      "decay_factor": opt.decay_factor, "epochs_run": history[-1][0],
                      "best_epoch": best_epoch, "val_mse": best_val,
                      "train_mse": mse(forward(best_layers, Xs), Y_train),
                      "history": history,
                  })
    return model


def predict(model: Model, features: np.ndarray) -> np.ndarray:
    """Predicted demand, clamped at zero from below (clamping is logged)."""
    X = np.asarray(features, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.input_dim:
        raise ModelError(f"feature length {X.shape[1]} != model input {model.input_dim}")
    out = forward(model.layers, (X - model.feat_mean) / model.feat_std)
    clamped = int(np.sum(out < 0.0))
    if clamped:
        log.debug("prediction clamped %d negative components to 0", clamped)
    out = np.maximum(out, 0.0)
    return out[0] if single else out


# --------------------------------------------------------------------------
# Model files: architecture, row-major weights, normalization, metadata.

def save_model(model: Model, path) -> None:
    payload = {
        "kind": model.kind,
        "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in model.layers],
        "feat_mean": model.feat_mean.tolist(),
        "feat_std": model.feat_std.tolist(),
        "meta": model.meta,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path) -> Model:
    with open(path) as fh:
        data = json.load(fh)
    try:
        return Model(
            kind=data["kind"],
            layers=[(np.array(l["W"], dtype=float), np.array(l["b"], dtype=float))
                    for l in data["layers"]],
            feat_mean=np.array(data["feat_mean"], dtype=float),
            feat_std=np.array(data["feat_std"], dtype=float),
            meta=data.get("meta", {}))
    except KeyError as exc:
        raise ModelError(f"model JSON missing key {exc}") from exc
