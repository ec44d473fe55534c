"""Toy MLP trainer that writes a weight snapshot per batch.

Dense layers with ReLU, inverted dropout on hidden activations, softmax
cross-entropy and RMSProp, all in numpy. Everything random (dataset, init,
shuffling, dropout masks) derives from ``TrainConfig.seed``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import IoFailure
from .snapshot_io import (
    LayerWeights,
    MetricSeries,
    NetworkState,
    snapshot_name,
    write_metrics,
    write_snapshot,
)

log = logging.getLogger(__name__)

DATASETS = ("blobs", "xor", "rings")
RMSPROP_DECAY = 0.9
RMSPROP_EPS = 1e-8
BLOBS_SEPARATION = 4.0

Params = List[Tuple[np.ndarray, np.ndarray]]


@dataclass
class TrainConfig:
    hidden_sizes: List[int] = field(default_factory=lambda: [16, 16])
    dropout: float = 0.2
    lr: float = 0.01
    batch_size: int = 256
    epochs: int = 10
    seed: int = 0
    dataset: str = "blobs"
    snapshot_every: int = 1
    n_samples: int = 1000
    # replaces the shuffling stream only, for input-order control runs
    shuffle_seed: Optional[int] = None

    def __post_init__(self):
        self.hidden_sizes = [int(h) for h in self.hidden_sizes]
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden sizes must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if self.batch_size < 1 or self.epochs < 1 or self.snapshot_every < 1:
            raise ValueError("batch_size, epochs and snapshot_every must be >= 1")
        if self.dataset not in DATASETS:
            raise ValueError(f"dataset must be one of {DATASETS}")
        if self.n_samples < 20:
            raise ValueError("n_samples must be at least 20")


@dataclass
class SyntheticDataset:
    features: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1

    def train(self):
        return self.features[self.train_idx], self.labels[self.train_idx]

    def validation(self):
        return self.features[self.val_idx], self.labels[self.val_idx]


def generate_dataset(kind: str, n: int, seed: int, separation: float = BLOBS_SEPARATION) -> SyntheticDataset:
    """Two-class 2-D toy data with a deterministic 80/20 train/validation split.

    ``blobs``: unit-variance Gaussians ``separation`` apart along x.
    ``xor``: four clusters at ``(+-2, +-2)``, label = sign(x) xor sign(y).
    ``rings``: concentric annuli of radius 1 and 2.5.
    """
    if n < 20:
        raise ValueError("n must be at least 20")
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    if kind == "blobs":
        centers = np.array([[-separation / 2, 0.0], [separation / 2, 0.0]])
        x = centers[labels] + rng.normal(size=(n, 2))
    elif kind == "xor":
        quadrant = np.arange(n) % 4
        signs = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=float)
        x = 2.0 * signs[quadrant] + 0.5 * rng.normal(size=(n, 2))
        labels = (quadrant >= 2).astype(int)
    elif kind == "rings":
        radius = np.where(labels == 0, 1.0, 2.5) + 0.2 * rng.normal(size=n)
        angle = rng.uniform(0, 2 * np.pi, size=n)
        x = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    else:
        raise ValueError(f"unknown dataset {kind!r}")
    order = rng.permutation(n)
    n_train = int(round(0.8 * n))
    return SyntheticDataset(x, labels, np.sort(order[:n_train]), np.sort(order[n_train:]))


def init_params(sizes: Sequence[int], rng: np.random.Generator) -> Params:
    """Glorot-uniform weights of shape (fan_out, fan_in), zero biases."""
    params = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append((rng.uniform(-limit, limit, size=(fan_out, fan_in)), np.zeros(fan_out)))
    return params


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient with respect to the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    n = logits.shape[0]
    loss = -log_p[np.arange(n), labels].mean()
    grad = np.exp(log_p)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


def forward(params: Params, x: np.ndarray, dropout: float = 0.0, rng=None):
    """Logits plus the activations and masks needed by :func:`backward`."""
    acts, masks = [x], []
    a = x
    for i, (w, b) in enumerate(params):
        z = a @ w.T + b
        if i == len(params) - 1:
            return z, acts, masks
        a = np.maximum(z, 0.0)
        if dropout > 0.0:
            mask = (rng.random(a.shape) >= dropout) / (1.0 - dropout)
            a = a * mask
        else:
            mask = None
        masks.append(mask)
        acts.append(a)
    raise ValueError("empty parameter list")


def backward(params: Params, acts, masks, dlogits: np.ndarray) -> Params:
    grads = [None] * len(params)
    delta = dlogits
    for i in range(len(params) - 1, -1, -1):
        a_in = acts[i]
        grads[i] = (delta.T @ a_in, delta.sum(axis=0))
        if i == 0:
            break
        delta = delta @ params[i][0]
        if masks[i - 1] is not None:
            delta = delta * masks[i - 1]
        # post-dropout activation is zero exactly where the ReLU was inactive or dropped
        delta = delta * (a_in > 0)
    return grads


def loss_and_grads(params: Params, x, y, dropout: float = 0.0, rng=None):
    logits, acts, masks = forward(params, x, dropout, rng)
    loss, dlogits = softmax_cross_entropy(logits, y)
    return loss, backward(params, acts, masks, dlogits)


def accuracy(params: Params, x, y) -> float:
    logits, _, _ = forward(params, x)
    return float(np.mean(np.argmax(logits, axis=1) == y))


class RMSProp:
    def __init__(self, params: Params, lr: float, decay: float = RMSPROP_DECAY, eps: float = RMSPROP_EPS):
        self.lr, self.decay, self.eps = lr, decay, eps
        self.sq = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]

    def step(self, params: Params, grads: Params) -> None:
        for (p_w, p_b), (g_w, g_b), (s_w, s_b) in zip(params, grads, self.sq):
            for p, g, s in ((p_w, g_w, s_w), (p_b, g_b, s_b)):
                s *= self.decay
                s += (1.0 - self.decay) * g * g
                p -= self.lr * g / (np.sqrt(s) + self.eps)


def to_state(params: Params, step: int) -> NetworkState:
    return NetworkState([LayerWeights(w, b) for w, b in params], step)


def _streams(cfg: TrainConfig):
    init_ss, shuffle_ss, dropout_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    if cfg.shuffle_seed is not None:
        shuffle_ss = np.random.SeedSequence([cfg.seed, cfg.shuffle_seed])
    return tuple(np.random.default_rng(s) for s in (init_ss, shuffle_ss, dropout_ss))


@dataclass
class TrainResult:
    metrics: MetricSeries
    epoch_losses: List[float]
    params: Params
    steps: int


def fit(cfg: TrainConfig, on_step: Optional[Callable[[Params, int], None]] = None) -> TrainResult:
    """Train and call ``on_step(params, step)`` at step 0 and every ``snapshot_every`` updates.

    Validation accuracy is recorded before training (step 0) and after every epoch.
    """
    data = generate_dataset(cfg.dataset, cfg.n_samples, cfg.seed)
    x_tr, y_tr = data.train()
    x_val, y_val = data.validation()
    init_rng, shuffle_rng, dropout_rng = _streams(cfg)
    sizes = [x_tr.shape[1], *cfg.hidden_sizes, data.n_classes]
    params = init_params(sizes, init_rng)
    opt = RMSProp(params, cfg.lr)

    step = 0
    if on_step:
        on_step(params, step)
    points = [(0, accuracy(params, x_val, y_val))]
    epoch_losses = []
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(x_tr))
        losses, sizes_seen = [], []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grads(params, x_tr[idx], y_tr[idx], cfg.dropout, dropout_rng)
            opt.step(params, grads)
            step += 1
            losses.append(loss)
            sizes_seen.append(len(idx))
            if on_step and step % cfg.snapshot_every == 0:
                on_step(params, step)
        epoch_losses.append(float(np.average(losses, weights=sizes_seen)))
        points.append((step, accuracy(params, x_val, y_val)))
        log.info("epoch %d: loss %.4f, val acc %.4f", epoch + 1, epoch_losses[-1], points[-1][1])
    return TrainResult(MetricSeries(points), epoch_losses, params, step)


def train(cfg: TrainConfig, out_dir) -> MetricSeries:
    """Train, writing ``step_%08d.nnph`` snapshots and ``metrics.csv`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc

    def save(params, step):
        write_snapshot(to_state(params, step), out / snapshot_name(step))

    result = fit(cfg, save)
    write_metrics(result.metrics, out / "metrics.csv")
    return result.metrics


def gradient_check(cfg: TrainConfig, h: float = 1e-5, batch: int = 8) -> float:
    """Max relative error between backprop and central finite differences.

    Relative error is ``|a - n| / max(|a| + |n|, 1e-6)``; the floor keeps
    parameters with near-zero gradient from dominating through round-off.
    """
    data = generate_dataset(cfg.dataset, max(20, batch), cfg.seed)
    x, y = data.features[:batch], data.labels[:batch]
    rng = np.random.default_rng(cfg.seed)
    sizes = [x.shape[1], *cfg.hidden_sizes, data.n_classes]
    params = init_params(sizes, rng)
    n_params = sum(w.size + b.size for w, b in params)
    if n_params > 64:
        raise ValueError(f"gradient check is meant for tiny networks, got {n_params} parameters")
    params = [(w, rng.normal(scale=0.1, size=b.shape)) for w, b in params]

    _, grads = loss_and_grads(params, x, y)
    worst = 0.0
    for (w, b), (gw, gb) in zip(params, grads):
        for p, g in ((w, gw), (b, gb)):
            flat, gflat = p.reshape(-1), g.reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + h
                up, _ = loss_and_grads(params, x, y)
                flat[k] = orig - h
                down, _ = loss_and_grads(params, x, y)
                flat[k] = orig
                numeric = (up - down) / (2 * h)
                err = abs(gflat[k] - numeric) / max(abs(gflat[k]) + abs(numeric), 1e-6)
                worst = max(worst, err)
    return worst
