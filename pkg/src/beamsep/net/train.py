"""Mini-batch training loop with dev-set model selection."""

from __future__ import annotations

import dataclasses

import numpy as np

from .adam import Adam
from .model import TcnModel, mse_loss


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 8
    max_epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")


def _as_model_dtype(arrays, dtype):
    return tuple(np.ascontiguousarray(a, dtype=dtype) for a in arrays)


def inference_loss(model: TcnModel, data, batch_size=16) -> float:
    """Mean squared error over a (b0, b1, target) triple in inference mode."""
    b0, b1, tgt = data
    total = 0.0
    count = 0
    for i in range(0, b0.shape[0], batch_size):
        pred = model.forward(b0[i : i + batch_size], b1[i : i + batch_size], training=False)
        diff = pred.astype(np.float64) - tgt[i : i + batch_size]
        total += float(np.sum(diff**2))
        count += diff.size
    return total / count


def train(model: TcnModel, train_data, dev_data, cfg: TrainConfig):
    """Train in place; the model ends at the epoch with the lowest dev loss.

    Args:
        model: a TcnModel (updated in place).
        train_data, dev_data: (b0, b1, target) arrays shaped (n, channels, frames).
        cfg: optimizer and schedule settings.

    Returns:
        History: one {"epoch", "train_loss", "dev_loss"} dict per epoch.
    """
    b0, b1, tgt = _as_model_dtype(train_data, model.dtype)
    dev = _as_model_dtype(dev_data, model.dtype)
    n = b0.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    if not (b0.shape == b1.shape == tgt.shape):
        raise ValueError("train arrays disagree in shape")

    rng = np.random.default_rng(cfg.seed)
    opt = Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    params = model.parameters()
    history = []
    best_loss = np.inf
    best_snap = None

    for epoch in range(cfg.max_epochs):
        perm = rng.permutation(n)
        running = 0.0
        for i in range(0, n, cfg.batch_size):
            idx = perm[i : i + cfg.batch_size]
            pred = model.forward(b0[idx], b1[idx], training=True)
            loss, grad = mse_loss(pred, tgt[idx])
            model.backward(grad)
            opt.step(params)
            running += loss * idx.size
        dev_loss = inference_loss(model, dev, max(cfg.batch_size, 16))
        history.append(
            {"epoch": epoch, "train_loss": running / n, "dev_loss": dev_loss}
        )
        if dev_loss < best_loss:
            best_loss = dev_loss
            best_snap = model.snapshot()

    if best_snap is not None:
        model.restore(best_snap)
    return history
