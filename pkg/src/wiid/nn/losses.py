from __future__ import annotations

import numpy as np

CLAMP = 1e-7


def bce_loss(predictions: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy over batch and classes, and its gradient.

    Predictions are clamped to [1e-7, 1 - 1e-7] before the logarithms; the
    gradient is taken at the clamped value and passed straight through the
    clamp, so it stays finite for p in {0, 1}.
    """
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"predictions {p.shape} and targets {t.shape} differ in shape")
    pc = np.clip(p, CLAMP, 1 - CLAMP)
    loss = -np.mean(t * np.log(pc) + (1 - t) * np.log(1 - pc))
    grad = (pc - t) / (pc * (1 - pc)) / p.size
    return float(loss), grad.astype(np.asarray(predictions).dtype, copy=False)


def categorical_cross_entropy(predictions: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over the batch of -sum t log p, rows of ``predictions`` summing to one."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"predictions {p.shape} and targets {t.shape} differ in shape")
    pc = np.clip(p, CLAMP, 1.0)
    n = p.shape[0] if p.ndim > 1 else 1
    loss = -np.sum(t * np.log(pc)) / n
    grad = -t / pc / n
    return float(loss), grad.astype(np.asarray(predictions).dtype, copy=False)


def head_gradient(head: str, probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gradient of the matching loss w.r.t. the head's pre-activation.

    sigmoid + BCE and softmax + CCE both reduce to (p - t) / normaliser, which
    avoids the vanishing product p(1-p) / (p(1-p)) once the head saturates.
    """
    t = targets.astype(probs.dtype, copy=False)
    if head == "sigmoid":
        return (probs - t) / probs.size
    if head == "softmax":
        return (probs - t) / probs.shape[0]
    raise ValueError(f"no fused gradient for head {head!r}")
