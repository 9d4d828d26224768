from __future__ import annotations

import logging

import numpy as np

from .losses import bce_loss, categorical_cross_entropy, head_gradient
from .model import NetworkModel
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


def train(model: NetworkModel, train_data, val_data, epochs: int = 200, batch_size: int = 256,
          seed: int = 0, lr: float = 0.001, threshold: float = 0.5) -> NetworkModel:
    """Mini-batch Adam on binary cross-entropy; updates ``model`` in place and returns it.

    Each epoch appends train loss, validation loss and validation mean TPR to
    ``model.log``. The weights after the last epoch are kept.
    """
    from ..evaluation import threshold_scores, tpr_per_class

    if epochs < 0 or batch_size < 1:
        raise ValueError("epochs must be >= 0 and batch_size >= 1")
    if len(train_data) == 0 or len(val_data) == 0:
        raise ValueError("training and validation data must be non-empty")
    if not model.initialized:
        raise ValueError("model has no weights")
    if epochs == 0:
        return model

    loss_fn = bce_loss if model.head == "sigmoid" else categorical_cross_entropy
    x = model.features(train_data.samples)
    y = train_data.label_matrix().astype(model.dtype)
    xv = model.features(val_data.samples)
    yv = val_data.label_matrix().astype(model.dtype)
    if x.shape[1:] != tuple(model.config["input_shape"]):
        raise ValueError("feature shape does not match the model input")

    rng = np.random.default_rng(seed)
    state = AdamState.for_params(model.params, lr=lr)
    n = len(x)
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            probs = model.forward(x[idx], train=True, rng=rng)
            loss, _ = loss_fn(probs, y[idx])
            total += loss * len(idx)
            model.backward(head_gradient(model.head, probs, y[idx]), skip_head=True)
            adam_step(model.params, model.grads, state)
        scores = model.predict_inputs(xv)
        val_loss, _ = loss_fn(scores, yv)
        report = tpr_per_class(threshold_scores(scores, threshold), val_data, True, threshold)
        entry = {"epoch": epoch + 1, "train_loss": total / n, "val_loss": val_loss,
                 "val_mean_tpr": report.mean_tpr()}
        model.log.append(entry)
        log.info("epoch %d/%d  loss %.4f  val loss %.4f  val mean TPR %.4f",
                 epoch + 1, epochs, entry["train_loss"], val_loss, entry["val_mean_tpr"] or 0.0)
    return model
