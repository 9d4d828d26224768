"""Snapshot to network input: 128-point DFT, then a 128 x 2 real/imaginary matrix."""
from __future__ import annotations

import numpy as np

from .signals import SNAPSHOT_LEN

DC_ROW = SNAPSHOT_LEN // 2


def dft_128(snapshot: np.ndarray, centered: bool = True) -> np.ndarray:
    """DFT of one snapshot (or a stack of them along the last axis).

    With ``centered`` the bins are reordered so that row 64 holds DC and
    row 64 + m holds frequency m * 10 MHz / 128.
    """
    x = np.asarray(snapshot)
    if x.shape[-1] != SNAPSHOT_LEN:
        raise ValueError(f"expected {SNAPSHOT_LEN} samples, got {x.shape[-1]}")
    X = np.fft.fft(x.astype(np.complex128, copy=False), axis=-1)
    return np.fft.fftshift(X, axes=-1) if centered else X


def to_feature_matrix(snapshot: np.ndarray, normalize: bool = True,
                      centered: bool = True) -> np.ndarray:
    """128 x 2 matrix, real parts in column 0 and imaginary parts in column 1."""
    return feature_batch(np.asarray(snapshot)[None, :], normalize, centered,
                         dtype=np.float64)[0]


def feature_batch(samples: np.ndarray, normalize: bool = True, centered: bool = True,
                  dtype=np.float32) -> np.ndarray:
    """Features for a (n, 128) stack of snapshots, shape (n, 128, 2)."""
    X = dft_128(samples, centered)
    feats = np.stack([X.real, X.imag], axis=-1)
    if normalize:
        rms = np.sqrt(np.mean(feats ** 2, axis=(-2, -1), keepdims=True))
        feats = feats / np.where(rms > 0, rms, 1.0)
    if not np.all(np.isfinite(feats)):
        raise ValueError("non-finite feature values")
    return feats.astype(dtype, copy=False)


def network_input(features: np.ndarray) -> np.ndarray:
    """(n, 128, 2) features to the (n, 1, 2, 128) layout the conv stack expects."""
    return np.ascontiguousarray(np.transpose(features, (0, 2, 1))[:, None, :, :])
