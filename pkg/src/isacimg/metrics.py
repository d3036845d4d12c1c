"""Detection scoring: peak normalization, thresholding, MD/FA, NMSE."""

import numpy as np

from .errors import DegenerateTruth

DEFAULT_THRESHOLD = 0.5


def normalize(x_hat: np.ndarray):
    """Scale to unit peak; returns (vector, all_zero_flag).

    An all-zero (or non-positive) input is returned unchanged with the
    flag set, so callers can record the degenerate case instead of
    dividing by zero.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    peak = x_hat.max(initial=0.0)
    if peak <= 0.0:
        return x_hat.copy(), True
    return x_hat / peak, False


def detect(x_norm: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Boolean occupancy: value >= threshold (boundary inclusive)."""
    return np.asarray(x_norm) >= threshold


def md_fa(detected: np.ndarray, truth_occupancy: np.ndarray):
    """Missed-detection and false-alarm rates.

    MD = occupied-but-missed / occupied, FA = empty-but-flagged / empty.
    Raises DegenerateTruth when either denominator is zero.
    """
    detected = np.asarray(detected, dtype=bool)
    truth = np.asarray(truth_occupancy, dtype=bool)
    if detected.shape != truth.shape:
        raise ValueError("detection and truth lengths differ")
    n_occupied = int(truth.sum())
    n_empty = int((~truth).sum())
    if n_occupied == 0 or n_empty == 0:
        raise DegenerateTruth(
            f"need both occupied and empty pixels (got {n_occupied} occupied, {n_empty} empty)"
        )
    md = float((truth & ~detected).sum() / n_occupied)
    fa = float((~truth & detected).sum() / n_empty)
    return md, fa


def nmse(x_hat: np.ndarray, x_true: np.ndarray) -> float:
    """10 log10(||x_hat - x||^2 / ||x||^2); -inf for an exact match."""
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_hat.shape != x_true.shape:
        raise ValueError("estimate and truth lengths differ")
    denom = float(np.sum(x_true**2))
    if denom == 0.0:
        return np.inf
    err = float(np.sum((x_hat - x_true) ** 2))
    if err == 0.0:
        return -np.inf
    return float(10.0 * np.log10(err / denom))
