"""Mask comparison against ground truth, foreground as the positive class."""
import numpy as np

from .errors import ParameterError


def confusion(mask, truth):
    mask = np.asarray(mask, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if mask.shape != truth.shape:
        raise ParameterError(f"mask shape {mask.shape} does not match truth shape {truth.shape}")
    tp = int(np.count_nonzero(mask & truth))
    fp = int(np.count_nonzero(mask & ~truth))
    fn = int(np.count_nonzero(~mask & truth))
    return tp, fp, fn


def compute_metrics(mask, truth):
    """Return ``(precision, recall, f1)``.

    An empty prediction has precision 1, and an empty truth has recall 1,
    so an empty mask against an empty truth scores (1, 1, 1).
    """
    tp, fp, fn = confusion(mask, truth)
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
