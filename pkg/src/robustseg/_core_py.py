"""Pure numpy versions of the kernels in ``_core.pyx``.

Accumulation order matches the compiled kernels term for term, so the two
backends agree exactly on which pixels are inliers.
"""
import numpy as np

CHUNK = 256


def _predict(design, alphas):
    # alphas: (m, k) -> predictions (n, m), summed over j in ascending order
    pred = np.zeros((design.shape[0], alphas.shape[0]))
    for j in range(design.shape[1]):
        pred += design[:, j, None] * alphas[None, :, j]
    return pred


def consensus_counts(design, f, alphas, eps):
    alphas = np.asarray(alphas, dtype=float)
    out = np.zeros(alphas.shape[0], dtype=np.int64)
    for start in range(0, alphas.shape[0], CHUNK):
        pred = _predict(design, alphas[start:start + CHUNK])
        out[start:start + CHUNK] = (np.abs(f[:, None] - pred) <= eps).sum(axis=0)
    return out


def best_consensus(design, f, alphas, valid, eps):
    valid = np.asarray(valid, dtype=bool)
    if not valid.any():
        return -1, 0
    idx = np.flatnonzero(valid)
    counts = consensus_counts(design, f, np.asarray(alphas)[idx], eps)
    i = int(np.argmax(counts))
    return int(idx[i]), int(counts[i])


def inlier_mask(design, f, alpha, eps):
    pred = _predict(design, np.asarray(alpha, dtype=float)[None, :])[:, 0]
    return np.abs(f - pred) <= eps
