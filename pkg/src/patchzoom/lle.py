"""Reconstruction weights for a patch as an affine combination of neighbors.

Solves  min_w ||y - sum_m w_m y_m||^2  subject to  sum_m w_m = 1  via the
local Gram matrix of neighbor differences, then transfers the weights to the
neighbors' high-resolution blocks.  Weights may be negative: the constraint
set is the affine hull of the neighbors, not the simplex.
"""

from __future__ import annotations

import numpy as np

__all__ = ["solve_weights", "reconstruct_hr"]

# The default ridge is light enough that solutions track the exact
# constrained optimum to well under 1%.  Callers mixing many (possibly
# collinear) neighbors, like the inference pipeline, pass a heavier value.
DEFAULT_RIDGE = 1e-6
_ABSOLUTE_RIDGE = 1e-12  # used when the Gram trace vanishes (all neighbors equal the target)


def solve_weights(target, neighbors, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    """Sum-to-one least-squares weights reconstructing ``target`` from rows of ``neighbors``.

    The Gram matrix G[m, n] = (y - y_m) . (y - y_n) is regularized by
    ridge * trace(G) / M on the diagonal, which keeps the solve well posed
    when there are more neighbors than dimensions.
    """
    y = np.asarray(target, dtype=np.float64).ravel()
    ny = np.asarray(neighbors, dtype=np.float64)
    ny = ny.reshape(ny.shape[0], -1)
    m = ny.shape[0]
    if m < 1:
        raise ValueError("need at least one neighbor")
    if ny.shape[1] != y.size:
        raise ValueError(f"dimension mismatch: target {y.size}, neighbors {ny.shape[1]}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(ny))):
        raise ValueError("non-finite values in solver input")

    diff = y[None, :] - ny
    gram = diff @ diff.T
    trace = np.trace(gram)
    lam = ridge * trace / m if trace > 0.0 else _ABSOLUTE_RIDGE
    gram.flat[:: m + 1] += lam
    w = np.linalg.solve(gram, np.ones(m))
    return w / w.sum()


def reconstruct_hr(weights, hr_patches) -> np.ndarray:
    """Weighted combination of the neighbors' high-resolution blocks.

    Output is intentionally not clamped; clamping happens once at final
    image assembly so the combination stays linear.
    """
    w = np.asarray(weights, dtype=np.float64)
    blocks = np.asarray(hr_patches, dtype=np.float64)
    if w.ndim != 1 or blocks.shape[0] != w.size:
        raise ValueError(f"{w.size} weights for {blocks.shape[0]} neighbor blocks")
    return np.tensordot(w, blocks, axes=1)
