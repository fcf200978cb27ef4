"""Deterministic synthetic textures for demos and tests.

Images mix smoothed noise, oriented gratings, and soft-edged shapes so they
carry enough repeated structure for patch retrieval to have something to
find, while staying cheap to generate.
"""

from __future__ import annotations

import numpy as np

from .imageops import gaussian_blur

__all__ = ["texture_image"]


def _soft_box(shape, rng) -> np.ndarray:
    h, w = shape
    mask = np.zeros(shape)
    bh = rng.integers(h // 4, h // 2 + 1)
    bw = rng.integers(w // 4, w // 2 + 1)
    y0 = rng.integers(0, h - bh + 1)
    x0 = rng.integers(0, w - bw + 1)
    mask[y0 : y0 + bh, x0 : x0 + bw] = 1.0
    return gaussian_blur(mask, 3.0)


def texture_image(seed: int, size: tuple[int, int] = (256, 256)) -> np.ndarray:
    """One sample from the synthetic corpus distribution, values in [0, 1]."""
    rng = np.random.default_rng(seed)
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64) / max(h, w)
    img = 0.5 + 0.25 * rng.uniform(-1, 1) * xx + 0.25 * rng.uniform(-1, 1) * yy

    for _ in range(3):
        theta = rng.uniform(0.0, np.pi)
        freq = rng.uniform(6.0, 28.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        grating = np.sin(2.0 * np.pi * freq * (np.cos(theta) * xx + np.sin(theta) * yy) + phase)
        img += rng.uniform(0.1, 0.25) * grating * _soft_box(size, rng)

    noise = gaussian_blur(rng.standard_normal(size), 2.0)
    img += 0.6 * noise

    for _ in range(2):  # hard-edged blocks give the corpus sharp transitions
        img += rng.uniform(-0.25, 0.25) * (_soft_box(size, rng) > 0.5)

    lo, hi = img.min(), img.max()
    return 0.03 + 0.94 * (img - lo) / (hi - lo)
