"""Pixel-level primitives shared by every stage of the pipeline.

Images are 2-D float64 arrays in row-major (height, width) layout with
luminance samples nominally in [0, 1].  All convolutions replicate edge
pixels, so constant images pass through every operator unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image as _PilImage
from scipy.ndimage import correlate1d

__all__ = [
    "PatchGrid",
    "gaussian_kernel",
    "gaussian_blur",
    "downsample",
    "bicubic_upsample",
    "bicubic_stretch",
    "extract_patches",
    "gradient_features",
    "feature_dim",
    "integral_image",
    "box_mean",
    "box_mean_image",
    "mse",
    "psnr",
    "load_image",
    "save_image",
    "load_rgb",
    "save_rgb",
    "rgb_to_ycbcr",
    "ycbcr_to_rgb",
]

FEATURE_ORDERS = ("first", "second", "both")

_GRAD1 = np.array([-1.0, 0.0, 1.0])
_GRAD2 = np.array([-1.0, 0.0, 2.0, 0.0, -1.0])


def _as_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    return arr


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps truncated at radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing with edge replication."""
    img = _as_image(img)
    taps = gaussian_kernel(sigma)
    out = correlate1d(img, taps, axis=0, mode="nearest")
    return correlate1d(out, taps, axis=1, mode="nearest")


def downsample(img, factor: int) -> np.ndarray:
    """Keep every factor-th sample starting at index 0; dims floor-divide."""
    img = _as_image(img)
    factor = int(factor)
    if factor < 1:
        raise ValueError(f"downsample factor must be >= 1, got {factor}")
    h, w = img.shape
    return img[: (h // factor) * factor : factor, : (w // factor) * factor : factor].copy()


def _catmull_rom_weights(s: np.ndarray) -> np.ndarray:
    """Weights for the 4 nearest samples at fractional offset s (a = -0.5)."""
    s2 = s * s
    s3 = s2 * s
    return np.stack(
        [
            0.5 * (-s3 + 2.0 * s2 - s),
            0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
            0.5 * (-3.0 * s3 + 4.0 * s2 + s),
            0.5 * (s3 - s2),
        ],
        axis=-1,
    )


def _upsample_matrix(n_in: int, factor: int) -> np.ndarray:
    """Dense (n_in*factor, n_in) row-interpolation matrix, edges replicated."""
    n_out = n_in * factor
    out = np.arange(n_out, dtype=np.float64)
    src = (out + 0.5) / factor - 0.5
    base = np.floor(src).astype(np.int64)
    weights = _catmull_rom_weights(src - base)
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for tap in range(4):
        cols = np.clip(base - 1 + tap, 0, n_in - 1)
        np.add.at(mat, (rows, cols), weights[:, tap])
    return mat


def bicubic_stretch(img, factor_y: int, factor_x: int, clamp: bool = True) -> np.ndarray:
    """Catmull-Rom upsampling with independent integer factors per axis."""
    img = _as_image(img)
    factor_y, factor_x = int(factor_y), int(factor_x)
    if factor_y < 1 or factor_x < 1:
        raise ValueError(f"upsample factors must be >= 1, got ({factor_y}, {factor_x})")
    h, w = img.shape
    out = img
    if factor_y > 1:
        out = _upsample_matrix(h, factor_y) @ out
    if factor_x > 1:
        out = out @ _upsample_matrix(w, factor_x).T
    if out is img:
        out = img.copy()
    return np.clip(out, 0.0, 1.0) if clamp else out


def bicubic_upsample(img, factor: int, clamp: bool = True) -> np.ndarray:
    """Isotropic Catmull-Rom upsampling; output dims = input dims * factor."""
    return bicubic_stretch(img, factor, factor, clamp=clamp)


@dataclass
class PatchGrid:
    """Overlapping patches in row-principle order with their anchor offsets."""

    patch_size: int
    overlap: int
    anchors_y: np.ndarray
    anchors_x: np.ndarray
    patches: np.ndarray  # (rows*cols, p, p)

    @property
    def rows(self) -> int:
        return len(self.anchors_y)

    @property
    def cols(self) -> int:
        return len(self.anchors_x)

    @property
    def stride(self) -> int:
        return self.patch_size - self.overlap


def _patch_anchors(dim: int, patch_size: int, stride: int, flush: bool) -> np.ndarray:
    anchors = list(range(0, dim - patch_size + 1, stride))
    if flush and anchors[-1] != dim - patch_size:
        anchors.append(dim - patch_size)  # flush final patch to the edge
    return np.asarray(anchors, dtype=np.int64)


def extract_patches(img, patch_size: int, overlap: int, flush: bool = True) -> PatchGrid:
    """Tile the image with overlapping patches; stride = patch_size - overlap.

    With ``flush`` (the default) the trailing patch in each axis is anchored
    flush to the image edge, so every pixel is covered even when the stride
    does not divide evenly.  Training extraction turns it off: sampled pairs
    need no coverage guarantee and counts then follow the plain stride grid.
    """
    img = _as_image(img)
    patch_size, overlap = int(patch_size), int(overlap)
    if not (patch_size > overlap >= 0):
        raise ValueError(f"need patch_size > overlap >= 0, got ({patch_size}, {overlap})")
    h, w = img.shape
    if h < patch_size or w < patch_size:
        raise ValueError(f"image {img.shape} smaller than one {patch_size}x{patch_size} patch")
    stride = patch_size - overlap
    ay = _patch_anchors(h, patch_size, stride, flush)
    ax = _patch_anchors(w, patch_size, stride, flush)
    windows = np.lib.stride_tricks.sliding_window_view(img, (patch_size, patch_size))
    patches = windows[np.ix_(ay, ax)].reshape(-1, patch_size, patch_size).copy()
    return PatchGrid(patch_size, overlap, ay, ax, patches)


def feature_dim(patch_size: int, order: str) -> int:
    if order not in FEATURE_ORDERS:
        raise ValueError(f"unknown gradient order {order!r}")
    channels = 4 if order == "both" else 2
    return patch_size * patch_size * channels


def gradient_features(patch, order: str = "both") -> np.ndarray:
    """Concatenated per-pixel gradient responses of one patch (or a stack).

    First order uses the [-1, 0, 1] stencil along x and y; second order uses
    [-1, 0, 2, 0, -1].  Borders replicate.  A (n, p, p) stack yields (n, dim).
    """
    if order not in FEATURE_ORDERS:
        raise ValueError(f"unknown gradient order {order!r}")
    arr = np.asarray(patch, dtype=np.float64)
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"expected a patch or a patch stack, got shape {arr.shape}")
    p = arr.shape[-1]
    if order != "first" and p < 5:
        raise ValueError(f"second-order gradients need patches >= 5x5, got {p}x{p}")
    channels = []
    if order in ("first", "both"):
        channels.append(correlate1d(arr, _GRAD1, axis=2, mode="nearest"))
        channels.append(correlate1d(arr, _GRAD1, axis=1, mode="nearest"))
    if order in ("second", "both"):
        channels.append(correlate1d(arr, _GRAD2, axis=2, mode="nearest"))
        channels.append(correlate1d(arr, _GRAD2, axis=1, mode="nearest"))
    feats = np.concatenate([c.reshape(arr.shape[0], -1) for c in channels], axis=1)
    return feats[0] if single else feats


def integral_image(img) -> np.ndarray:
    """(h+1, w+1) cumulative-sum table; row/column 0 are zeros."""
    img = _as_image(img)
    h, w = img.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    ii[1:, 1:] = img.cumsum(axis=0).cumsum(axis=1)
    return ii


def box_mean(ii: np.ndarray, cy: int, cx: int, radius: int) -> float:
    """Mean over the square window clipped to the image; 4-lookup evaluation."""
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    y0, y1 = max(0, cy - radius), min(h - 1, cy + radius)
    x0, x1 = max(0, cx - radius), min(w - 1, cx + radius)
    total = ii[y1 + 1, x1 + 1] - ii[y0, x1 + 1] - ii[y1 + 1, x0] + ii[y0, x0]
    return float(total) / ((y1 - y0 + 1) * (x1 - x0 + 1))


def box_mean_image(ii: np.ndarray, radius: int) -> np.ndarray:
    """Clipped-window box mean at every pixel, vectorized over the image."""
    h, w = ii.shape[0] - 1, ii.shape[1] - 1
    y = np.arange(h)
    x = np.arange(w)
    y0 = np.clip(y - radius, 0, h - 1)
    y1 = np.clip(y + radius, 0, h - 1)
    x0 = np.clip(x - radius, 0, w - 1)
    x1 = np.clip(x + radius, 0, w - 1)
    total = (
        ii[np.ix_(y1 + 1, x1 + 1)]
        - ii[np.ix_(y0, x1 + 1)]
        - ii[np.ix_(y1 + 1, x0)]
        + ii[np.ix_(y0, x0)]
    )
    counts = np.outer(y1 - y0 + 1, x1 - x0 + 1)
    return total / counts


def mse(a, b) -> float:
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def psnr(a, b) -> float:
    """PSNR in dB for unit dynamic range; +inf when the images are identical."""
    m = mse(a, b)
    if m == 0.0:
        return float("inf")
    return 10.0 * math.log10(1.0 / m)


# --- PNG I/O: 8-bit grayscale and 24-bit RGB, scaled to [0, 1] ---

_LUMA = np.array([0.299, 0.587, 0.114])  # ITU-R BT.601


def load_image(path) -> np.ndarray:
    """Load a PNG as a luminance image in [0, 1]; RGB collapses via BT.601."""
    with _PilImage.open(path) as pil:
        if pil.mode in ("L", "I;16", "I"):
            return np.asarray(pil.convert("L"), dtype=np.float64) / 255.0
        rgb = np.asarray(pil.convert("RGB"), dtype=np.float64) / 255.0
    return rgb @ _LUMA


def save_image(path, img) -> None:
    img = _as_image(img)
    data = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    _PilImage.fromarray(data, mode="L").save(path)


def load_rgb(path) -> np.ndarray:
    """Load a PNG as an (h, w, 3) RGB array in [0, 1]."""
    with _PilImage.open(path) as pil:
        return np.asarray(pil.convert("RGB"), dtype=np.float64) / 255.0


def save_rgb(path, rgb) -> None:
    rgb = np.asarray(rgb, dtype=np.float64)
    data = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
    _PilImage.fromarray(data, mode="RGB").save(path)


def rgb_to_ycbcr(rgb):
    """Full-range BT.601 luma/chroma split; channels returned as (y, cb, cr)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    y = rgb @ _LUMA
    cb = (rgb[..., 2] - y) / 1.772 + 0.5
    cr = (rgb[..., 0] - y) / 1.402 + 0.5
    return y, cb, cr


def ycbcr_to_rgb(y, cb, cr) -> np.ndarray:
    r = y + 1.402 * (cr - 0.5)
    b = y + 1.772 * (cb - 0.5)
    g = (y - 0.299 * r - 0.114 * b) / 0.587
    return np.stack([r, g, b], axis=-1)
