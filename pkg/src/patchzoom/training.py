"""Training-set generation: gradient-weighted sub-image sampling and the
paired low/high-resolution patch database.

Low-resolution patches are stored at the upsampled (high-resolution-aligned)
size: LR = bicubic_up(downsample(blur(HR))), so both blocks of a pair are
p x p and come from the same spatial location.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .config import SrConfig
from .errors import FormatError
from .imageops import (
    bicubic_upsample,
    downsample,
    extract_patches,
    feature_dim,
    gaussian_blur,
    gradient_features,
)

__all__ = [
    "SampleSpec",
    "PatchDb",
    "sample_subimages",
    "make_pair",
    "build_db",
    "save_db",
    "load_db",
]

_MAGIC = b"PZDB1"
_HEADER = struct.Struct("<5sIQHHHIdB")  # magic, version, n, p, overlap, scale, feat dim, blur sigma, order
_VERSION = 1
_ORDER_CODES = {"first": 1, "second": 2, "both": 3}
_ORDER_NAMES = {v: k for k, v in _ORDER_CODES.items()}
_GRAD1 = np.array([-1.0, 0.0, 1.0])


@dataclass
class SampleSpec:
    """How many sub-images to crop per source image, and how large."""

    sub_image_size: int = 100
    samples_per_image: int = 25


@dataclass
class PatchDb:
    """Column-parallel patch store; row index equals the patch id."""

    ids: np.ndarray  # (n,) uint64, contiguous 0..n-1
    lr: np.ndarray  # (n, p*p) float32, upsampled-LR pixels
    features: np.ndarray  # (n, feature_dim) float32
    hr: np.ndarray  # (n, p*p) float32
    patch_size: int
    overlap: int
    scale_factor: int
    blur_sigma: float
    feature_order: str

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


def sample_subimages(img, spec: SampleSpec, rng) -> list[np.ndarray]:
    """Draw square crops centered at pixels sampled from the gradient-mass CDF.

    Pixel mass is |dI/dx| + |dI/dy|, zeroed on a half-crop margin so every
    crop fits; a zero-gradient image falls back to uniform sampling over the
    valid centers.
    """
    img = np.asarray(img, dtype=np.float64)
    size = spec.sub_image_size
    h, w = img.shape
    if h < size or w < size:
        raise ValueError(f"image {img.shape} smaller than sub-image size {size}")
    rng = np.random.default_rng(rng)

    gx = correlate1d(img, _GRAD1, axis=1, mode="nearest")
    gy = correlate1d(img, _GRAD1, axis=0, mode="nearest")
    mass = np.abs(gx) + np.abs(gy)

    half = size // 2
    valid = np.zeros_like(mass, dtype=bool)
    valid[half : h - size + half + 1, half : w - size + half + 1] = True
    mass[~valid] = 0.0
    total = mass.sum()
    if total == 0.0:
        mass[valid] = 1.0
        total = mass.sum()

    cdf = np.cumsum(mass.ravel())
    cdf /= cdf[-1]
    picks = np.searchsorted(cdf, rng.random(spec.samples_per_image), side="right")
    crops = []
    for flat in picks:
        cy, cx = divmod(int(flat), w)
        y0, x0 = cy - half, cx - half
        crops.append(img[y0 : y0 + size, x0 : x0 + size].copy())
    return crops


def make_pair(hr_img, blur_sigma: float, factor: int) -> tuple[np.ndarray, np.ndarray]:
    """(upsampled-LR, HR) pair; HR is cropped to a multiple of the factor."""
    hr = np.asarray(hr_img, dtype=np.float64)
    h, w = hr.shape
    hr = hr[: (h // factor) * factor, : (w // factor) * factor]
    lr = downsample(gaussian_blur(hr, blur_sigma), factor)
    return bicubic_upsample(lr, factor), hr


def build_db(images, cfg: SrConfig, spec: SampleSpec | None = None, rng=None) -> PatchDb:
    """Assemble the patch-pair database from a list of source images.

    Each image contributes ``spec.samples_per_image`` gradient-sampled crops;
    each crop is degraded to its LR counterpart and both are cut into aligned
    patch grids.  Ids are assigned sequentially in processing order.
    """
    cfg.validate()
    if spec is None:
        spec = SampleSpec()
    if rng is None:
        rng = cfg.seed
    rng = np.random.default_rng(rng)
    images = list(images)
    if not images:
        raise ValueError("no training images given")

    lr_blocks, feat_blocks, hr_blocks = [], [], []
    for i, img in enumerate(images):
        try:
            crops = sample_subimages(img, spec, rng)
        except ValueError as exc:
            warnings.warn(f"skipping training image {i}: {exc}")
            continue
        for crop in crops:
            lr_up, hr = make_pair(crop, cfg.blur_sigma, cfg.scale_factor)
            lr_grid = extract_patches(lr_up, cfg.patch_size, cfg.overlap, flush=False)
            hr_grid = extract_patches(hr, cfg.patch_size, cfg.overlap, flush=False)
            feats = gradient_features(lr_grid.patches, cfg.feature_order)
            n = lr_grid.patches.shape[0]
            lr_blocks.append(lr_grid.patches.reshape(n, -1).astype(np.float32))
            feat_blocks.append(feats.astype(np.float32))
            hr_blocks.append(hr_grid.patches.reshape(n, -1).astype(np.float32))
    if not lr_blocks:
        raise ValueError("no usable training images (all smaller than the sub-image size)")

    lr = np.concatenate(lr_blocks)
    return PatchDb(
        ids=np.arange(len(lr), dtype=np.uint64),
        lr=lr,
        features=np.concatenate(feat_blocks),
        hr=np.concatenate(hr_blocks),
        patch_size=cfg.patch_size,
        overlap=cfg.overlap,
        scale_factor=cfg.scale_factor,
        blur_sigma=cfg.blur_sigma,
        feature_order=cfg.feature_order,
    )


def _record_dtype(patch_size: int, dim: int) -> np.dtype:
    pp = patch_size * patch_size
    return np.dtype(
        [("id", "<u8"), ("lr", "<f4", (pp,)), ("feat", "<f4", (dim,)), ("hr", "<f4", (pp,))]
    )


def save_db(db: PatchDb, path) -> None:
    """Write the database: fixed header then fixed-size per-patch records."""
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        len(db),
        db.patch_size,
        db.overlap,
        db.scale_factor,
        db.feature_dim,
        db.blur_sigma,
        _ORDER_CODES[db.feature_order],
    )
    records = np.empty(len(db), dtype=_record_dtype(db.patch_size, db.feature_dim))
    records["id"] = db.ids
    records["lr"] = db.lr
    records["feat"] = db.features
    records["hr"] = db.hr
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(records.tobytes())


def load_db(path) -> PatchDb:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FormatError("file shorter than the database header", len(data))
    magic, version, n, p, overlap, scale, dim, blur_sigma, order_code = _HEADER.unpack(
        data[: _HEADER.size]
    )
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}", 0)
    if version != _VERSION:
        raise FormatError(f"unsupported database version {version}", 5)
    if order_code not in _ORDER_NAMES:
        raise FormatError(f"unknown feature-order code {order_code}", _HEADER.size - 1)
    dtype = _record_dtype(p, dim)
    expected = _HEADER.size + n * dtype.itemsize
    if len(data) != expected:
        raise FormatError(
            f"expected {expected} bytes for {n} records, file has {len(data)}",
            min(len(data), expected),
        )
    records = np.frombuffer(data, dtype=dtype, offset=_HEADER.size)
    return PatchDb(
        ids=records["id"].copy(),
        lr=records["lr"].copy(),
        features=records["feat"].copy(),
        hr=records["hr"].copy(),
        patch_size=p,
        overlap=overlap,
        scale_factor=scale,
        blur_sigma=blur_sigma,
        feature_order=_ORDER_NAMES[order_code],
    )
