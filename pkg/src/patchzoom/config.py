"""All pipeline tunables in one place."""

from __future__ import annotations

from dataclasses import dataclass

from .imageops import FEATURE_ORDERS

__all__ = ["SrConfig"]


@dataclass
class SrConfig:
    """Knobs for training, indexing, and inference.

    ``r=None`` means the bucket width is auto-tuned from the training
    features.  ``max_candidates=None`` defaults to 3*L at query time.
    ``solver_space`` picks the vectors the reconstruction weights are solved
    on: "pixels" (mean-subtracted patch pixels) or "features" (the hashed
    gradient features).  ``sigma_o`` (the overlap-prior weight) is kept for
    configurability but inert: ramp blending realizes the prior in closed
    form without it.
    """

    patch_size: int = 5
    overlap: int = 1
    scale_factor: int = 2
    blur_sigma: float = 1.0
    feature_order: str = "both"
    # hashing
    k: int = 3
    L: int = 30
    t: int = 2
    r: float | None = None
    target_bucket: int = 10
    max_candidates: int | None = None
    # weight solve
    solver_space: str = "pixels"
    ridge: float = 1e-3
    # back-projection
    iterations: int = 5
    tolerance: float = 1e-4
    sigma_c: float = 1.5
    sigma_s: float = 0.1
    radius: int = 3
    sigma_o: float = 1.0
    refresh_guide: bool = False
    seed: int = 42

    def validate(self) -> None:
        if not (self.patch_size > self.overlap >= 0):
            raise ValueError(f"need patch_size > overlap >= 0, got ({self.patch_size}, {self.overlap})")
        if self.scale_factor < 1:
            raise ValueError(f"scale_factor must be >= 1, got {self.scale_factor}")
        if self.blur_sigma <= 0:
            raise ValueError(f"blur_sigma must be positive, got {self.blur_sigma}")
        if self.feature_order not in FEATURE_ORDERS:
            raise ValueError(f"unknown feature_order {self.feature_order!r}")
        if not (self.L >= self.t >= 1 and self.k >= 1):
            raise ValueError(f"need L >= t >= 1 and k >= 1, got k={self.k}, L={self.L}, t={self.t}")
        if self.r is not None and self.r <= 0:
            raise ValueError(f"bucket width r must be positive, got {self.r}")
        if self.solver_space not in ("pixels", "features"):
            raise ValueError(f"unknown solver_space {self.solver_space!r}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.sigma_c <= 0 or self.sigma_s <= 0:
            raise ValueError("bilateral sigmas must be positive")
        if self.radius < 1:
            raise ValueError(f"filter radius must be >= 1, got {self.radius}")

    def candidate_cap(self) -> int:
        return self.max_candidates if self.max_candidates is not None else 3 * self.L
