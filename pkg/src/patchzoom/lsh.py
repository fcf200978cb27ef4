"""Multi-table locality-sensitive hash index over patch feature vectors.

Hash functions are 1-stable projections h(v) = floor((alpha . v + beta) / r)
with alpha sampled from a Cauchy distribution (ratio of two standard
normals), so collision probability decays with the l1 distance between
vectors.  k functions concatenate into one table key; L tables are built
from a single seeded stream; a candidate must match in at least t tables.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import FormatError

__all__ = [
    "CauchyHash",
    "HashTable",
    "LshIndex",
    "QueryResult",
    "sample_cauchy",
    "hash_one",
    "build_index",
    "query",
    "table_entropy",
    "tune_r",
    "save_index",
    "load_index",
]

DEFAULT_EPSILON = 1e-6

_MAGIC = b"PZLSH1"
_HEADER = struct.Struct("<6sIIIdIQ")  # magic, dim, k, L, r, t, seed


def sample_cauchy(dim: int, epsilon: float = DEFAULT_EPSILON, rng=None) -> np.ndarray:
    """Cauchy vector via N(0,1)/N(0,1) with |denominator| >= epsilon."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    rng = np.random.default_rng(rng)
    a = rng.standard_normal(dim)
    b = rng.standard_normal(dim)
    while True:
        bad = np.abs(b) < epsilon
        if not bad.any():
            break
        b[bad] = rng.standard_normal(int(bad.sum()))
    return a / b


@dataclass
class CauchyHash:
    """One projection hash: floor((alpha . v + beta) / r)."""

    alpha: np.ndarray
    beta: float
    r: float


def hash_one(h: CauchyHash, v) -> int:
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != h.alpha.size:
        raise ValueError(f"dimension mismatch: hash {h.alpha.size}, vector {v.size}")
    return int(math.floor((float(h.alpha @ v) + h.beta) / h.r))


@dataclass
class HashTable:
    """k concatenated hashes plus the bucket map keyed by the k-integer tuple."""

    functions: list[CauchyHash]
    buckets: dict[tuple, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        self._proj = np.stack([f.alpha for f in self.functions])
        self._beta = np.array([f.beta for f in self.functions])
        self._r = self.functions[0].r

    def keys_for(self, vectors: np.ndarray) -> np.ndarray:
        """(n, k) integer keys for a (n, dim) batch of vectors."""
        z = vectors @ self._proj.T + self._beta
        return np.floor(z / self._r).astype(np.int64)

    def key_of(self, v: np.ndarray) -> tuple:
        return tuple(self.keys_for(v[None, :])[0])


@dataclass
class LshIndex:
    tables: list[HashTable]
    k: int
    L: int
    t: int
    r: float
    seed: int
    dim: int
    max_candidates: int


class QueryResult(NamedTuple):
    ids: list[int]
    ops: int  # candidate ids touched while collecting (the similarity-op count)


def build_index(
    ids,
    features,
    k: int = 3,
    L: int = 30,
    r: float = 4.0,
    t: int = 2,
    seed: int = 42,
    max_candidates: int | None = None,
) -> LshIndex:
    """Hash every (id, feature) pair into one bucket per table.

    All L*k hash functions are drawn from a single generator seeded with
    ``seed``, so rebuilding from the same seed and data is bit-identical.
    """
    feats = np.ascontiguousarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("features must be a non-empty (n, dim) array")
    ids = np.asarray(ids, dtype=np.int64)
    if ids.shape != (feats.shape[0],):
        raise ValueError("ids and features must have matching length")
    if not (L >= t >= 1 and k >= 1):
        raise ValueError(f"need L >= t >= 1 and k >= 1, got k={k}, L={L}, t={t}")
    if r <= 0:
        raise ValueError(f"bucket width r must be positive, got {r}")
    dim = feats.shape[1]
    rng = np.random.default_rng(seed)

    tables = []
    for _ in range(L):
        funcs = [
            CauchyHash(sample_cauchy(dim, rng=rng), float(rng.uniform(0.0, r)), float(r))
            for _ in range(k)
        ]
        table = HashTable(funcs)
        keys = table.keys_for(feats)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        order = np.argsort(inverse, kind="stable")  # keeps insertion order inside buckets
        bounds = np.searchsorted(inverse[order], np.arange(len(uniq)))
        grouped = np.split(ids[order], bounds[1:])
        table.buckets = {tuple(key): [int(i) for i in grp] for key, grp in zip(uniq, grouped)}
        tables.append(table)

    if max_candidates is None:
        max_candidates = 3 * L
    return LshIndex(tables, k, L, t, float(r), seed, dim, int(max_candidates))


def query(index: LshIndex, v) -> QueryResult:
    """Candidate ids matching ``v`` in at least t tables, capped at max_candidates.

    Buckets are visited in table order and scanned in insertion order, so
    the cap cuts off deterministically.  An empty result is valid; the
    caller decides the fallback.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != index.dim:
        raise ValueError(f"dimension mismatch: index {index.dim}, vector {v.size}")
    counts: dict[int, int] = {}
    out: list[int] = []
    ops = 0
    for table in index.tables:
        bucket = table.buckets.get(table.key_of(v))
        if not bucket:
            continue
        for pid in bucket:
            ops += 1
            c = counts.get(pid, 0) + 1
            counts[pid] = c
            if c == index.t:
                out.append(pid)
                if len(out) >= index.max_candidates:
                    return QueryResult(out, ops)
    return QueryResult(out, ops)


def table_entropy(table: HashTable) -> float:
    """Shannon entropy (bits) of the bucket-occupancy distribution."""
    counts = np.array([len(b) for b in table.buckets.values()], dtype=np.float64)
    total = counts.sum()
    if total == 0:
        raise ValueError("empty table")
    p = counts / total
    return float(-(p * np.log2(p)).sum())


def tune_r(
    sample_features,
    target_mean_bucket: int,
    seed: int = 42,
    k: int = 1,
    probes: int = 8,
) -> tuple[float, bool]:
    """Pick the bucket width so the mean occupancy of a table lands near target.

    Simulates ``probes`` candidate tables (k Cauchy projections each), seeds r
    from the interquartile range of the first projection divided by the bucket
    count the target implies, then nudges r until the median of the measured
    per-table mean occupancies is within +/-50% of the target.  The median
    over several probe tables matters: single Cauchy draws have wildly varying
    norms, so one table is a very noisy occupancy estimate.  Returns
    (r, degenerate); degenerate means the projections were all equal and r
    fell back to 1.0.
    """
    feats = np.asarray(sample_features, dtype=np.float64)
    feats = feats.reshape(feats.shape[0], -1)
    n = feats.shape[0]
    if n < 100:
        raise ValueError(f"need at least 100 sample features to tune r, got {n}")
    if target_mean_bucket < 1:
        raise ValueError("target mean bucket occupancy must be >= 1")
    rng = np.random.default_rng(seed)
    tables = [
        np.stack([sample_cauchy(feats.shape[1], rng=rng) for _ in range(k)], axis=1)
        for _ in range(probes)
    ]
    projections = [feats @ proj for proj in tables]  # each (n, k)
    q25, q75 = np.percentile(projections[0][:, 0], [25.0, 75.0])
    iqr = q75 - q25
    if iqr == 0.0:
        return 1.0, True

    def occupancy(width: float) -> float:
        per_table = [n / len(np.unique(np.floor(z / width), axis=0)) for z in projections]
        return float(np.median(per_table))

    r = 2.0 * iqr / max(1.0, (n / target_mean_bucket) ** (1.0 / k))
    for _ in range(40):
        occ = occupancy(r)
        if 0.5 * target_mean_bucket <= occ <= 1.5 * target_mean_bucket:
            break
        # occupancy grows with r; clip the multiplicative step to stay stable
        r *= float(np.clip((target_mean_bucket / occ) ** (1.0 / k), 0.25, 4.0))
    return float(r), False


# --- binary persistence ---


def save_index(index: LshIndex, path) -> None:
    """Write the index: little-endian header, then per-table params and buckets."""
    parts = [
        _HEADER.pack(_MAGIC, index.dim, index.k, index.L, index.r, index.t, index.seed)
    ]
    for table in index.tables:
        for f in table.functions:
            parts.append(f.alpha.astype("<f8").tobytes())
            parts.append(struct.pack("<d", f.beta))
        parts.append(struct.pack("<Q", len(table.buckets)))
        for key, bucket in table.buckets.items():
            parts.append(np.asarray(key, dtype="<i8").tobytes())
            parts.append(struct.pack("<Q", len(bucket)))
            parts.append(np.asarray(bucket, dtype="<u8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    """Buffer cursor that reports the failure offset on truncation."""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError("truncated index file", self.offset)
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk


def load_index(path, max_candidates: int | None = None) -> LshIndex:
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    magic, dim, k, L, r, t, seed = _HEADER.unpack(reader.take(_HEADER.size))
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}", 0)
    tables = []
    for _ in range(L):
        funcs = []
        for _ in range(k):
            alpha = np.frombuffer(reader.take(8 * dim), dtype="<f8").copy()
            (beta,) = struct.unpack("<d", reader.take(8))
            funcs.append(CauchyHash(alpha, beta, r))
        table = HashTable(funcs)
        (n_buckets,) = struct.unpack("<Q", reader.take(8))
        for _ in range(n_buckets):
            key = tuple(np.frombuffer(reader.take(8 * k), dtype="<i8"))
            (count,) = struct.unpack("<Q", reader.take(8))
            bucket = np.frombuffer(reader.take(8 * count), dtype="<u8")
            table.buckets[key] = [int(i) for i in bucket]
        tables.append(table)
    if reader.offset != len(reader.data):
        raise FormatError("trailing bytes after index payload", reader.offset)
    if max_candidates is None:
        max_candidates = 3 * L
    return LshIndex(tables, k, L, t, r, seed, dim, int(max_candidates))
