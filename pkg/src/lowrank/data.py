"""Synthetic instance generation, MovieLens ingestion, splits, and metrics.

All generators are pure functions of (config, seed); entries of observed
sets are emitted in row-major order so replays are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import FactorPair, SparseObservations, project_observed

__all__ = [
    "SynthCompletionConfig",
    "SynthRpcaConfig",
    "RatingsDataset",
    "gen_completion",
    "gen_rpca",
    "load_movielens",
    "split_ratings",
    "nmse_on",
    "rmse_on",
]


@dataclass
class SynthCompletionConfig:
    m: int
    n: int
    true_rank: int
    observed_fraction: float  # p in (0, 1]
    snr: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.observed_fraction <= 1.0:
            raise ValueError("observed_fraction must be in (0, 1]")
        if self.true_rank > min(self.m, self.n):
            raise ValueError("true_rank must be <= min(m, n)")
        if self.snr <= 0:
            raise ValueError("snr must be > 0")


@dataclass
class SynthRpcaConfig:
    m: int
    n: int
    true_rank: int
    sparse_fraction: float
    sparse_magnitude: float  # in units of sd of the clean low-rank entries
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.sparse_fraction < 1.0:
            raise ValueError("sparse_fraction must be in [0, 1)")


@dataclass
class RatingsDataset:
    num_users: int
    num_items: int
    ratings: list[tuple[int, int, float]]
    rating_range: tuple[float, float] = (1.0, 5.0)


def gen_completion(config: SynthCompletionConfig
                   ) -> tuple[FactorPair, SparseObservations, SparseObservations]:
    """Noisy low-rank completion instance: M = U V^T + eta observed on Omega.

    Noise is rescaled so sd(signal entries) / sd(noise entries) equals the
    configured snr. The held-out set carries the noiseless U V^T values on
    the complement of Omega (the test-metric reference).
    """
    rng = np.random.default_rng(config.seed)
    m, n, r = config.m, config.n, config.true_rank
    u = rng.standard_normal((m, r))
    v = rng.standard_normal((n, r))
    eta = rng.standard_normal((m, n))
    signal = u @ v.T
    sd_signal = float(np.std(signal)) if r > 0 else 0.0
    scale = sd_signal / (config.snr * float(np.std(eta)))
    noisy = signal + scale * eta

    count = int(np.floor(config.observed_fraction * m * n))
    flat = np.sort(rng.choice(m * n, size=count, replace=False))
    rows, cols = flat // n, flat % n
    observed = SparseObservations(m, n, rows, cols, noisy[rows, cols])

    complement = np.setdiff1d(np.arange(m * n), flat, assume_unique=True)
    h_rows, h_cols = complement // n, complement % n
    heldout = SparseObservations(m, n, h_rows, h_cols, signal[h_rows, h_cols])
    return FactorPair(u, v), observed, heldout


def gen_rpca(config: SynthRpcaConfig
             ) -> tuple[FactorPair, np.ndarray, np.ndarray]:
    """Low-rank plus sparse corruption: returns (truth, L0 + S, corruption mask).

    Corruptions are +-sparse_magnitude * sd(L0 entries) at uniformly chosen
    cells (sd falls back to 1 for a rank-0 truth).
    """
    rng = np.random.default_rng(config.seed)
    m, n, r = config.m, config.n, config.true_rank
    u = rng.standard_normal((m, r))
    v = rng.standard_normal((n, r))
    low = u @ v.T
    scale = float(np.std(low)) if r > 0 else 1.0

    count = int(np.floor(config.sparse_fraction * m * n))
    flat = np.sort(rng.choice(m * n, size=count, replace=False))
    signs = rng.choice([-1.0, 1.0], size=count)
    mask = np.zeros((m, n), dtype=bool)
    corrupted = low.copy()
    rows, cols = flat // n, flat % n
    mask[rows, cols] = True
    corrupted[rows, cols] += signs * config.sparse_magnitude * scale
    return FactorPair(u, v), corrupted, mask


_FORMATS = {"ml100k": "\t", "ml1m": "::"}


def load_movielens(path: str, fmt: str) -> RatingsDataset:
    """Parse a MovieLens ratings file; user/item ids are remapped to dense
    indices by ascending original id."""
    if fmt not in _FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {sorted(_FORMATS)}")
    sep = _FORMATS[fmt]
    users: list[int] = []
    items: list[int] = []
    values: list[float] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(sep)
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                users.append(int(parts[0]))
                items.append(int(parts[1]))
                values.append(float(parts[2]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not 1.0 <= values[-1] <= 5.0:
                raise ValueError(f"{path}:{lineno}: rating {values[-1]} outside [1, 5]")
    if not values:
        raise ValueError(f"{path}: no ratings found")
    uids = np.unique(users)
    iids = np.unique(items)
    umap = np.searchsorted(uids, users)
    imap = np.searchsorted(iids, items)
    ratings = [(int(u), int(i), float(x)) for u, i, x in zip(umap, imap, values)]
    return RatingsDataset(len(uids), len(iids), ratings)


def split_ratings(ds: RatingsDataset, train_fraction: float, seed: int
                  ) -> tuple[SparseObservations, SparseObservations]:
    """Seeded uniform partition of the rating tuples into train/test sets,
    both expressed over the full user x item grid."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    total = len(ds.ratings)
    perm = rng.permutation(total)
    n_train = int(np.floor(train_fraction * total))

    def build(indices: np.ndarray) -> SparseObservations:
        indices = np.sort(indices)
        rows = np.array([ds.ratings[i][0] for i in indices], dtype=np.int64)
        cols = np.array([ds.ratings[i][1] for i in indices], dtype=np.int64)
        vals = np.array([ds.ratings[i][2] for i in indices])
        return SparseObservations(ds.num_users, ds.num_items, rows, cols, vals)

    return build(perm[:n_train]), build(perm[n_train:])


def nmse_on(pair: FactorPair, ref: SparseObservations) -> float:
    """Normalized MSE against a reference set: sum (ref - pred)^2 / sum ref^2."""
    if ref.nnz == 0:
        raise ValueError("reference set is empty")
    denom = float(ref.vals @ ref.vals)
    if denom == 0.0:
        raise ValueError("reference set has zero norm")
    err = ref.vals - project_observed(pair, ref)
    return float(err @ err) / denom


def rmse_on(pair: FactorPair, ref: SparseObservations,
            clip_range: tuple[float, float] | None = None) -> float:
    """Root mean squared error on a reference set, with optional prediction
    clipping to the rating range."""
    if ref.nnz == 0:
        raise ValueError("reference set is empty")
    pred = project_observed(pair, ref)
    if clip_range is not None:
        pred = np.clip(pred, clip_range[0], clip_range[1])
    err = ref.vals - pred
    return float(np.sqrt(np.mean(err * err)))
