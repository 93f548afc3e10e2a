"""Matrix containers, factored low-rank pairs, and top-singular-pair extraction.

Dense matrices are plain float64 numpy arrays. Sparse observed sets and
factored pairs get small dataclasses because the solvers move them around
a lot. Everything here is deterministic given its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SparseObservations",
    "FactorPair",
    "SingularTriplet",
    "LinearOp",
    "top_singular_triplet",
    "svd_threshold",
    "frobenius_norm",
    "spectral_norm_estimate",
    "project_observed",
]

# Below this many cells a sparse operator is cheaper to apply densified.
_DENSIFY_CELLS = 65536


@dataclass
class SparseObservations:
    """The observed set Omega of an m x n matrix together with its values.

    Doubles as mask and target: `row[k], col[k]` locate entry k, `vals[k]`
    holds its value. No duplicate (i, j) pairs. Treat instances as
    immutable once constructed; all derived structures are cached.
    """

    rows: int
    cols: int
    row: np.ndarray
    col: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        self.row = np.asarray(self.row, dtype=np.int64)
        self.col = np.asarray(self.col, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        if not (self.row.shape == self.col.shape == self.vals.shape):
            raise ValueError("row, col, vals must have identical shapes")
        if self.row.size:
            if self.row.min() < 0 or self.row.max() >= self.rows:
                raise ValueError("row index out of range")
            if self.col.min() < 0 or self.col.max() >= self.cols:
                raise ValueError("col index out of range")
            flat = self.row * self.cols + self.col
            if np.unique(flat).size != flat.size:
                raise ValueError("duplicate (i, j) entries")
        if not np.all(np.isfinite(self.vals)):
            raise ValueError("non-finite observation values")

    @property
    def nnz(self) -> int:
        return self.vals.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def with_vals(self, vals: np.ndarray) -> "SparseObservations":
        """Same support, different values (e.g. a gradient on Omega)."""
        out = object.__new__(SparseObservations)
        out.rows, out.cols = self.rows, self.cols
        out.row, out.col = self.row, self.col
        out.vals = np.asarray(vals, dtype=np.float64)
        if out.vals.shape != self.row.shape:
            raise ValueError("vals length must match the support")
        # share the cached index structures; the support is identical
        for name in ("_csr_template", "col_groups", "transpose"):
            if name in self.__dict__:
                out.__dict__[name] = self.__dict__[name]
        return out

    @cached_property
    def _csr_template(self) -> tuple[sp.csr_matrix, np.ndarray]:
        """CSR skeleton plus the permutation from entry order to data order."""
        order = np.lexsort((self.col, self.row))
        mat = sp.csr_matrix(
            (np.zeros(self.nnz), (self.row[order], self.col[order])),
            shape=(self.rows, self.cols),
        )
        return mat, order

    def csr_with(self, vals: np.ndarray) -> sp.csr_matrix:
        """CSR matrix holding `vals` on the support (entry order respected)."""
        template, order = self._csr_template
        mat = template.copy()
        mat.data = np.asarray(vals, dtype=np.float64)[order]
        return mat

    def csr(self) -> sp.csr_matrix:
        return self.csr_with(self.vals)

    @cached_property
    def col_groups(self) -> list[np.ndarray]:
        """For each column j, the observed row indices (ascending)."""
        order = np.lexsort((self.row, self.col))
        counts = np.bincount(self.col, minlength=self.cols)
        return np.split(self.row[order], np.cumsum(counts)[:-1])

    @cached_property
    def transpose(self) -> "SparseObservations":
        return SparseObservations(self.cols, self.rows, self.col, self.row, self.vals)


@dataclass
class FactorPair:
    """A low-rank matrix held as A = U V^T with U (m x r), V (n x r)."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=np.float64)
        self.V = np.asarray(self.V, dtype=np.float64)
        if self.U.ndim != 2 or self.V.ndim != 2:
            raise ValueError("factors must be 2-d")
        if self.U.shape[1] != self.V.shape[1]:
            raise ValueError("U and V must have the same number of columns")

    @classmethod
    def empty(cls, m: int, n: int) -> "FactorPair":
        return cls(np.zeros((m, 0)), np.zeros((n, 0)))

    @classmethod
    def zeros(cls, m: int, n: int, r: int) -> "FactorPair":
        return cls(np.zeros((m, r)), np.zeros((n, r)))

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    def matrix(self) -> np.ndarray:
        return self.U @ self.V.T

    def append(self, u: np.ndarray, v: np.ndarray) -> "FactorPair":
        return FactorPair(
            np.column_stack([self.U, np.asarray(u, dtype=np.float64)]),
            np.column_stack([self.V, np.asarray(v, dtype=np.float64)]),
        )


@dataclass
class SingularTriplet:
    """(sigma, u, v) with unit vectors; largest-magnitude entry of u >= 0."""

    sigma: float
    u: np.ndarray
    v: np.ndarray
    converged: bool = True


@dataclass
class LinearOp:
    """Matrix-free operator: apply x -> Gx and apply_transpose y -> G^T y."""

    rows: int
    cols: int
    matvec: Callable[[np.ndarray], np.ndarray]
    rmatvec: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "LinearOp":
        a = np.asarray(a, dtype=np.float64)
        return cls(a.shape[0], a.shape[1], lambda x: a @ x, lambda y: a.T @ y)

    @classmethod
    def from_observations(cls, obs: SparseObservations) -> "LinearOp":
        if obs.rows * obs.cols <= _DENSIFY_CELLS:
            dense = np.zeros((obs.rows, obs.cols))
            dense[obs.row, obs.col] = obs.vals
            return cls.from_dense(dense)
        mat = obs.csr()
        mat_t = mat.T.tocsr()
        return cls(obs.rows, obs.cols, lambda x: mat @ x, lambda y: mat_t @ y)


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def top_singular_triplet(
    op: LinearOp, seed: int = 0, max_iters: int = 200, tol: float = 1e-9
) -> SingularTriplet:
    """Dominant singular triplet of `op` by power iteration on G^T G.

    The start vector comes from ``np.random.default_rng(seed)``, so identical
    (op, seed, max_iters, tol) give bit-identical results. Convergence is
    declared when successive sigma estimates differ relatively by less than
    `tol`; otherwise the estimate is returned with ``converged=False``.
    A numerically zero operator yields (0, e_1, e_1).
    """
    if op.rows < 1 or op.cols < 1:
        raise ValueError("operator must have positive dimensions")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    rng = np.random.default_rng(seed)
    v = w = None
    sigma = 0.0
    for _ in range(3):
        v = rng.standard_normal(op.cols)
        v /= np.linalg.norm(v)
        w = op.matvec(v)
        if not np.all(np.isfinite(w)):
            raise ValueError("operator produced non-finite values")
        sigma = float(np.linalg.norm(w))
        if sigma > 0.0:
            break
    else:
        return SingularTriplet(0.0, _unit(op.rows, 0), _unit(op.cols, 0), True)

    converged = False
    u = w / sigma
    for _ in range(max_iters):
        z = op.rmatvec(u)
        zn = float(np.linalg.norm(z))
        if zn == 0.0:
            converged = True
            break
        v = z / zn
        w = op.matvec(v)
        sigma_new = float(np.linalg.norm(w))
        if sigma_new == 0.0:
            return SingularTriplet(0.0, _unit(op.rows, 0), _unit(op.cols, 0), True)
        u = w / sigma_new
        # strict: tol=0 never converges and always runs max_iters, which is
        # what near-exact singular vectors require (sigma freezes in float
        # while the vector is still ~sqrt(eps) impure)
        if abs(sigma_new - sigma) < tol * sigma_new:
            sigma = sigma_new
            converged = True
            break
        sigma = sigma_new

    if not (np.isfinite(sigma) and np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise ValueError("power iteration produced non-finite values")
    # sign convention: largest-magnitude entry of u is nonnegative
    i = int(np.argmax(np.abs(u)))
    if u[i] < 0.0:
        u = -u
        v = -v
    return SingularTriplet(sigma, u, v, converged)


def svd_threshold(a: np.ndarray, r: int) -> tuple[FactorPair, np.ndarray]:
    """H_r(a): keep the r largest singular values, returned in factored form.

    The retained singular values (nonincreasing) are folded into the left
    factor. For r >= rank(a) the result represents `a` itself.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite input")
    m, n = a.shape
    if r == 0:
        return FactorPair.empty(m, n), np.zeros(0)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    k = min(r, s.size)
    return FactorPair(u[:, :k] * s[:k], vt[:k].T), s[:k].copy()


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


def spectral_norm_estimate(op: LinearOp, seed: int = 0, max_iters: int = 200,
                           tol: float = 1e-9) -> float:
    return top_singular_triplet(op, seed=seed, max_iters=max_iters, tol=tol).sigma


def project_observed(pair: FactorPair, omega: SparseObservations) -> np.ndarray:
    """(U V^T)_ij for each (i, j) in Omega, in Omega's entry order."""
    if pair.shape != omega.shape:
        raise ValueError(f"factor shape {pair.shape} != observation shape {omega.shape}")
    if pair.rank == 0:
        return np.zeros(omega.nnz)
    return np.einsum("ij,ij->i", pair.U[omega.row], pair.V[omega.col])
