"""Small dense matrix kernels: truncated SVD, eigen-solves and Kruskal quantities."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import (
    ComplexSpectrum,
    DegenerateGap,
    LengthMismatch,
    RangeViolation,
    RankTooLarge,
    ShapeMismatch,
    SingularTruncation,
    TooManyColumns,
)

KRUSKAL_TOL = 1e-8
MAX_SUBSET_COLUMNS = 12


@dataclass(frozen=True)
class SvdTruncation:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    residual: float

    @property
    def matrix(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray
    condition_gap: float


def truncated_svd(M, m: int) -> SvdTruncation:
    """Best rank-``m`` approximation; ``residual`` is the (m+1)-th singular value."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got shape {M.shape}")
    if not 0 <= m <= min(M.shape):
        raise RankTooLarge(f"rank {m} exceeds dimensions {M.shape}")
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    residual = float(s[m]) if m < s.size else 0.0
    return SvdTruncation(u[:, :m], s[:m], vt[:m].T, residual)


def pinv_truncated(s: SvdTruncation, rtol: float = 1e-12) -> np.ndarray:
    """``V diag(1/sigma) U^T`` of the truncation."""
    if s.sigma.size == 0:
        return np.zeros((s.v.shape[0], s.u.shape[0]))
    if s.sigma[-1] <= rtol * s.sigma[0]:
        raise SingularTruncation(
            f"retained singular value {s.sigma[-1]:.3e} is negligible next to {s.sigma[0]:.3e}"
        )
    return (s.v / s.sigma) @ s.u.T


def _min_gap(values: np.ndarray) -> float:
    if values.size < 2:
        return float("inf")
    return float(np.min(np.abs(np.subtract.outer(values, values))[~np.eye(values.size, dtype=bool)]))


def eig_real(M, gap_min: Optional[float] = None, imag_rtol: float = 1e-12) -> EigenDecomposition:
    """Eigen-decomposition of a real matrix whose spectrum must be real and simple.

    Eigenvalues are sorted in descending order. Eigenvectors have unit
    Euclidean norm with their largest-magnitude entry positive.

    Raises
    ------
    ComplexSpectrum
        If any eigenvalue has an imaginary part above ``imag_rtol * ||M||_2``.
    DegenerateGap
        If two eigenvalues are closer than ``gap_min`` (default ``1e-6 * ||M||_2``).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ShapeMismatch(f"expected a nonempty square matrix, got shape {M.shape}")
    scale = float(np.linalg.norm(M, 2))
    if gap_min is None:
        gap_min = 1e-6 * scale
    values, vectors = np.linalg.eig(M)
    if np.any(np.abs(values.imag) > imag_rtol * max(scale, np.finfo(float).tiny)):
        raise ComplexSpectrum(f"complex eigenvalues {values[np.abs(values.imag) > 0]}")
    values = values.real
    vectors = vectors.real
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    gap = _min_gap(values)
    if gap < gap_min:
        raise DegenerateGap(f"eigenvalue gap {gap:.3e} below {gap_min:.3e}")
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    lead = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    vectors = vectors * np.where(lead < 0, -1.0, 1.0)
    return EigenDecomposition(values, vectors, gap)


def gram(vectors) -> np.ndarray:
    """Gram matrix of the rows of ``vectors`` (a 2-D array or a list of 1-D arrays)."""
    if isinstance(vectors, np.ndarray):
        V = np.asarray(vectors, dtype=float)
    else:
        vs = [np.asarray(v, dtype=float) for v in vectors]
        if len({v.shape for v in vs}) > 1:
            raise LengthMismatch("vectors have different lengths")
        V = np.stack(vs) if vs else np.zeros((0, 0))
    if V.ndim != 2:
        raise LengthMismatch(f"expected a stack of vectors, got shape {V.shape}")
    return V @ V.T


def _independent(cols: np.ndarray, tol: float) -> bool:
    s = np.linalg.svd(cols, compute_uv=False)
    return s.size == cols.shape[1] and s[0] > 0 and s[-1] > tol * s[0]


def kruskal_rank(M, tol: float = KRUSKAL_TOL) -> int:
    """Largest k such that every k columns of ``M`` are numerically independent.

    A column subset counts as independent when its smallest singular value
    exceeds ``tol`` times its largest. Subsets are enumerated exhaustively.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got shape {M.shape}")
    if tol <= 0:
        raise RangeViolation("tol must be positive")
    n = M.shape[1]
    if n > MAX_SUBSET_COLUMNS:
        raise TooManyColumns(f"{n} columns exceed the enumeration cap of {MAX_SUBSET_COLUMNS}")
    for k in range(1, min(n, M.shape[0]) + 1):
        if not all(_independent(M[:, list(S)], tol) for S in combinations(range(n), k)):
            return k - 1
    return min(n, M.shape[0])


def kruskal_eigenvalue(G, k: int) -> float:
    """Smallest eigenvalue over all ``k x k`` principal submatrices of ``G``."""
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    if G.ndim != 2 or G.shape[1] != n:
        raise ShapeMismatch(f"expected a square matrix, got shape {G.shape}")
    if not 1 <= k <= n:
        raise RangeViolation(f"k={k} outside 1..{n}")
    if n > MAX_SUBSET_COLUMNS:
        raise TooManyColumns(f"{n} columns exceed the enumeration cap of {MAX_SUBSET_COLUMNS}")
    idx = np.array(list(combinations(range(n), k)))
    blocks = G[idx[:, :, None], idx[:, None, :]]
    return float(np.linalg.eigvalsh(blocks)[:, 0].min())


def hadamard(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} and {B.shape} differ")
    return A * B
