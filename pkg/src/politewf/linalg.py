"""Dense complex linear-algebra kernels shared across the package.

One numerical-rank convention is used everywhere: singular values (or
eigenvalues of PSD matrices) below ``RANK_RTOL * largest * max_dim`` count
as zero.  Matrix square roots and inverse square roots go through Hermitian
eigendecompositions so the PSD structure is preserved exactly.
"""

from __future__ import annotations

import numpy as np

# Relative cutoff for numerical rank decisions.
RANK_RTOL = 1e-12

# Eigenvalue floor (relative to the trace) for inverse square roots of
# nominally positive definite matrices.
INV_SQRT_FLOOR = 1e-14


def herm(a: np.ndarray) -> np.ndarray:
    """Symmetrize ``a`` to suppress floating-point Hermitian drift."""
    return 0.5 * (a + a.conj().T)


def eigh_desc(a: np.ndarray):
    """Hermitian eigendecomposition with eigenvalues sorted descending."""
    w, v = np.linalg.eigh(herm(a))
    return w[::-1].copy(), v[:, ::-1].copy()


def numerical_rank(values, max_dim: int) -> int:
    """Count values above the shared relative-rank threshold."""
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0:
        return 0
    top = float(values.max())
    return int(np.count_nonzero(values > RANK_RTOL * top * max_dim))


def sqrt_psd(a: np.ndarray) -> np.ndarray:
    """Hermitian square root of a PSD matrix (negative eigenvalues clipped)."""
    w, v = np.linalg.eigh(herm(a))
    w = np.maximum(w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def inv_sqrt_pd(a: np.ndarray) -> np.ndarray:
    """Inverse Hermitian square root of a positive definite matrix.

    Eigenvalues are floored at ``INV_SQRT_FLOOR * trace`` so interference
    covariances that are nearly singular after whitening stay invertible.
    """
    w, v = np.linalg.eigh(herm(a))
    floor = INV_SQRT_FLOOR * max(float(np.trace(a).real), np.finfo(float).tiny)
    w = np.maximum(w, floor)
    return (v / np.sqrt(w)) @ v.conj().T


def phase_normalize(v: np.ndarray) -> np.ndarray:
    """Rotate a vector so its largest-magnitude entry is real nonnegative."""
    i = int(np.argmax(np.abs(v)))
    a = v[i]
    m = abs(a)
    if m == 0.0:
        return v.copy()
    return v * (a.conj() / m)


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize to unit length with the deterministic phase convention."""
    n = float(np.linalg.norm(v))
    if n == 0.0:
        e = np.zeros_like(v)
        e[0] = 1.0
        return e
    return phase_normalize(v / n)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Random complex PSD matrix of size n, optionally rank-limited."""
    r = n if rank is None else rank
    a = complex_gaussian(rng, (n, r))
    return herm(a @ a.conj().T)


def complement_basis(vectors: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of given column vectors.

    ``vectors`` is ``dim x k`` with orthonormal columns; returns
    ``dim x (dim - k)``.
    """
    k = vectors.shape[1] if vectors.size else 0
    if k == 0:
        return np.eye(dim, dtype=complex)
    q, _ = np.linalg.qr(vectors, mode="complete")
    return q[:, k:]


def is_identity(a: np.ndarray, tol: float = 1e-12) -> bool:
    n = a.shape[0]
    return a.shape == (n, n) and bool(np.allclose(a, np.eye(n), atol=tol))
