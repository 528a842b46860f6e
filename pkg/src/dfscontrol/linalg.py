"""Shared numerical linear algebra: spans, null spaces, subspace intersections.

Rank decisions follow one convention throughout: singular values at or below
``rtol * sigma_max`` count as zero.  Dimensions derived here feed integer
verdicts, so every routine takes its tolerance explicitly.
"""

from __future__ import annotations

import numpy as np

RANK_RTOL = 1e-9


def orthonormal_columns(A: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column space of A (columns of the result)."""
    if A.size == 0:
        return A.reshape(A.shape[0], 0)
    U, S, _ = np.linalg.svd(A, full_matrices=False)
    if S.size == 0:
        return U[:, :0]
    return U[:, S > rtol * S[0]]


def null_space(A: np.ndarray, rtol: float = RANK_RTOL, scale: float = 0.0) -> tuple[int, np.ndarray]:
    """(rank, orthonormal null-space basis as columns) of A.

    Singular values below rtol * max(sigma_max, scale) count as zero; pass the
    natural magnitude of the problem as `scale` so that a numerically-zero A
    is ranked 0 rather than by its own rounding noise.
    """
    if A.size == 0:
        return 0, np.eye(A.shape[1])
    _, S, Vt = np.linalg.svd(A, full_matrices=False)
    thr = rtol * max(S[0] if S.size else 0.0, scale)
    rank = int(np.sum(S > thr)) if S.size else 0
    ns = Vt[rank:].conj().T
    if A.shape[0] < A.shape[1]:
        # reduced SVD misses the tail of the null space for wide matrices
        extra = A.shape[1] - S.size
        if extra > 0:
            _, _, Vtf = np.linalg.svd(A, full_matrices=True)
            ns = Vtf[rank:].conj().T
    return rank, ns


def subspace_intersection_dim(B1: np.ndarray, B2: np.ndarray, thr: float = 1e-8) -> int:
    """Dimension of the intersection of two subspaces given by orthonormal-row bases.

    Counts principal-angle cosines above 1 - thr.
    """
    if B1.size == 0 or B2.size == 0:
        return 0
    sv = np.linalg.svd(B1 @ B2.conj().T, compute_uv=False)
    return int(np.sum(sv > 1.0 - thr))


def subspace_intersection_basis(B1: np.ndarray, B2: np.ndarray, thr: float = 1e-8) -> np.ndarray:
    """Orthonormal rows spanning the (numerical) intersection of two row-spanned subspaces."""
    if B1.size == 0 or B2.size == 0:
        return np.zeros((0, B1.shape[1] if B1.size else B2.shape[1]))
    U, sv, _ = np.linalg.svd(B1 @ B2.conj().T)
    k = int(np.sum(sv > 1.0 - thr))
    return (U[:, :k].conj().T @ B1) if k else np.zeros((0, B1.shape[1]))


def principal_angle_cosines(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Cosines of principal angles between column spaces of A and B."""
    Qa = orthonormal_columns(A)
    Qb = orthonormal_columns(B)
    if Qa.shape[1] == 0 or Qb.shape[1] == 0:
        return np.array([])
    return np.linalg.svd(Qa.conj().T @ Qb, compute_uv=False)


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """Trace-orthonormal basis of Hermitian dim x dim matrices (dim^2 elements)."""
    out = []
    for a in range(dim):
        M = np.zeros((dim, dim), dtype=complex)
        M[a, a] = 1.0
        out.append(M)
    s = 1.0 / np.sqrt(2.0)
    for a in range(dim):
        for b in range(a + 1, dim):
            M = np.zeros((dim, dim), dtype=complex)
            M[a, b] = M[b, a] = s
            out.append(M)
            M = np.zeros((dim, dim), dtype=complex)
            M[a, b] = -1j * s
            M[b, a] = 1j * s
            out.append(M)
    return out


def mat_span_basis(mats: list[np.ndarray], rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal rows spanning span{mats} in the flattened (real or complex) sense."""
    if not mats:
        return np.zeros((0, 0))
    A = np.stack([m.reshape(-1) for m in mats], axis=0)
    _, S, Vt = np.linalg.svd(A, full_matrices=False)
    return Vt[S > rtol * S[0]] if S.size else Vt[:0]


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
