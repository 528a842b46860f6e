"""Noise interaction algebra, commutant, and the canonical sector decomposition.

The interaction algebra is the smallest *-algebra containing the noise
operators; its commutant hosts every information-preserving code.  The
commutant decomposes into k-sectors (an identity factor of size m_k tensored
with a full matrix algebra of order k_ord), realized here by an explicit
unitary change of basis plus coherence-space projections per sector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .cvs import HermitianBasis, op_to_v
from .linalg import RANK_RTOL, null_space, orthonormal_columns
from .model import LindbladModel

CLUSTER_GAP_TOL = 1e-6
CLOSURE_RESID_TOL = 1e-9


class CommutantError(RuntimeError):
    pass


class DegenerateClusteringError(CommutantError):
    """Eigenvalue clustering failed twice; rerun with a different seed."""


@dataclass
class MatrixAlgebra:
    """*-closed, multiplicatively closed operator subspace with orthonormal basis."""

    dim_hilbert: int
    basis: np.ndarray  # (dim, N, N) complex, Hilbert-Schmidt orthonormal

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def contains(self, X: np.ndarray, tol: float = CLOSURE_RESID_TOL) -> bool:
        v = X.reshape(-1)
        rows = self.basis.reshape(self.dim, -1)
        coeff = rows.conj() @ v  # <B_i, X> = tr(B_i^dag X)
        resid = v - rows.T @ coeff
        return np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(v))


def _orthonormal_op_rows(mats: list[np.ndarray], rtol: float = RANK_RTOL) -> np.ndarray:
    A = np.stack([m.reshape(-1) for m in mats], axis=0)
    _, S, Vt = np.linalg.svd(A, full_matrices=False)
    return Vt[S > rtol * S[0]] if S.size else Vt[:0]


def interaction_algebra(model: LindbladModel) -> MatrixAlgebra:
    """Smallest *-algebra containing the identity and all noise operators."""
    if not model.noise_channels:
        raise CommutantError("model has no noise channels")
    N = model.hilbert_dim
    gens = [np.eye(N, dtype=complex)]
    for _, op in model.noise_channels:
        gens.append(op.matrix)
        gens.append(op.matrix.conj().T)
    rows = _orthonormal_op_rows(gens)
    while True:
        mats = [r.reshape(N, N) for r in rows]
        prods = [a @ b for a in mats for b in mats]
        new_rows = _orthonormal_op_rows(mats + prods)
        if new_rows.shape[0] == rows.shape[0]:
            return MatrixAlgebra(N, np.stack([r.reshape(N, N) for r in rows]))
        rows = new_rows


def commutant_basis(alg: MatrixAlgebra, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (dim, N, N) of {X : XA = AX for all A in the algebra}."""
    N = alg.dim_hilbert
    eye = np.eye(N)
    blocks = []
    for A in alg.basis:
        # row-major vec: vec(AX - XA) = (A kron I - I kron A^T) vec(X)
        blocks.append(np.kron(A, eye) - np.kron(eye, A.T))
    M = np.concatenate(blocks, axis=0)
    scale = max(float(np.linalg.norm(A)) for A in alg.basis)
    _, ns = null_space(M, rtol, scale=scale)
    vecs = ns.T  # rows = vec(X)
    return np.stack([v.reshape(N, N) for v in vecs])


@dataclass
class Sector:
    order: int            # k_ord, matrix order of the sector algebra
    multiplicity: int     # m_k, ampliated multiplicity
    hilbert_columns: np.ndarray  # N x (m_k * order) slice of Lambda for this sector
    central_eigenvalue: float

    @property
    def subspace_dim(self) -> int:
        return self.multiplicity * self.order


@dataclass
class CvsProjection:
    """Orthogonal projection in coherence space, stored by an orthonormal image basis."""

    columns: np.ndarray  # (Bdim, rank), real

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    def matrix(self) -> np.ndarray:
        return self.columns @ self.columns.T

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.columns @ (self.columns.T @ v)

    def complement_norm(self, v: np.ndarray) -> float:
        return float(np.linalg.norm(v - self.apply(v)))

    def contains(self, other: "CvsProjection", tol: float = 1e-9) -> bool:
        resid = other.columns - self.apply(other.columns)
        return np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(other.columns))


@dataclass
class CommutantStructure:
    algebra: MatrixAlgebra
    sectors: list[Sector]
    Lambda: np.ndarray     # unitary, columns ordered sector by sector
    nc_dim: int            # sum of order^2
    pi_nc: CvsProjection
    pi_k: list[CvsProjection]
    basis: HermitianBasis
    seed: int

    def sector_hermitians(self, k: int) -> list[np.ndarray]:
        """Hermitian basis of the k-th sector's embedded code operator space.

        Elements are Lambda_k (I_m/m tensor H) Lambda_k^dag over a Hermitian
        basis H of the order-k_ord algebra (k is a 1-based sector ID).
        """
        from .linalg import hermitian_basis

        sec = self.sectors[k - 1]
        V = sec.hilbert_columns
        m, kord = sec.multiplicity, sec.order
        out = []
        for H in hermitian_basis(kord):
            block = np.kron(np.eye(m) / m, H)
            out.append(V @ block @ V.conj().T)
        return out

    def report(self) -> dict:
        return {
            "sectors": [
                {"order": s.order, "multiplicity": s.multiplicity} for s in self.sectors
            ],
            "nc_dim": self.nc_dim,
            "seed": self.seed,
        }


def _cluster_sorted(vals: np.ndarray, gap: float) -> list[np.ndarray]:
    """Group sorted values into clusters split at gaps above tolerance."""
    clusters = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > gap:
            clusters.append(np.arange(start, i))
            start = i
    return clusters


def _sector_from_cluster(
    alg_rows: np.ndarray,
    comm_rows: np.ndarray,
    V: np.ndarray,
    rng: np.random.Generator,
) -> tuple[int, int, np.ndarray]:
    """(order, multiplicity, sector basis columns) for one central eigenspace."""
    N = int(np.sqrt(alg_rows.shape[1]))
    dk = V.shape[1]
    # restrict algebra and commutant to the eigenspace
    restrict = lambda rows: _orthonormal_op_rows(
        [V.conj().T @ r.reshape(N, N) @ V for r in rows]
    )
    ar = restrict(alg_rows)
    cr = restrict(comm_rows)
    m = int(round(np.sqrt(ar.shape[0])))
    kord = int(round(np.sqrt(cr.shape[0])))
    if m * m != ar.shape[0] or kord * kord != cr.shape[0] or m * kord != dk:
        raise DegenerateClusteringError(
            f"sector dims inconsistent: restricted algebra {ar.shape[0]}, "
            f"commutant {cr.shape[0]}, subspace {dk}; resample the central element"
        )
    if m == 1:
        return kord, 1, V
    # transport a basis of one eigenspace of a random Hermitian algebra element
    for _ in range(8):
        w = rng.normal(size=ar.shape[0]) + 1j * rng.normal(size=ar.shape[0])
        R = np.tensordot(w, ar.reshape(-1, dk, dk), axes=(0, 0))
        R = R + R.conj().T
        ev, U = np.linalg.eigh(R)
        clusters = _cluster_sorted(ev, CLUSTER_GAP_TOL * max(1.0, np.abs(ev).max()))
        if len(clusters) != m or any(len(c) != kord for c in clusters):
            continue
        eigbases = [U[:, c] for c in clusters]
        w2 = rng.normal(size=ar.shape[0]) + 1j * rng.normal(size=ar.shape[0])
        S = np.tensordot(w2, ar.reshape(-1, dk, dk), axes=(0, 0))
        W = [eigbases[0]]
        ok = True
        for i in range(1, m):
            T = eigbases[i] @ (eigbases[i].conj().T @ S @ eigbases[0])
            Wi = T @ (eigbases[0].conj().T @ W[0])
            norms = np.linalg.norm(Wi, axis=0)
            if norms.min() < 1e-6 or (norms.max() - norms.min()) > 1e-6 * norms.max():
                ok = False
                break
            W.append(Wi / norms[0])
        if not ok:
            continue
        cols = np.concatenate(W, axis=1)  # i-major: commutant becomes I_m kron M_kord
        if np.linalg.norm(cols.conj().T @ cols - np.eye(m * kord)) > 1e-8:
            continue
        return kord, m, V @ cols
    raise DegenerateClusteringError(
        "could not build an ampliation-compatible sector basis; resample"
    )


def commutant_structure(
    alg: MatrixAlgebra,
    basis: HermitianBasis | None = None,
    seed: int = 0,
) -> CommutantStructure:
    """Canonical k-sector decomposition of the commutant of an interaction algebra.

    Sectors are ordered by ascending order, then ascending multiplicity, then
    by the lowest original-basis index supporting the sector subspace, which
    keeps sector IDs reproducible across seeds.
    """
    from .cvs import make_basis

    N = alg.dim_hilbert
    if basis is None:
        n = int(round(np.log2(N)))
        basis = make_basis(N, "bloch_ball" if 2**n == N else "gell_mann")
    comm = commutant_basis(alg)
    alg_rows = alg.basis.reshape(alg.dim, -1)
    comm_rows = comm.reshape(comm.shape[0], -1)
    # center = algebra ∩ commutant
    sv_u, sv, _ = np.linalg.svd(alg_rows @ comm_rows.conj().T)
    n_center = int(np.sum(sv > 1 - 1e-8))
    center_rows = (sv_u[:, :n_center].conj().T @ alg_rows) if n_center else alg_rows[:0]

    rng = np.random.default_rng(seed)
    last_err: Exception | None = None
    for _attempt in range(2):
        try:
            w = rng.normal(size=n_center) + 1j * rng.normal(size=n_center)
            C = np.tensordot(w, center_rows.reshape(-1, N, N), axes=(0, 0))
            C = C + C.conj().T
            ev, U = np.linalg.eigh(C)
            clusters = _cluster_sorted(ev, CLUSTER_GAP_TOL * max(1.0, np.abs(ev).max()))
            if len(clusters) != n_center:
                raise DegenerateClusteringError(
                    f"found {len(clusters)} eigenvalue clusters for a center of dimension "
                    f"{n_center}; resample the central element"
                )
            raw = []
            for c in clusters:
                V = U[:, c]
                kord, m, cols = _sector_from_cluster(alg_rows, comm_rows, V, rng)
                support = np.where(np.linalg.norm(cols, axis=1) > 1e-8)[0]
                raw.append(
                    {
                        "order": kord,
                        "multiplicity": m,
                        "cols": cols,
                        "ev": float(np.mean(ev[c])),
                        "min_idx": int(support.min()),
                    }
                )
            break
        except DegenerateClusteringError as exc:
            last_err = exc
    else:
        raise DegenerateClusteringError(f"clustering failed twice: {last_err}")

    raw.sort(key=lambda s: (s["order"], s["multiplicity"], s["min_idx"]))
    sectors = [
        Sector(s["order"], s["multiplicity"], s["cols"], s["ev"]) for s in raw
    ]
    Lambda = np.concatenate([s.hilbert_columns for s in sectors], axis=1)
    nc_dim = int(sum(s.order**2 for s in sectors))

    structure = CommutantStructure(
        algebra=alg,
        sectors=sectors,
        Lambda=Lambda,
        nc_dim=nc_dim,
        pi_nc=CvsProjection(np.zeros((basis.dim, 0))),
        pi_k=[],
        basis=basis,
        seed=seed,
    )
    pi_k = []
    all_cols = []
    for k in range(1, len(sectors) + 1):
        herms = structure.sector_hermitians(k)
        cols = orthonormal_columns(
            np.stack([op_to_v(h, basis) for h in herms], axis=1)
        )
        pi_k.append(CvsProjection(cols))
        sec = sectors[k - 1]
        V = sec.hilbert_columns
        from .linalg import hermitian_basis as _hb

        full = [
            V @ np.kron(np.eye(sec.multiplicity), H) @ V.conj().T
            for H in _hb(sec.order)
        ]
        all_cols.append(
            orthonormal_columns(np.stack([op_to_v(h, basis) for h in full], axis=1))
        )
    structure.pi_k = pi_k
    structure.pi_nc = CvsProjection(
        orthonormal_columns(np.concatenate(all_cols, axis=1))
    )
    return structure


# ---------------------------------------------------------------------------
# drift-matrix block structure

@dataclass
class DriftSplit:
    Lambda_cvs: np.ndarray  # unitary; g0 = Lambda^dag (iD ⊕ G_perp) Lambda
    D: np.ndarray           # real diagonal entries of the lossless block
    G_perp: np.ndarray      # Hurwitz block
    coupling_residual: float


def drift_block_split(g0, split_tol: float = 1e-8) -> DriftSplit:
    """Unitary split of the drift into a lossless diagonal block and a Hurwitz block."""
    A = g0.toarray() if sp.issparse(g0) else np.asarray(g0)
    A = A.astype(complex)
    scale = max(1.0, float(np.max(np.abs(A))))
    tol = split_tol * scale

    T, Z, sdim = sla.schur(A, output="complex", sort=lambda lam: abs(lam.real) <= tol)
    n_lossless = int(sdim)
    T12 = T[:n_lossless, n_lossless:]
    resid = float(np.linalg.norm(T12))
    if resid > 1e-6 * scale:
        raise CommutantError(
            f"lossless/lossy coupling block has norm {resid:.3e}; "
            "no clean unitary split at tolerance"
        )
    T11 = T[:n_lossless, :n_lossless]
    # lossless block is normal: its Schur form is diagonal
    T11d, Z1 = sla.schur(T11, output="complex")
    offd = T11d - np.diag(np.diag(T11d))
    if np.linalg.norm(offd) > 1e-6 * scale:
        raise CommutantError(
            f"lossless block is not normal (offdiag {np.linalg.norm(offd):.3e})"
        )
    D = np.imag(np.diag(T11d))
    G_perp = T[n_lossless:, n_lossless:]
    W = Z.copy()
    W[:, :n_lossless] = Z[:, :n_lossless] @ Z1
    # g0 = W (iD ⊕ G_perp) W^dag; spec orientation uses Lambda = W^dag
    return DriftSplit(Lambda_cvs=W.conj().T, D=D, G_perp=G_perp, coupling_residual=resid)


def nc_projection_check(structure: CommutantStructure, g0) -> dict:
    """Residual of im(pi_nc) against the lossless invariant subspace of g0."""
    split = drift_block_split(g0)
    n_lossless = len(split.D)
    # lossless subspace columns in the original frame
    W = split.Lambda_cvs.conj().T[:, :n_lossless]
    Q = structure.pi_nc.columns.astype(complex)
    resid = Q - W @ (W.conj().T @ Q)
    return {
        "residual": float(np.linalg.norm(resid)),
        "lossless_dim": int(n_lossless),
        "nc_rank": int(structure.pi_nc.rank),
    }
