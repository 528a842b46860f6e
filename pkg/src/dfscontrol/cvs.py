"""Coherence-vector representation: Hermitian bases and G-matrix conversion.

A density operator rho maps to the real vector v with v_j = tr(rho F_j) over a
trace-orthonormal Hermitian basis {F_j}.  Hamiltonians become real
skew-symmetric matrices acting on v, and the full Liouvillian (Hamiltonian +
dissipator) becomes the drift matrix g0.  For Bloch-ball bases the basis
elements are Pauli strings and all conversions run through sparse Pauli
algebra; other bases use the dense superoperator path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import LindbladModel
from .paulis import (
    PauliString,
    PauliSum,
    sum_add,
    sum_mul,
)

TRACE_ORTHO_TOL = 1e-12


class BasisError(ValueError):
    pass


@dataclass
class HermitianBasis:
    """Ordered trace-orthonormal Hermitian basis of the N x N operator space."""

    dim_hilbert: int
    kind: str
    pauli_strings: list[str] | None = None  # set for bloch_ball
    _dense: list[np.ndarray] | None = None  # set for dense kinds
    _vec_mat: sp.csr_matrix | None = None   # rows = conj(vec(F_j)), built lazily

    @property
    def dim(self) -> int:
        return self.dim_hilbert**2

    @property
    def index_of_identity(self) -> int:
        if self.pauli_strings is not None:
            return 0  # "II...I" is lexicographically first
        return 0      # dense bases are built identity-first

    def element(self, j: int) -> np.ndarray:
        if self.pauli_strings is not None:
            return PauliString(self.pauli_strings[j]).to_matrix()
        return self._dense[j]

    def elements(self):
        for j in range(self.dim):
            yield self.element(j)

    def vec_matrix(self) -> sp.csr_matrix:
        """Sparse map vec(X) -> v with v_j = tr(X F_j) = <vec F_j, vec X>."""
        if self._vec_mat is None:
            N = self.dim_hilbert
            rows, cols, vals = [], [], []
            for j in range(self.dim):
                F = self.element(j)
                r, c = np.nonzero(F)
                rows.extend([j] * len(r))
                cols.extend(r * N + c)
                vals.extend(np.conj(F[r, c]))
            self._vec_mat = sp.csr_matrix(
                (vals, (rows, cols)), shape=(self.dim, N * N), dtype=complex
            )
        return self._vec_mat

    def check(self, tol: float = TRACE_ORTHO_TOL) -> None:
        """Assert Hermiticity and trace-orthonormality (intended for tests / small N)."""
        mats = [self.element(j) for j in range(self.dim)]
        for j, F in enumerate(mats):
            if np.max(np.abs(F - F.conj().T)) > tol:
                raise BasisError(f"element {j} is not Hermitian")
        G = np.array([[np.trace(a.conj().T @ b) for b in mats] for a in mats])
        if np.max(np.abs(G - np.eye(self.dim))) > tol:
            raise BasisError("basis is not trace-orthonormal")


def make_basis(N: int, kind: str = "bloch_ball") -> HermitianBasis:
    """Hermitian basis of the N x N operator space.

    bloch_ball: tensor products of normalized Pauli matrices (N must be 2^n).
    gell_mann:  identity/N^(1/2) plus normalized generalized Gell-Mann matrices.
    """
    if N < 2:
        raise BasisError(f"N must be >= 2, got {N}")
    if kind == "bloch_ball":
        n = int(round(np.log2(N)))
        if 2**n != N:
            raise BasisError(f"bloch_ball basis needs N = 2^n, got N={N}")
        strings = [PauliString.from_index(i, n).symbols for i in range(4**n)]
        return HermitianBasis(N, kind, pauli_strings=strings)
    if kind == "gell_mann":
        mats = [np.eye(N, dtype=complex) / np.sqrt(N)]
        s = 1.0 / np.sqrt(2.0)
        for a in range(N):
            for b in range(a + 1, N):
                M = np.zeros((N, N), dtype=complex)
                M[a, b] = M[b, a] = s
                mats.append(M)
                M = np.zeros((N, N), dtype=complex)
                M[a, b] = -1j * s
                M[b, a] = 1j * s
                mats.append(M)
        for d in range(1, N):
            M = np.zeros((N, N), dtype=complex)
            M[np.diag_indices(N)] = [1.0] * d + [-d] + [0.0] * (N - d - 1)
            mats.append(M / np.sqrt(d * (d + 1)))
        return HermitianBasis(N, kind, _dense=mats)
    raise BasisError(f"unknown basis kind {kind!r}")


# ---------------------------------------------------------------------------
# state / operator conversions

def op_to_v(X: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Coherence coordinates of a Hermitian operator (real output)."""
    v = basis.vec_matrix() @ X.reshape(-1)
    return np.real(v)


def rho_to_v(rho: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    tr = np.trace(rho)
    if abs(tr - 1.0) > 1e-9:
        raise BasisError(f"density operator has trace {tr:.6g}, expected 1")
    return op_to_v(rho, basis)


def v_to_rho(v: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    N = basis.dim_hilbert
    out = (basis.vec_matrix().conj().T @ np.asarray(v, dtype=complex)).reshape(N, N)
    return out


@dataclass
class GModel:
    """Real bilinear ODE model: v' = (g0 + sum_k u_k gc[k]) v."""

    basis: HermitianBasis
    g0: sp.csr_matrix
    gc: list[sp.csr_matrix]
    model: LindbladModel | None = None

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def n_controls(self) -> int:
        return len(self.gc)

    def g_of(self, u: np.ndarray) -> sp.csr_matrix:
        G = self.g0
        for uk, gk in zip(u, self.gc):
            if uk != 0.0:
                G = G + uk * gk
        return sp.csr_matrix(G)

    def identity_direction(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[self.basis.index_of_identity] = 1.0
        return e


# -- dense path -------------------------------------------------------------

def _h_to_g_dense(H: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    B = basis.dim
    mats = [basis.element(j) for j in range(B)]
    out = np.zeros((B, B))
    for l in range(B):
        Y = -1j * (H @ mats[l] - mats[l] @ H)
        col = op_to_v(Y, basis)
        out[:, l] = col
    return out


def _liouville_apply_dense(model: LindbladModel, X: np.ndarray) -> np.ndarray:
    H = model.drift.matrix
    out = -1j * (H @ X - X @ H)
    for rate, op in model.noise_channels:
        D = op.matrix
        Dd = D.conj().T
        out = out + rate * (D @ X @ Dd - 0.5 * (Dd @ D @ X + X @ Dd @ D))
    return out


# -- sparse Pauli path -------------------------------------------------------

def _hamiltonian_column(H: PauliSum, s: str) -> PauliSum:
    FP = {s: 1.0}
    comm = sum_add(sum_mul(H, FP), sum_mul(FP, H), coeff=-1.0)
    return {k: -1j * v for k, v in comm.items()}


def _dissipator_column(D: PauliSum, Dsq: PauliSum, s: str) -> PauliSum:
    FP = {s: 1.0}
    DFD = sum_mul(sum_mul(D, FP), D)
    anti = sum_add(sum_mul(Dsq, FP), sum_mul(FP, Dsq))
    return sum_add(DFD, anti, coeff=-0.5)


def _pauli_columns_to_sparse(cols: list[PauliSum], n: int) -> sp.csr_matrix:
    B = 4**n
    rows, ccols, vals = [], [], []
    for c, terms in enumerate(cols):
        for s, coeff in terms.items():
            if abs(coeff.imag) > 1e-9 * max(1.0, abs(coeff)):
                raise BasisError(f"non-real G entry {coeff} at string {s}")
            rows.append(PauliString(s).index())
            ccols.append(c)
            vals.append(coeff.real)
    return sp.csr_matrix((vals, (rows, ccols)), shape=(B, B))


def conversion_map(A: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Complex extension of the Hamiltonian conversion to arbitrary matrices.

    Splits A into Hermitian parts and combines their images complex-linearly;
    on Hermitian input this reproduces h_to_g densely.
    """
    H1 = (A + A.conj().T) / 2.0
    H2 = (A - A.conj().T) / 2.0j
    G1 = _h_to_g_dense(H1, basis)
    G2 = _h_to_g_dense(H2, basis)
    return G1 + 1j * G2


def h_to_g(H: np.ndarray | PauliSum, basis: HermitianBasis) -> sp.csr_matrix:
    """Real skew-symmetric coherence-space action of -i[H, .]."""
    if isinstance(H, dict) and basis.pauli_strings is not None:
        n = int(round(np.log2(basis.dim_hilbert)))
        cols = [_hamiltonian_column(H, s) for s in basis.pauli_strings]
        return _pauli_columns_to_sparse(cols, n)
    Hm = H if isinstance(H, np.ndarray) else None
    if Hm is None:
        from .paulis import sum_to_matrix

        Hm = sum_to_matrix(H, int(round(np.log2(basis.dim_hilbert))))
    return sp.csr_matrix(_h_to_g_dense(Hm, basis))


def liouvillian_to_g(model: LindbladModel, basis: HermitianBasis) -> GModel:
    """Build the drift matrix and control matrices for a validated model."""
    model.validate()
    if basis.dim_hilbert != model.hilbert_dim:
        raise BasisError(
            f"basis dimension {basis.dim_hilbert} != model dimension {model.hilbert_dim}"
        )
    pauli_ok = basis.pauli_strings is not None and all(
        op.pauli_sum is not None
        for op in [model.drift, *model.controls, *[o for _, o in model.noise_channels]]
    )
    if pauli_ok:
        n = int(round(np.log2(model.hilbert_dim)))
        H = model.drift.pauli_sum
        noise = []
        for rate, op in model.noise_channels:
            D = op.pauli_sum
            noise.append((rate, D, sum_mul(D, D)))
        cols = []
        for s in basis.pauli_strings:
            col = _hamiltonian_column(H, s)
            for rate, D, Dsq in noise:
                term = _dissipator_column(D, Dsq, s)
                col = sum_add(col, {k: rate * v for k, v in term.items()})
            cols.append(col)
        g0 = _pauli_columns_to_sparse(cols, n)
        gc = [h_to_g(op.pauli_sum, basis) for op in model.controls]
    else:
        B = basis.dim
        g0d = np.zeros((B, B))
        for l in range(B):
            Y = _liouville_apply_dense(model, basis.element(l))
            g0d[:, l] = op_to_v(Y, basis)
        g0 = sp.csr_matrix(g0d)
        gc = [h_to_g(op.matrix, basis) for op in model.controls]
    return GModel(basis=basis, g0=g0, gc=gc, model=model)


# ---------------------------------------------------------------------------
# export

def gmodel_to_document(gm: GModel) -> dict:
    """Sparse-triplet JSON export of a GModel."""

    def triplets(M: sp.csr_matrix) -> dict:
        coo = M.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return {
            "shape": list(M.shape),
            "rows": [int(x) for x in coo.row[order]],
            "cols": [int(x) for x in coo.col[order]],
            "vals": [float(x) for x in coo.data[order]],
        }

    return {
        "basis": {"kind": gm.basis.kind, "hilbert_dim": gm.basis.dim_hilbert},
        "g0": triplets(gm.g0),
        "gc": [triplets(g) for g in gm.gc],
    }
