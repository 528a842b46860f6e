"""Subsystem codes: embedding data, the logical isomorphism, and candidate search.

A code of order n_cs lives in a host k-sector (order k_ord >= n_cs) of the
commutant.  Its four defining parameters are the sector ID, the order, a
k_ord x k_ord unitary u_star rotating the sector, and a slot index choosing
which n_cs x n_cs diagonal block of the rotated sector hosts the logical
algebra.  The embedding ampliates across the sector multiplicity, so the
logical trace relates to the physical trace by that fixed factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .commutant import CommutantStructure, CvsProjection
from .cvs import op_to_v
from .linalg import haar_unitary, hermitian_basis, orthonormal_columns


class CodeError(ValueError):
    pass


@dataclass
class SubsystemCode:
    host_sector: int          # 1-based sector ID in the structure's ordering
    order: int                # n_cs
    u_star: np.ndarray        # k_ord x k_ord unitary
    multiplicity_index: int   # m_cs, 1-based slot
    structure: CommutantStructure
    pi_cs: CvsProjection

    @property
    def dim(self) -> int:
        return self.order**2

    @property
    def sector(self):
        return self.structure.sectors[self.host_sector - 1]

    # -- logical <-> physical maps -------------------------------------------

    def _embed_block(self, J: np.ndarray) -> np.ndarray:
        kord = self.sector.order
        ncs = self.order
        lo = (self.multiplicity_index - 1) * ncs
        E = np.zeros((kord, kord), dtype=complex)
        E[lo : lo + ncs, lo : lo + ncs] = J
        return self.u_star.conj().T @ E @ self.u_star

    def phi_inverse(self, J: np.ndarray) -> np.ndarray:
        """Physical operator realizing logical J (ampliated; trace scales by m_k)."""
        if J.shape != (self.order, self.order):
            raise CodeError(f"logical operator must be {self.order}x{self.order}")
        V = self.sector.hilbert_columns
        block = np.kron(np.eye(self.sector.multiplicity), self._embed_block(J))
        return V @ block @ V.conj().T

    def phi_inverse_state(self, sigma: np.ndarray) -> np.ndarray:
        """Physical code state for a logical density operator (unit trace preserved)."""
        return self.phi_inverse(sigma) / self.sector.multiplicity

    def phi(self, X: np.ndarray, tol: float = 1e-8) -> np.ndarray:
        """Logical operator for a physical element of the code algebra."""
        sec = self.sector
        V = sec.hilbert_columns
        Y = V.conj().T @ X @ V
        m, kord, ncs = sec.multiplicity, sec.order, self.order
        blocks = [Y[i * kord : (i + 1) * kord, i * kord : (i + 1) * kord] for i in range(m)]
        avg = self.u_star @ (sum(blocks) / m) @ self.u_star.conj().T
        lo = (self.multiplicity_index - 1) * ncs
        J = avg[lo : lo + ncs, lo : lo + ncs]
        resid = np.linalg.norm(self.phi_inverse(J) - X)
        if resid > tol * max(1.0, np.linalg.norm(X)):
            raise CodeError(
                f"operator is outside the code algebra (residual {resid:.3e})"
            )
        return J

    def code_hermitians(self) -> list[np.ndarray]:
        """Physical images of a trace-orthonormal logical Hermitian basis."""
        return [self.phi_inverse(J) for J in hermitian_basis(self.order)]

    def report(self) -> dict:
        return {
            "sector": self.host_sector,
            "order": self.order,
            "multiplicity_index": self.multiplicity_index,
            "u_star": [
                [[float(x.real), float(x.imag)] for x in row] for row in self.u_star
            ],
        }


def derive_code(
    structure: CommutantStructure,
    k: int,
    n_cs: int,
    u_star: np.ndarray,
    m_cs: int = 1,
) -> SubsystemCode:
    """Build the code tuple from its four parameters; validates bounds and unitarity."""
    if not 1 <= k <= len(structure.sectors):
        raise CodeError(f"sector index {k} out of range 1..{len(structure.sectors)}")
    sec = structure.sectors[k - 1]
    kord = sec.order
    if kord < 2:
        raise CodeError(f"sector {k} has order {kord} < 2; it hosts no code")
    if not 2 <= n_cs <= kord:
        raise CodeError(f"code order {n_cs} outside [2, {kord}]")
    if not 1 <= m_cs <= kord // n_cs:
        raise CodeError(f"slot index {m_cs} outside [1, {kord // n_cs}]")
    u_star = np.asarray(u_star, dtype=complex)
    if u_star.shape != (kord, kord):
        raise CodeError(f"u_star must be {kord}x{kord}, got {u_star.shape}")
    if np.linalg.norm(u_star.conj().T @ u_star - np.eye(kord)) > 1e-9 * kord:
        raise CodeError("u_star is not unitary")
    code = SubsystemCode(
        host_sector=k,
        order=n_cs,
        u_star=u_star,
        multiplicity_index=m_cs,
        structure=structure,
        pi_cs=CvsProjection(np.zeros((structure.basis.dim, 0))),
    )
    cols = np.stack(
        [op_to_v(X, structure.basis) for X in code.code_hermitians()], axis=1
    )
    code.pi_cs = CvsProjection(orthonormal_columns(cols))
    if code.pi_cs.rank != n_cs**2:
        raise CodeError(
            f"core projection rank {code.pi_cs.rank} != {n_cs**2}; embedding degenerate"
        )
    return code


def max_code_order(structure: CommutantStructure) -> int:
    """Order of the largest hostable code (0 when every sector has order 1)."""
    best = max((s.order for s in structure.sectors), default=0)
    return best if best >= 2 else 0


# ---------------------------------------------------------------------------
# candidate search

def _invariant_antisym_form(op_basis: list[np.ndarray], rtol: float = 1e-9) -> np.ndarray | None:
    """Antisymmetric M with X^T M + M X = 0 for every -iH in the algebra, if unique."""
    d = op_basis[0].shape[0]
    eye = np.eye(d)
    rows = []
    for H in op_basis:
        X = -1j * (H - np.trace(H) / d * eye)
        rows.append(np.kron(eye, X.T) + np.kron(X.T, eye))
    A = np.concatenate(rows, axis=0)
    _, S, Vt = np.linalg.svd(A)
    nullity = int(np.sum(S < rtol * S[0]))
    if nullity != 1:
        return None
    M = Vt[-1].conj().reshape(d, d)  # row-major vec
    for H in op_basis:
        X = -1j * (H - np.trace(H) / d * eye)
        if np.linalg.norm(X.T @ M + M @ X) > 1e-7 * max(1.0, np.linalg.norm(X)):
            return None
    if np.linalg.norm(M + M.T) > 1e-6 * np.linalg.norm(M):
        return None
    M = M / np.sqrt(np.linalg.norm(M) ** 2 / d)
    if np.linalg.norm(M @ M.conj().T - np.eye(d)) > 1e-6:
        return None
    return M


def _intertwiner(M: np.ndarray, op_basis: list[np.ndarray]) -> np.ndarray | None:
    """Matrix K whose antiunitary x -> K conj(x) commutes with the algebra action.

    When M is the invariant bilinear form, K is its conjugate; the commutation
    X K = K conj(X) is verified directly so a convention slip cannot slip by.
    """
    d = M.shape[0]
    eye = np.eye(d)
    for K in (np.conj(M), M):
        ok = True
        for H in op_basis:
            X = -1j * (H - np.trace(H) / d * eye)
            if np.linalg.norm(X @ K - K @ np.conj(X)) > 1e-7 * max(1.0, np.linalg.norm(X)):
                ok = False
                break
        if ok:
            return K
    return None


def _quaternionic_basis(K: np.ndarray, rng: np.random.Generator) -> np.ndarray | None:
    """Unitary whose half-spaces are exchanged by the antiunitary x -> K conj(x)."""
    d = K.shape[0]
    if d % 2:
        return None
    if np.linalg.norm(K @ K.conj() + np.eye(d)) > 1e-6:
        return None
    a_cols, b_cols = [], []
    for _ in range(d // 2):
        x = rng.normal(size=d) + 1j * rng.normal(size=d)
        for c in a_cols + b_cols:
            x = x - c * (np.conj(c) @ x)
        nx = np.linalg.norm(x)
        if nx < 1e-8:
            return None
        x = x / nx
        y = K @ np.conj(x)
        for c in a_cols + b_cols + [x]:
            y = y - c * (np.conj(c) @ y)
        ny = np.linalg.norm(y)
        if ny < 1e-6:
            return None
        a_cols.append(x)
        b_cols.append(y / ny)
    W = np.stack(a_cols + b_cols, axis=1)
    if np.linalg.norm(W.conj().T @ W - np.eye(d)) > 1e-8:
        return None
    return W


def candidate_u_stars(
    kord: int,
    n_cs: int,
    effective_ops: list[np.ndarray] | None,
    budget: int,
    rng: np.random.Generator,
):
    """Yield up to `budget` candidate sector rotations.

    Structured candidates first: when the effective operator algebra on the
    sector preserves a unique antisymmetric bilinear form (a quaternionic
    structure), bases adapted to that form make the embedded logical algebra
    extendable inside the effective algebra.  Eigenbases of random effective
    elements and Haar-random unitaries fill the rest of the budget.
    """
    count = 0
    if effective_ops and 2 * n_cs == kord:
        M = _invariant_antisym_form(effective_ops)
        K = _intertwiner(M, effective_ops) if M is not None else None
        if K is not None:
            for _ in range(min(4, budget)):
                W = _quaternionic_basis(K, rng)
                if W is not None:
                    yield W.conj().T
                    count += 1
    while count < budget:
        if effective_ops and count % 3 == 1:
            w = rng.normal(size=len(effective_ops))
            H = sum(wi * Hi for wi, Hi in zip(w, effective_ops))
            H = H + H.conj().T
            _, U = np.linalg.eigh(H)
            yield U.conj().T
        else:
            yield haar_unitary(kord, rng)
        count += 1


def search_codes(
    structure: CommutantStructure,
    k: int,
    order_range: tuple[int, int],
    scheme_context,
    budget: int = 500,
    seed: int = 0,
    max_found: int | None = 1,
) -> list[SubsystemCode]:
    """Randomized search for codes in sector k passing the L-OC test.

    `scheme_context` is a pstatic.SchemeContext for the host sector; its cached
    Lie closure is reused across candidates.  Deterministic under `seed`.
    An empty result is a valid outcome.
    """
    from .liealg import test_loc_in_context

    sec = structure.sectors[k - 1]
    lo, hi = order_range
    lo = max(lo, 2)
    hi = min(hi, sec.order)
    if lo > hi or budget <= 0:
        return []
    rng = np.random.default_rng(seed)
    eff_ops = scheme_context.effective_sector_operators()
    found: list[SubsystemCode] = []
    spent = 0
    orders = list(range(lo, hi + 1))
    while spent < budget:
        n_cs = orders[spent % len(orders)]
        remaining = budget - spent
        got = False
        for u_star in candidate_u_stars(sec.order, n_cs, eff_ops, 1, rng):
            spent += 1
            got = True
            try:
                code = derive_code(structure, k, n_cs, u_star, 1)
            except CodeError:
                continue
            report = test_loc_in_context(code, scheme_context)
            if report.verdict:
                found.append(code)
                if max_found is not None and len(found) >= max_found:
                    return found
        if not got:
            break
    return found
