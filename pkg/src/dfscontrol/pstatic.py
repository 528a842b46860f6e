"""P-static control schemes: protected subspaces, DIFS, and effective Hamiltonians.

A scheme fixes a code, a static protective projection, and a control resource
set.  The decoupling input function space (DIFS) is the affine family of input
vectors whose generator leaves the protected subspace invariant; it is found by
stacking the leakage of the projection's eigenvectors under each control
matrix and solving the resulting linear-affine system by SVD.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .codes import SubsystemCode
from .commutant import CommutantStructure, CvsProjection
from .cvs import GModel
from .linalg import RANK_RTOL, null_space, orthonormal_columns

STATIONARY_RTOL = 1e-8


class NotInvariantError(RuntimeError):
    """No protective inputs exist for this projection and control set."""


def sector_projection(
    structure: CommutantStructure, k: int, include_identity: bool = True
) -> CvsProjection:
    """Protective projection for a k-sector scheme.

    Image = coherence span of the sector's full ampliated Hermitian algebra,
    plus the global identity direction so physical code states (which carry a
    trace component) lie inside it.
    """
    from .cvs import op_to_v
    from .linalg import hermitian_basis

    sec = structure.sectors[k - 1]
    V = sec.hilbert_columns
    cols = [
        op_to_v(V @ np.kron(np.eye(sec.multiplicity), H) @ V.conj().T, structure.basis)
        for H in hermitian_basis(sec.order)
    ]
    if include_identity:
        N = structure.basis.dim_hilbert
        cols.append(op_to_v(np.eye(N) / np.sqrt(N), structure.basis))
    return CvsProjection(orthonormal_columns(np.stack(cols, axis=1)))


def full_space_projection(gmodel: GModel) -> CvsProjection:
    return CvsProjection(np.eye(gmodel.dim))


# ---------------------------------------------------------------------------
# DIFS

@dataclass
class DIFSResult:
    Z: np.ndarray            # (Bdim * rankP) x n_c stacked leakage matrix
    z0: np.ndarray           # stacked drift leakage
    rank_Z: int
    zN: np.ndarray           # n_c x n_eff null-space basis (orthonormal columns)
    zoff: np.ndarray         # particular solution, Z zoff = -z0
    n_eff: int
    drift_invariant: bool

    def realize(self, u_eff: np.ndarray) -> np.ndarray:
        """Map effective inputs to a physical input vector inside the DIFS."""
        return self.zN @ np.asarray(u_eff) + self.zoff

    def contains(self, u: np.ndarray, tol: float = 1e-9) -> bool:
        resid = self.Z @ (np.asarray(u) - self.zoff)
        scale = max(1.0, float(np.linalg.norm(self.Z)))
        return float(np.linalg.norm(resid)) <= tol * scale

    def report(self) -> dict:
        return {
            "drift_invariant": bool(self.drift_invariant),
            "n_eff": int(self.n_eff),
            "rank_Z": int(self.rank_Z),
            "zN": [[float(x) for x in row] for row in self.zN],
            "zoff": [float(x) for x in self.zoff],
        }


def compute_difs(
    gmodel: GModel,
    p_proj: CvsProjection,
    rtol: float = RANK_RTOL,
) -> DIFSResult:
    """Affine input constraints keeping im(p_proj) invariant.

    Raises NotInvariantError when the drift leakage is outside the range of
    the control leakage map (rank test on the augmented matrix).
    """
    Q = p_proj.columns
    n_c = gmodel.n_controls
    cols = []
    scale = 1.0
    for gk in gmodel.gc:
        GQ = np.asarray(gk @ Q)
        scale = max(scale, float(np.linalg.norm(GQ)))
        GQ = GQ - Q @ (Q.T @ GQ)
        cols.append(GQ.reshape(-1, order="F"))
    Z = (
        np.stack(cols, axis=1)
        if cols
        else np.zeros((Q.shape[0] * Q.shape[1], 0))
    )
    g0Q = np.asarray(gmodel.g0 @ Q)
    scale = max(scale, float(np.linalg.norm(g0Q)))
    g0Q = g0Q - Q @ (Q.T @ g0Q)
    z0 = g0Q.reshape(-1, order="F")

    rank_Z, zN = null_space(Z, rtol, scale=scale)
    drift_invariant = bool(np.linalg.norm(z0) <= rtol * scale)
    if drift_invariant:
        zoff = np.zeros(n_c)
    else:
        aug = np.concatenate([Z, z0[:, None]], axis=1)
        rank_aug, _ = null_space(aug, rtol, scale=scale)
        if rank_aug != rank_Z:
            raise NotInvariantError(
                f"projection is not invariant under any input: rank[Z z0] = {rank_aug} "
                f"> rank Z = {rank_Z}"
            )
        zoff, *_ = np.linalg.lstsq(Z, -z0, rcond=None)
        resid = np.linalg.norm(Z @ zoff + z0)
        if resid > 1e-9 * max(1.0, np.linalg.norm(z0)):
            raise NotInvariantError(f"affine offset solve failed (residual {resid:.3e})")
    n_eff = n_c - rank_Z
    return DIFSResult(
        Z=Z,
        z0=z0,
        rank_Z=rank_Z,
        zN=zN,
        zoff=zoff,
        n_eff=n_eff,
        drift_invariant=drift_invariant,
    )


def admissible_u_samples(difs: DIFSResult, seed: int = 0, n_random: int = 8) -> list[np.ndarray]:
    """Vertex-style samples of the affine DIFS plus seeded random interior points."""
    rng = np.random.default_rng(seed)
    out = [difs.zoff.copy()]
    for j in range(difs.n_eff):
        e = np.zeros(difs.n_eff)
        e[j] = 1.0
        out.append(difs.realize(e))
    for _ in range(n_random):
        out.append(difs.realize(rng.normal(size=difs.n_eff)))
    return out


# ---------------------------------------------------------------------------
# canonical frame

@dataclass
class CanonicalFrame:
    code_cols: np.ndarray        # leading block: im(pi_cs)
    ext_cols: np.ndarray         # remaining protected directions
    d_cs: int
    d_p: int                     # working dimension: active directions in im(p_proj)
    n_stationary: int
    stationary_in_code: int
    partition_dims: tuple[int, int, int]

    @property
    def working(self) -> np.ndarray:
        """Columns of the protected block: [code | extension]."""
        return np.concatenate([self.code_cols, self.ext_cols], axis=1)

    def rotation(self, bdim: int) -> np.ndarray:
        """Full orthonormal change of basis: [code | ext | complement]."""
        W = self.working
        # complement by projecting out from the identity
        R = np.eye(bdim) - W @ W.T
        comp = orthonormal_columns(R)
        return np.concatenate([W, comp], axis=1)


def canonical_frame(
    gmodel: GModel,
    code: SubsystemCode | None,
    p_proj: CvsProjection,
    difs: DIFSResult | None = None,
) -> CanonicalFrame:
    """Orthonormal frame with the code span leading, then the protected extension.

    The working dimension d_p excludes stationary directions: vectors in the
    protected block with zero row and column in every admissible generator
    (the global identity direction and per-sector trace directions).  Those
    directions stay in the block; d_p only drives reported dimensions.
    """
    if difs is None:
        difs = compute_difs(gmodel, p_proj)
    Qp = p_proj.columns
    if code is not None:
        Qa = code.pi_cs.columns
        resid = Qa - Qp @ (Qp.T @ Qa)
        if np.linalg.norm(resid) > 1e-8 * max(1.0, np.linalg.norm(Qa)):
            raise NotInvariantError(
                "protective chain violated: code span is not inside the protected subspace"
            )
        R = Qp - Qa @ (Qa.T @ Qp)
        Qb = orthonormal_columns(R)
    else:
        Qa = Qp
        Qb = np.zeros((Qp.shape[0], 0))
    W = np.concatenate([Qa, Qb], axis=1)
    gens = _admissible_generators(gmodel, difs)
    comps = [np.asarray(W.T @ (G @ W)) for G in gens]
    stack_rows = []
    for B in comps:
        nb = np.linalg.norm(B)
        if nb < 1e-14:
            continue
        stack_rows.append(B / nb)
        stack_rows.append(B.T / nb)
    if stack_rows:
        S = np.concatenate(stack_rows, axis=0)
        sv = np.linalg.svd(S, compute_uv=False)
        n_stat = int(np.sum(sv <= STATIONARY_RTOL * max(1.0, sv[0] if sv.size else 0.0)))
    else:
        S = np.zeros((1, W.shape[1]))
        n_stat = W.shape[1]
    # how many stationary directions sit entirely inside the code block
    stat_in_code = 0
    if n_stat and code is not None and stack_rows:
        _, ns = null_space(S, STATIONARY_RTOL)
        d_cs0 = Qa.shape[1]
        for j in range(ns.shape[1]):
            if np.linalg.norm(ns[d_cs0:, j]) < 1e-6:
                stat_in_code += 1
    d_cs = Qa.shape[1]
    d_p = W.shape[1] - n_stat
    ext_active = Qb.shape[1] - (n_stat - stat_in_code)
    bdim = gmodel.dim
    return CanonicalFrame(
        code_cols=Qa,
        ext_cols=Qb,
        d_cs=d_cs,
        d_p=d_p,
        n_stationary=n_stat,
        stationary_in_code=stat_in_code,
        partition_dims=(d_cs, max(ext_active, 0), bdim - d_cs - max(ext_active, 0)),
    )


def _admissible_generators(gmodel: GModel, difs: DIFSResult) -> list[sp.csr_matrix]:
    """Drift at the affine offset plus one generator per effective channel."""
    out = [gmodel.g_of(difs.zoff)]
    for j in range(difs.n_eff):
        Gj = None
        for k in range(gmodel.n_controls):
            c = difs.zN[k, j]
            if abs(c) > 1e-15:
                Gj = c * gmodel.gc[k] if Gj is None else Gj + c * gmodel.gc[k]
        out.append(sp.csr_matrix(Gj) if Gj is not None else sp.csr_matrix((gmodel.dim, gmodel.dim)))
    return out


# ---------------------------------------------------------------------------
# effective Hamiltonians

@dataclass
class EffectiveHamiltonians:
    h0_eff: np.ndarray           # working-block Hermitian generator of the drift
    hc_eff: list[np.ndarray]     # one per effective channel
    offblock_residuals: list[float]

    @property
    def n_eff(self) -> int:
        return len(self.hc_eff)

    def generators(self) -> list[np.ndarray]:
        """The -iH generators whose closure is the protected-block Lie algebra."""
        return [-1j * self.h0_eff] + [-1j * h for h in self.hc_eff]


def effective_hamiltonians(
    gmodel: GModel,
    frame: CanonicalFrame,
    difs: DIFSResult,
    tol: float = 1e-9,
) -> EffectiveHamiltonians:
    """Protected-block erasures of the DIFS-constrained generators.

    Each -iH is the working-block compression of an admissible G; the
    off-block residual certifies that the erasure is exact.
    """
    W = frame.working
    gens = _admissible_generators(gmodel, difs)
    blocks, resids = [], []
    for G in gens:
        GW = np.asarray(G @ W)
        B = W.T @ GW
        resid = float(np.linalg.norm(GW - W @ B))
        scale = max(1.0, float(np.linalg.norm(GW)))
        if resid > tol * scale:
            raise NotInvariantError(
                f"generator leaks out of the protected block (residual {resid:.3e})"
            )
        blocks.append(B)
        resids.append(resid)
    return EffectiveHamiltonians(
        h0_eff=1j * blocks[0],
        hc_eff=[1j * B for B in blocks[1:]],
        offblock_residuals=resids,
    )


def check_sufficient_invariance(
    gmodel: GModel,
    p_proj: CvsProjection,
    u_samples: list[np.ndarray],
    tol: float = 1e-9,
) -> tuple[bool, list[float]]:
    """Off-diagonal quadrant norms of G[u] for sampled inputs; True if all vanish."""
    Q = p_proj.columns
    resids = []
    scale = 1.0
    for u in u_samples:
        G = gmodel.g_of(np.asarray(u))
        GQ = np.asarray(G @ Q)
        lower = GQ - Q @ (Q.T @ GQ)          # P_perp G P
        GtQ = np.asarray(G.T @ Q)
        upper = GtQ - Q @ (Q.T @ GtQ)        # (P G P_perp)^T
        resids.append(float(max(np.linalg.norm(lower), np.linalg.norm(upper))))
        scale = max(scale, float(np.linalg.norm(GQ)))
    ok = all(r <= tol * scale for r in resids)
    return ok, resids


def k_sector_decoupling_check(
    gmodel: GModel,
    structure: CommutantStructure,
    k: int,
    u_samples: list[np.ndarray],
) -> dict:
    """Max residual of (Pi_NC - Pi_k) G[u] Pi_k over the sampled inputs."""
    Qk = structure.pi_k[k - 1].columns
    Qnc = structure.pi_nc.columns
    worst = 0.0
    for u in u_samples:
        G = gmodel.g_of(np.asarray(u))
        GQk = np.asarray(G @ Qk)
        inside_nc = Qnc @ (Qnc.T @ GQk)
        inside_k = Qk @ (Qk.T @ GQk)
        worst = max(worst, float(np.linalg.norm(inside_nc - inside_k)))
    return {"max_residual": worst, "n_samples": len(u_samples)}


# ---------------------------------------------------------------------------
# scheme bundle

@dataclass
class PStaticScheme:
    code: SubsystemCode
    p_proj: CvsProjection
    control_indices: list[int] = field(default_factory=list)

    def validate_chain(self, tol: float = 1e-9) -> None:
        if not self.p_proj.contains(self.code.pi_cs, tol):
            raise NotInvariantError("im(pi_cs) is not contained in im(p_proj)")
        structure = self.code.structure
        if not structure.pi_nc.contains(self.code.pi_cs, tol):
            raise NotInvariantError("im(pi_cs) is not contained in im(pi_nc)")


@dataclass
class SchemeContext:
    """Shared, code-independent data for analyzing schemes over one projection.

    Holds the DIFS and a reference working frame with the compressed admissible
    generators; Lie closures computed here are reused across candidate codes by
    rotating into each code's frame.
    """

    gmodel: GModel
    structure: CommutantStructure
    sector: int | None
    p_proj: CvsProjection
    difs: DIFSResult
    ref_cols: np.ndarray
    ref_generators: list[np.ndarray]
    _lie_p_cache: list[np.ndarray] | None = None

    @classmethod
    def for_sector(
        cls, gmodel: GModel, structure: CommutantStructure, k: int
    ) -> "SchemeContext":
        p_proj = sector_projection(structure, k)
        difs = compute_difs(gmodel, p_proj)
        sec = structure.sectors[k - 1]
        from .cvs import op_to_v
        from .linalg import hermitian_basis

        V = sec.hilbert_columns
        cols = np.stack(
            [
                op_to_v(
                    V @ np.kron(np.eye(sec.multiplicity), H) @ V.conj().T,
                    structure.basis,
                )
                for H in hermitian_basis(sec.order)
            ],
            axis=1,
        )
        ref = orthonormal_columns(cols)
        gens = [np.asarray(ref.T @ (G @ ref)) for G in _admissible_generators(gmodel, difs)]
        return cls(
            gmodel=gmodel,
            structure=structure,
            sector=k,
            p_proj=p_proj,
            difs=difs,
            ref_cols=ref,
            ref_generators=gens,
        )

    @classmethod
    def for_full_space(cls, gmodel: GModel, structure: CommutantStructure | None = None) -> "SchemeContext":
        p_proj = full_space_projection(gmodel)
        difs = compute_difs(gmodel, p_proj)
        ref = p_proj.columns
        gens = [np.asarray(ref.T @ (G @ ref)) for G in _admissible_generators(gmodel, difs)]
        return cls(
            gmodel=gmodel,
            structure=structure,
            sector=None,
            p_proj=p_proj,
            difs=difs,
            ref_cols=ref,
            ref_generators=gens,
        )

    def lie_p_reference(self) -> list[np.ndarray]:
        """Closure of the compressed admissible generators, in reference coordinates."""
        if self._lie_p_cache is None:
            from .liealg import lie_closure

            basis = lie_closure(self.ref_generators, max_dim=self.gmodel.dim**2)
            self._lie_p_cache = basis.elements
        return self._lie_p_cache

    def effective_sector_operators(self) -> list[np.ndarray] | None:
        """Hilbert-level restrictions of the effective Hamiltonians to the sector.

        Only available when every admissible generator commutes with the sector
        subspace (guaranteed by the DIFS for sector schemes with multiplicity 1).
        """
        if self.sector is None:
            return None
        sec = self.structure.sectors[self.sector - 1]
        if sec.multiplicity != 1:
            return None
        V = sec.hilbert_columns
        model = self.gmodel.model
        if model is None:
            return None
        mats = [model.drift.matrix] + [op.matrix for op in model.controls]
        out = [V.conj().T @ mats[0] @ V]
        for j in range(self.difs.n_eff):
            H = sum(self.difs.zN[k, j] * mats[k + 1] for k in range(len(model.controls)))
            out.append(V.conj().T @ H @ V)
        return out
