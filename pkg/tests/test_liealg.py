import numpy as np
import pytest

import dfscontrol as dc
from dfscontrol.liealg import (
    ClosureCapError,
    MExtension,
    cs_h_to_g,
    chi_su_images,
    p_diagonal_subspace,
    test_loc_in_context,
)
from dfscontrol.linalg import haar_unitary, hermitian_basis, mat_span_basis, principal_angle_cosines
from dfscontrol.model import LindbladModel, Operator

from conftest import random_hermitian

sx = np.array([[0, 1], [1, 0]], dtype=complex)
sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
sz = np.diag([1.0, -1.0]).astype(complex)


# ---------------------------------------------------------------- closure

def test_closure_su2():
    basis = dc.lie_closure([-1j * sx, -1j * sy])
    assert basis.dim == 3
    assert basis.bracket_residual() <= 1e-8


def test_closure_single_generator(rng):
    H = random_hermitian(rng, 4)
    assert dc.lie_closure([-1j * H]).dim == 1


def test_closure_generic_pair_fills_u(rng):
    A, B = random_hermitian(rng, 3), random_hermitian(rng, 3)
    assert dc.lie_closure([-1j * A, -1j * B]).dim == 9


def test_closure_cap(rng):
    A, B = random_hermitian(rng, 4), random_hermitian(rng, 4)
    with pytest.raises(ClosureCapError):
        dc.lie_closure([-1j * A, -1j * B], max_dim=5)


def test_closure_invariant_under_generator_mixing(rng):
    gens = [-1j * random_hermitian(rng, 3) for _ in range(2)]
    d1 = dc.lie_closure(gens).dim
    W = rng.normal(size=(2, 2))
    mixed = [W[0, 0] * gens[0] + W[0, 1] * gens[1], W[1, 0] * gens[0] + W[1, 1] * gens[1]]
    assert dc.lie_closure(mixed).dim == d1


def test_closure_orthonormal(rng):
    basis = dc.lie_closure([-1j * random_hermitian(rng, 3) for _ in range(2)])
    rows = basis.rows()
    assert np.linalg.norm(rows @ rows.T - np.eye(basis.dim)) <= 1e-9


# ---------------------------------------------------------------- erasure / extension

def test_p_erasure_examples(rng):
    A = rng.normal(size=(2, 2))
    B = rng.normal(size=(3, 3))
    M = np.block([[A, np.zeros((2, 3))], [np.zeros((3, 2)), B]])
    out = dc.p_erasure([M], 2)
    assert len(out) == 1 and np.allclose(out[0], A)
    M2 = M.copy()
    M2[0, 4] = 0.5  # off-diagonal coupling: filtered out
    assert dc.p_erasure([M2], 2) == []


def _random_block_diag_set(rng, p, m, count):
    out = []
    for _ in range(count):
        M = np.zeros((m, m))
        M[:p, :p] = rng.normal(size=(p, p))
        M[p:, p:] = rng.normal(size=(m - p, m - p))
        out.append(M)
    return out


def test_closure_erasure_commutation(rng):
    """Closing then erasing equals erasing then closing for block-diagonal sets."""
    for _ in range(4):
        S = _random_block_diag_set(rng, 3, 6, 2)
        S = [M - M.T for M in S]  # skew: keeps closures finite-dimensional? no, just well-scaled
        closed = dc.lie_closure(S, max_dim=80)
        lhs = mat_span_basis([M[:3, :3] for M in closed.elements])
        rhs_basis = dc.lie_closure([M[:3, :3] for M in S], max_dim=80)
        rhs = mat_span_basis(rhs_basis.elements)
        k = min(lhs.shape[0], rhs.shape[0])
        assert lhs.shape[0] == rhs.shape[0]
        cos = np.linalg.svd(lhs @ rhs.conj().T, compute_uv=False)
        assert np.all(cos >= 1.0 - 1e-7)


def test_erasure_extension_identity(rng):
    """ers_p((ext_m S) ∩ T) equals S ∩ ers_p(T) on randomized 6x6 sets."""
    p, m = 3, 6
    for _ in range(4):
        S_full = [rng.normal(size=(p, p)) for _ in range(2)]
        T = _random_block_diag_set(rng, p, m, 3)
        # make one T element's p-block land inside span(S) so the intersection is nontrivial
        T[0][:p, :p] = 0.7 * S_full[0] - 0.2 * S_full[1]
        ext = MExtension(S_full, m)
        lhs_mats = [M[:p, :p] for M in ext.intersect(T)]
        lhs = mat_span_basis(lhs_mats) if lhs_mats else np.zeros((0, p * p))
        # right side: S ∩ ers_p(T)
        t_diag = p_diagonal_subspace(T, p)
        t_erased = mat_span_basis([M[:p, :p] for M in t_diag])
        s_span = mat_span_basis(S_full)
        from dfscontrol.linalg import subspace_intersection_basis

        rhs = subspace_intersection_basis(s_span, t_erased)
        assert lhs.shape[0] == rhs.shape[0]
        if lhs.shape[0]:
            cos = np.linalg.svd(lhs @ rhs.conj().T, compute_uv=False)
            assert np.all(cos >= 1.0 - 1e-7)


def test_p_diagonal_subspace_full_when_all_diagonal(rng):
    S = _random_block_diag_set(rng, 2, 5, 3)
    assert len(p_diagonal_subspace(S, 2)) == 3


# ---------------------------------------------------------------- chi map

@pytest.fixture(scope="module")
def ion_code4(ion_structure, ion_context):
    found = dc.search_codes(ion_structure, 3, (4, 4), ion_context, budget=50, seed=3)
    assert found
    return found[0]


@pytest.fixture(scope="module")
def ion_frame4(ion_gmodel, ion_context, ion_code4):
    return dc.canonical_frame(ion_gmodel, ion_code4, ion_context.p_proj, ion_context.difs)


def test_chi_kills_identity(ion_code4, ion_gmodel, ion_frame4):
    chi = cs_h_to_g(ion_code4, ion_gmodel, ion_frame4.working)
    out = chi(np.eye(4, dtype=complex))
    assert np.linalg.norm(out) <= 1e-10


def test_chi_su_dimension(ion_code4, ion_gmodel, ion_frame4):
    images = chi_su_images(ion_code4, ion_gmodel, ion_frame4.working)
    assert mat_span_basis(images).shape[0] == 15


def test_chi_preserves_brackets_with_phase(ion_code4, ion_gmodel, ion_frame4, rng):
    chi = cs_h_to_g(ion_code4, ion_gmodel, ion_frame4.working)
    d = ion_code4.dim
    for _ in range(4):
        X, Y = random_hermitian(rng, 4), random_hermitian(rng, 4)
        lhs = chi(1j * (X @ Y - Y @ X))[:d, :d]  # hermitianized commutator
        gx, gy = chi(X)[:d, :d], chi(Y)[:d, :d]
        # conversion maps -i[H, .]: chi(i[X,Y]) = -[chi(X), chi(Y)]
        rhs = -(gx @ gy - gy @ gx)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


# ---------------------------------------------------------------- OC / ESC

def qubit_model(drift, controls):
    return LindbladModel(
        2, Operator(np.asarray(drift, complex)), [Operator(np.asarray(c, complex)) for c in controls], []
    ).validate()


def test_oc_qubit():
    rep = dc.test_oc(qubit_model(sz, [sx]))
    assert rep.verdict and rep.dims["lie_ham"] == 3


def test_not_oc_single_direction():
    rep = dc.test_oc(qubit_model(np.zeros((2, 2)), [sz]))
    assert not rep.verdict and rep.dims["lie_ham"] == 1
    esc = dc.test_esc(qubit_model(np.zeros((2, 2)), [sz]))
    assert not esc.verdict


def test_esc_via_oc_branch():
    rep = dc.test_esc(qubit_model(sz, [sx]))
    assert rep.verdict and rep.branch == "oc"


def test_esc_symplectic_branch(rng):
    """An sp-type algebra passes the basis-state commutator test without OC."""
    # compact symplectic algebra on C^4: X in u(4) with X^T J = -J X
    J = np.zeros((4, 4))
    J[:2, 2:] = np.eye(2)
    J[2:, :2] = -np.eye(2)
    gens = []
    for H in [np.kron(sz, np.eye(2)), np.kron(sx, np.eye(2)), np.kron(np.eye(2), sz)]:
        X = -1j * H
        if np.linalg.norm(X.T @ J + J @ X) > 1e-12:
            X = (X - J @ X.T @ np.linalg.inv(J)) / 2.0
        gens.append(X)
    basis = dc.lie_closure(gens)
    assert basis.dim <= 10
    # full sp(2) generator set
    sp_basis = []
    for H in hermitian_basis(4):
        X = -1j * H
        Xp = (X - J @ X.T @ np.linalg.inv(J)) / 2.0
        if np.linalg.norm(Xp) > 1e-9:
            sp_basis.append(Xp)
    full = dc.lie_closure(sp_basis)
    assert full.dim == 10
    model = LindbladModel(
        4,
        Operator(np.zeros((4, 4), complex)),
        [Operator(1j * X) for X in full.elements],
        [],
    ).validate()
    rep = dc.test_esc(model)
    assert rep.verdict and rep.branch == "e11-commutator"
    assert rep.dims["commutator"] == 2 * (4 - 1)
    assert not dc.test_oc(model).verdict


def test_standards_reject_noisy_models(ion_model):
    with pytest.raises(ValueError, match="L-OC"):
        dc.test_oc(ion_model)
    with pytest.raises(ValueError, match="L-OC"):
        dc.test_esc(ion_model)


# ---------------------------------------------------------------- logical standards

def test_noiseless_code_reduces_to_oc(rng):
    """A controllable noiseless model is L-OC when framed as a full-space scheme."""
    m = qubit_model(sz, [sx])
    gm = dc.liouvillian_to_g(m, dc.make_basis(2, "bloch_ball"))
    ctx = dc.SchemeContext.for_full_space(gm)
    assert ctx.difs.n_eff == 1
    lie_p = ctx.lie_p_reference()
    assert len(lie_p) == 3  # su(2) in coherence coordinates


def test_ion_full_sector_scheme(ion_gmodel, ion_structure, ion_p_proj):
    code = dc.derive_code(ion_structure, 3, 8, np.eye(8, dtype=complex), 1)
    scheme = dc.PStaticScheme(code=code, p_proj=ion_p_proj)
    rep = dc.test_loc(scheme, ion_gmodel)
    assert not rep.verdict
    assert rep.dims["lie_P"] == 36
    assert rep.dims["target"] == 63
    lesc = dc.test_lesc(scheme, ion_gmodel)
    # the effective algebra carries a symplectic structure, so the basis-state
    # commutator branch fires at exactly 2(order - 1)
    assert lesc.branch == "e11-commutator"
    assert lesc.dims["commutator"] == 14
    assert lesc.verdict


def test_ion_order4_scheme(ion_gmodel, ion_structure, ion_p_proj, ion_code4):
    scheme = dc.PStaticScheme(code=ion_code4, p_proj=ion_p_proj)
    rep = dc.test_loc(scheme, ion_gmodel)
    assert rep.verdict
    assert rep.dims["lie_P"] == 36
    assert rep.dims["lie_cs_star"] == 15
    lesc = dc.test_lesc(scheme, ion_gmodel)
    assert lesc.verdict and lesc.branch == "loc"


def test_loc_context_matches_full_path(ion_gmodel, ion_structure, ion_p_proj, ion_context, ion_code4):
    fast = test_loc_in_context(ion_code4, ion_context)
    slow = dc.test_loc(dc.PStaticScheme(code=ion_code4, p_proj=ion_p_proj), ion_gmodel)
    assert fast.verdict == slow.verdict
    assert fast.dims["lie_cs_star"] == slow.dims["lie_cs_star"]


def test_loc_invariant_under_code_block_rotation(ion_structure, ion_context, ion_code4, rng):
    """Rotating u_star by a unitary acting inside the code slot keeps the verdict."""
    kord = 8
    W4 = haar_unitary(4, rng)
    R = np.eye(kord, dtype=complex)
    R[:4, :4] = W4
    rotated = dc.derive_code(ion_structure, 3, 4, R @ ion_code4.u_star, 1)
    rep = test_loc_in_context(rotated, ion_context)
    assert rep.verdict
    assert rep.dims["lie_cs_star"] == 15


def test_random_code_fails_loc(ion_structure, ion_context, rng):
    code = dc.derive_code(ion_structure, 3, 4, haar_unitary(8, rng), 1)
    rep = test_loc_in_context(code, ion_context)
    assert not rep.verdict


def test_report_shape(ion_gmodel, ion_structure, ion_p_proj, ion_code4):
    rep = dc.test_loc(dc.PStaticScheme(code=ion_code4, p_proj=ion_p_proj), ion_gmodel)
    doc = rep.report()
    assert doc["standard"] == "L-OC"
    assert doc["verdict"] is True
    assert doc["dims"]["lie_P"] == 36 and doc["dims"]["target"] == 15
    assert isinstance(doc["branch"], str)
