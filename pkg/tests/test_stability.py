import numpy as np
import pytest
from numpy.testing import assert_allclose

import ringstab as rs
from ringstab.stability import (block_factor, classical_checks, dense_oracle,
                                expected_degree_profile, factorize, pencil,
                                transform)

NEWT = rs.newtonian()
VORT = rs.vortex()


def solved(n, rings, pot, free=()):
    sol = rs.solve_releq(rs.build(n, rings), pot, free_radii=free)
    assert sol.converged
    op = rs.stability_operator(sol.system, pot, sol.omega)
    basis = rs.assemble_global_basis(sol.system)
    return op, basis


def operator_at(n, rings, pot, omega):
    # block structure is a consequence of equivariance alone, so these
    # helpers do not require an equilibrium
    sys = rs.build(n, rings)
    return rs.stability_operator(sys, pot, omega), rs.assemble_global_basis(sys)


# --- hand-checked 2x2 determinants ---------------------------------------

def test_block_factor_translation_pair():
    # A = 0 with standard J gives ((lambda^2 + omega^2))^2
    w = 1.3
    f = block_factor("t", np.zeros((2, 2)), np.array([[0.0, 1.0], [-1.0, 0.0]]),
                     w, "homogeneous")
    assert f.even
    assert_allclose(f.coefficients, [w ** 4, 0.0, 2.0 * w ** 2, 0.0, 1.0], atol=1e-10)
    assert_allclose(f(0.7), (0.49 + w * w) ** 2, rtol=1e-12)


def test_block_factor_vortex_shifted_identity():
    a, w = 0.8, 0.5
    f = block_factor("v", a * np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]),
                     w, "vortex")
    assert f.degree == 2
    assert_allclose(f.coefficients, [(a + w) ** 2, 0.0, 1.0], atol=1e-12)


def test_block_factor_full_degree_fallback():
    # a nilpotent block breaks evenness; det = l^4 + 2w^2 l^2 + 2w l + w^4
    w = 1.1
    Ab = np.array([[0.0, 1.0], [0.0, 0.0]])
    f = block_factor("odd", Ab, np.array([[0.0, 1.0], [-1.0, 0.0]]),
                     w, "homogeneous")
    assert not f.even
    assert f.even_residual > 1e-9
    assert_allclose(f.coefficients, [w ** 4, 2.0 * w, 2.0 * w ** 2, 0.0, 1.0],
                    atol=1e-9)


def test_pencil_matches_definition():
    op, _ = solved(5, [rs.regular(1.0, 1.0)], VORT)
    lam = 0.37
    J = rs.dynamics.j_matrix(op.system.npoints)
    assert_allclose(pencil(op, lam), op.matrix + op.omega * np.eye(10) + lam * J,
                    atol=1e-13)


# --- transformed operator structure ---------------------------------------

@pytest.mark.parametrize("pot", [NEWT, VORT])
def test_off_block_residual_and_j_form(pot):
    op, basis = operator_at(6, [rs.center(1.5), rs.regular(1.0, 1.0),
                                rs.semiregular(1.9, 0.15, 0.5)], pot, 0.8)
    tr = transform(op, basis)
    assert tr.max_off < 1e-9
    assert tr.passed
    assert set(tr.off_residuals) == {p.label for p in basis.blocks}
    for plan in basis.blocks:
        m = plan.pairs
        sl = slice(plan.start, plan.start + plan.size)
        Jb = tr.j_tilde[sl, sl]
        expect = np.block([[np.zeros((m, m)), np.eye(m)],
                           [-np.eye(m), np.zeros((m, m))]])
        assert_allclose(Jb, expect, atol=1e-10)


def block_quarters(op, basis, label):
    tr = transform(op, basis)
    for plan in basis.blocks:
        if plan.label == label:
            m = plan.pairs
            sl = slice(plan.start, plan.start + plan.size)
            At = tr.a_tilde[sl, sl]
            return At[:m, :m], At[m:, m:]
    raise AssertionError(label)


def test_shape_pattern_4x4():
    # single regular ring: the u side of each V^(k) block repeats the J side
    # with both indices reversed
    op, basis = solved(5, [rs.regular(1.0, 1.0)], VORT)
    AJ, Au = block_quarters(op, basis, "rho_2")
    P = np.eye(2)[[1, 0]]
    assert np.linalg.norm(Au - P @ AJ @ P) / np.linalg.norm(Au) < 1e-8


def test_shape_pattern_8x8():
    # single semiregular ring: entries are shared under the pairwise swap
    # (1 2)(3 4) of the four basis vectors on each side
    op, basis = operator_at(5, [rs.semiregular(1.0, np.pi / 7, 1.0)], NEWT, 1.2)
    AJ, Au = block_quarters(op, basis, "rho_2")
    P = np.eye(4)[[1, 0, 3, 2]]
    assert np.linalg.norm(Au - P @ AJ @ P) / np.linalg.norm(Au) < 1e-8


@pytest.mark.parametrize("pot", [NEWT, VORT])
def test_shape_pattern_sigma_refined(pot):
    # the standard component of a lone semiregular ring shares entries under
    # the swap of its last two refined vectors, with no sign change
    op, basis = operator_at(4, [rs.semiregular(1.0, np.pi / 6, 1.0)], pot, 0.9)
    AJ, Au = block_quarters(op, basis, "sigma")
    Q = np.eye(4)[[0, 1, 3, 2]]
    assert np.linalg.norm(Au - Q @ AJ @ Q) / np.linalg.norm(Au) < 1e-8


# --- factorization ---------------------------------------------------------

def test_degree_profile_pentagon_vortex():
    op, basis = solved(5, [rs.regular(1.0, 1.0)], VORT)
    fac = factorize(op, basis)
    assert fac.degree_profile == [2, 4, 4]
    assert expected_degree_profile(5, 0, 1, 0) == [2, 4, 4]
    assert sum(fac.lambda_degrees) == 2 * op.system.npoints
    assert fac.oracle.passed
    assert fac.oracle.max_rel_error < 1e-8


def test_degree_profile_hexagon():
    op, basis = solved(6, [rs.regular(1.0, 1.0)], VORT)
    fac = factorize(op, basis)
    assert fac.degree_profile == [2, 2, 4, 4]


def test_homogeneous_degrees_double():
    op, basis = solved(5, [rs.regular(1.0, 1.0)], NEWT)
    fac = factorize(op, basis)
    assert fac.degree_profile == [2, 4, 4]
    assert sum(fac.lambda_degrees) == 4 * op.system.npoints
    assert all(f.even for f in fac.factors)
    for f in fac.factors:
        assert abs(f.coefficients[-1] - 1.0) < 1e-10
        assert np.max(np.abs(f.coefficients[1::2])) <= 1e-8 * np.max(np.abs(f.coefficients))


def test_lead_factors_closed_form():
    # rotation/scaling factor lambda^2 (lambda^2 + (2 gamma + 4) omega^2),
    # translation factor (lambda^2 + omega^2)^2
    pot = rs.homogeneous(-1.2)
    op, basis = solved(4, [rs.center(4.0), rs.regular(1.0, 0.5), rs.regular(1.8, 1.0)],
                       pot, free=(2,))
    fac = factorize(op, basis)
    by_label = {b.label: b.factor for b in fac.blocks}
    w2 = op.omega ** 2
    ta = by_label["tau_alpha_lead"]
    assert_allclose(ta.coefficients, [0.0, 0.0, (2.0 * pot.gamma + 4.0) * w2, 0.0, 1.0],
                    atol=1e-8 * max(1.0, w2))
    sg = by_label["sigma_lead"]
    assert_allclose(sg.coefficients, [w2 ** 2, 0.0, 2.0 * w2, 0.0, 1.0],
                    atol=1e-8 * max(1.0, w2 ** 2))


def test_lead_factors_vortex():
    op, basis = solved(4, [rs.center(2.0), rs.regular(1.0, 1.0), rs.regular(2.1, 0.5)],
                       VORT, free=(2,))
    fac = factorize(op, basis)
    by_label = {b.label: b.factor for b in fac.blocks}
    assert_allclose(by_label["tau_alpha_lead"].coefficients, [0.0, 0.0, 1.0], atol=1e-9)
    assert_allclose(by_label["sigma_lead"].coefficients,
                    [op.omega ** 2, 0.0, 1.0], atol=1e-8 * max(1.0, op.omega ** 2))
    assert fac.oracle.passed


@pytest.mark.parametrize("pot", [NEWT, VORT])
def test_classical_checks_at_releq(pot):
    op, _ = solved(6, [rs.regular(1.0, 1.0)], pot)
    res = classical_checks(op)
    assert set(res) >= {"A Delta_h", "A Delta_v"}
    assert max(res.values()) < 1e-10


def test_not_a_releq_keeps_coarse_blocks():
    sys = rs.build(5, [rs.regular(1.0, 1.0)])
    op = rs.stability_operator(sys, VORT, 1.1)
    assert not op.is_releq
    fac = factorize(op, rs.assemble_global_basis(sys))
    assert any("not a relative equilibrium" in s for s in fac.notes)
    assert fac.classical is None
    assert all("_lead" not in b.label for b in fac.blocks)
    # the oracle has nothing to do with equilibrium and still must pass
    assert fac.oracle.passed


def test_oracle_samples_match_factor_product():
    op, basis = operator_at(3, [rs.regular(1.0, 1.0), rs.semiregular(2.0, 0.3, 0.6)],
                            NEWT, 0.7)
    fac = factorize(op, basis)
    ts, signs, logs = dense_oracle(op, nsamples=7)
    for t, s, l in zip(ts, signs, logs):
        prod = np.prod([f(t) for f in fac.factors])
        assert_allclose(prod, s * np.exp(l), rtol=1e-7)


def test_vortex_j_maps_eigenvectors_to_eigenvectors():
    op, _ = solved(5, [rs.regular(1.0, 1.0)], VORT)
    A = op.matrix
    assert np.linalg.norm(A - A.T) < 1e-12
    _, vecs = np.linalg.eigh(A)
    J = rs.dynamics.j_matrix(op.system.npoints)
    scale = np.linalg.norm(A)
    for i in range(vecs.shape[1]):
        w = J @ vecs[:, i]
        mu = w @ A @ w / (w @ w)
        assert np.linalg.norm(A @ w - mu * w) / scale < 1e-7


def test_factor_roots_diagnostics():
    op, basis = solved(4, [rs.regular(1.0, 1.0)], VORT)
    fac = factorize(op, basis)
    eigs = fac.eigenvalues
    assert set(eigs) == {b.label for b in fac.blocks}
    for blk in fac.blocks:
        r = blk.factor.roots()
        assert len(r) == blk.factor.degree
        # lexicographic order by real part, then imaginary part
        key = np.lexsort((r.imag, r.real))
        assert list(key) == sorted(key)
    # block payload carries the matrices the factor was computed from
    assert fac.blocks[0].a_block.shape == (fac.blocks[0].size,) * 2


@pytest.mark.parametrize("pot", [NEWT, VORT])
def test_d2_rhombus_all_blocks_quadratic(pot):
    sol = rs.solve_releq(rs.build(2, [rs.regular(1.0, 1.0), rs.regular(1.4, 1.5)]),
                         pot, free_radii=())
    # a rhombus with fixed axis ratio is generally not an equilibrium; relax
    # the second radius to find one
    sol = rs.solve_releq(rs.build(2, [rs.regular(1.0, 1.0), rs.regular(1.4, 1.5)]),
                         pot, free_radii=(1,))
    assert sol.converged
    op = rs.stability_operator(sol.system, pot, sol.omega)
    fac = factorize(op, rs.assemble_global_basis(sol.system))
    assert [b.size for b in fac.blocks] == [2, 2, 2, 2]
    assert fac.oracle.passed
