import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from aaflow import closed_forms
from aaflow.algebra import (
    AlmostAbelianStructure,
    BalancedParams,
    kahler_check,
    structure_constants,
    sym_norm_sq,
)
from aaflow.connections import (
    InstantonStatus,
    curvature_forms,
    d_sigma,
    ddbar_omega,
    gauduchon_forms,
    instanton_check,
    lambda_forms,
    levi_civita_forms,
    proportionality_K,
    proportionality_K_bracket,
    su3_check,
    trace_cross_terms,
    trace_curvature_wedge,
)
from aaflow.exterior import DIM, J_VECTORS, KForm, StructureConstants

from conftest import A22, kahler_params, params, resolvable, taus

e = KForm.basis_form
J = J_VECTORS


def nabla_matrices(conn):
    """``N[k][i, j] = sigma^i_j(e_k)``: the matrix of ``nabla_{e_k}``."""
    return np.einsum("ijk->kij", conn.sigma)


def torsion(conn, c: StructureConstants) -> np.ndarray:
    """``T[:, a, b] = nabla_a e_b - nabla_b e_a - [e_a, e_b]`` with ``[e_a, e_b] = -c^k_ab e_k``."""
    N = nabla_matrices(conn)
    return np.einsum("akb->kab", N) - np.einsum("bka->kab", N) + c.c


def test_levi_civita_by_index_loops():
    c = structure_constants(A22).c
    expected = np.zeros((DIM, DIM, DIM))
    for i in range(DIM):
        for j in range(DIM):
            for k in range(DIM):
                expected[i, j, k] = 0.5 * (c[i, j, k] - c[k, i, j] + c[j, k, i])
    assert np.array_equal(levi_civita_forms(structure_constants(A22)).sigma, expected)


@given(params)
def test_levi_civita_is_torsion_free_and_metric(p):
    c = structure_constants(p)
    conn = levi_civita_forms(c)
    assert np.max(np.abs(conn.sigma + conn.sigma.transpose(1, 0, 2))) == 0
    assert np.max(np.abs(torsion(conn, c))) < 1e-14


def test_abelian_structure_is_flat():
    c = structure_constants(BalancedParams())
    conn = gauduchon_forms(c, 0.3)
    assert not np.any(conn.sigma)
    assert curvature_forms(conn, c).max_abs() == 0
    assert trace_curvature_wedge(curvature_forms(conn, c)).norm() == 0


@given(params, taus)
def test_gauduchon_is_hermitian(p, tau):
    c = structure_constants(p)
    conn = gauduchon_forms(c, tau)
    assert np.max(np.abs(conn.sigma + conn.sigma.transpose(1, 0, 2))) < 1e-15
    for N in nabla_matrices(conn):
        assert np.max(np.abs(N @ J - J @ N)) < 1e-14


@given(params)
def test_chern_torsion_is_complex_linear(p):
    c = structure_constants(p)
    T = torsion(gauduchon_forms(c, 1.0), c)
    assert np.max(np.abs(np.einsum("kab,ax->kxb", T, J) - np.einsum("yk,kab->yab", J, T))) < 1e-14


@given(params)
def test_bismut_torsion_is_totally_skew(p):
    c = structure_constants(p)
    T = torsion(gauduchon_forms(c, -1.0), c)
    assert np.max(np.abs(T + T.transpose(1, 0, 2))) < 1e-14
    assert np.max(np.abs(T + T.transpose(0, 2, 1))) < 1e-14


@pytest.mark.parametrize("tau", [-1.0, 0.0, 0.5, 1.0, 2.0])
def test_sigma_entries_a22(tau):
    conn = gauduchon_forms(structure_constants(A22), tau)
    assert conn.form(3, 4).terms(1e-15) == pytest.approx({(1,): tau} if tau else {})
    assert conn.form(1, 2).terms(1e-15) == pytest.approx({(5,): -(tau - 1) / 2} if tau != 1 else {})
    assert conn.form(1, 6).norm() == 0


@given(params, taus)
def test_sigma_matches_closed_table(p, tau):
    c = structure_constants(p)
    generic = gauduchon_forms(c, tau).sigma
    assert np.max(np.abs(generic - closed_forms.closed_form_sigma(p, tau).sigma)) < 1e-12
    assert np.max(np.abs(generic[4, 5] + generic[0, 1])) < 1e-14


@given(kahler_params, taus)
def test_kahler_family_collapses(p, tau):
    c = structure_constants(p)
    assert np.max(np.abs(gauduchon_forms(c, tau).sigma - levi_civita_forms(c).sigma)) < 1e-14


@pytest.mark.parametrize("tau", [-1.0, 0.0, 2.0])
def test_curvature_a22(tau):
    curv = curvature_forms(gauduchon_forms(structure_constants(A22), tau), structure_constants(A22))
    k = (tau - 1) ** 2 / 8 * 4
    assert curv.form(1, 6).terms(1e-14) == pytest.approx({(2, 5): k, (3, 4): k})
    assert np.max(np.abs(curv.omega2 + curv.omega2.transpose(1, 0, 2))) == 0


@given(kahler_params, taus)
def test_kahler_curvature_vanishes(p, tau):
    c = structure_constants(p)
    assert curvature_forms(gauduchon_forms(c, tau), c).max_abs() < 1e-12


def test_dsigma_a22():
    conn = gauduchon_forms(structure_constants(A22), -1.0)
    ds = d_sigma(conn, structure_constants(A22))
    # sigma^1_2 = e^5 at tau = -1 and d e^5 = e^{56}
    assert KForm(2, ds[0, 1]).terms(1e-15) == {(5, 6): 1.0}


def test_closed_forms_vanish_at_zero():
    ds, lam = closed_forms.closed_form_dsigma_lambda(BalancedParams(), 0.7)
    assert not np.any(ds) and not np.any(lam)


@given(params, st.floats(-3, 3))
def test_closed_form_equality(p, tau):
    c = structure_constants(p)
    conn = gauduchon_forms(c, tau)
    ds, lam = closed_forms.closed_form_dsigma_lambda(p, tau)
    curv = curvature_forms(conn, c)
    assert np.max(np.abs(d_sigma(conn, c) - ds)) < 1e-10
    assert np.max(np.abs(lambda_forms(conn) - lam)) < 1e-10
    assert np.max(np.abs(curv.omega2 - closed_forms.closed_form_curvature(p, tau).omega2)) < 1e-10
    assert (trace_curvature_wedge(curv) - closed_forms.closed_form_trace(p, tau)).norm() < 1e-10


@given(params, taus)
def test_dsigma_sign_relations(p, tau):
    c = structure_constants(p)
    ds = d_sigma(gauduchon_forms(c, tau), c)
    assert np.max(np.abs(ds[0, 2] + ds[3, 5])) < 1e-14
    assert np.max(np.abs(ds[0, 1] + ds[4, 5])) < 1e-14


@given(params, taus)
def test_trace_has_no_pure_terms(p, tau):
    c = structure_constants(p)
    dd, ll = trace_cross_terms(gauduchon_forms(c, tau), c)
    assert dd.norm() < 1e-12
    assert ll.norm() < 1e-12


def test_trace_a22_bismut():
    trace = trace_curvature_wedge(curvature_forms(gauduchon_forms(structure_constants(A22), -1.0), structure_constants(A22)))
    assert trace.terms(1e-13) == pytest.approx({(1, 2, 5, 6): -8.0, (1, 3, 4, 6): -8.0})


@given(params, taus)
def test_trace_lies_in_e1rs6(p, tau):
    trace = closed_forms.closed_form_trace(p, tau)
    assert all(idx[0] == 1 and idx[-1] == 6 for idx in trace.terms(1e-14))


@given(params, st.sampled_from([0.0, 1.0]))
def test_trace_vanishes_for_chern_and_lichnerowicz(p, tau):
    assert closed_forms.closed_form_trace(p, tau).norm() < 1e-14


@given(kahler_params, taus)
def test_trace_vanishes_for_kahler(p, tau):
    assert closed_forms.closed_form_trace(p, tau).norm() < 1e-12


def test_proportionality_constant_examples():
    assert proportionality_K(A22, -1.0) == -2.0
    assert proportionality_K(A22, 0.0) == 0.0
    assert proportionality_K(A22, 1.0) == 0.0


@given(params, taus)
def test_trace_proportional_to_ddbar_omega(p, tau):
    c = structure_constants(p)
    trace = trace_curvature_wedge(curvature_forms(gauduchon_forms(c, tau), c))
    K = proportionality_K(p, tau)
    assert (trace - K * ddbar_omega(p)).norm() < 1e-10
    assert K == pytest.approx(tau * (tau - 1) ** 2 / 8 * sym_norm_sq(p), rel=1e-12, abs=1e-12)
    assert K == pytest.approx(proportionality_K_bracket(p, tau), rel=1e-12, abs=1e-12)


def test_closed_ddbar_omega_matches_generic(rng):
    for _ in range(50):
        p = BalancedParams.from_vector(rng.uniform(-1, 1, 6))
        assert (closed_forms.closed_form_ddbar_omega(p) - ddbar_omega(p)).norm() < 1e-12


def test_instanton_examples():
    assert instanton_check(BalancedParams(0, 1, 0, 0, -1, 0), -1.0) is InstantonStatus.KAHLER_INSTANTON
    assert instanton_check(A22, -1.0) is InstantonStatus.NOT_INSTANTON
    # Chern curvature of A22 = 1 vanishes identically, so it is a flat instanton
    c = structure_constants(A22)
    assert curvature_forms(gauduchon_forms(c, 1.0), c).max_abs() == 0
    assert instanton_check(A22, 1.0) is InstantonStatus.FLAT_INSTANTON
    assert instanton_check(BalancedParams(0.5, 0.2, 0, 0, 0, 0), 1.0) is InstantonStatus.NOT_INSTANTON
    # the zero structure is both flat and Kähler; Kähler takes precedence
    assert instanton_check(BalancedParams(), 1.0) is InstantonStatus.KAHLER_INSTANTON
    # Kähler within the structural tolerance agrees with kahler_check at any scale
    assert instanton_check(BalancedParams(A35=1e-125), -1.0) is InstantonStatus.KAHLER_INSTANTON


@given(params, st.one_of(st.sampled_from([-1.0, 0.0]), st.floats(-3, 3)))
def test_instanton_iff_kahler(p, tau):
    assume(tau != 1.0 and resolvable(p))
    assert (instanton_check(p, tau) is InstantonStatus.KAHLER_INSTANTON) == kahler_check(p)


@given(params)
def test_chern_instanton_only_when_flat(p):
    if instanton_check(p, 1.0) is not InstantonStatus.NOT_INSTANTON:
        c = structure_constants(p)
        assert curvature_forms(gauduchon_forms(c, 1.0), c).max_abs() < 1e-10


@pytest.mark.parametrize("tau", [-1.0, 0.0, 0.5, 1.0, 2.0])
@given(p=params)
def test_su3_holonomy(tau, p):
    assert su3_check(gauduchon_forms(structure_constants(p), tau)) < 1e-12


def test_su3_fails_off_balanced():
    assert su3_check(gauduchon_forms(structure_constants(BalancedParams()), -1.0)) == 0
    for s in (
        AlmostAbelianStructure(0.0, [1.0, 0.0, 0.0, 0.0], np.zeros((4, 4))),
        AlmostAbelianStructure(0.0, np.zeros(4), np.eye(4)),
    ):
        assert su3_check(gauduchon_forms(structure_constants(s), -1.0)) > 0
