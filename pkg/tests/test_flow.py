import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aaflow.algebra import BalancedParams, HermitianMetric, matrix_parts, params_from_matrix, structure_constants
from aaflow.connections import proportionality_K
from aaflow.flow import (
    CSV_COLUMNS,
    NILPOTENT_EXAMPLE,
    OUTSIDE_HYPOTHESES,
    FlowConfig,
    FlowConfigError,
    FlowStatus,
    bracket_rhs,
    example_displayed_a,
    example_solution,
    f_derivative,
    integrate_bracket_flow,
    max_psi_closure,
    metric_rhs,
    monitor_identities,
    p_mu,
    reduced_bracket_tangent,
    run_example,
    sample_times,
    slope_f,
    write_csv,
    write_json,
)

from conftest import A22, kahler_params, params, taus

KAHLER = BalancedParams(0.0, 0.7, -0.4, 0.2, -0.7, -0.4)
GENERIC = BalancedParams(0.4, -0.3, 0.5, 0.2, 0.6, -0.1)


def test_slope_f_examples():
    assert slope_f(GENERIC, FlowConfig(alpha_prime=0.0)) == 1.0
    assert slope_f(A22, FlowConfig(tau=-1.0, alpha_prime=-2.0)) == 0.0


@given(params, taus, st.floats(-3, 3))
def test_slope_f_from_K(p, tau, alpha_prime):
    cfg = FlowConfig(tau=tau, alpha_prime=alpha_prime)
    assert slope_f(p, cfg) == pytest.approx(1 - alpha_prime / 4 * proportionality_K(p, tau), abs=1e-12)


def test_bracket_rhs_a22():
    for alpha_prime in (0.0, 0.5, -1.0):
        cfg = FlowConfig(tau=-1.0, alpha_prime=alpha_prime)
        tangent = bracket_rhs(A22, cfg)
        assert tangent.A22 == pytest.approx(-4 * slope_f(A22, cfg), abs=1e-15)
        assert np.all(tangent.as_vector()[1:] == 0)


@given(params, taus, st.floats(-1, 1))
def test_bracket_rhs_stays_balanced(p, tau, alpha_prime):
    cfg = FlowConfig(tau=tau, alpha_prime=alpha_prime)
    M = bracket_rhs(p, cfg).matrix()
    params_from_matrix(M)  # raises unless M is of the balanced form
    assert abs(np.trace(M)) < 1e-14


@given(params, taus, st.floats(-1, 1))
def test_stationary_exactly_when_kahler_or_f_zero(p, tau, alpha_prime):
    cfg = FlowConfig(tau=tau, alpha_prime=alpha_prime)
    tangent = np.max(np.abs(bracket_rhs(p, cfg).as_vector()))
    s = matrix_parts(p.matrix()).sym_norm_sq
    f = slope_f(p, cfg)
    if s == 0 or f == 0:
        assert tangent < 1e-12
    elif s > 1e-6 and abs(f) > 1e-6:
        assert tangent > 0


@given(kahler_params)
def test_kahler_is_stationary(p):
    assert np.all(bracket_rhs(p, FlowConfig(alpha_prime=0.3)).as_vector() == 0)


@pytest.mark.parametrize("t", [1.0, 10.0, 100.0])
def test_a22_decay_closed_form(t):
    res = integrate_bracket_flow(A22, FlowConfig(alpha_prime=0.0, t_end=t))
    assert res.status is FlowStatus.COMPLETED
    assert res.final.t == t
    assert res.final.monitors.norm_Aplus_sq == pytest.approx(4 / (1 + 8 * t), abs=1e-8)
    assert abs(res.final.monitors.norm_Aplus_sq - 4 / (1 + 2 * t)) > 1e-2


def test_decay_bound_on_random_starts(rng):
    for _ in range(8):
        p = BalancedParams.from_vector(rng.uniform(-1, 1, 6))
        res = integrate_bracket_flow(p, FlowConfig(alpha_prime=0.0, t_end=100.0))
        assert res.status.ok
        for pt in res.points:
            m = pt.monitors
            assert m.norm_Aplus_sq <= m.decay_bound_rhs * (1 + 1e-6)


def test_long_time_limit_is_skew():
    res = integrate_bracket_flow(GENERIC, FlowConfig(alpha_prime=0.0, t_end=1e14, convergence_eps=1e-6))
    assert res.status is FlowStatus.CONVERGED
    A = res.final.params.matrix()
    assert np.max(np.abs(A + A.T)) < 2e-6


def test_kahler_start_is_a_single_converged_point():
    res = integrate_bracket_flow(KAHLER, FlowConfig())
    assert res.status is FlowStatus.CONVERGED
    assert len(res.points) == 1
    assert res.final.params == KAHLER


@pytest.mark.parametrize("tau,alpha_prime", [(-1.0, 0.0), (-1.0, 0.3), (2.0, -0.2), (0.5, 1.0)])
def test_trajectory_invariants(tau, alpha_prime):
    cfg = FlowConfig(tau=tau, alpha_prime=alpha_prime, t_end=20.0)
    res = integrate_bracket_flow(GENERIC, cfg)
    assert res.status.ok and not res.tags
    norms = [pt.monitors.norm_A_sq for pt in res.points]
    assert all(abs(pt.monitors.tr_A) < 1e-9 and abs(pt.monitors.tr_JA) < 1e-9 for pt in res.points)
    assert all(pt.monitors.f_value > 0 for pt in res.points)
    assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))
    assert max_psi_closure(res.samples) < 1e-10


def test_samples_hit_requested_times():
    cfg = FlowConfig(t_end=5.0, n_samples=11, sampling="linear")
    res = integrate_bracket_flow(GENERIC, cfg)
    assert [pt.t for pt in res.samples] == pytest.approx(list(np.linspace(0, 5, 11)), abs=0)
    assert np.all(np.diff([pt.t for pt in res.points]) > 0)


def test_geometric_sampling():
    times = sample_times(FlowConfig(t_end=100.0, n_samples=5))
    assert times[0] == 0 and times[-1] == 100.0
    assert times[1] == pytest.approx(100.0 * 1e-4)
    assert np.allclose(np.diff(np.log(times[1:])), np.log(1e4) / 3)


@pytest.mark.parametrize("tau,alpha_prime", [(-1.0, 0.0), (-1.0, 0.4), (2.5, -0.3), (-0.5, 1.5)])
def test_monitor_identities(tau, alpha_prime):
    res = integrate_bracket_flow(GENERIC, FlowConfig(tau=tau, alpha_prime=alpha_prime, t_end=10.0))
    report = monitor_identities(res)
    assert len(report.times) > 100
    assert report.max_norm_rel_error < 1e-5
    assert report.max_f_rel_error < 1e-5


def test_monitor_identities_on_constant_trajectory():
    report = monitor_identities(integrate_bracket_flow(KAHLER, FlowConfig()))
    assert report.max_norm_rel_error == 0 and report.max_f_rel_error == 0


def test_a22_norm_derivative():
    # A = A+ here, so d|A|^2/dt = -2 |A|^4
    res = integrate_bracket_flow(A22, FlowConfig(alpha_prime=0.0, t_end=2.0))
    h = 1e-4
    for pt in res.samples[1:-1]:
        lo, hi = (4 * res.solution(pt.t + s * h)[0] ** 2 for s in (-1, 1))
        assert (hi - lo) / (2 * h) == pytest.approx(-2 * pt.monitors.norm_A_sq**2, rel=1e-5)


def test_f_evolution_coefficient():
    cfg = FlowConfig(tau=-1.0, alpha_prime=0.4, t_end=10.0)
    res = integrate_bracket_flow(GENERIC, cfg)
    assert monitor_identities(res).max_f_rel_error < 1e-5
    # the variant with |A+|^4 / 2 in place of 2 |A+|^4 is contradicted by the trajectory
    p = res.samples[20].params
    t = res.samples[20].t
    h = 1e-4
    fd = (slope_f(BalancedParams.from_vector(res.solution(t + h)), cfg)
          - slope_f(BalancedParams.from_vector(res.solution(t - h)), cfg)) / (2 * h)
    parts = matrix_parts(p.matrix())
    kappa = cfg.alpha_prime / 4 * cfg.tau * (cfg.tau - 1) ** 2 / 8
    variant = kappa * slope_f(p, cfg) * (4 * parts.comm_norm_sq + 0.5 * parts.sym_norm_sq**2)
    assert fd == pytest.approx(f_derivative(p, cfg), rel=1e-6)
    assert abs(fd - variant) > 1e-3 * abs(fd)


def test_stationary_slope_trajectory():
    res = integrate_bracket_flow(A22, FlowConfig(tau=-1.0, alpha_prime=-2.0, t_end=5.0))
    assert res.status is FlowStatus.COMPLETED
    assert OUTSIDE_HYPOTHESES in res.tags
    assert all(pt.params == A22 for pt in res.points)


def test_negative_f_start_is_tagged_and_blows_up():
    cfg = FlowConfig(tau=-1.0, alpha_prime=-4.0, t_end=10.0, blowup_ceiling=1e3)
    assert slope_f(A22, cfg) < 0
    res = integrate_bracket_flow(A22, cfg)
    assert OUTSIDE_HYPOTHESES in res.tags
    assert res.status is FlowStatus.BLOW_UP
    assert not res.status.ok


def test_p_mu_blocks():
    assert not np.any(p_mu(KAHLER, FlowConfig()).p)
    cfg = FlowConfig(tau=-1.0, alpha_prime=0.3)
    E = p_mu(A22, cfg).p
    f = slope_f(A22, cfg)
    assert np.allclose(E, np.diag([4 * f, 0, 0, 0, 0, 4 * f]), atol=1e-15)


@given(params, taus, st.floats(-1, 1))
def test_reduction_certificate(p, tau, alpha_prime):
    cfg = FlowConfig(tau=tau, alpha_prime=alpha_prime)
    block, rest = reduced_bracket_tangent(p, cfg)
    assert np.max(np.abs(block - bracket_rhs(p, cfg).matrix())) < 1e-12
    assert rest < 1e-12


@pytest.mark.parametrize("a,b,c", [(1.0, 1.0, 1.0), (2.0, 0.5, 1.5), (0.3, 3.0, 0.8)])
def test_metric_rhs_on_nilpotent_example(a, b, c):
    dg = metric_rhs(HermitianMetric.diagonal(a, b, c), structure_constants(NILPOTENT_EXAMPLE), FlowConfig())
    psi_inv = a * b * c
    # rescaled to unit |Psi|, the diagonal system reads a' = a c^2, b' = b c^2, c' = -c^3 for a = b
    expected = psi_inv * np.array([c / b, c / a, -(c**2) / (a * b)])
    assert np.allclose(np.diag(dg)[:3], expected, atol=1e-12)
    assert np.allclose(dg - np.diag(np.diag(dg)), 0, atol=1e-12)
    if a == b:
        assert np.allclose(np.diag(dg)[:3], [a * c**2, b * c**2, -(c**3)])


def test_metric_rhs_vanishes_for_kahler_bracket():
    dg = metric_rhs(HermitianMetric.identity(), structure_constants(KAHLER), FlowConfig(alpha_prime=0.5))
    assert np.max(np.abs(dg)) < 1e-14


def test_nilpotent_example_against_exact_solution():
    table = run_example()
    assert table.status is FlowStatus.COMPLETED
    assert np.allclose(table.abc[0], 1.0, atol=1e-15)
    assert table.ode_deviation < 1e-6
    assert table.psi_deviation < 1e-6
    a4, c4 = example_solution(4.0)
    assert c4 == pytest.approx(1 / 3)
    row = int(np.argmin(np.abs(table.t - 4.0)))
    assert table.abc[row, 2] == pytest.approx(1 / 3, abs=1e-6)


def test_displayed_exponential_solves_a_different_ode():
    t = np.linspace(0.0, 10.0, 201)
    a = example_displayed_a(t)
    _, c = example_solution(t)
    da = np.gradient(a, t, edge_order=2)
    assert np.max(np.abs(da - a * c) / a) < 1e-2
    assert np.max(np.abs(da - a * c**2) / a) > 0.1


def test_config_validation():
    for bad in (dict(t_end=-1.0), dict(rel_tol=0.0), dict(psi_norm_sq_inv=-1.0), dict(sampling="log"),
                dict(n_samples=1), dict(initial_step=0.0), dict(t_end=math.inf)):
        with pytest.raises(FlowConfigError):
            FlowConfig(**bad)


def test_csv_contract():
    res = integrate_bracket_flow(GENERIC, FlowConfig(tau=-1.0, alpha_prime=0.2, t_end=3.0))
    buf = io.StringIO()
    write_csv(res.points, buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == len(res.points) + 1
    for row, pt in zip(rows[1:], res.points):
        assert [float(x) for x in row] == pt.row()


def test_output_is_deterministic():
    outputs = []
    for _ in range(2):
        buf = io.StringIO()
        write_csv(integrate_bracket_flow(GENERIC, FlowConfig(alpha_prime=0.1, t_end=7.0)).points, buf)
        outputs.append(buf.getvalue())
    assert outputs[0] == outputs[1]


def test_json_output():
    res = integrate_bracket_flow(GENERIC, FlowConfig(t_end=1.0, n_samples=3))
    buf = io.StringIO()
    write_json(res, buf)
    data = json.loads(buf.getvalue())
    assert data["status"] == "completed"
    assert data["config"]["max_step"] is None
    assert set(data["points"][0]["monitors"]) == set(CSV_COLUMNS[7:])
