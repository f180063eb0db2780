"""Randomised cross-check suite behind ``aaflow verify``.

Every check draws its own inputs from a seeded generator and reports the
largest residual it saw against a fixed tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import closed_forms
from .algebra import (
    BalancedParams,
    d_omega,
    jacobi_residual,
    kahler_check,
    random_params,
    structure_constants,
)
from .connections import (
    InstantonStatus,
    curvature_forms,
    d_sigma,
    ddbar_omega,
    gauduchon_forms,
    instanton_check,
    lambda_forms,
    proportionality_K,
    proportionality_K_bracket,
    su3_check,
    trace_curvature_wedge,
)
from .exterior import KForm, dc, dc_dolbeault, exterior_derivative
from .flow import (
    FlowConfig,
    bracket_rhs,
    integrate_bracket_flow,
    max_psi_closure,
    monitor_identities,
    reduced_bracket_tangent,
    run_example,
)
from .hull_strominger import Classification, anomaly_residual, classify

NAMED_TAUS = (-1.0, 0.0, 1.0)

#: Names accepted by ``run_checks(faults=...)``; each perturbs one closed form.
FAULTS = ("trace-sign",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float
    draws: int
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tolerance)


def draw_params(rng: np.random.Generator) -> BalancedParams:
    """Random parameters; a quarter of the draws are Kähler."""
    p = random_params(rng)
    if rng.random() < 0.25:
        A23, A24, A25 = p.A23, p.A24, p.A25
        return BalancedParams(0.0, A23, A24, A25, -A23, A24)
    return p


def draw_tau(rng: np.random.Generator) -> float:
    if rng.random() < 0.3:
        return float(rng.choice(NAMED_TAUS))
    return float(rng.uniform(-3, 3))


def draw_non_kahler(rng: np.random.Generator) -> BalancedParams:
    while True:
        p = random_params(rng)
        if not kahler_check(p):
            return p


class _Suite:
    def __init__(self, seed: int, draws: int, flow_draws: int, faults: tuple[str, ...]):
        self.seed, self.draws, self.flow_draws = seed, draws, flow_draws
        unknown = set(faults) - set(FAULTS)
        if unknown:
            raise ValueError(f"unknown faults {sorted(unknown)}; known: {FAULTS}")
        self.faults = faults

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def closed_trace(self, p, tau) -> KForm:
        out = closed_forms.closed_form_trace(p, tau)
        return -out if "trace-sign" in self.faults else out

    # exterior / algebra -------------------------------------------------------

    def d_squared(self) -> CheckResult:
        rng, worst = self.rng(1), 0.0
        for _ in range(self.draws):
            c = structure_constants(draw_params(rng))
            k = int(rng.integers(0, 5))
            alpha = KForm(k, rng.normal(size=math.comb(6, k)))
            worst = max(worst, exterior_derivative(exterior_derivative(alpha, c), c).norm())
        return CheckResult("d_squared", worst, 1e-10, self.draws)

    def jacobi(self) -> CheckResult:
        rng = self.rng(2)
        worst = max(jacobi_residual(structure_constants(draw_params(rng))) for _ in range(self.draws))
        return CheckResult("jacobi", worst, 1e-12, self.draws)

    def dc_identity(self) -> CheckResult:
        rng, worst = self.rng(3), 0.0
        for _ in range(self.draws):
            c = structure_constants(draw_params(rng))
            k = int(rng.integers(0, 6))
            alpha = KForm(k, rng.normal(size=math.comb(6, k)))
            worst = max(worst, (dc(alpha, c) - dc_dolbeault(alpha, c)).norm())
        return CheckResult("dc_identity", worst, 1e-12, self.draws)

    def kahler_oracle(self) -> CheckResult:
        rng, bad = self.rng(4), 0
        for _ in range(self.draws):
            p = draw_params(rng)
            bad += kahler_check(p) != (d_omega(p).norm() < 1e-10)
        return CheckResult("kahler_oracle", float(bad), 0.5, self.draws, f"{bad} disagreements")

    # connections ----------------------------------------------------------------

    def closed_form_equality(self) -> CheckResult:
        rng, worst = self.rng(5), 0.0
        for _ in range(self.draws):
            p, tau = draw_params(rng), float(rng.uniform(-3, 3))
            c = structure_constants(p)
            conn = gauduchon_forms(c, tau)
            ds, lam = closed_forms.closed_form_dsigma_lambda(p, tau)
            curv = curvature_forms(conn, c)
            worst = max(
                worst,
                np.max(np.abs(conn.sigma - closed_forms.closed_form_sigma(p, tau).sigma)),
                np.max(np.abs(d_sigma(conn, c) - ds)),
                np.max(np.abs(lambda_forms(conn) - lam)),
                np.max(np.abs(curv.omega2 - closed_forms.closed_form_curvature(p, tau).omega2)),
                (trace_curvature_wedge(curv) - self.closed_trace(p, tau)).norm(),
            )
        return CheckResult("closed_form_equality", float(worst), 1e-10, self.draws)

    def trace_proportionality(self) -> CheckResult:
        rng, worst, worst_k = self.rng(6), 0.0, 0.0
        for _ in range(self.draws):
            p, tau = draw_params(rng), draw_tau(rng)
            c = structure_constants(p)
            K = proportionality_K(p, tau)
            trace = trace_curvature_wedge(curvature_forms(gauduchon_forms(c, tau), c))
            worst = max(worst, (trace - K * ddbar_omega(p)).norm())
            worst_k = max(worst_k, abs(K - proportionality_K_bracket(p, tau)))
        return CheckResult(
            "trace_proportionality", max(worst / 1e-10, worst_k / 1e-12), 1.0, self.draws,
            f"4-form residual {worst:.2e}, K routes {worst_k:.2e}",
        )

    def hs_dichotomy(self) -> CheckResult:
        rng, worst, bad = self.rng(7), 0.0, 0
        for _ in range(self.draws):
            p, tau = draw_non_kahler(rng), draw_tau(rng)
            report = classify(p, tau)
            if tau in (0.0, 1.0):
                bad += report.classification is not Classification.UNSOLVABLE
            else:
                bad += report.classification is not Classification.SOLVABLE_WITH_SLOPE
                worst = max(worst, anomaly_residual(p, tau, report.alpha_prime).norm())
        return CheckResult(
            "hs_dichotomy", worst if not bad else math.inf, 1e-10, self.draws, f"{bad} misclassified"
        )

    def instanton(self) -> CheckResult:
        rng, bad = self.rng(8), 0
        for _ in range(self.draws):
            p, tau = draw_params(rng), draw_tau(rng)
            status = instanton_check(p, tau)
            if tau != 1.0:
                bad += (status is InstantonStatus.KAHLER_INSTANTON) != kahler_check(p)
            elif status is not InstantonStatus.NOT_INSTANTON:
                c = structure_constants(p)
                bad += curvature_forms(gauduchon_forms(c, tau), c).max_abs() > 1e-10
        return CheckResult("instanton", float(bad), 0.5, self.draws, f"{bad} violations")

    def su3(self) -> CheckResult:
        rng = self.rng(9)
        worst = max(
            su3_check(gauduchon_forms(structure_constants(draw_params(rng)), draw_tau(rng)))
            for _ in range(self.draws)
        )
        return CheckResult("su3_holonomy", worst, 1e-12, self.draws)

    # flow -------------------------------------------------------------------------

    def reduction_certificate(self) -> CheckResult:
        rng, worst = self.rng(10), 0.0
        for _ in range(self.draws):
            p = draw_params(rng)
            cfg = FlowConfig(tau=draw_tau(rng), alpha_prime=float(rng.uniform(-1, 1)))
            block, rest = reduced_bracket_tangent(p, cfg)
            worst = max(worst, float(np.max(np.abs(block - bracket_rhs(p, cfg).matrix()))), rest)
        return CheckResult("reduction_certificate", worst, 1e-12, self.draws)

    def decay_bound(self) -> CheckResult:
        rng, worst = self.rng(11), 0.0
        for _ in range(self.flow_draws):
            res = integrate_bracket_flow(draw_non_kahler(rng), FlowConfig(alpha_prime=0.0, t_end=100.0))
            for pt in res.points:
                m = pt.monitors
                worst = max(worst, m.norm_Aplus_sq / m.decay_bound_rhs - 1)
        return CheckResult("decay_bound", worst, 1e-6, self.flow_draws, "max relative excess over bound")

    def flow_invariants(self) -> CheckResult:
        rng, worst_tr, worst_psi, worst_id, failures = self.rng(12), 0.0, 0.0, 0.0, 0
        for _ in range(self.flow_draws):
            cfg = FlowConfig(tau=draw_tau(rng), alpha_prime=float(rng.uniform(-0.5, 0.5)), t_end=10.0)
            res = integrate_bracket_flow(draw_non_kahler(rng), cfg)
            failures += not res.status.ok
            worst_tr = max([worst_tr] + [max(abs(pt.monitors.tr_A), abs(pt.monitors.tr_JA)) for pt in res.points])
            worst_psi = max(worst_psi, max_psi_closure(res.samples))
            rep = monitor_identities(res)
            worst_id = max(worst_id, rep.max_norm_rel_error, rep.max_f_rel_error)
        residual = max(worst_tr / 1e-9, worst_psi / 1e-10, worst_id / 1e-5) if not failures else math.inf
        return CheckResult(
            "flow_invariants", residual, 1.0, self.flow_draws,
            f"traces {worst_tr:.1e}, dPsi {worst_psi:.1e}, identities {worst_id:.1e}, failures {failures}",
        )

    def nilpotent_example(self) -> CheckResult:
        table = run_example()
        return CheckResult(
            "nilpotent_example", max(table.ode_deviation, table.psi_deviation), 1e-6, 1,
            f"deviation from exp(sqrt(2t+1)-1) for a: {table.displayed_deviation:.3g}",
        )

    def all(self) -> list[Callable[[], CheckResult]]:
        return [
            self.d_squared,
            self.jacobi,
            self.dc_identity,
            self.kahler_oracle,
            self.closed_form_equality,
            self.trace_proportionality,
            self.hs_dichotomy,
            self.instanton,
            self.su3,
            self.reduction_certificate,
            self.decay_bound,
            self.flow_invariants,
            self.nilpotent_example,
        ]


def run_checks(
    seed: int = 0, draws: int = 1000, flow_draws: int | None = None, faults: tuple[str, ...] = ()
) -> list[CheckResult]:
    """Run every check; ``flow_draws`` defaults to ``max(1, draws // 50)`` trajectories."""
    flow_draws = max(1, draws // 50) if flow_draws is None else flow_draws
    suite = _Suite(seed, draws, flow_draws, tuple(faults))
    return [check() for check in suite.all()]
