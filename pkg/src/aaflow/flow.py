"""The reduced Anomaly flow, as a matrix ODE on ``A`` and as a metric flow.

Bracket picture: with the metric held fixed, the balanced block ``A`` evolves by

    dA/dt = |Psi|^{-2} f(A) (2 [[A+, A-], A] - |A+|^2 A),
    f(A)  = 1 - (alpha'/4) K(A, tau) |Psi|^{-2}.

Metric picture: with the bracket fixed, the fundamental form evolves by
``d nu/dt = |Psi|_nu^{-2} f iota_nu(i del delbar nu)``.

Both are integrated with an embedded Dormand–Prince 4(5) pair and dense output.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import RK45, OdeSolution

from .algebra import (
    J_N1,
    PARAM_NAMES,
    BalancedParams,
    HermitianMetric,
    d_psi_norm,
    form_to_metric,
    matrix_parts,
    metric_to_form,
    params_from_matrix,
    psi_norm_sq,
    structure_constants,
    unitary_frame,
)
from .connections import (
    curvature_forms,
    gauduchon_forms,
    proportionality_K,
    trace_curvature_wedge,
)
from .exterior import (
    DIM,
    OMEGA,
    REAL_11_BASIS,
    KForm,
    StructureConstants,
    del_delbar,
    lefschetz_solve,
)

CSV_COLUMNS = (
    "t",
    *PARAM_NAMES,
    "norm_A_sq",
    "norm_Aplus_sq",
    "norm_comm_sq",
    "f_value",
    "tr_A",
    "tr_JA",
    "decay_bound_rhs",
)


class FlowConfigError(ValueError):
    """Invalid integration settings."""


@dataclass(frozen=True)
class FlowConfig:
    tau: float = -1.0
    alpha_prime: float = 0.0
    psi_norm_sq_inv: float = 1.0
    t_end: float = 10.0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    initial_step: float | None = None
    convergence_eps: float = 1e-8
    convergence_window: int = 3
    blowup_ceiling: float = 1e12
    n_samples: int = 200
    sampling: str = "geometric"

    def __post_init__(self):
        if not self.t_end >= 0 or not math.isfinite(self.t_end):
            raise FlowConfigError(f"t_end must be finite and >= 0, got {self.t_end}")
        for name in ("rel_tol", "abs_tol", "max_step", "convergence_eps", "blowup_ceiling"):
            if not getattr(self, name) > 0:
                raise FlowConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.initial_step is not None and not self.initial_step > 0:
            raise FlowConfigError(f"initial_step must be positive, got {self.initial_step}")
        if not self.psi_norm_sq_inv > 0:
            raise FlowConfigError("psi_norm_sq_inv must be positive")
        if self.convergence_window < 1 or self.n_samples < 2:
            raise FlowConfigError("convergence_window >= 1 and n_samples >= 2 required")
        if self.sampling not in ("geometric", "linear"):
            raise FlowConfigError(f"sampling must be 'geometric' or 'linear', got {self.sampling!r}")

    def to_json(self) -> dict:
        d = asdict(self)
        d["max_step"] = None if math.isinf(self.max_step) else self.max_step
        return d


@dataclass(frozen=True)
class Monitors:
    norm_A_sq: float
    norm_Aplus_sq: float
    norm_comm_sq: float
    f_value: float
    tr_A: float
    tr_JA: float
    decay_bound_rhs: float


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    params: BalancedParams
    monitors: Monitors
    sample: bool = False

    def row(self) -> list[float]:
        return [self.t, *self.params.as_vector(), *astuple_monitors(self.monitors)]

    def to_json(self) -> dict:
        return {"t": self.t, "params": self.params.as_dict(), "monitors": asdict(self.monitors)}


def astuple_monitors(m: Monitors) -> tuple[float, ...]:
    return tuple(getattr(m, name) for name in CSV_COLUMNS[7:])


class FlowStatus(str, enum.Enum):
    COMPLETED = "completed"
    CONVERGED = "converged"
    STEP_UNDERFLOW = "step_underflow"
    BLOW_UP = "blow_up"
    F_SIGN_VIOLATION = "f_sign_violation"

    @property
    def ok(self) -> bool:
        return self in (FlowStatus.COMPLETED, FlowStatus.CONVERGED)


OUTSIDE_HYPOTHESES = "outside-theorem-hypotheses"


@dataclass
class FlowResult:
    points: list[TrajectoryPoint]
    status: FlowStatus
    config: FlowConfig
    tags: list[str] = field(default_factory=list)
    message: str = ""
    solution: OdeSolution | None = None

    @property
    def samples(self) -> list[TrajectoryPoint]:
        return [pt for pt in self.points if pt.sample]

    @property
    def final(self) -> TrajectoryPoint:
        return self.points[-1]

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "tags": list(self.tags),
            "message": self.message,
            "config": self.config.to_json(),
            "points": [pt.to_json() for pt in self.points],
        }


# right-hand side ---------------------------------------------------------------


def slope_f(p: BalancedParams, cfg: FlowConfig) -> float:
    """``f(A) = 1 - (alpha'/4) K(A, tau) |Psi|^{-2}``."""
    return 1.0 - cfg.alpha_prime / 4 * proportionality_K(p, cfg.tau) * cfg.psi_norm_sq_inv


def _matrix_rhs(A: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    parts = matrix_parts(A)
    f = slope_f(params_from_matrix(A), cfg)
    C = parts.comm
    return cfg.psi_norm_sq_inv * f * (2 * (C @ A - A @ C) - parts.sym_norm_sq * A)


def bracket_rhs(p: BalancedParams, cfg: FlowConfig) -> BalancedParams:
    """Tangent ``dA/dt`` expressed in the six balanced parameters."""
    return params_from_matrix(_matrix_rhs(p.matrix(), cfg))


def _vector_rhs(x: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    return bracket_rhs(BalancedParams.from_vector(x), cfg).as_vector()


def monitors(p: BalancedParams, cfg: FlowConfig, t: float, s0: float) -> Monitors:
    A = p.matrix()
    parts = matrix_parts(A)
    return Monitors(
        norm_A_sq=parts.norm_sq,
        norm_Aplus_sq=parts.sym_norm_sq,
        norm_comm_sq=parts.comm_norm_sq,
        f_value=slope_f(p, cfg),
        tr_A=float(np.trace(A)),
        tr_JA=float(np.trace(J_N1 @ A)),
        decay_bound_rhs=s0 / (1 + 0.5 * s0 * t),
    )


def sample_times(cfg: FlowConfig) -> np.ndarray:
    if cfg.t_end == 0:
        return np.array([0.0])
    if cfg.sampling == "linear":
        return np.linspace(0.0, cfg.t_end, cfg.n_samples)
    tail = np.geomspace(cfg.t_end * 1e-4, cfg.t_end, cfg.n_samples - 1)
    return np.concatenate([[0.0], tail])


# integration -----------------------------------------------------------------


def integrate_bracket_flow(
    p0: BalancedParams, cfg: FlowConfig, times: np.ndarray | None = None
) -> FlowResult:
    """Integrate the bracket flow from ``p0`` up to ``cfg.t_end``.

    Points are recorded at every accepted step and at each sample time (dense
    output).  The run stops early once ``|A+| < convergence_eps`` over
    ``convergence_window`` consecutive accepted steps.
    """
    times = sample_times(cfg) if times is None else np.asarray(times, dtype=float)
    x0 = p0.as_vector()
    s0 = matrix_parts(p0.matrix()).sym_norm_sq
    f0 = slope_f(p0, cfg)
    tags = [] if f0 > 0 else [OUTSIDE_HYPOTHESES]

    def point(t, x, sample):
        p = BalancedParams.from_vector(x)
        return TrajectoryPoint(float(t), p, monitors(p, cfg, float(t), s0), sample)

    points = [point(0.0, x0, True)]
    if s0 < cfg.convergence_eps**2:
        return FlowResult(points, FlowStatus.CONVERGED, cfg, tags, "initial data already Kähler")
    if cfg.t_end == 0:
        return FlowResult(points, FlowStatus.COMPLETED, cfg, tags)

    solver = RK45(
        lambda t, x: _vector_rhs(x, cfg),
        0.0,
        x0,
        cfg.t_end,
        max_step=cfg.max_step,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        first_step=cfg.initial_step,
    )
    pending = [t for t in times if t > 0]
    ts, interpolants = [0.0], []
    status, message, streak = FlowStatus.COMPLETED, "", 0

    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            status, message = FlowStatus.STEP_UNDERFLOW, msg or "step size underflow"
            break
        dense = solver.dense_output()
        ts.append(solver.t)
        interpolants.append(dense)
        while pending and pending[0] < solver.t:
            ts_k = pending.pop(0)
            points.append(point(ts_k, dense(ts_k), True))
        on_sample = bool(pending) and pending[0] == solver.t
        if on_sample:
            pending.pop(0)
        current = point(solver.t, solver.y, on_sample)
        points.append(current)
        m = current.monitors
        if not np.all(np.isfinite(solver.y)) or math.sqrt(m.norm_A_sq) > cfg.blowup_ceiling:
            status, message = FlowStatus.BLOW_UP, f"|A| exceeded {cfg.blowup_ceiling:g} at t={solver.t:.6g}"
            break
        if f0 > 0 and m.f_value <= 0:
            status = FlowStatus.F_SIGN_VIOLATION
            message = f"f changed sign from a positive start at t={solver.t:.6g}"
            break
        streak = streak + 1 if m.norm_Aplus_sq < cfg.convergence_eps**2 else 0
        if streak >= cfg.convergence_window:
            status, message = FlowStatus.CONVERGED, f"|A+| < {cfg.convergence_eps:g} at t={solver.t:.6g}"
            break

    solution = OdeSolution(ts, interpolants) if interpolants else None
    return FlowResult(points, status, cfg, tags, message, solution)


# identities along a trajectory ---------------------------------------------------


@dataclass(frozen=True)
class MonitorReport:
    times: np.ndarray
    norm_rel_error: np.ndarray
    f_rel_error: np.ndarray

    @property
    def max_norm_rel_error(self) -> float:
        return float(np.max(self.norm_rel_error, initial=0.0))

    @property
    def max_f_rel_error(self) -> float:
        return float(np.max(self.f_rel_error, initial=0.0))


def norm_sq_derivative(p: BalancedParams, cfg: FlowConfig) -> float:
    """``d|A|^2/dt = 2 |Psi|^{-2} f (-4 |[A+, A-]|^2 - |A+|^2 |A|^2)``."""
    parts = matrix_parts(p.matrix())
    f = slope_f(p, cfg)
    return 2 * cfg.psi_norm_sq_inv * f * (-4 * parts.comm_norm_sq - parts.sym_norm_sq * parts.norm_sq)


def f_derivative(p: BalancedParams, cfg: FlowConfig) -> float:
    """``df/dt = kappa |Psi|^{-2} f (4 |[A+, A-]|^2 + 2 |A+|^4)`` with ``f = 1 - kappa |A+|^2``."""
    parts = matrix_parts(p.matrix())
    kappa = cfg.alpha_prime / 4 * cfg.tau * (cfg.tau - 1) ** 2 / 8 * cfg.psi_norm_sq_inv
    f = 1 - kappa * parts.sym_norm_sq
    return kappa * cfg.psi_norm_sq_inv * f * (4 * parts.comm_norm_sq + 2 * parts.sym_norm_sq**2)


def _slope_deficit(p: BalancedParams, cfg: FlowConfig) -> float:
    return cfg.alpha_prime / 4 * proportionality_K(p, cfg.tau) * cfg.psi_norm_sq_inv


def _relative(fd: np.ndarray, exact: np.ndarray, floor: float) -> np.ndarray:
    return np.abs(fd - exact) / np.maximum(np.maximum(np.abs(exact), np.abs(fd)), floor)


def monitor_identities(result: FlowResult, rel_step: float = 0.03, floor: float = 1e-12) -> MonitorReport:
    """Finite-difference check of the ``|A|^2`` and ``f`` evolution laws.

    Derivatives are taken with a five-point stencil on the dense output at each
    interior sample time; the stencil width is ``rel_step`` times the local
    sample spacing.
    """
    cfg = result.config
    sol = result.solution
    samples = [pt.t for pt in result.samples]
    if sol is None or len(samples) < 3:
        return MonitorReport(np.array([]), np.array([]), np.array([]))
    t_lo, t_hi = sol.ts[0], sol.ts[-1]
    ts, e_norm, e_f = [], [], []
    for left, t, right in zip(samples, samples[1:], samples[2:]):
        h = rel_step * min(t - left, right - t)
        if t - 2 * h < t_lo or t + 2 * h > t_hi or h <= 0:
            continue
        stencil = [BalancedParams.from_vector(sol(t + k * h)) for k in (-2, -1, 1, 2)]
        n2, n1, p1, p2 = (matrix_parts(q.matrix()).norm_sq for q in stencil)
        # differentiate 1 - f directly; f itself loses digits to cancellation when f ~ 1
        f2, f1, g1, g2 = (-_slope_deficit(q, cfg) for q in stencil)
        p = BalancedParams.from_vector(sol(t))
        ts.append(t)
        e_norm.append(((n2 - p2 + 8 * (p1 - n1)) / (12 * h), norm_sq_derivative(p, cfg)))
        e_f.append(((f2 - g2 + 8 * (g1 - f1)) / (12 * h), f_derivative(p, cfg)))
    fd_n, ex_n = np.array(e_norm).T
    fd_f, ex_f = np.array(e_f).T
    return MonitorReport(np.array(ts), _relative(fd_n, ex_n, floor), _relative(fd_f, ex_f, floor))


# reduction certificate ----------------------------------------------------------


@dataclass(frozen=True)
class PMuEndomorphism:
    """Block-diagonal endomorphism over ``R e_1 + n_1 + R e_6``."""

    p: np.ndarray


def p_mu(p: BalancedParams, cfg: FlowConfig) -> PMuEndomorphism:
    parts = matrix_parts(p.matrix())
    scale = cfg.psi_norm_sq_inv * slope_f(p, cfg)
    E = np.zeros((DIM, DIM))
    E[0, 0] = E[5, 5] = parts.sym_norm_sq
    E[1:5, 1:5] = 2 * parts.comm
    return PMuEndomorphism(scale * E)


def pi_action(E: np.ndarray, c: StructureConstants) -> np.ndarray:
    """``pi(E) mu = E mu(., .) - mu(E ., .) - mu(., E .)`` as a tensor ``[k, i, j]``.

    ``mu(e_i, e_j) = sum_k mu[k, i, j] e_k`` with ``mu = -c``.
    """
    mu = -c.c
    return (
        np.einsum("kl,lij->kij", E, mu)
        - np.einsum("klj,li->kij", mu, E)
        - np.einsum("kil,lj->kij", mu, E)
    )


def reduced_bracket_tangent(p: BalancedParams, cfg: FlowConfig) -> tuple[np.ndarray, float]:
    """A-block of ``pi(P_mu) mu`` and the largest entry outside that block."""
    T = pi_action(p_mu(p, cfg).p, structure_constants(p))
    block = T[1:5, 5, 1:5]  # mu(e_6, e_j) components along n_1
    rest = T.copy()
    rest[1:5, 5, 1:5] = 0
    rest[1:5, 1:5, 5] = 0
    return block, float(np.max(np.abs(rest)))


# metric picture --------------------------------------------------------------


def _frame_constants(c: StructureConstants, frame: np.ndarray) -> StructureConstants:
    inv = np.linalg.inv(frame)
    return StructureConstants(np.einsum("kl,lab,ai,bj->kij", inv, c.c, frame, frame))


def metric_K(m: HermitianMetric, c: StructureConstants, tau: float) -> float:
    """Ratio ``K`` with ``tr(Omega ^ Omega) = K i del delbar nu`` for the metric ``m``."""
    cf = _frame_constants(c, unitary_frame(m))
    trace = trace_curvature_wedge(curvature_forms(gauduchon_forms(cf, tau), cf)).coeffs
    dd = np.real(del_delbar(OMEGA, cf).coeffs)
    denom = float(dd @ dd)
    return 0.0 if denom == 0 else float(trace @ dd) / denom


def metric_rhs(m: HermitianMetric, c: StructureConstants, cfg: FlowConfig) -> np.ndarray:
    """``d g/dt`` for ``d nu/dt = |Psi|_nu^{-2} f(|Psi|_nu^{-2} nu) iota_nu(i del delbar nu)``."""
    nu = m.fundamental_form
    psi_inv = 1.0 / psi_norm_sq(m)
    f = 1.0
    if cfg.alpha_prime != 0:
        scaled = HermitianMetric(psi_inv * m.g)
        f = 1.0 - cfg.alpha_prime / 4 * metric_K(scaled, c, cfg.tau)
    beta = lefschetz_solve(del_delbar(nu, c), nu)
    return form_to_metric(psi_inv * f * beta)


@dataclass(frozen=True)
class MetricPoint:
    t: float
    metric: HermitianMetric
    psi_norm_sq: float


@dataclass
class MetricFlowResult:
    points: list[MetricPoint]
    status: FlowStatus
    message: str = ""


def _metric_from_coords(x: np.ndarray) -> HermitianMetric:
    return HermitianMetric(form_to_metric(KForm(2, REAL_11_BASIS @ x)))


def integrate_metric_flow(
    m0: HermitianMetric, c: StructureConstants, cfg: FlowConfig, times: np.ndarray | None = None
) -> MetricFlowResult:
    """Integrate the metric flow with the bracket ``c`` held fixed, sampled at ``times``."""
    times = sample_times(cfg) if times is None else np.asarray(times, dtype=float)
    x0 = REAL_11_BASIS.T @ m0.fundamental_form.coeffs

    def rhs(_t, x):
        dg = metric_rhs(_metric_from_coords(x), c, cfg)
        return REAL_11_BASIS.T @ metric_to_form(dg).coeffs

    def record(t, x):
        m = _metric_from_coords(x)
        return MetricPoint(float(t), m, psi_norm_sq(m))

    points = [record(0.0, x0)]
    if cfg.t_end == 0:
        return MetricFlowResult(points, FlowStatus.COMPLETED)
    solver = RK45(rhs, 0.0, x0, cfg.t_end, max_step=cfg.max_step, rtol=cfg.rel_tol,
                  atol=cfg.abs_tol, first_step=cfg.initial_step)
    pending = [t for t in times if t > 0]
    while solver.status == "running":
        try:
            msg = solver.step()
        except ValueError as exc:  # lost positivity inside a stage
            return MetricFlowResult(points, FlowStatus.BLOW_UP, f"metric left the positive cone: {exc}")
        if solver.status == "failed":
            return MetricFlowResult(points, FlowStatus.STEP_UNDERFLOW, msg or "step size underflow")
        dense = solver.dense_output()
        try:
            while pending and pending[0] <= solver.t:
                t_k = pending.pop(0)
                points.append(record(t_k, dense(t_k)))
            record(solver.t, solver.y)
        except ValueError as exc:
            return MetricFlowResult(points, FlowStatus.BLOW_UP, f"metric left the positive cone: {exc}")
    return MetricFlowResult(points, FlowStatus.COMPLETED)


def max_psi_closure(points: list[TrajectoryPoint]) -> float:
    """Largest ``|d Psi|`` over the recorded states."""
    return max((d_psi_norm(pt.params) for pt in points), default=0.0)


# nilpotent example -------------------------------------------------------------

#: ``d zeta^3 = i zeta^{12} + i zeta^{2 1bar}`` in the unit-normalised coframe.
NILPOTENT_EXAMPLE = BalancedParams(A32=math.sqrt(2))


def example_solution(t) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``(a, c)`` for ``a' = a c^2, c' = -c^3`` from ``a = b = c = 1``; ``b = a``."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(2 * t + 1), 1 / np.sqrt(2 * t + 1)


def example_displayed_a(t) -> np.ndarray:
    """The alternative expression ``exp(sqrt(2t + 1) - 1)`` for ``a_t``; it solves ``a' = a c``."""
    return np.exp(np.sqrt(2 * np.asarray(t, dtype=float) + 1) - 1)


@dataclass(frozen=True)
class ExampleTable:
    t: np.ndarray
    abc: np.ndarray  # integrated (a, b, c) per row
    psi_norm_sq: np.ndarray
    status: FlowStatus

    def deviation(self, a_ref: np.ndarray, c_ref: np.ndarray) -> float:
        ref = np.column_stack([a_ref, a_ref, c_ref])
        return float(np.max(np.abs(self.abc - ref)))

    @property
    def ode_deviation(self) -> float:
        return self.deviation(*example_solution(self.t))

    @property
    def displayed_deviation(self) -> float:
        return self.deviation(example_displayed_a(self.t), example_solution(self.t)[1])

    @property
    def psi_deviation(self) -> float:
        a, b, c = self.abc.T
        return float(np.max(np.abs(self.psi_norm_sq - 1 / (a * b * c))))


def run_example(t_end: float = 10.0, n_points: int = 101, rel_tol: float = 1e-11, abs_tol: float = 1e-13) -> ExampleTable:
    """Metric flow on the nilpotent example from the standard metric, sampled uniformly."""
    cfg = FlowConfig(alpha_prime=0.0, t_end=t_end, rel_tol=rel_tol, abs_tol=abs_tol)
    times = np.linspace(0.0, t_end, n_points)
    res = integrate_metric_flow(
        HermitianMetric.identity(), structure_constants(NILPOTENT_EXAMPLE), cfg, times
    )
    abc = np.array([[pt.metric.g[0, 0], pt.metric.g[1, 1], pt.metric.g[2, 2]] for pt in res.points])
    psi = np.array([pt.psi_norm_sq for pt in res.points])
    return ExampleTable(np.array([pt.t for pt in res.points]), abc, psi, res.status)


# output ----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(points: list[TrajectoryPoint], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for pt in points:
        writer.writerow([_fmt(v) for v in pt.row()])


def write_json(result: FlowResult, fh) -> None:
    json.dump(result.to_json(), fh, indent=2)
    fh.write("\n")
