"""Hull–Strominger system with a flat gauge bundle on balanced almost-abelian structures.

With ``F = 0`` the system reduces to the anomaly cancellation equation

    i del delbar omega = (alpha' / 4) tr(Omega ^ Omega)

together with the conformally balanced condition ``d(|Psi| omega^2) = 0``.  The
Hermitian–Yang–Mills block holds trivially for a flat bundle and is reported as
satisfied without being evaluated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlmostAbelianStructure,
    BalancedParams,
    HermitianMetric,
    kahler_check,
    psi_norm_sq,
    structure_constants,
    sym_norm_sq,
)
from .connections import (
    InstantonStatus,
    curvature_trace,
    ddbar_omega,
    instanton_check,
    proportionality_K,
)
from .exterior import OMEGA, KForm, exterior_derivative, wedge

#: ``|1 - (alpha'/4) K|`` below this is treated as an exact solution.
SLOPE_TOL = 1e-12
RESIDUAL_TOL = 1e-10
#: Below ``|A+|^2 / max|A_ij|^2`` of this the instanton residual (of order ``|A+|^2``)
#: is not resolvable against rounding, so no contradiction is claimed there.
INSTANTON_RESOLUTION = 1e-6


class Classification(str, enum.Enum):
    KAHLER_ANY_SLOPE = "KahlerAnySlope"
    SOLVABLE_WITH_SLOPE = "SolvableWithSlope"
    UNSOLVABLE = "Unsolvable"


class UnsolvableReason(str, enum.Enum):
    CHERN_OR_LICHNEROWICZ = "ChernOrLichnerowicz"
    ZERO_CURVATURE_TRACE = "ZeroCurvatureTrace"


@dataclass(frozen=True)
class HSReport:
    params: BalancedParams
    tau: float
    K: float
    classification: Classification
    alpha_prime: float | None
    reason: UnsolvableReason | None
    anomaly_residual_norm: float
    conformally_balanced_residual_norm: float
    instanton_status: InstantonStatus
    hym_satisfied: bool = True

    @property
    def is_solution(self) -> bool:
        return self.classification is not Classification.UNSOLVABLE

    def to_json(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "tau": self.tau,
            "K": self.K,
            "classification": self.classification.value,
            "alpha_prime": self.alpha_prime,
            "reason": None if self.reason is None else self.reason.value,
            "anomaly_residual_norm": self.anomaly_residual_norm,
            "conformally_balanced_residual_norm": self.conformally_balanced_residual_norm,
            "instanton_status": self.instanton_status.value,
            "hym_satisfied": self.hym_satisfied,
        }


def anomaly_residual(p: BalancedParams, tau: float, alpha_prime: float) -> KForm:
    """``i del delbar omega - (alpha'/4) tr(Omega^tau ^ Omega^tau)``."""
    return ddbar_omega(p) - (alpha_prime / 4) * curvature_trace(p, tau)


def conformally_balanced_residual(s: BalancedParams | AlmostAbelianStructure) -> float:
    """Max-norm of ``d(|Psi| omega^2)`` for the reference metric.

    ``|Psi|`` is constant on left-invariant data, so this is ``|Psi|`` times the
    norm of ``d(omega^2)``.
    """
    c = structure_constants(s)
    psi_norm = math.sqrt(psi_norm_sq(HermitianMetric.identity()))
    return psi_norm * exterior_derivative(wedge(OMEGA, OMEGA), c).norm()


def _is_named_degenerate(tau: float) -> bool:
    return tau == 0.0 or tau == 1.0


def classify(p: BalancedParams, tau: float, alpha_prime: float | None = None) -> HSReport:
    """Decide solvability of the flat-bundle system for ``(p, tau)``.

    Kähler parameters solve it for every slope.  Otherwise the trace is a
    multiple ``K`` of ``i del delbar omega`` and a solution exists exactly for
    ``alpha' = 4 / K``, which requires ``K != 0``.  ``alpha_prime`` only affects
    the reported residual for the Kähler and unsolvable cases; defaults to 1.
    """
    tau = float(tau)
    K = proportionality_K(p, tau)
    kahler = kahler_check(p)
    reason = None
    if kahler:
        cls, slope = Classification.KAHLER_ANY_SLOPE, alpha_prime
        probe = 1.0 if alpha_prime is None else alpha_prime
    elif K == 0.0 or _is_named_degenerate(tau):
        cls, slope = Classification.UNSOLVABLE, None
        reason = (
            UnsolvableReason.CHERN_OR_LICHNEROWICZ
            if _is_named_degenerate(tau)
            else UnsolvableReason.ZERO_CURVATURE_TRACE
        )
        probe = 1.0 if alpha_prime is None else alpha_prime
    else:
        slope = 4.0 / K
        cls, probe = Classification.SOLVABLE_WITH_SLOPE, slope
        if abs(1 - slope / 4 * K) >= SLOPE_TOL:
            raise ArithmeticError(f"slope 4/K = {slope!r} does not cancel K = {K!r}")

    residual = anomaly_residual(p, tau, probe)
    res_norm = residual.norm()
    if cls is not Classification.UNSOLVABLE:
        # rounding in the trace is amplified by alpha'/4
        scale = max(1.0, float(np.max(np.abs(p.as_vector()))) ** 2) * max(1.0, abs(probe))
        if res_norm > RESIDUAL_TOL * scale:
            raise ArithmeticError(f"anomaly residual {res_norm:.3e} for a claimed solution")

    status = instanton_check(p, tau)
    if cls is not Classification.UNSOLVABLE and status is not InstantonStatus.NOT_INSTANTON:
        if not kahler and sym_norm_sq(p) > INSTANTON_RESOLUTION * float(np.max(np.abs(p.as_vector()))) ** 2:
            raise ArithmeticError("instanton solution found with a non-Kähler metric")

    return HSReport(
        params=p,
        tau=tau,
        K=K,
        classification=cls,
        alpha_prime=slope,
        reason=reason,
        anomaly_residual_norm=res_norm,
        conformally_balanced_residual_norm=conformally_balanced_residual(p),
        instanton_status=status,
    )


__all__ = [
    "INSTANTON_RESOLUTION",
    "Classification",
    "HSReport",
    "UnsolvableReason",
    "anomaly_residual",
    "classify",
    "conformally_balanced_residual",
]
