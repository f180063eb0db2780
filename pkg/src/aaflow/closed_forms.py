"""Closed-form connection, curvature and trace expressions for balanced parameters.

These are hand-expanded polynomial expressions in the six free entries of ``A``,
kept independent of the generic structure-constant route in
:mod:`aaflow.connections` so the two can be checked against each other.
Arrays follow the same layout: ``[i, j]`` (0-based) is the form with upper
index ``i + 1`` and lower index ``j + 1``.
"""

from __future__ import annotations

import numpy as np

from .algebra import BalancedParams
from .connections import ConnectionForms, CurvatureForms
from .exterior import DIM, KForm

# Upper/lower pairs fixed by sign relations from a listed entry:
# target (upper, lower) -> (source (upper, lower), sign).
_SIGMA_RELATIONS = {
    (5, 6): ((1, 2), -1),
    (4, 6): ((1, 3), -1),
    (3, 6): ((1, 4), +1),
    (2, 6): ((1, 5), +1),
    (4, 5): ((2, 3), -1),
    (3, 5): ((2, 4), +1),
    (2, 5): ((3, 4), -1),
}
# Lambda and Omega share the same pattern on 2-forms.
_CURVATURE_RELATIONS = {
    (5, 6): ((1, 2), -1),
    (4, 6): ((1, 3), -1),
    (3, 6): ((1, 4), +1),
    (2, 6): ((1, 5), +1),
    (4, 5): ((2, 3), -1),
    (3, 5): ((2, 4), +1),
}


def _brackets(p: BalancedParams) -> dict[str, float]:
    A22, A23, A24, A25, A32, A35 = p.as_vector()
    return dict(
        A22=A22,
        S=4 * A22**2 + (A23 + A32) ** 2 + (A24 - A35) ** 2,
        P=2 * A22 * A25 + A23 * A35 + A24 * A32,
        Q=A22 * (A24 + A35) - A25 * (A23 + A32),
        R=A22 * (A23 - A32) + A25 * (A24 - A35),
        U=2 * A22**2 + A32**2 + A35**2 + A23 * A32 - A24 * A35,
        V=2 * A22**2 + A23**2 + A24**2 + A23 * A32 - A24 * A35,
        W=A23**2 - A32**2 + A24**2 - A35**2,
        plus=A23 + A32,
        minus=A24 - A35,
        sum2=A24 + A35,
        diff3=A23 - A32,
        A23=A23,
        A24=A24,
        A25=A25,
        A32=A32,
        A35=A35,
    )


def _assemble(entries: dict, relations: dict, degree: int) -> np.ndarray:
    size = KForm.zero(degree).coeffs.size
    out = np.zeros((DIM, DIM, size))
    for (i, j), terms in entries.items():
        out[i - 1, j - 1] = KForm.from_dict(degree, terms).coeffs
    for (i, j), ((si, sj), sign) in relations.items():
        out[i - 1, j - 1] = sign * out[si - 1, sj - 1]
    for i in range(DIM):
        for j in range(i):
            out[i, j] = -out[j, i]
    return out


def closed_form_sigma(p: BalancedParams, tau: float) -> ConnectionForms:
    b = _brackets(p)
    t = tau
    A22, A25 = b["A22"], b["A25"]
    entries = {
        (1, 2): {(3,): (t - 1) / 4 * b["minus"], (4,): -(t - 1) / 4 * b["plus"], (5,): -(t - 1) / 2 * A22},
        (1, 3): {(2,): -(t - 1) / 4 * b["minus"], (4,): (t - 1) / 2 * A22, (5,): -(t - 1) / 4 * b["plus"]},
        (2, 3): {(1,): t / 2 * b["minus"], (6,): 0.5 * b["diff3"]},
        (1, 4): {(2,): (t - 1) / 4 * b["plus"], (3,): -(t - 1) / 2 * A22, (5,): -(t - 1) / 4 * b["minus"]},
        (2, 4): {(1,): -t / 2 * b["plus"], (6,): 0.5 * b["sum2"]},
        (3, 4): {(1,): t * A22, (6,): -A25},
        (1, 5): {(2,): (t - 1) / 2 * A22, (3,): (t - 1) / 4 * b["plus"], (4,): (t - 1) / 4 * b["minus"]},
        (1, 6): {},
    }
    return ConnectionForms(_assemble(entries, _SIGMA_RELATIONS, 1), float(tau))


def _dsigma_entries(b, t):
    k = (t - 1) / 4
    P, Q, R, U, V = b["P"], b["Q"], b["R"], b["U"], b["V"]
    return {
        (1, 2): {(2, 6): k * P, (3, 6): k * Q, (4, 6): -k * R, (5, 6): -k * U},
        (1, 3): {(2, 6): -k * Q, (3, 6): k * P, (4, 6): -k * V, (5, 6): -k * R},
        (1, 4): {(2, 6): k * R, (3, 6): k * V, (4, 6): k * P, (5, 6): -k * Q},
        (1, 5): {(2, 6): k * U, (3, 6): k * R, (4, 6): k * Q, (5, 6): k * P},
    }


def _lambda_entries(b, t):
    k4, k8 = (t - 1) / 4, (t - 1) / 8
    m = (t - 1) ** 2
    S, P, Q, R, W = b["S"], b["P"], b["Q"], b["R"], b["W"]
    A22, plus, minus = b["A22"], b["plus"], b["minus"]
    lead = -t * (t - 1) / 8 * S
    c23 = m / 16 * (4 * A22**2 + plus**2 - minus**2)
    c24 = m / 16 * (4 * A22**2 - plus**2 + minus**2)
    cross = m / 8 * plus * minus
    return {
        (1, 2): {(1, 2): lead, (2, 6): -k4 * P, (3, 6): k4 * Q, (4, 6): -k4 * R, (5, 6): k8 * W},
        (1, 3): {(1, 3): lead, (2, 6): -k4 * Q, (3, 6): -k4 * P, (4, 6): -k8 * W, (5, 6): -k4 * R},
        (2, 3): {
            (1, 6): t * Q,
            (2, 3): c23, (4, 5): -c23,
            (2, 4): cross, (3, 5): cross,
            (2, 5): m / 4 * A22 * minus, (3, 4): -m / 4 * A22 * minus,
        },
        (1, 4): {(1, 4): lead, (2, 6): k4 * R, (3, 6): k8 * W, (4, 6): -k4 * P, (5, 6): -k4 * Q},
        (2, 4): {
            (1, 6): -t * R,
            (2, 3): cross, (4, 5): -cross,
            (2, 4): c24, (3, 5): c24,
            (2, 5): -m / 4 * A22 * plus, (3, 4): m / 4 * A22 * plus,
        },
        (3, 4): {
            (1, 6): -t / 2 * W,
            (2, 3): -m / 4 * A22 * minus, (4, 5): m / 4 * A22 * minus,
            (2, 4): m / 4 * A22 * plus, (3, 5): m / 4 * A22 * plus,
            (2, 5): -m / 8 * (plus**2 + minus**2), (3, 4): -m / 2 * A22**2,
        },
        (1, 5): {(1, 5): lead, (2, 6): -k8 * W, (3, 6): k4 * R, (4, 6): k4 * Q, (5, 6): -k4 * P},
        (2, 5): {
            (1, 6): t / 2 * W,
            (2, 3): m / 4 * A22 * minus, (4, 5): -m / 4 * A22 * minus,
            (2, 4): -m / 4 * A22 * plus, (3, 5): -m / 4 * A22 * plus,
            (2, 5): -m / 2 * A22**2, (3, 4): -m / 8 * (plus**2 + minus**2),
        },
        (1, 6): {(2, 5): m / 8 * S, (3, 4): m / 8 * S},
    }


def closed_form_dsigma_lambda(p: BalancedParams, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """``d sigma`` and ``Lambda = sigma ^ sigma`` as (6, 6, 15) arrays."""
    b = _brackets(p)
    dsig = _assemble(_dsigma_entries(b, tau), _SIGMA_RELATIONS_D, 2)
    lam = _assemble(_lambda_entries(b, tau), _CURVATURE_RELATIONS, 2)
    return dsig, lam


# d sigma of the n_1-block entries vanishes (they lie in span(e^1, e^6)).
_SIGMA_RELATIONS_D = {k: v for k, v in _SIGMA_RELATIONS.items() if v[0][0] == 1}


def closed_form_curvature(p: BalancedParams, tau: float) -> CurvatureForms:
    b = _brackets(p)
    t = tau
    k2, k8 = (t - 1) / 2, (t - 1) / 8
    S, Q, R = b["S"], b["Q"], b["R"]
    A22, A23, A24, A32, A35 = b["A22"], b["A23"], b["A24"], b["A32"], b["A35"]
    plus, minus, sum2, diff3 = b["plus"], b["minus"], b["sum2"], b["diff3"]
    m = (t - 1) ** 2
    lead = -t * (t - 1) / 8 * S
    n_a = 4 * (A22**2 + A32**2 + A35**2) - diff3**2 - sum2**2
    n_b = 4 * (A22**2 + A23**2 + A24**2) - diff3**2 - sum2**2
    lam = _lambda_entries(b, t)
    entries = {
        (1, 2): {(1, 2): lead, (3, 6): k2 * Q, (4, 6): -k2 * R, (5, 6): -k8 * n_a},
        (1, 3): {(1, 3): lead, (2, 6): -k2 * Q, (4, 6): -k8 * n_b, (5, 6): -k2 * R},
        (1, 4): {(1, 4): lead, (5, 6): -k2 * Q, (2, 6): k2 * R, (3, 6): k8 * n_b},
        (1, 5): {(1, 5): lead, (4, 6): k2 * Q, (3, 6): k2 * R, (2, 6): k8 * n_a},
        (1, 6): {(2, 5): m / 8 * S, (3, 4): m / 8 * S},
        (2, 3): {
            (1, 6): t * Q,
            (2, 3): m / 16 * (4 * A22**2 + plus**2 - minus**2),
            (4, 5): -m / 16 * (4 * A22**2 + plus**2 - minus**2),
            (2, 4): m / 8 * plus * minus, (3, 5): m / 8 * plus * minus,
            (2, 5): m / 4 * A22 * minus, (3, 4): -m / 4 * A22 * minus,
        },
        (2, 4): {
            (1, 6): -t * R,
            (2, 4): m / 16 * (4 * A22**2 - plus**2 + minus**2),
            (3, 5): m / 16 * (4 * A22**2 - plus**2 + minus**2),
            (2, 3): m / 8 * plus * minus, (4, 5): -m / 8 * plus * minus,
            (2, 5): -m / 4 * A22 * plus, (3, 4): m / 4 * A22 * plus,
        },
        (3, 4): lam[(3, 4)],
        (2, 5): lam[(2, 5)],
    }
    return CurvatureForms(_assemble(entries, _CURVATURE_RELATIONS, 2))


def closed_form_trace(p: BalancedParams, tau: float) -> KForm:
    """``tr(Omega ^ Omega)``; lies in span{e^{1rs6}} and carries the factor ``tau (tau-1)^2``."""
    b = _brackets(p)
    f = tau * (tau - 1) ** 2 / 4 * b["S"]
    return KForm.from_dict(
        4,
        {
            (1, 2, 3, 6): -f * b["Q"],
            (1, 4, 5, 6): f * b["Q"],
            (1, 2, 4, 6): f * b["R"],
            (1, 3, 5, 6): f * b["R"],
            (1, 2, 5, 6): f * b["U"],
            (1, 3, 4, 6): f * b["V"],
        },
    )


def closed_form_ddbar_omega(p: BalancedParams) -> KForm:
    """``i del delbar omega`` expanded in the same brackets."""
    b = _brackets(p)
    return KForm.from_dict(
        4,
        {
            (1, 2, 3, 6): -2 * b["Q"],
            (1, 4, 5, 6): 2 * b["Q"],
            (1, 2, 4, 6): 2 * b["R"],
            (1, 3, 5, 6): 2 * b["R"],
            (1, 2, 5, 6): 2 * b["U"],
            (1, 3, 4, 6): 2 * b["V"],
        },
    )
