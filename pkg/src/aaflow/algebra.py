"""Almost-abelian Lie algebras with a fixed Hermitian structure.

The algebra has frame ``e_1..e_6`` with abelian ideal spanned by ``e_1..e_5``
and bracket encoded by ``ad(e_6)``::

    ad(e_6) = [[a, 0, 0],
               [v, A, 0],
               [0, 0, 0]]

in the splitting ``R e_1 + n_1 + R e_6`` with ``n_1 = span(e_2..e_5)``.
Index convention: ``ad(e_6) e_j = sum_i A[i, j] e_i``, so row ``i`` of ``A`` holds
the coefficients of ``e^{j6}`` in ``de^i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exterior import (
    DIM,
    J_VECTORS,
    OMEGA,
    KForm,
    StructureConstants,
    basis,
    exterior_derivative,
    wedge,
)

STRUCT_TOL = 1e-12
ORACLE_TOL = 1e-10

#: J restricted to n_1 in the basis e_2..e_5 (dual to J e^2 = e^5, J e^3 = e^4).
J_N1 = np.array(J_VECTORS[1:5, 1:5])
J_N1.setflags(write=False)

PARAM_NAMES = ("A22", "A23", "A24", "A25", "A32", "A35")


class StructureError(ValueError):
    """An input structure violates one of the algebra invariants."""


@dataclass(frozen=True, eq=False)
class AlmostAbelianStructure:
    a: float
    v: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(-1)
        A = np.array(self.A, dtype=float)
        if v.shape != (4,):
            raise StructureError(f"v must have 4 entries, got {v.shape}")
        if A.shape != (4, 4):
            raise StructureError(f"A must be 4x4, got {A.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(v)) and math.isfinite(self.a)):
            raise StructureError("structure entries must be finite")
        v.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "A", A)

    @property
    def commutator_residual(self) -> float:
        return float(np.max(np.abs(self.A @ J_N1 - J_N1 @ self.A)))

    @property
    def is_integrable(self) -> bool:
        return self.commutator_residual <= STRUCT_TOL * max(1.0, float(np.max(np.abs(self.A))))

    def ad_e6(self) -> np.ndarray:
        ad = np.zeros((DIM, DIM))
        ad[0, 0] = self.a
        ad[1:5, 0] = self.v
        ad[1:5, 1:5] = self.A
        return ad


@dataclass(frozen=True)
class BalancedParams:
    """The six free entries of a balanced structure with closed (3,0)-form."""

    A22: float = 0.0
    A23: float = 0.0
    A24: float = 0.0
    A25: float = 0.0
    A32: float = 0.0
    A35: float = 0.0

    @classmethod
    def from_vector(cls, x) -> BalancedParams:
        return cls(*map(float, x))

    def as_vector(self) -> np.ndarray:
        return np.array([self.A22, self.A23, self.A24, self.A25, self.A32, self.A35])

    def matrix(self) -> np.ndarray:
        return balanced_matrix(self.as_vector())

    def structure(self) -> AlmostAbelianStructure:
        return AlmostAbelianStructure(0.0, np.zeros(4), self.matrix())

    def as_dict(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES, map(float, self.as_vector())))


def balanced_matrix(x) -> np.ndarray:
    A22, A23, A24, A25, A32, A35 = x
    return np.array(
        [
            [A22, A23, A24, A25],
            [A32, -A22, -A25, A35],
            [-A35, A25, -A22, A32],
            [-A25, -A24, A23, A22],
        ],
        dtype=float,
    )


def params_from_matrix(A: np.ndarray) -> BalancedParams:
    """Read the six free entries back from a balanced matrix; raises if ``A`` is not of that form."""
    A = np.asarray(A, dtype=float)
    p = BalancedParams(A[0, 0], A[0, 1], A[0, 2], A[0, 3], A[1, 0], A[1, 3])
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(p.matrix() - A)) > STRUCT_TOL * scale:
        raise StructureError("matrix is not of the balanced form (tr A = tr JA = 0, [A, J] = 0)")
    return p


def random_params(rng: np.random.Generator, scale: float = 1.0) -> BalancedParams:
    return BalancedParams.from_vector(rng.uniform(-scale, scale, size=6))


# structure constants ---------------------------------------------------------


def structure_constants(s: AlmostAbelianStructure | BalancedParams) -> StructureConstants:
    if isinstance(s, BalancedParams):
        s = s.structure()
    if not s.is_integrable:
        raise StructureError(
            f"J is not integrable: [A, J|n1] has max entry {s.commutator_residual:.3e}"
        )
    ad = s.ad_e6()
    c = np.zeros((DIM, DIM, DIM))
    c[:, :, 5] = ad
    c[:, 5, :] = -ad
    return StructureConstants(c)


def jacobi_residual(c: StructureConstants) -> float:
    """Max-norm of the cyclic Jacobi sum over all frame triples."""
    C = c.c
    # [e_i, e_j] = -c^k_ij e_k ; [[e_i, e_j], e_l] = c^k_ij c^m_kl e_m
    jac = np.einsum("kij,mkl->ijlm", C, C)
    cyc = jac + np.transpose(jac, (1, 2, 0, 3)) + np.transpose(jac, (2, 0, 1, 3))
    return float(np.max(np.abs(cyc)))


# predicates ------------------------------------------------------------------

PSI = wedge(
    wedge(KForm(1, [1, 0, 0, 0, 0, 1j]), KForm(1, [0, 1, 0, 0, 1j, 0])),
    KForm(1, [0, 0, 1, 1j, 0, 0]),
)
"""``(e^1 + i e^6) ^ (e^2 + i e^5) ^ (e^3 + i e^4)``."""


def _as_structure(s) -> AlmostAbelianStructure:
    return s.structure() if isinstance(s, BalancedParams) else s


def canonical_trivial_check(s) -> bool:
    """True iff a left-invariant closed (3,0)-form exists: tr A = -2a and tr JA = 0."""
    s = _as_structure(s)
    return bool(
        abs(np.trace(s.A) + 2 * s.a) <= STRUCT_TOL
        and abs(np.trace(J_N1 @ s.A)) <= STRUCT_TOL
    )


def d_psi_norm(s) -> float:
    return exterior_derivative(PSI, structure_constants(_as_structure(s))).norm()


def balanced_check(s) -> bool:
    s = _as_structure(s)
    return bool(abs(np.trace(s.A)) <= STRUCT_TOL and float(np.max(np.abs(s.v))) <= STRUCT_TOL)


def codifferential_omega(s) -> np.ndarray:
    """``d*omega(e_k)`` for k = 1..6 via ``tr ad_{JX} + 1/2 sum_i omega(ad_{Je_i} e_i, JX)``."""
    s = _as_structure(s)
    c = structure_constants(s)
    J = J_VECTORS
    eye = np.eye(DIM)
    om = _omega_matrix()

    def ad(x):
        return np.stack([c.bracket(x, eye[j]) for j in range(DIM)], axis=1)

    out = np.zeros(DIM)
    for k in range(DIM):
        JX = J @ eye[k]
        val = np.trace(ad(JX))
        for i in range(DIM):
            val += 0.5 * (c.bracket(J @ eye[i], eye[i]) @ om @ JX)
        out[k] = val
    return out


def _omega_matrix() -> np.ndarray:
    m = np.zeros((DIM, DIM))
    for (i, j), val in OMEGA.terms().items():
        m[i - 1, j - 1] = val
        m[j - 1, i - 1] = -val
    return m


def kahler_check(p: BalancedParams) -> bool:
    return bool(
        abs(p.A22) <= STRUCT_TOL
        and abs(p.A23 + p.A32) <= STRUCT_TOL
        and abs(p.A24 - p.A35) <= STRUCT_TOL
    )


def d_omega(s) -> KForm:
    return exterior_derivative(OMEGA, structure_constants(_as_structure(s)))


# metrics ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HermitianMetric:
    """J-compatible inner product on the frame; ``g[i, j] = <e_i, e_j>``."""

    g: np.ndarray
    fundamental_form: KForm = field(init=False, repr=False)

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.shape != (DIM, DIM):
            raise StructureError(f"metric must be 6x6, got {g.shape}")
        scale = max(1.0, float(np.max(np.abs(g))))
        if np.max(np.abs(g - g.T)) > STRUCT_TOL * scale:
            raise StructureError("metric is not symmetric")
        if np.max(np.abs(J_VECTORS.T @ g @ J_VECTORS - g)) > STRUCT_TOL * scale:
            raise StructureError("metric is not J-compatible: g(J., J.) != g")
        if np.min(np.linalg.eigvalsh(g)) <= 0:
            raise StructureError("metric is not positive definite")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "fundamental_form", metric_to_form(g))

    @classmethod
    def identity(cls) -> HermitianMetric:
        return cls(np.eye(DIM))

    @classmethod
    def from_form(cls, nu: KForm) -> HermitianMetric:
        return cls(form_to_metric(nu))

    @classmethod
    def diagonal(cls, a: float, b: float, c: float) -> HermitianMetric:
        """``a`` on span(e_1, e_6), ``b`` on span(e_2, e_5), ``c`` on span(e_3, e_4)."""
        return cls(np.diag([a, b, c, c, b, a]))

    def hermitian_matrix(self) -> np.ndarray:
        """``h[k, l]`` with ``nu = i sum h_{k lbar} zeta^k ^ conj(zeta^l)``, ``zeta^k = (e^k + i e^{7-k})/sqrt 2``."""
        # Z_k = (e_k - i e_{7-k}) / sqrt 2 is dual to zeta^k; nu(Z_k, conj Z_l) = i h_{k lbar}
        Z = np.zeros((DIM, 3), dtype=complex)
        for k in range(3):
            Z[k, k] = 1 / math.sqrt(2)
            Z[DIM - 1 - k, k] = -1j / math.sqrt(2)
        nu = self.g @ J_VECTORS
        return -1j * (Z.T @ nu @ Z.conj())


def metric_to_form(g: np.ndarray) -> KForm:
    """Fundamental form ``nu(X, Y) = g(X, J Y)``; the identity gives ``omega``."""
    m = g @ J_VECTORS
    return KForm(2, np.array([m[i, j] for i, j in basis(2)]))


def form_to_metric(nu: KForm) -> np.ndarray:
    m = np.zeros((DIM, DIM))
    for (i, j), val in zip(basis(2), np.real(nu.coeffs)):
        m[i, j] = val
        m[j, i] = -val
    return -m @ J_VECTORS


def psi_norm_sq(m: HermitianMetric, k: complex = 1.0) -> float:
    """``|k|^2 / det h`` for ``Psi = k zeta^1 ^ zeta^2 ^ zeta^3`` (unitary-normalised zeta)."""
    return float(abs(k) ** 2 / np.real(np.linalg.det(m.hermitian_matrix())))


def unitary_frame(m: HermitianMetric) -> np.ndarray:
    """Columns form a g-orthonormal frame ``f_1..f_6`` with ``J f_i = -f_{7-i}`` (i = 1, 2, 3).

    The frame is triangular with respect to the pairs (e_1, e_6), (e_2, e_5), (e_3, e_4)
    so the identity metric returns the identity frame.
    """
    g = m.g
    J = J_VECTORS
    eye = np.eye(DIM)
    frame = np.zeros((DIM, DIM))
    chosen: list[np.ndarray] = []
    for k in range(3):
        x = eye[:, k].copy()
        for y in chosen:
            x -= (y @ g @ x) * y
        x /= math.sqrt(x @ g @ x)
        Jx = -J @ x
        frame[:, k] = x
        frame[:, DIM - 1 - k] = Jx
        chosen.extend([x, Jx])
    return frame


# matrix algebra --------------------------------------------------------------


@dataclass(frozen=True)
class MatrixParts:
    sym: np.ndarray
    skew: np.ndarray
    comm: np.ndarray
    norm_sq: float
    sym_norm_sq: float
    comm_norm_sq: float


def matrix_parts(A: np.ndarray) -> MatrixParts:
    """``A+``, ``A-``, ``[A+, A-]`` and their squared Frobenius norms."""
    A = np.asarray(A, dtype=float)
    sym = 0.5 * (A + A.T)
    skew = 0.5 * (A - A.T)
    comm = sym @ skew - skew @ sym
    return MatrixParts(
        sym, skew, comm, float(np.sum(A * A)), float(np.sum(sym * sym)), float(np.sum(comm * comm))
    )


def sym_norm_sq(p: BalancedParams) -> float:
    """``|A+|^2 = 4 A22^2 + (A23 + A32)^2 + (A24 - A35)^2``."""
    return 4 * p.A22**2 + (p.A23 + p.A32) ** 2 + (p.A24 - p.A35) ** 2


# JSON input ------------------------------------------------------------------


def structure_from_json(data) -> AlmostAbelianStructure | BalancedParams:
    """Validate a decoded JSON structure.

    Accepts ``{"a": x, "v": [4], "A": [[4x4]]}`` or ``{"balanced_params": {...}}``.
    """
    if not isinstance(data, dict):
        raise StructureError("input must be a JSON object")
    if "balanced_params" in data:
        extra = set(data) - {"balanced_params"}
        if extra:
            raise StructureError(f"unexpected keys alongside balanced_params: {sorted(extra)}")
        bp = data["balanced_params"]
        if not isinstance(bp, dict):
            raise StructureError("balanced_params must be an object")
        unknown = set(bp) - set(PARAM_NAMES)
        if unknown:
            raise StructureError(f"balanced_params: unknown fields {sorted(unknown)}")
        missing = [n for n in PARAM_NAMES if n not in bp]
        if missing:
            raise StructureError(f"balanced_params: missing fields {missing}")
        vals = []
        for n in PARAM_NAMES:
            if not _is_number(bp[n]):
                raise StructureError(f"balanced_params.{n} must be a finite number")
            vals.append(float(bp[n]))
        return BalancedParams(*vals)

    missing = [k for k in ("a", "v", "A") if k not in data]
    if missing:
        raise StructureError(f"missing fields {missing} (or give balanced_params)")
    extra = set(data) - {"a", "v", "A"}
    if extra:
        raise StructureError(f"unexpected keys: {sorted(extra)}")
    if not _is_number(data["a"]):
        raise StructureError("a must be a finite number")
    v = data["v"]
    if not (isinstance(v, list) and len(v) == 4 and all(_is_number(x) for x in v)):
        raise StructureError("v must be a list of 4 finite numbers")
    A = data["A"]
    if not (
        isinstance(A, list)
        and len(A) == 4
        and all(isinstance(r, list) and len(r) == 4 and all(_is_number(x) for x in r) for r in A)
    ):
        raise StructureError("A must be a 4x4 list of finite numbers")
    s = AlmostAbelianStructure(float(data["a"]), np.array(v, float), np.array(A, float))
    if not s.is_integrable:
        raise StructureError(
            f"integrability violated: [A, J|n1] = 0 fails (max entry {s.commutator_residual:.3e})"
        )
    return s


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)
