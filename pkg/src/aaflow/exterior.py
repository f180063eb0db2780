"""Exterior calculus on a fixed 6-dimensional Lie algebra.

Forms are stored densely: a k-form is a vector of ``binomial(6, k)`` coefficients
on the basis ``e^I`` with ``I`` running over strictly increasing multi-indices in
lexicographic order.  Indices are 0-based internally, so ``e^{16}`` is the
multi-index ``(0, 5)``.

The complex structure acts on the coframe by ``J e^i = e^{7-i}`` and
``J e^{7-i} = -e^i`` (i = 1, 2, 3) and on r-forms argument-wise,
``(J a)(X_1, ..., X_r) = a(J X_1, ..., J X_r)``, which forces ``J e_i = -e_{7-i}``
on vectors.  The (1,0)-forms are spanned by ``e^k + i e^{7-k}``, so a form of
bidegree (p, q) is a J-eigenform with eigenvalue ``i**(q - p)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

DIM = 6


class FormError(ValueError):
    """Raised on an invalid exterior-algebra operation."""


@lru_cache(maxsize=None)
def basis(k: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing multi-indices of length ``k`` in lexicographic order."""
    return tuple(itertools.combinations(range(DIM), k))


@lru_cache(maxsize=None)
def _position(k: int) -> dict[tuple[int, ...], int]:
    return {idx: n for n, idx in enumerate(basis(k))}


def _sort_sign(idx: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``idx`` (0 when an index repeats)."""
    if len(set(idx)) < len(idx):
        return 0, ()
    inversions = sum(1 for a, b in itertools.combinations(idx, 2) if a > b)
    return (-1) ** inversions, tuple(sorted(idx))


@lru_cache(maxsize=None)
def _wedge_table(p: int, q: int) -> np.ndarray:
    table = np.zeros((comb(DIM, p), comb(DIM, q), comb(DIM, p + q)))
    pos = _position(p + q)
    for a, I in enumerate(basis(p)):
        for b, K in enumerate(basis(q)):
            sign, merged = _sort_sign(I + K)
            if sign:
                table[a, b, pos[merged]] = sign
    table.setflags(write=False)
    return table


@dataclass(frozen=True, eq=False)
class KForm:
    """A (real or complex) exterior form on the fixed 6-dimensional frame."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.degree <= DIM:
            raise FormError(f"degree must lie in 0..{DIM}, got {self.degree}")
        c = np.asarray(self.coeffs)
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        if c.shape != (comb(DIM, self.degree),):
            raise FormError(
                f"a {self.degree}-form needs {comb(DIM, self.degree)} coefficients, got shape {c.shape}"
            )
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, degree: int, dtype=float) -> KForm:
        return cls(degree, np.zeros(comb(DIM, degree), dtype=dtype))

    @classmethod
    def basis_form(cls, *indices: int) -> KForm:
        """``e^{i_1 ... i_k}`` from 1-based indices (any order; sign applied)."""
        idx = tuple(i - 1 for i in indices)
        if any(not 0 <= i < DIM for i in idx):
            raise FormError(f"indices must lie in 1..{DIM}: {indices}")
        sign, srt = _sort_sign(idx)
        out = np.zeros(comb(DIM, len(idx)))
        if sign:
            out[_position(len(idx))[srt]] = sign
        return cls(len(idx), out)

    @classmethod
    def from_dict(cls, degree: int, terms: dict) -> KForm:
        """Build from ``{(i, j, ...): coefficient}`` with 1-based indices."""
        out = cls.zero(degree, dtype=complex if any(isinstance(v, complex) for v in terms.values()) else float)
        for idx, val in terms.items():
            if len(idx) != degree:
                raise FormError(f"term {idx} does not have degree {degree}")
            out = out + val * cls.basis_form(*idx)
        return out

    # arithmetic ---------------------------------------------------------

    def _check(self, other: KForm):
        if not isinstance(other, KForm):
            return NotImplemented
        if other.degree != self.degree:
            raise FormError(f"cannot add forms of degree {self.degree} and {other.degree}")
        return None

    def __add__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return KForm(self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return KForm(self.degree, self.coeffs - other.coeffs)

    def __neg__(self):
        return KForm(self.degree, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, KForm):
            return NotImplemented
        return KForm(self.degree, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return KForm(self.degree, self.coeffs / scalar)

    def __xor__(self, other):
        return wedge(self, other)

    # inspection ---------------------------------------------------------

    @property
    def real(self) -> KForm:
        return KForm(self.degree, np.real(self.coeffs))

    @property
    def imag(self) -> KForm:
        return KForm(self.degree, np.imag(self.coeffs))

    @property
    def is_real(self) -> bool:
        return self.coeffs.dtype.kind == "f" or not np.any(np.imag(self.coeffs))

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def norm(self) -> float:
        """Max-norm of the coefficient vector."""
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def __getitem__(self, indices) -> complex | float:
        """Coefficient of ``e^{indices}`` (1-based, any order, sign applied)."""
        if isinstance(indices, int):
            indices = (indices,)
        sign, srt = _sort_sign(tuple(i - 1 for i in indices))
        if not sign:
            return 0.0
        return sign * self.coeffs[_position(self.degree)[srt]]

    def terms(self, tol: float = 0.0) -> dict[tuple[int, ...], complex | float]:
        """Non-zero coefficients keyed by 1-based multi-index."""
        return {
            tuple(i + 1 for i in idx): c.item()
            for idx, c in zip(basis(self.degree), self.coeffs)
            if abs(c) > tol
        }

    def __repr__(self):
        body = " + ".join(
            f"{c:g}*e^{''.join(map(str, idx))}" for idx, c in self.terms(1e-15).items()
        )
        return f"KForm({self.degree}: {body or '0'})"


ComplexForm = KForm


def as_complex(alpha: KForm) -> KForm:
    return KForm(alpha.degree, alpha.coeffs.astype(complex))


def wedge(alpha: KForm, beta: KForm) -> KForm:
    """Exterior product ``alpha ^ beta``."""
    p, q = alpha.degree, beta.degree
    if p + q > DIM:
        raise FormError(f"wedge of a {p}-form and a {q}-form exceeds dimension {DIM}")
    coeffs = np.einsum("a,b,abc->c", alpha.coeffs, beta.coeffs, _wedge_table(p, q))
    return KForm(p + q, coeffs)


def wedge_matrix(alpha: KForm, q: int) -> np.ndarray:
    """Matrix of ``beta -> alpha ^ beta`` on q-forms."""
    if alpha.degree + q > DIM:
        raise FormError("wedge operator exceeds the top degree")
    return np.einsum("a,abc->cb", alpha.coeffs, _wedge_table(alpha.degree, q))


# structure constants and d ----------------------------------------------


@dataclass(frozen=True, eq=False)
class StructureConstants:
    """``c[k, i, j]`` with ``de^k = sum_{i<j} c^k_{ij} e^{ij}``, antisymmetric in (i, j)."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.shape != (DIM, DIM, DIM):
            raise FormError(f"structure constants must have shape (6, 6, 6), got {c.shape}")
        if not np.array_equal(c, -np.swapaxes(c, 1, 2)):
            raise FormError("structure constants must be antisymmetric in the lower indices")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def zero(cls) -> StructureConstants:
        return cls(np.zeros((DIM, DIM, DIM)))

    def d_coframe(self, k: int) -> KForm:
        """``de^k`` for a 1-based coframe index."""
        return KForm(2, np.array([self.c[k - 1, i, j] for i, j in basis(2)]))

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Lie bracket of frame vectors, ``[e_i, e_j] = -sum_k c^k_{ij} e_k``."""
        return -np.einsum("kij,i,j->k", self.c, x, y)


@lru_cache(maxsize=None)
def _d_operator(degree: int) -> np.ndarray:
    """``D[a, b, k, p]``: coefficient of d on ``degree``-forms per unit ``c^k`` on the ``p``-th pair.

    ``d`` is linear in the structure constants, so contracting with ``c^k_{ij}``
    (``i < j``) gives the matrix of ``d`` for any bracket.
    """
    pairs = basis(2)
    out = np.zeros((comb(DIM, degree + 1), comb(DIM, degree), DIM, len(pairs)))
    one = KForm(0, [1.0])
    for col, idx in enumerate(basis(degree)):
        # antiderivation: d(e^{i1..ir}) = sum_s (-1)^s e^{i1..} ^ de^{is} ^ ..
        for s, k in enumerate(idx):
            left = KForm.basis_form(*(j + 1 for j in idx[:s])) if s else one
            right = KForm.basis_form(*(j + 1 for j in idx[s + 1:])) if s < degree - 1 else one
            for q, pair in enumerate(pairs):
                term = wedge(wedge(left, KForm.basis_form(*(j + 1 for j in pair))), right)
                out[:, col, k, q] += (-1) ** s * term.coeffs
    out.setflags(write=False)
    return out


_PAIR_I, _PAIR_J = (np.array(ix) for ix in zip(*basis(2)))


def d_matrix(c: StructureConstants, degree: int) -> np.ndarray:
    """Matrix of ``d`` from ``degree``-forms to ``degree + 1``-forms."""
    if not 0 <= degree < DIM:
        raise FormError(f"d is not defined on {degree}-forms")
    return np.einsum("abkp,kp->ab", _d_operator(degree), c.c[:, _PAIR_I, _PAIR_J])


def exterior_derivative(alpha: KForm, c: StructureConstants) -> KForm:
    """Chevalley-Eilenberg differential of a left-invariant form."""
    if alpha.degree >= DIM:
        raise FormError("d of a top-degree form leaves the exterior algebra")
    return KForm(alpha.degree + 1, d_matrix(c, alpha.degree) @ alpha.coeffs)


# complex structure --------------------------------------------------------

#: J on vectors, ``J e_i = -e_{7-i}`` and ``J e_{7-i} = e_i`` for i = 1, 2, 3.
J_VECTORS = np.zeros((DIM, DIM))
for _i in range(3):
    J_VECTORS[DIM - 1 - _i, _i] = -1.0
    J_VECTORS[_i, DIM - 1 - _i] = 1.0
J_VECTORS.setflags(write=False)

# Coefficient action on 1-forms: (J a)_j = sum_i a_i e^i(J e_j).
_J_COFRAME = J_VECTORS.T


def _compound(m: np.ndarray, k: int) -> np.ndarray:
    """k-th exterior power of a linear map acting on 1-form coefficients."""
    if k == 0:
        return np.ones((1, 1), dtype=m.dtype)
    B = basis(k)
    out = np.empty((len(B), len(B)), dtype=m.dtype)
    for a, I in enumerate(B):
        for b, K in enumerate(B):
            out[a, b] = np.linalg.det(m[np.ix_(I, K)])
    return out


@lru_cache(maxsize=None)
def j_matrix(k: int) -> np.ndarray:
    m = np.rint(_compound(_J_COFRAME, k))
    m.setflags(write=False)
    return m


def j_action(alpha: KForm) -> KForm:
    """Argument-wise action of J on a form."""
    return KForm(alpha.degree, j_matrix(alpha.degree) @ alpha.coeffs)


def j_action_factorwise(alpha: KForm) -> KForm:
    """J applied to each coframe factor of each monomial; equals :func:`j_action`."""
    out = KForm.zero(alpha.degree, dtype=alpha.coeffs.dtype)
    for idx, c in zip(basis(alpha.degree), alpha.coeffs):
        if c == 0:
            continue
        term = KForm(0, [c])
        for i in idx:
            term = wedge(term, KForm(1, _J_COFRAME[:, i]))
        out = out + term
    return out


# bidegree -------------------------------------------------------------------

# Columns: e^k in terms of (zeta^1, zeta^2, zeta^3, zetabar^1, zetabar^2, zetabar^3),
# zeta^k = e^k + i e^{7-k}.
_E_IN_ZETA = np.zeros((DIM, DIM), dtype=complex)
for _k in range(3):
    _E_IN_ZETA[_k, _k] = 0.5
    _E_IN_ZETA[_k + 3, _k] = 0.5
    _E_IN_ZETA[_k, DIM - 1 - _k] = -0.5j
    _E_IN_ZETA[_k + 3, DIM - 1 - _k] = 0.5j


@lru_cache(maxsize=None)
def _bidegree_projector(p: int, q: int) -> np.ndarray:
    k = p + q
    to_zeta = _compound(_E_IN_ZETA, k)
    mask = np.array([sum(1 for i in idx if i < 3) == p for idx in basis(k)], dtype=float)
    proj = np.linalg.solve(to_zeta, mask[:, None] * to_zeta)
    proj.setflags(write=False)
    return proj


def bidegree_project(alpha: KForm, p: int, q: int) -> KForm:
    """The (p, q)-component of ``alpha``."""
    if p < 0 or q < 0 or p + q != alpha.degree:
        raise FormError(f"bidegree ({p}, {q}) does not match a {alpha.degree}-form")
    if p > 3 or q > 3:
        return KForm.zero(alpha.degree, dtype=complex)
    return KForm(alpha.degree, _bidegree_projector(p, q) @ alpha.coeffs.astype(complex))


def bidegree_components(alpha: KForm) -> dict[tuple[int, int], KForm]:
    k = alpha.degree
    return {(p, k - p): bidegree_project(alpha, p, k - p) for p in range(max(0, k - 3), min(3, k) + 1)}


def del_(alpha: KForm, c: StructureConstants) -> KForm:
    """The (p+1, q) part of ``d`` summed over the bidegrees of ``alpha``."""
    out = KForm.zero(alpha.degree + 1, dtype=complex)
    for (p, q), part in bidegree_components(alpha).items():
        if p + 1 <= 3:
            out = out + bidegree_project(exterior_derivative(part, c), p + 1, q)
    return out


def delbar(alpha: KForm, c: StructureConstants) -> KForm:
    """The (p, q+1) part of ``d`` summed over the bidegrees of ``alpha``."""
    out = KForm.zero(alpha.degree + 1, dtype=complex)
    for (p, q), part in bidegree_components(alpha).items():
        if q + 1 <= 3:
            out = out + bidegree_project(exterior_derivative(part, c), p, q + 1)
    return out


def dc(alpha: KForm, c: StructureConstants) -> KForm:
    """Real Dolbeault operator ``(-1)^r J d J`` on r-forms."""
    r = alpha.degree
    return (-1) ** r * j_action(exterior_derivative(j_action(alpha), c))


def dc_dolbeault(alpha: KForm, c: StructureConstants) -> KForm:
    """``i (delbar - del)``, the bidegree route to :func:`dc` (integrable J only)."""
    return 1j * (delbar(alpha, c) - del_(alpha, c))


def del_delbar(alpha: KForm, c: StructureConstants) -> KForm:
    """``d d^c alpha``, the operator written ``i del delbar`` everywhere else in the package.

    In the splitting ``d = del + delbar`` with ``d^c = i (delbar - del)`` it equals
    ``2i del delbar alpha``.
    """
    if alpha.degree != 2:
        raise FormError("del_delbar expects a 2-form")
    return exterior_derivative(dc(alpha, c), c)


# Lefschetz ------------------------------------------------------------------

# Real (1,1)-forms: the 9-dimensional J-invariant subspace of 2-forms.
def _real_11_basis() -> np.ndarray:
    w, v = np.linalg.eig(j_matrix(2))
    inv = np.real(v[:, np.isclose(w, 1.0)])
    q, _ = np.linalg.qr(inv)
    return q


REAL_11_BASIS = _real_11_basis()
REAL_11_BASIS.setflags(write=False)


def lefschetz_solve(phi: KForm, nu: KForm, factor: float = 2.0) -> KForm:
    """The real (1,1)-form ``beta`` with ``factor * nu ^ beta = phi``.

    ``nu`` must be a positive (1,1)-form; ``phi`` a real (2,2)-form.  The
    default factor matches ``d/dt nu^2 = 2 nu ^ d/dt nu``.
    """
    if nu.degree != 2 or phi.degree != 4:
        raise FormError("lefschetz_solve expects a (1,1)-form and a 4-form")
    L = factor * wedge_matrix(nu.real, 2) @ REAL_11_BASIS
    if np.linalg.cond(L) > 1e12:
        raise FormError("Lefschetz map is singular; nu is not a positive (1,1)-form")
    x, *_ = np.linalg.lstsq(L, np.real(phi.coeffs), rcond=None)
    beta = KForm(2, REAL_11_BASIS @ x)
    resid = np.max(np.abs(factor * wedge(nu.real, beta).coeffs - np.real(phi.coeffs)))
    scale = max(1.0, float(np.max(np.abs(phi.coeffs))))
    if resid > 1e-10 * scale:
        raise FormError(f"phi is not in the image of the Lefschetz map (residual {resid:.3e})")
    return beta


OMEGA = KForm.from_dict(2, {(1, 6): 1.0, (2, 5): 1.0, (3, 4): 1.0})
