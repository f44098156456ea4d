"""Graded dense linear algebra: ranks, partial inverses, supertraces, Schatten norms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, NumericError

RANK_TOL = 1e-9


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DomainError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def opnorm(m) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


class GradedSpace:
    """C^n with a grading operator gamma = diag(signs).

    ``GradedSpace.standard(p, m)`` is C^p + C^m with the even part first.
    Other orderings arise from doubling, where the second copy carries -gamma.
    """

    def __init__(self, signs):
        s = np.asarray(signs, dtype=int).ravel()
        if s.size < 1:
            raise DomainError("a graded space needs dimension at least 1")
        if not np.all(np.abs(s) == 1):
            raise DomainError("grading signs must be +1 or -1")
        self.signs = s
        self.signs.setflags(write=False)

    @classmethod
    def standard(cls, dim_plus: int, dim_minus: int) -> "GradedSpace":
        if dim_plus < 0 or dim_minus < 0 or dim_plus + dim_minus < 1:
            raise DomainError("need dimPlus + dimMinus >= 1")
        return cls(np.r_[np.ones(dim_plus, int), -np.ones(dim_minus, int)])

    @property
    def dim(self) -> int:
        return int(self.signs.size)

    @property
    def dim_plus(self) -> int:
        return int(np.sum(self.signs > 0))

    @property
    def dim_minus(self) -> int:
        return int(np.sum(self.signs < 0))

    @property
    def plus(self) -> np.ndarray:
        return np.flatnonzero(self.signs > 0)

    @property
    def minus(self) -> np.ndarray:
        return np.flatnonzero(self.signs < 0)

    def gamma(self) -> np.ndarray:
        return np.diag(self.signs.astype(complex))

    def amplify(self, q: int) -> "GradedSpace":
        return GradedSpace(np.tile(self.signs, q))

    def double(self) -> "GradedSpace":
        return GradedSpace(np.r_[self.signs, -self.signs])

    def __eq__(self, other):
        return isinstance(other, GradedSpace) and np.array_equal(self.signs, other.signs)

    def __hash__(self):
        return hash(self.signs.tobytes())

    def __repr__(self):
        return f"GradedSpace(plus={self.dim_plus}, minus={self.dim_minus}, dim={self.dim})"


def even_part(m, space: GradedSpace) -> np.ndarray:
    mask = np.equal.outer(space.signs, space.signs)
    return np.where(mask, m, 0)


def odd_part(m, space: GradedSpace) -> np.ndarray:
    mask = np.equal.outer(space.signs, space.signs)
    return np.where(mask, 0, m)


def parity(m, space: GradedSpace, tol: float = 1e-12) -> str:
    m = np.asarray(m)
    scale = max(opnorm(m), 1e-300)
    off = np.linalg.norm(odd_part(m, space))
    diag = np.linalg.norm(even_part(m, space))
    if off <= tol * scale:
        return "even"
    if diag <= tol * scale:
        return "odd"
    return "none"


@dataclass(frozen=True)
class GradedOperator:
    space: GradedSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape != (self.space.dim, self.space.dim):
            raise DomainError(f"operator shape {m.shape} does not match space dim {self.space.dim}")
        object.__setattr__(self, "matrix", m)

    @property
    def parity(self) -> str:
        return parity(self.matrix, self.space)

    def block(self, rows: str, cols: str) -> np.ndarray:
        r = self.space.plus if rows == "+" else self.space.minus
        c = self.space.plus if cols == "+" else self.space.minus
        return self.matrix[np.ix_(r, c)]


def supertrace(t, space: GradedSpace | None = None) -> complex:
    """Tr(gamma t) = Tr(t++) - Tr(t--)."""
    if isinstance(t, GradedOperator):
        space, t = t.space, t.matrix
    if space is None:
        raise DomainError("supertrace needs a graded space")
    t = np.asarray(t)
    if t.shape != (space.dim, space.dim):
        raise DomainError("supertrace needs a square operator on the graded space")
    return complex(np.dot(space.signs, np.diagonal(t)))


def singular_values(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.zeros(0)
    try:
        return sla.svdvals(m)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(str(exc)) from exc


def rank_threshold(s: np.ndarray, shape, tol: float = RANK_TOL, scale: float = 0.0) -> float:
    """tol * max(smax, scale) * max(shape).

    ``scale`` is the norm of the operator a block was cut from, so a block
    holding only roundoff is not promoted to full rank.
    """
    smax = float(s[0]) if s.size else 0.0
    return tol * max(smax, scale) * max(shape)


def rank_decision(m, tol: float = RANK_TOL, scale: float = 0.0):
    """Return ``(rank, ambiguous)``.

    ``ambiguous`` is set when some singular value lies within a factor 10
    of the threshold, so a small tolerance change could flip the rank.
    """
    m = np.asarray(m)
    s = singular_values(m)
    if s.size == 0:
        return 0, False
    thr = rank_threshold(s, m.shape, tol, scale)
    if s[0] == 0:
        return 0, False
    rank = int(np.sum(s > thr))
    ambiguous = bool(np.any((s > thr / 10) & (s < thr * 10)))
    return rank, ambiguous


def numerical_rank(m, tol: float = RANK_TOL, scale: float = 0.0) -> int:
    return rank_decision(m, tol, scale)[0]


def kernel_dim(m, tol: float = RANK_TOL, scale: float = 0.0) -> int:
    return np.asarray(m).shape[1] - numerical_rank(m, tol, scale)


def schatten_norm(m, p: float) -> float:
    if not p >= 1:
        raise DomainError("Schatten exponent must be >= 1")
    s = singular_values(m)
    if s.size == 0:
        return 0.0
    if np.isinf(p):
        return float(s[0])
    return float(np.sum(s ** p) ** (1.0 / p))


def pseudo_inverse(m, tol: float = RANK_TOL) -> np.ndarray:
    """Moore-Penrose inverse with small singular values dropped.

    Hermitian input goes through an eigendecomposition so the result stays
    exactly Hermitian; this is the partial inverse of a selfadjoint D.
    """
    m = as_matrix(m)
    if m.size == 0:
        return m.conj().T.copy()
    try:
        if m.shape[0] == m.shape[1] and np.array_equal(m, m.conj().T):
            w, v = np.linalg.eigh(m)
            thr = tol * np.max(np.abs(w)) * m.shape[0]
            keep = np.abs(w) > thr
            inv = np.zeros_like(w)
            inv[keep] = 1.0 / w[keep]
            return (v * inv) @ v.conj().T
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(str(exc)) from exc
    thr = rank_threshold(s, m.shape, tol)
    keep = s > thr
    return (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T


def range_basis(m, tol: float = RANK_TOL, scale: float = 0.0):
    """Orthonormal basis (columns) of the column space, plus the ambiguity flag."""
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), complex), False
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s[0] == 0:
        return np.zeros((m.shape[0], 0), complex), False
    thr = rank_threshold(s, m.shape, tol, scale)
    r = int(np.sum(s > thr))
    ambiguous = bool(np.any((s > thr / 10) & (s < thr * 10)))
    return u[:, :r], ambiguous


def min_singular_value(m) -> float:
    s = singular_values(m)
    return float(s[-1]) if s.size else 0.0


def is_invertible(m, tol: float = RANK_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and numerical_rank(m, tol) == m.shape[0]
