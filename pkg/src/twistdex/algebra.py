"""Matrix *-algebras, their twisting automorphisms, and seeded element sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidAutomorphism, NoRibbonStructure
from .linalg import GradedSpace, as_matrix, odd_part, opnorm

POSITIVITY_RATIO = 1e-8


class MatrixAlgebra:
    """Unital *-algebra generated by even matrices acting on a graded space."""

    def __init__(self, space: GradedSpace, generators=(), name: str = ""):
        self.space = space
        gens = []
        for i, g in enumerate(generators):
            g = as_matrix(g)
            if g.shape != (space.dim, space.dim):
                raise DomainError(f"generator {i} has shape {g.shape}, expected {(space.dim,) * 2}")
            if np.linalg.norm(odd_part(g, space)) > 1e-12 * max(opnorm(g), 1.0):
                raise DomainError(f"generator {i} does not commute with the grading")
            gens.append(g)
        self.generators = gens
        self.name = name

    @property
    def n(self) -> int:
        return self.space.dim

    def unit(self) -> np.ndarray:
        return np.eye(self.n, dtype=complex)

    def span_basis(self, max_rounds: int | None = None) -> np.ndarray:
        """Orthonormal basis (rows, flattened) of the algebra spanned by generator words."""
        n = self.n
        rows = [self.unit().ravel()] + [g.ravel() for g in self.generators]
        basis = _orth_rows(np.array(rows))
        rounds = max_rounds or n * n
        for _ in range(rounds):
            mats = [b.reshape(n, n) for b in basis]
            prods = [m @ g for m in mats for g in self.generators]
            if not prods:
                break
            new = _orth_rows(np.vstack([basis, np.array([p.ravel() for p in prods])]))
            if new.shape[0] == basis.shape[0]:
                break
            basis = new
        return basis

    def contains(self, a, tol: float = 1e-9) -> bool:
        basis = self.span_basis()
        v = np.asarray(a, complex).ravel()
        resid = v - basis.T @ (basis.conj() @ v)
        return bool(np.linalg.norm(resid) <= tol * max(np.linalg.norm(v), 1.0))

    def amplify(self, q: int) -> "MatrixAlgebra":
        """M_q of this algebra, acting blockwise on q copies of the space."""
        gens = []
        for i in range(q):
            for j in range(q):
                eij = np.zeros((q, q))
                eij[i, j] = 1
                gens.append(np.kron(eij, self.unit()))
                if i == j:
                    gens += [np.kron(eij, g) for g in self.generators]
        return MatrixAlgebra(self.space.amplify(q), gens, name=f"M_{q}({self.name})")


def _orth_rows(rows: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, rows.shape[1]), complex)
    return vh[s > tol * s[0]]


def full_even_algebra(space: GradedSpace) -> MatrixAlgebra:
    """All matrices commuting with the grading."""
    gens = []
    for idx in (space.plus, space.minus):
        for i in idx:
            for j in idx:
                e = np.zeros((space.dim, space.dim), complex)
                e[i, j] = 1
                gens.append(e)
    return MatrixAlgebra(space, gens, name="even")


def scalar_algebra(space: GradedSpace) -> MatrixAlgebra:
    return MatrixAlgebra(space, [], name="C")


def diagonal_algebra(space: GradedSpace, projections) -> MatrixAlgebra:
    """Commutative algebra spanned by mutually orthogonal diagonal projections."""
    return MatrixAlgebra(space, list(projections), name="diag")


# --- automorphisms -------------------------------------------------------

class Automorphism:
    kind = "abstract"
    validated = "full"

    def __call__(self, a) -> np.ndarray:
        raise NotImplementedError

    def inverse(self) -> "Automorphism":
        raise NotImplementedError

    def sqrt(self) -> "Automorphism":
        raise NoRibbonStructure(f"{self.kind} automorphism has no declared square root")

    def amplify(self, q: int, n: int) -> "Automorphism":
        """Entrywise action on M_q, blocks of size n."""
        if q == 1:
            return self
        return Entrywise(self, q, n)

    def star(self, a) -> np.ndarray:
        """The sigma-involution a -> sigma(a)*."""
        return self(a).conj().T


class Identity(Automorphism):
    kind = "identity"

    def __call__(self, a):
        return np.asarray(a, complex)

    def inverse(self):
        return self

    def sqrt(self):
        return self

    def amplify(self, q, n):
        return self

    def __repr__(self):
        return "Identity()"


class Inner(Automorphism):
    """sigma(a) = k^2 a k^-2 for an even positive invertible k."""

    kind = "inner"

    def __init__(self, k):
        k = as_matrix(k)
        if k.shape[0] != k.shape[1]:
            raise InvalidAutomorphism("inner factor k must be square")
        if np.linalg.norm(k - k.conj().T) > 1e-12 * max(opnorm(k), 1e-300):
            raise InvalidAutomorphism("inner factor k must be Hermitian")
        w, v = np.linalg.eigh((k + k.conj().T) / 2)
        if w[-1] <= 0 or w[0] <= POSITIVITY_RATIO * w[-1]:
            raise InvalidAutomorphism(
                f"inner factor k must be positive definite (eigenvalues in [{w[0]:.3g}, {w[-1]:.3g}])")
        self.k = k
        self._w, self._v = w, v
        self.k2 = (v * w ** 2) @ v.conj().T
        self.k2inv = (v * w ** -2.0) @ v.conj().T

    def __call__(self, a):
        a = np.asarray(a, complex)
        if a.shape == self.k.shape:
            return self.k2 @ a @ self.k2inv
        q = a.shape[0] // self.k.shape[0]
        return self.amplify(q, self.k.shape[0])(a)

    def inverse(self):
        v, w = self._v, self._w
        return Inner((v / w) @ v.conj().T)

    def sqrt(self):
        v, w = self._v, self._w
        return Inner((v * np.sqrt(w)) @ v.conj().T)

    def amplify(self, q, n):
        if q == 1:
            return self
        cache = self.__dict__.setdefault("_amp", {})
        if q not in cache:
            cache[q] = Inner(np.kron(np.eye(q), self.k))
        return cache[q]

    def __repr__(self):
        return f"Inner(k of size {self.k.shape[0]})"


class Linear(Automorphism):
    """Automorphism given by its values on a basis of the algebra.

    Only partially validated: multiplicativity and the twisted involution
    condition are checked on samples, never proved.
    """

    kind = "linear"
    validated = "partial"

    def __init__(self, basis, images, root: "Linear | None" = None):
        self.basis = [as_matrix(b) for b in basis]
        self.images = [as_matrix(b) for b in images]
        if len(self.basis) != len(self.images) or not self.basis:
            raise InvalidAutomorphism("linear automorphism needs matching nonempty basis and images")
        shape = self.basis[0].shape
        if any(b.shape != shape for b in self.basis + self.images):
            raise InvalidAutomorphism("basis and image matrices must share one shape")
        self._B = np.array([b.ravel() for b in self.basis]).T
        self._I = np.array([b.ravel() for b in self.images]).T
        if np.linalg.matrix_rank(self._B) < len(self.basis):
            raise InvalidAutomorphism("linear automorphism basis is linearly dependent")
        self._P = np.linalg.pinv(self._B)
        self.shape = shape
        self.root = root

    def __call__(self, a):
        a = np.asarray(a, complex)
        if a.shape != self.shape:
            q = a.shape[0] // self.shape[0]
            return self.amplify(q, self.shape[0])(a)
        v = a.ravel()
        c = self._P @ v
        if np.linalg.norm(self._B @ c - v) > 1e-8 * max(np.linalg.norm(v), 1.0):
            raise DomainError("element lies outside the span the linear automorphism is defined on")
        return (self._I @ c).reshape(self.shape)

    def inverse(self):
        root = self.root.inverse() if self.root is not None else None
        return Linear(self.images, self.basis, root=root)

    def sqrt(self):
        if self.root is None:
            raise NoRibbonStructure("linear automorphism has no declared ribbon root")
        return self.root

    def __repr__(self):
        return f"Linear(dim={len(self.basis)})"


class Entrywise(Automorphism):
    """sigma applied to every n x n block of a qn x qn matrix."""

    def __init__(self, base: Automorphism, q: int, n: int):
        self.base, self.q, self.n = base, q, n
        self.kind = base.kind
        self.validated = base.validated

    def __call__(self, a):
        a = np.asarray(a, complex)
        n, q = self.n, self.q
        out = np.zeros_like(a)
        for i in range(q):
            for j in range(q):
                blk = a[i * n:(i + 1) * n, j * n:(j + 1) * n]
                if np.any(blk):
                    out[i * n:(i + 1) * n, j * n:(j + 1) * n] = self.base(blk)
        return out

    def inverse(self):
        return Entrywise(self.base.inverse(), self.q, self.n)

    def sqrt(self):
        return Entrywise(self.base.sqrt(), self.q, self.n)

    def amplify(self, q, n):
        return Entrywise(self.base, self.q * q, self.n)


def apply_automorphism(sigma: Automorphism, a) -> np.ndarray:
    return sigma(a)


def ribbon_square_root(sigma: Automorphism) -> Automorphism:
    return sigma.sqrt()


def positive_sqrt(k) -> np.ndarray:
    k = as_matrix(k)
    w, v = np.linalg.eigh((k + k.conj().T) / 2)
    if w[-1] <= 0 or w[0] <= POSITIVITY_RATIO * w[-1]:
        raise InvalidAutomorphism("matrix is not positive definite")
    return (v * np.sqrt(w)) @ v.conj().T


# --- sampling ------------------------------------------------------------

@dataclass(frozen=True)
class ElementSampler:
    seed: int = 0
    max_word_length: int = 2
    coefficient_scale: float = 1.0
    terms: int = 2


def _complex_normal(rng, size=None):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def random_combination(alg: MatrixAlgebra, rng) -> np.ndarray:
    gens = alg.generators
    if not gens:
        return _complex_normal(rng) * alg.unit()
    c = _complex_normal(rng, len(gens)) / np.sqrt(len(gens))
    return np.tensordot(c, np.array(gens), axes=1)


def sample_elements(alg: MatrixAlgebra, sampler: ElementSampler, count: int) -> list:
    """Seeded elements: c*1 plus products of up to ``max_word_length`` generic combinations."""
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.default_rng(sampler.seed)
    out = []
    for _ in range(count):
        a = _complex_normal(rng) * alg.unit()
        if sampler.max_word_length > 0:
            for _ in range(sampler.terms):
                length = int(rng.integers(1, sampler.max_word_length + 1))
                w = alg.unit()
                for _ in range(length):
                    w = w @ random_combination(alg, rng)
                a = a + w
        out.append(sampler.coefficient_scale * a)
    return out
