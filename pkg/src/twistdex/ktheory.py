"""Idempotents over M_q(A): sigma-translates, sums, similarity, and the sigma-selfadjoint conjugate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import ElementSampler, sample_elements
from .errors import DomainError, RibbonConstructionFailure
from .linalg import GradedSpace, as_matrix, odd_part, opnorm
from .triple import TwistedTriple

IDEMPOTENT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Idempotent:
    """e in M_q(A), stored as the realized operator on H^q (block (i, j) = e_ij)."""

    q: int
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        E = as_matrix(self.matrix)
        if E.shape != (self.q * self.n,) * 2:
            raise DomainError(f"idempotent has shape {E.shape}, expected {(self.q * self.n,) * 2}")
        resid = np.linalg.norm(E @ E - E, 2)
        if resid > IDEMPOTENT_TOL * max(opnorm(E), 1.0) ** 2:
            raise DomainError(f"matrix is not idempotent (residual {resid:.2e})")
        object.__setattr__(self, "matrix", E)

    def entry(self, i: int, j: int) -> np.ndarray:
        n = self.n
        return self.matrix[i * n:(i + 1) * n, j * n:(j + 1) * n]

    @property
    def E(self) -> np.ndarray:
        return self.matrix


def unit_idempotent(n: int, q: int = 1) -> Idempotent:
    return Idempotent(q, n, np.eye(q * n))


def zero_idempotent(n: int, q: int = 1) -> Idempotent:
    return Idempotent(q, n, np.zeros((q * n, q * n)))


def check_over(t: TwistedTriple, e: Idempotent):
    if e.n != t.n:
        raise DomainError(f"idempotent blocks have size {e.n}, triple acts on dimension {t.n}")
    space = t.space.amplify(e.q)
    if np.linalg.norm(odd_part(e.matrix, space)) > 1e-10 * max(opnorm(e.matrix), 1.0):
        raise DomainError("idempotent entries must be even")


def sigma_of_idempotent(t: TwistedTriple, e: Idempotent) -> Idempotent:
    return Idempotent(e.q, e.n, t.sigma.amplify(e.q, t.n)(e.matrix))


def direct_sum(e: Idempotent, f: Idempotent) -> Idempotent:
    if e.n != f.n:
        raise DomainError("direct sum of idempotents over different triples")
    qn, rn = e.q * e.n, f.q * f.n
    M = np.zeros((qn + rn, qn + rn), complex)
    M[:qn, :qn] = e.matrix
    M[qn:, qn:] = f.matrix
    return Idempotent(e.q + f.q, e.n, M)


def conjugate(e: Idempotent, g) -> Idempotent:
    """g^-1 e g."""
    g = as_matrix(g)
    if g.shape != e.matrix.shape:
        raise DomainError("conjugating element has the wrong size")
    if np.linalg.cond(g) > 1e10:
        raise DomainError("conjugating element is singular")
    return Idempotent(e.q, e.n, np.linalg.solve(g, e.matrix @ g))


def graded_projection(space: GradedSpace, q: int, r_plus: int, r_minus: int) -> np.ndarray:
    """Coordinate projection onto the first r+ even and r- odd basis vectors of H^q."""
    amp = space.amplify(q)
    if r_plus > amp.dim_plus or r_minus > amp.dim_minus:
        raise DomainError("requested graded ranks exceed the space")
    d = np.zeros(amp.dim)
    d[amp.plus[:r_plus]] = 1
    d[amp.minus[:r_minus]] = 1
    return np.diag(d).astype(complex)


def random_algebra_matrix(t: TwistedTriple, q: int, rng, max_word_length: int = 2) -> np.ndarray:
    """A generic element of M_q(A), entries drawn from the seeded sampler."""
    sampler = ElementSampler(seed=int(rng.integers(2 ** 63)), max_word_length=max_word_length)
    entries = sample_elements(t.algebra, sampler, q * q)
    n = t.n
    out = np.zeros((q * n, q * n), complex)
    for idx, a in enumerate(entries):
        i, j = divmod(idx, q)
        out[i * n:(i + 1) * n, j * n:(j + 1) * n] = a
    return out


def random_invertible(t: TwistedTriple, q: int, rng, strength: float = 0.5,
                      max_cond: float = 1e3) -> np.ndarray:
    for _ in range(100):
        x = random_algebra_matrix(t, q, rng)
        g = np.eye(q * t.n) + strength * x / max(opnorm(x), 1e-300) * rng.uniform(0.5, 1.5)
        if np.linalg.cond(g) < max_cond:
            return g
    raise DomainError("could not draw a well-conditioned invertible element")


def random_idempotent(t: TwistedTriple, projection, q: int, rng, strength: float = 0.8) -> Idempotent:
    """g^-1 P g for an algebra projection P and a seeded invertible g."""
    P = Idempotent(q, t.n, projection)
    g = random_invertible(t, q, rng, strength)
    return conjugate(P, g)


@dataclass
class RibbonConjugate:
    p: Idempotent
    g: np.ndarray
    ginv: np.ndarray
    residuals: dict
    condition_b: float


def sigma_selfadjoint_conjugate(t: TwistedTriple, e: Idempotent, require_ribbon: bool = True):
    """Build p with p^2 = p, sigma(p)* = p and g^-1 p g = e.

    a = e - sigma(e)*, b = 1 + sigma(a)* a, p = e sigma(e)* b^-1,
    g = 1 - p + e with inverse 1 + p - e.
    """
    if require_ribbon:
        t.sigma.sqrt()
    sig = t.sigma.amplify(e.q, t.n)
    E = e.matrix
    one = np.eye(E.shape[0])
    sEs = sig(E).conj().T
    a = E - sEs
    b = one + sig(a).conj().T @ a
    cond = float(np.linalg.cond(b))
    if not np.isfinite(cond) or cond > 1e10:
        raise RibbonConstructionFailure(f"b is numerically singular (cond {cond:.2e})")
    P = E @ sEs @ np.linalg.inv(b)
    g = one - P + E
    ginv = one + P - E
    scale = max(opnorm(E), 1.0) ** 2
    res = {
        "p_idempotent": float(np.linalg.norm(P @ P - P, 2) / scale),
        "p_sigma_selfadjoint": float(np.linalg.norm(sig(P).conj().T - P, 2) / scale),
        "conjugates_to_e": float(np.linalg.norm(ginv @ P @ g - E, 2) / scale),
        "g_inverse": float(np.linalg.norm(g @ ginv - one, 2) / scale),
    }
    p = Idempotent(e.q, e.n, P)
    return RibbonConjugate(p, g, ginv, res, cond)
