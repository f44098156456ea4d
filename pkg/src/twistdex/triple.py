"""Twisted spectral triples on finite graded spaces, conformal deformation and the invertible double."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .algebra import (Automorphism, ElementSampler, Identity, Inner, MatrixAlgebra,
                      sample_elements)
from .errors import InvalidAutomorphism, InvalidConformalFactor, RequiresInvertible
from .linalg import (RANK_TOL, GradedSpace, as_matrix, even_part, is_invertible, odd_part,
                     opnorm)


@dataclass(frozen=True, eq=False)
class TwistedTriple:
    algebra: MatrixAlgebra
    D: np.ndarray
    sigma: Automorphism = field(default_factory=Identity)
    nominal_summability: float = 1.0
    rank_tol: float = RANK_TOL

    def __post_init__(self):
        D = as_matrix(self.D)
        n = self.algebra.n
        if D.shape != (n, n):
            raise ValueError(f"D has shape {D.shape}, expected {(n, n)}")
        object.__setattr__(self, "D", D)

    @property
    def space(self) -> GradedSpace:
        return self.algebra.space

    @property
    def n(self) -> int:
        return self.algebra.n

    @property
    def default_k(self) -> int:
        return max(1, math.ceil((self.nominal_summability - 1) / 2))

    @cached_property
    def invertible(self) -> bool:
        return is_invertible(self.D, self.rank_tol)

    @cached_property
    def Dinv(self) -> np.ndarray:
        if not self.invertible:
            raise RequiresInvertible("D is singular; pass to the invertible double")
        return np.linalg.inv(self.D)

    def twisted_commutator(self, a) -> np.ndarray:
        a = np.asarray(a, complex)
        return self.D @ a - self.sigma(a) @ self.D

    def with_operator(self, D) -> "TwistedTriple":
        return replace(self, D=D)

    def amplify(self, q: int) -> "TwistedTriple":
        """The triple over M_q(A) acting on H^q with D tensor 1_q."""
        if q == 1:
            return self
        cache = self.__dict__.setdefault("_amp", {})
        if q not in cache:
            cache[q] = TwistedTriple(self.algebra.amplify(q), np.kron(np.eye(q), self.D),
                                     self.sigma.amplify(q, self.n), self.nominal_summability,
                                     self.rank_tol)
        return cache[q]


def twisted_commutator(t: TwistedTriple, a) -> np.ndarray:
    return t.twisted_commutator(a)


# --- conformal deformation -----------------------------------------------

def conformal_deformation(t: TwistedTriple, k) -> TwistedTriple:
    """Replace D by kDk and twist by sigma(a) = k^2 a k^-2."""
    if t.sigma.kind != "identity":
        raise InvalidConformalFactor("conformal deformation needs an untwisted triple")
    k = as_matrix(k)
    if np.linalg.norm(odd_part(k, t.space)) > 1e-12 * max(opnorm(k), 1e-300):
        raise InvalidConformalFactor("conformal factor must be even")
    try:
        sigma = Inner(k)
    except InvalidAutomorphism as exc:
        raise InvalidConformalFactor(str(exc)) from exc
    D = k @ t.D @ k
    D = (D + D.conj().T) / 2
    return TwistedTriple(t.algebra, D, sigma, t.nominal_summability, t.rank_tol)


def conformal_commutator_residual(t_def: TwistedTriple, t_base: TwistedTriple, k, a):
    """Residual of [kDk, a]_sigma = k [D, k a k^-1] k, with its scale."""
    k = np.asarray(k, complex)
    kinv = np.linalg.inv(k)
    lhs = t_def.twisted_commutator(a)
    rhs = k @ t_base.twisted_commutator(k @ a @ kinv) @ k
    scale = opnorm(t_def.D) * (opnorm(a) + opnorm(t_def.sigma(a)))
    return float(np.linalg.norm(lhs - rhs, 2)), max(scale, 1e-300)


# --- invertible double -----------------------------------------------------

class DoubledAutomorphism(Automorphism):
    """sigma~(pi(a) + lambda) = pi(sigma(a)) + lambda on H + H."""

    def __init__(self, base: Automorphism, n: int):
        self.base, self.n = base, n
        self.kind = "doubled-" + base.kind
        self.validated = base.validated

    def __call__(self, x):
        x = np.asarray(x, complex)
        n = self.n
        if x.shape[0] != 2 * n:
            return self.amplify(x.shape[0] // (2 * n), 2 * n)(x)
        lam = np.trace(x[n:, n:]) / n
        a = x[:n, :n] - lam * np.eye(n)
        out = np.zeros_like(x)
        out[:n, :n] = self.base(a) + lam * np.eye(n)
        out[n:, n:] = lam * np.eye(n)
        return out

    def inverse(self):
        return DoubledAutomorphism(self.base.inverse(), self.n)

    def sqrt(self):
        return DoubledAutomorphism(self.base.sqrt(), self.n)


@dataclass(frozen=True, eq=False)
class DoubledTriple:
    base: TwistedTriple
    triple: TwistedTriple

    @property
    def Dtilde(self) -> np.ndarray:
        return self.triple.D

    @property
    def space(self) -> GradedSpace:
        return self.triple.space

    def embed(self, a) -> np.ndarray:
        """pi(a) = diag(a, 0); also works blockwise on M_q."""
        a = np.asarray(a, complex)
        n = self.base.n
        q = a.shape[0] // n
        out = np.zeros((2 * n * q, 2 * n * q), complex)
        for i in range(q):
            for j in range(q):
                out[2 * n * i:2 * n * i + n, 2 * n * j:2 * n * j + n] = a[n * i:n * (i + 1), n * j:n * (j + 1)]
        return out

    def embed_unital(self, a, lam: complex) -> np.ndarray:
        return self.embed(a) + lam * np.eye(2 * self.base.n)

    def amplify(self, q: int) -> "DoubledTriple":
        return DoubledTriple(self.base.amplify(q), self.triple.amplify(q))


def invertible_double(t: TwistedTriple) -> DoubledTriple:
    """D~ = [[D, 1], [1, -D]] on H + H graded by (gamma, -gamma), over A + C."""
    n = t.n
    space = t.space.double()
    zero = np.zeros((n, n))
    gens = [np.block([[g, zero], [zero, zero]]) for g in [np.eye(n)] + t.algebra.generators]
    alg = MatrixAlgebra(space, gens, name=f"{t.algebra.name}+C")
    one = np.eye(n)
    Dt = np.block([[t.D, one], [one, -t.D]])
    sig = DoubledAutomorphism(t.sigma, n)
    return DoubledTriple(t, TwistedTriple(alg, Dt, sig, t.nominal_summability, t.rank_tol))


def doubled_family_endpoint(d: DoubledTriple, s: float) -> np.ndarray:
    """D~_s = D~_0 + sJ with J = [[0,1],[1,0]]."""
    n = d.base.n
    J = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    D0 = np.block([[d.base.D, np.zeros((n, n))], [np.zeros((n, n)), -d.base.D]])
    return D0 + s * J


# --- validation ----------------------------------------------------------

@dataclass
class TripleReport:
    residuals: dict
    tolerances: dict
    notes: dict = field(default_factory=dict)

    @property
    def passes(self) -> dict:
        return {k: bool(v <= self.tolerances[k]) for k, v in self.residuals.items()}

    @property
    def ok(self) -> bool:
        return all(self.passes.values())

    def failures(self) -> list:
        return [k for k, v in self.passes.items() if not v]


def validate_triple(t: TwistedTriple, sampler: ElementSampler | None = None,
                    count: int = 8) -> TripleReport:
    sampler = sampler or ElementSampler(seed=0)
    D = t.D
    dn = max(opnorm(D), 1e-300)
    res = {
        "selfadjoint": np.linalg.norm(D - D.conj().T, 2) / dn,
        "odd": np.linalg.norm(even_part(D, t.space), 2) / dn,
        "compact_resolvent": 0.0,
    }
    samples = sample_elements(t.algebra, sampler, count)
    pairs = list(zip(samples, samples[1:] + samples[:1]))
    sig, siginv = t.sigma, t.sigma.inverse()
    one = t.algebra.unit()
    ev = ev_s = mult = inv = 0.0
    for a, b in pairs:
        sa, sb = sig(a), sig(b)
        ev = max(ev, np.linalg.norm(odd_part(a, t.space), 2) / max(opnorm(a), 1e-300))
        ev_s = max(ev_s, np.linalg.norm(odd_part(sa, t.space), 2) / max(opnorm(sa), 1e-300))
        mscale = opnorm(sa) * opnorm(sb) + opnorm(a) * opnorm(b)
        mult = max(mult, np.linalg.norm(sig(a @ b) - sa @ sb, 2) / max(mscale, 1e-300))
        lhs, rhs = sa.conj().T, siginv(a.conj().T)
        inv = max(inv, np.linalg.norm(lhs - rhs, 2) / max(opnorm(lhs) + opnorm(rhs), 1e-300))
    res["algebra_even"] = ev
    res["sigma_even"] = ev_s
    res["sigma_multiplicative"] = mult
    res["sigma_involution"] = inv
    res["sigma_unital"] = np.linalg.norm(sig(one) - one, 2)
    tol = {"selfadjoint": 1e-12, "odd": 1e-12, "compact_resolvent": 0.0,
           "algebra_even": 1e-12, "sigma_even": 1e-9, "sigma_multiplicative": 1e-9,
           "sigma_involution": 1e-9, "sigma_unital": 1e-9}
    notes = {"sigma_kind": t.sigma.kind, "sigma_validated": t.sigma.validated,
             "samples": count}
    return TripleReport({k: float(v) for k, v in res.items()}, tol, notes)
