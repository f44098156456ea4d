"""Lazy cochains and the operators b, T, A, B0, B, S, plus the pairings with idempotents."""
from __future__ import annotations

import itertools
from math import factorial

import numpy as np

from .errors import ContractViolation, DomainError


class Cochain:
    """A multilinear functional on (m+1)-tuples of square matrices.

    ``lift(q)`` returns the cochain tr#phi on M_q of the algebra.  By default
    it is the explicit index-cycle sum; cochains built from a triple supply a
    faster lift through the amplified triple.
    """

    def __init__(self, degree: int, evaluator, lift=None, name: str = "phi",
                 cyclic: bool = False, normalized: bool = False):
        if degree < 0:
            raise DomainError("cochain degree must be >= 0")
        self.degree = degree
        self._eval = evaluator
        self._lift = lift
        self.name = name
        self.claimed_cyclic = cyclic
        self.claimed_normalized = normalized

    def __call__(self, *args) -> complex:
        if len(args) != self.degree + 1:
            raise DomainError(f"{self.name} has degree {self.degree}, got {len(args)} arguments")
        return complex(self._eval(*[np.asarray(a, complex) for a in args]))

    def lift(self, q: int) -> "Cochain":
        if q == 1:
            return self
        if self._lift is not None:
            return self._lift(q)
        return trace_lift(self, q)

    def __add__(self, other):
        return linear_combination([(1, self), (1, other)])

    def __sub__(self, other):
        return linear_combination([(1, self), (-1, other)])

    def __rmul__(self, c):
        return linear_combination([(c, self)])

    def __repr__(self):
        return f"Cochain({self.name}, degree={self.degree})"


def linear_combination(terms) -> Cochain:
    terms = list(terms)
    deg = terms[0][1].degree
    if any(p.degree != deg for _, p in terms):
        raise DomainError("cannot add cochains of different degrees")
    return Cochain(deg, lambda *a: sum(c * p(*a) for c, p in terms),
                   lift=lambda q: linear_combination([(c, p.lift(q)) for c, p in terms]),
                   name="+".join(p.name for _, p in terms))


def _unit(args):
    return np.eye(args[0].shape[0], dtype=complex)


def hochschild_b(phi: Cochain) -> Cochain:
    m = phi.degree

    def ev(*a):
        total = 0j
        for j in range(m + 1):
            total += (-1) ** j * phi(*a[:j], a[j] @ a[j + 1], *a[j + 2:])
        total += (-1) ** (m + 1) * phi(a[m + 1] @ a[0], *a[1:m + 1])
        return total

    return Cochain(m + 1, ev, lift=lambda q: hochschild_b(phi.lift(q)), name=f"b{phi.name}")


def cyclic_T(phi: Cochain) -> Cochain:
    m = phi.degree

    def ev(*a):
        return (-1) ** m * phi(a[m], *a[:m])

    return Cochain(m, ev, lift=lambda q: cyclic_T(phi.lift(q)), name=f"T{phi.name}")


def normalizer_A(phi: Cochain) -> Cochain:
    m = phi.degree

    def ev(*a):
        total = 0j
        for i in range(m + 1):
            # T^i phi(a) = (-1)^{mi} phi(rotated by i)
            rot = a[m + 1 - i:] + a[:m + 1 - i]
            total += (-1) ** (m * i) * phi(*rot)
        return total

    return Cochain(m, ev, lift=lambda q: normalizer_A(phi.lift(q)), name=f"A{phi.name}")


def B0(phi: Cochain) -> Cochain:
    if phi.degree < 1:
        raise DomainError("B0 needs degree >= 1")

    def ev(*a):
        return phi(_unit(a), *a)

    return Cochain(phi.degree - 1, ev, lift=lambda q: B0(phi.lift(q)), name=f"B0{phi.name}")


def connes_B(phi: Cochain) -> Cochain:
    """B = A B0 (1 - T)."""
    if phi.degree < 1:
        raise DomainError("B needs degree >= 1")
    out = normalizer_A(B0(phi - cyclic_T(phi)))
    out.name = f"B{phi.name}"
    return out


def periodicity_S(phi: Cochain) -> Cochain:
    """S = 1/((m+1)(m+2)) sum_{j=1}^{m+1} (-1)^j S_j, raising degree by 2."""
    m = phi.degree

    def S_j(j, a):
        # a has m+3 entries a[0..m+2]
        total = 0j
        for l in range(j - 1):
            args = a[:l] + (a[l] @ a[l + 1],) + a[l + 2:j] + (a[j] @ a[j + 1],) + a[j + 2:]
            total += (-1) ** l * phi(*args)
        args = a[:j - 1] + (a[j - 1] @ a[j] @ a[j + 1],) + a[j + 2:]
        total += (-1) ** (j + 1) * phi(*args)
        return total

    def ev(*a):
        s = sum((-1) ** j * S_j(j, a) for j in range(1, m + 2))
        return s / ((m + 1) * (m + 2))

    return Cochain(m + 2, ev, lift=lambda q: periodicity_S(phi.lift(q)), name=f"S{phi.name}",
                   cyclic=phi.claimed_cyclic)


def trace_lift(phi: Cochain, q: int) -> Cochain:
    """tr#phi(x^0,...,x^m) = sum over i_0..i_m of phi(x^0_{i0 i1}, x^1_{i1 i2}, ..., x^m_{im i0})."""
    m = phi.degree

    def ev(*x):
        n = x[0].shape[0] // q
        blocks = [[[xx[i * n:(i + 1) * n, j * n:(j + 1) * n] for j in range(q)] for i in range(q)]
                  for xx in x]
        nz = [[[np.any(b[i][j]) for j in range(q)] for i in range(q)] for b in blocks]
        total = 0j
        for idx in itertools.product(range(q), repeat=m + 1):
            pairs = [(idx[s], idx[(s + 1) % (m + 1)]) for s in range(m + 1)]
            if not all(nz[s][i][j] for s, (i, j) in enumerate(pairs)):
                continue
            total += phi(*[blocks[s][i][j] for s, (i, j) in enumerate(pairs)])
        return total

    return Cochain(m, ev, name=f"tr#{phi.name}")


def pairing_constant(k: int) -> float:
    """(-1)^k (2k)!/k!."""
    return (-1) ** k * factorial(2 * k) / factorial(k)


def _idempotent_args(e):
    E = getattr(e, "matrix", e)
    q = getattr(e, "q", 1)
    return np.asarray(E, complex), q


def pair_cyclic_cocycle(phi: Cochain, e) -> complex:
    """(-1)^k (2k)!/k! tr#phi(e, ..., e) for a cyclic cocycle of degree 2k."""
    if phi.degree % 2:
        raise DomainError("pairing with K0 needs an even-degree cocycle")
    E, q = _idempotent_args(e)
    k = phi.degree // 2
    return pairing_constant(k) * phi.lift(q)(*([E] * (2 * k + 1)))


def is_normalized(phi: Cochain, samples, tol: float = 1e-9) -> bool:
    """Check phi vanishes with the unit in any slot >= 1, on the given sample tuples."""
    if phi.degree == 0:
        return True
    for args in samples:
        args = [np.asarray(a, complex) for a in args]
        one = np.eye(args[0].shape[0])
        scale = max(np.prod([np.linalg.norm(a, 2) for a in args]), 1.0)
        for j in range(1, phi.degree + 1):
            v = phi(*args[:j], one, *args[j + 1:])
            if abs(v) > tol * scale:
                return False
    return True


def pair_normalized_even(phis: dict, e, check_samples=None) -> complex:
    """tr#phi_0(e) + sum_k (-1)^k (2k)!/k! tr#phi_2k(e - 1/2, e, ..., e).

    ``phis`` maps even degrees to cochains.  If ``check_samples`` is given,
    each component is tested for normalization and a ContractViolation is
    raised if one fails.
    """
    E, q = _idempotent_args(e)
    total = 0j
    for deg, phi in sorted(phis.items()):
        if deg % 2 or phi.degree != deg:
            raise DomainError(f"component of degree {phi.degree} filed under {deg}")
        if check_samples is not None and not is_normalized(phi, check_samples):
            raise ContractViolation(f"component {phi.name} of degree {deg} is not normalized")
        lifted = phi.lift(q)
        if deg == 0:
            total += lifted(E)
        else:
            k = deg // 2
            half = E - 0.5 * np.eye(E.shape[0])
            total += pairing_constant(k) * lifted(half, *([E] * (2 * k)))
    return total
