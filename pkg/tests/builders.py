"""Seeded triples and idempotents shared by the tests, with analytic index oracles."""
import numpy as np
import scipy.linalg as sla

from twistdex.algebra import (ElementSampler, Identity, Inner, Linear, diagonal_algebra,
                              full_even_algebra, sample_elements)
from twistdex.ktheory import Idempotent, conjugate, graded_projection, random_invertible
from twistdex.linalg import GradedSpace
from twistdex.triple import TwistedTriple, conformal_deformation


def odd_operator(space, rng, lo=0.5, hi=1.5, drop=0):
    """Odd selfadjoint D with prescribed singular values of its off-diagonal block."""
    p, m = space.dim_plus, space.dim_minus
    r = min(p, m)
    U = sla.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))[0]
    V = sla.qr(rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p)))[0]
    s = np.zeros((m, p))
    vals = rng.uniform(lo, hi, r)
    vals[r - drop:] = 0
    s[:r, :r] = np.diag(vals)
    B = U @ s @ V.conj().T
    D = np.zeros((space.dim, space.dim), complex)
    D[np.ix_(space.minus, space.plus)] = B
    D[np.ix_(space.plus, space.minus)] = B.conj().T
    return D


def positive_even(space, rng, spread=0.7):
    """exp of a random even Hermitian matrix: positive, invertible, in the full even algebra."""
    n = space.dim
    H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = H + H.conj().T
    mask = np.equal.outer(space.signs, space.signs)
    H = np.where(mask, H, 0)
    return sla.expm(spread * H / np.linalg.norm(H, 2))


def full_even_triple(seed, plus=3, minus=3, twist="identity", drop=0):
    rng = np.random.default_rng(seed)
    space = GradedSpace.standard(plus, minus)
    alg = full_even_algebra(space)
    D = odd_operator(space, rng, drop=drop)
    if twist == "identity":
        return TwistedTriple(alg, D)
    if twist == "inner":
        return TwistedTriple(alg, D, Inner(positive_even(space, rng)))
    if twist == "conformal":
        return conformal_deformation(TwistedTriple(alg, D), positive_even(space, rng))
    raise ValueError(twist)


def graded_idempotent(t, q, r_plus, r_minus, seed, strength=0.8):
    """g^-1 P g for a graded coordinate projection; its index is r+ - r- whenever sigma preserves ranks."""
    rng = np.random.default_rng(seed)
    P = Idempotent(q, t.n, graded_projection(t.space, q, r_plus, r_minus))
    if strength == 0:
        return P
    return conjugate(P, random_invertible(t, q, rng, strength))


class SwapModel:
    """Diagonal algebra spanned by projections p_i with graded ranks (r+_i, r-_i).

    sigma swaps p_0 and p_1 and fixes the rest.  The index of a sum of p_i over S is
    (1/2) sum_{i in S} (r+_i + r+_{pi(i)} - r-_i - r-_{pi(i)}).
    """

    def __init__(self, ranks, seed=0, drop=0):
        self.ranks = ranks
        plus = sum(r[0] for r in ranks)
        minus = sum(r[1] for r in ranks)
        self.space = GradedSpace.standard(plus, minus)
        self.projs = []
        ip, im = 0, 0
        for rp, rm in ranks:
            d = np.zeros(plus + minus)
            d[ip:ip + rp] = 1
            d[plus + im:plus + im + rm] = 1
            ip, im = ip + rp, im + rm
            self.projs.append(np.diag(d).astype(complex))
        self.perm = list(range(len(ranks)))
        self.perm[0], self.perm[1] = 1, 0
        images = [self.projs[self.perm[i]] for i in range(len(ranks))]
        alg = diagonal_algebra(self.space, self.projs)
        rng = np.random.default_rng(seed)
        D = odd_operator(self.space, rng, drop=drop)
        self.triple = TwistedTriple(alg, D, Linear(self.projs, images))

    def idempotent(self, subset, q=1):
        P = sum((self.projs[i] for i in subset), np.zeros_like(self.projs[0]))
        return Idempotent(1, self.space.dim, P) if q == 1 else None

    def expected_index(self, subset):
        total = 0
        for i in subset:
            j = self.perm[i]
            total += self.ranks[i][0] + self.ranks[j][0] - self.ranks[i][1] - self.ranks[j][1]
        return total / 2


def random_swap_model(seed, drop=0):
    """Swap model with random graded ranks and balanced total dimension."""
    rng = np.random.default_rng(seed)
    while True:
        m = int(rng.integers(3, 5))
        ranks = [(int(rng.integers(0, 3)), int(rng.integers(0, 3))) for _ in range(m)]
        if all(a + b > 0 for a, b in ranks):
            plus = sum(r[0] for r in ranks)
            minus = sum(r[1] for r in ranks)
            if plus == minus and plus <= 6:
                return SwapModel(ranks, seed, drop)


def tuples(alg, length, count, seed, max_word_length=2):
    return [sample_elements(alg, ElementSampler(seed * 7919 + i, max_word_length), length)
            for i in range(count)]
