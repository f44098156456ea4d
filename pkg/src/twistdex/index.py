"""The compressed operator D_{e,sigma} = sigma(e)(D x 1_q)e, its kernels, index and parametrix."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .ktheory import Idempotent, check_over
from .linalg import kernel_dim, opnorm, range_basis, rank_decision
from .triple import TwistedTriple


@dataclass
class CompressedOperator:
    """D_{e,sigma} in orthonormal coordinates on the graded ranges of e and sigma(e).

    ``domain[s]`` spans e(H^s)^q and ``codomain[s]`` spans sigma(e)(H^s)^q, as
    columns in the ambient H^q.  ``block_plus`` maps domain['+'] coordinates to
    codomain['-'] coordinates, ``block_minus`` the other way.
    """

    domain: dict
    codomain: dict
    block_plus: np.ndarray
    block_minus: np.ndarray
    reconstruction_residual: float
    warnings: list = field(default_factory=list)

    def full(self) -> np.ndarray:
        """The whole operator from range(e) to range(sigma(e)) as one block matrix."""
        r_p, r_m = self.block_plus.shape[1], self.block_minus.shape[1]
        c_p, c_m = self.block_minus.shape[0], self.block_plus.shape[0]
        M = np.zeros((c_p + c_m, r_p + r_m), complex)
        M[c_p:, :r_p] = self.block_plus
        M[:c_p, r_p:] = self.block_minus
        return M

    def domain_basis(self) -> np.ndarray:
        return np.hstack([self.domain["+"], self.domain["-"]])

    def codomain_basis(self) -> np.ndarray:
        return np.hstack([self.codomain["+"], self.codomain["-"]])


def _graded_ranges(E, space, tol):
    out, warn = {}, []
    scale = opnorm(E)
    for s, idx in (("+", space.plus), ("-", space.minus)):
        cols = np.zeros_like(E)
        cols[:, idx] = E[:, idx]
        basis, amb = range_basis(cols, tol, scale)
        out[s] = basis
        if amb:
            warn.append(f"ill-conditioned idempotent: range rank on H{s} is near the threshold")
    return out, warn


def compress_matrices(t: TwistedTriple, E: np.ndarray, F: np.ndarray, q: int) -> CompressedOperator:
    """Compression F (D x 1_q) E for an idempotent E with translate F."""
    tq = t.amplify(q)
    space = tq.space
    dom, w1 = _graded_ranges(E, space, t.rank_tol)
    cod, w2 = _graded_ranges(F, space, t.rank_tol)
    op = F @ tq.D @ E
    bp = cod["-"].conj().T @ op @ dom["+"]
    bm = cod["+"].conj().T @ op @ dom["-"]
    resid = 0.0
    for b, c, d in ((bp, cod["-"], dom["+"]), (bm, cod["+"], dom["-"])):
        if d.shape[1]:
            resid = max(resid, float(np.linalg.norm(c @ b - op @ d, 2)))
    return CompressedOperator(dom, cod, bp, bm, resid / max(opnorm(t.D), 1e-300), w1 + w2)


def compress(t: TwistedTriple, e: Idempotent) -> CompressedOperator:
    check_over(t, e)
    F = t.sigma.amplify(e.q, t.n)(e.matrix)
    return compress_matrices(t, e.matrix, F, e.q)


def translate_star(t: TwistedTriple, e: Idempotent) -> Idempotent:
    """sigma(e)*, whose own translate is e*."""
    return Idempotent(e.q, e.n, t.sigma.amplify(e.q, t.n)(e.matrix).conj().T)


@dataclass
class IndexReport:
    ker_plus: int
    ker_minus: int
    ker_star_plus: int
    ker_star_minus: int
    warnings: list = field(default_factory=list)

    @property
    def ind_plus(self) -> int:
        return self.ker_plus - self.ker_star_minus

    @property
    def ind_minus(self) -> int:
        return self.ker_minus - self.ker_star_plus

    @property
    def index(self) -> float:
        return 0.5 * (self.ind_plus - self.ind_minus)

    def as_dict(self) -> dict:
        return {"kerPlus": self.ker_plus, "kerMinus": self.ker_minus,
                "kerStarPlus": self.ker_star_plus, "kerStarMinus": self.ker_star_minus,
                "indPlus": self.ind_plus, "indMinus": self.ind_minus, "index": self.index}


def _block_scale(c: CompressedOperator) -> float:
    return max((opnorm(b) for b in (c.block_plus, c.block_minus) if b.size), default=0.0)


def _kernels(c: CompressedOperator, tol):
    sc = _block_scale(c)
    kp = kernel_dim(c.block_plus, tol, sc) if c.block_plus.shape[1] else 0
    km = kernel_dim(c.block_minus, tol, sc) if c.block_minus.shape[1] else 0
    warn = list(c.warnings)
    for name, b in (("+", c.block_plus), ("-", c.block_minus)):
        if b.size and rank_decision(b, tol, sc)[1]:
            warn.append(f"kernel dimension of D{name} is near the rank threshold")
    return kp, km, warn


def fredholm_index(t: TwistedTriple, e: Idempotent) -> IndexReport:
    c = compress(t, e)
    cs = compress(t, translate_star(t, e))
    kp, km, w1 = _kernels(c, t.rank_tol)
    ksp, ksm, w2 = _kernels(cs, t.rank_tol)
    return IndexReport(kp, km, ksp, ksm, w1 + w2)


def fredholm_index_of(c: CompressedOperator, tol) -> tuple:
    """(ind+, ind-, index) of an arbitrary graded operator between ranges, by kernels and cokernels."""
    out = []
    for b in (c.block_plus, c.block_minus):
        rows, cols = b.shape
        r = rank_decision(b, tol, _block_scale(c))[0] if b.size else 0
        out.append((cols - r) - (rows - r))
    return out[0], out[1], 0.5 * (out[0] - out[1])


def dimension_count_index(t: TwistedTriple, e: Idempotent) -> tuple:
    """Finite-dimensional oracle: ind+ = dim e(H+)^q - dim sigma(e)(H-)^q, etc."""
    tq = t.amplify(e.q)
    E = e.matrix
    F = t.sigma.amplify(e.q, t.n)(E)
    sp = tq.space

    def rk(M, idx):
        sub = M[np.ix_(idx, idx)]
        return rank_decision(sub, t.rank_tol, opnorm(M))[0] if sub.size else 0

    ind_p = rk(E, sp.plus) - rk(F, sp.minus)
    ind_m = rk(E, sp.minus) - rk(F, sp.plus)
    return ind_p, ind_m, 0.5 * (ind_p - ind_m)


def adjoint_identity_check(t: TwistedTriple, e: Idempotent) -> float:
    """|| D_{e,s}* - S_e^-1 D_{s(e)*,s} S_{s(e)} || in orthonormal coordinates, relative to ||D||."""
    check_over(t, e)
    tq = t.amplify(e.q)
    E = e.matrix
    F = t.sigma.amplify(e.q, t.n)(E)
    tol = t.rank_tol
    U = range_basis(E, tol)[0]
    V = range_basis(F, tol)[0]
    Us = range_basis(E.conj().T, tol)[0]
    Vs = range_basis(F.conj().T, tol)[0]
    if U.shape[1] == 0:
        return 0.0
    D = tq.D
    M = V.conj().T @ F @ D @ E @ U
    S_e = Us.conj().T @ E.conj().T @ U
    S_f = Vs.conj().T @ F.conj().T @ V
    if np.linalg.cond(S_e) > 1e10 or np.linalg.cond(S_f) > 1e10:
        raise DomainError("S_e is numerically singular; e is not idempotent to tolerance")
    Dstar = Us.conj().T @ E.conj().T @ D @ F.conj().T @ Vs
    rhs = np.linalg.solve(S_e, Dstar @ S_f)
    return float(np.linalg.norm(M.conj().T - rhs, 2) / max(opnorm(t.D), 1e-300))


def s_e_inner_product_residual(E: np.ndarray, tol: float = 1e-9) -> float:
    """max |<S_e x, y> - <x, y>| over an orthonormal basis of range(e)."""
    U = range_basis(E, tol)[0]
    if U.shape[1] == 0:
        return 0.0
    G1 = (E.conj().T @ U).conj().T @ U
    G0 = U.conj().T @ U
    return float(np.max(np.abs(G1 - G0)))


def parametrix_check(t: TwistedTriple, e: Idempotent) -> tuple:
    """Residuals of D_e Q = 1 + s(e)[D,e]_s D^-1 s(e) and Q D_e = 1 - e D^-1 [D,e]_s e."""
    check_over(t, e)
    tq = t.amplify(e.q)
    D, Dinv = tq.D, tq.Dinv
    E = e.matrix
    F = tq.sigma(E)
    comm = D @ E - F @ D
    left = F @ D @ E @ Dinv @ F
    left_expected = F + F @ comm @ Dinv @ F
    right = E @ Dinv @ F @ D @ E
    right_expected = E - E @ Dinv @ comm @ E
    scale = max(opnorm(D) * opnorm(Dinv), 1.0) * max(opnorm(E), opnorm(F), 1.0) ** 3
    return (float(np.linalg.norm(left - left_expected, 2) / scale),
            float(np.linalg.norm(right - right_expected, 2) / scale))


def hormander_trace_index(t: TwistedTriple, e: Idempotent, p: int) -> complex:
    """Tr((1-ST)^p) - Tr((1-TS)^p) with T = D+_{e,s} and S the parametrix block Q-."""
    tq = t.amplify(e.q)
    c = compress(t, e)
    T = c.block_plus
    E = e.matrix
    Q = E @ tq.Dinv
    S = c.domain["+"].conj().T @ Q @ c.codomain["-"]
    one_v = np.eye(T.shape[1])
    one_w = np.eye(T.shape[0])
    a = np.linalg.matrix_power(one_v - S @ T, p) if T.shape[1] else np.zeros((0, 0))
    b = np.linalg.matrix_power(one_w - T @ S, p) if T.shape[0] else np.zeros((0, 0))
    return complex(np.trace(a) - np.trace(b))
