"""Projective modules eA^q, sigma-connections and the coupled operator D_nabla.

Modules are never built as tensor products.  Everything is computed on
eH^q through U_e(xi x zeta) = (xi_j zeta)_j, whose inverse sends (zeta_j) to
sum_j e_j x zeta_j with e_j the columns of e.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chern import chern_pairing, tau_bar_2k
from .cyclic import pair_cyclic_cocycle
from .errors import InvalidConnection
from .index import (CompressedOperator, compress, fredholm_index, fredholm_index_of,
                    s_e_inner_product_residual)
from .ktheory import Idempotent, check_over
from .linalg import numerical_rank, opnorm, range_basis
from .triple import TwistedTriple


@dataclass
class ProjectiveModule:
    triple: TwistedTriple
    e: Idempotent

    def __post_init__(self):
        check_over(self.triple, self.e)
        self.sigma_e = self.triple.sigma.amplify(self.e.q, self.triple.n)(self.e.matrix)

    @property
    def q(self):
        return self.e.q

    def column(self, j: int) -> np.ndarray:
        """e_j, the j-th column of e, as a q x 1 block column (qn x n)."""
        n = self.triple.n
        return self.e.matrix[:, j * n:(j + 1) * n]

    def metric_rank_deficit(self) -> int:
        """dim ker of t(xi) = e* xi on the range of e; zero means the canonical metric is nondegenerate."""
        U = range_basis(self.e.matrix, self.triple.rank_tol)[0]
        if U.shape[1] == 0:
            return 0
        return U.shape[1] - numerical_rank(self.e.matrix.conj().T @ U, self.triple.rank_tol)

    def s_e_residual(self) -> float:
        return s_e_inner_product_residual(self.e.matrix, self.triple.rank_tol)


def U_e(m: ProjectiveModule, xis, zetas) -> np.ndarray:
    """U_e(sum_r xi_r x zeta_r); each xi_r is a qn x n block column with entries in A."""
    out = np.zeros(m.q * m.triple.n, complex)
    for xi, z in zip(xis, zetas):
        out += xi @ z
    return out


def U_e_inverse(m: ProjectiveModule, v) -> tuple:
    """Split v in eH^q into (e_j, zeta_j) pairs."""
    n = m.triple.n
    v = np.asarray(v, complex)
    return [m.column(j) for j in range(m.q)], [v[j * n:(j + 1) * n] for j in range(m.q)]


def canonical_iso_residual(m: ProjectiveModule, rng, count: int = 4) -> float:
    """max || U_e U_e^-1 v - v || over random v in eH^q."""
    worst = 0.0
    for _ in range(count):
        v = m.e.matrix @ (rng.standard_normal(m.q * m.triple.n) + 1j * rng.standard_normal(m.q * m.triple.n))
        worst = max(worst, float(np.linalg.norm(U_e(m, *U_e_inverse(m, v)) - v) / max(np.linalg.norm(v), 1e-300)))
    return worst


@dataclass
class SigmaConnection:
    """Grassmannian connection plus an optional Hom part v -> sigma(e) Omega v.

    ``omega`` is a qn x qn block matrix of odd twisted one-forms.
    """

    module: ProjectiveModule
    omega: np.ndarray | None = None
    terms: list = field(default_factory=list)

    @property
    def kind(self) -> str:
        return "grassmannian" if self.omega is None else "grassmannianPlusHom"

    def hom_operator(self) -> np.ndarray:
        F, E = self.module.sigma_e, self.module.e.matrix
        if self.omega is None:
            return np.zeros_like(E)
        return F @ self.omega @ E


def grassmannian_connection(m: ProjectiveModule) -> SigmaConnection:
    return SigmaConnection(m)


def one_form_connection(m: ProjectiveModule, terms) -> SigmaConnection:
    """Perturb by entries sigma(e) a [D, b]_sigma e, from a list of (i, j, a, b)."""
    t = m.triple
    n, q = t.n, m.q
    omega = np.zeros((q * n, q * n), complex)
    for i, j, a, b in terms:
        if not (0 <= i < q and 0 <= j < q):
            raise InvalidConnection(f"entry ({i}, {j}) is outside M_{q}")
        omega[i * n:(i + 1) * n, j * n:(j + 1) * n] += np.asarray(a) @ t.twisted_commutator(b)
    return SigmaConnection(m, omega, list(terms))


def hom_connection(m: ProjectiveModule, hom) -> SigmaConnection:
    """Connection from an explicit Hom part, checked to map eH^q into sigma(e)H^q."""
    hom = np.asarray(hom, complex)
    F, E = m.sigma_e, m.e.matrix
    if np.linalg.norm(F @ hom @ E - hom @ E, 2) > 1e-10 * max(opnorm(hom), 1.0):
        raise InvalidConnection("Hom part does not map into the range of sigma(e)")
    return SigmaConnection(m, hom)


def grassmannian_realized(m: ProjectiveModule) -> np.ndarray:
    """U_{s(e)} D_nabla0 U_e^-1 from the defining formula, as an operator on H^q composed with e.

    On e_j x zeta it gives sigma(e_j) D zeta + sum_l sigma(e)_{.l} [D, e_lj]_sigma zeta.
    """
    t = m.triple
    tq = t.amplify(m.q)
    E, F = m.e.matrix, m.sigma_e
    Dq = tq.D
    comm = Dq @ E - F @ Dq
    R = F @ Dq + F @ comm
    return R @ E


@dataclass
class CoupledOperator:
    realized: np.ndarray
    compressed: CompressedOperator


def couple_operator(t: TwistedTriple, conn: SigmaConnection) -> CoupledOperator:
    m = conn.module
    base = compress(t, m.e)
    M = grassmannian_realized(m) + conn.hom_operator()
    dom, cod = base.domain, base.codomain
    bp = cod["-"].conj().T @ M @ dom["+"]
    bm = cod["+"].conj().T @ M @ dom["-"]
    # M must be odd: it maps even ranges to odd ranges
    leak = 0.0
    for s, d in (("+", dom["+"]), ("-", dom["-"])):
        if d.shape[1]:
            same = cod[s]
            leak = max(leak, float(np.linalg.norm(same.conj().T @ M @ d)) if same.shape[1] else 0.0)
    if leak > 1e-9 * max(opnorm(M), 1.0):
        raise InvalidConnection("coupled operator is not odd")
    comp = CompressedOperator(dom, cod, bp, bm, 0.0, list(base.warnings))
    return CoupledOperator(M, comp)


def coupled_vs_compressed(t: TwistedTriple, m: ProjectiveModule) -> float:
    """|| U D_nabla0 U^-1 - D_{e,sigma} || relative to ||D||."""
    E, F = m.e.matrix, m.sigma_e
    Dq = t.amplify(m.q).D
    return float(np.linalg.norm(grassmannian_realized(m) - F @ Dq @ E, 2) / max(opnorm(t.D), 1e-300))


def connection_index_theorem(t: TwistedTriple, conn: SigmaConnection, k: int = 1) -> dict:
    """Coupled-operator index, kernel-count index of e, and the tau-bar pairing."""
    m = conn.module
    co = couple_operator(t, conn)
    ip, im, ind = fredholm_index_of(co.compressed, t.rank_tol)
    out = {
        "coupled_index": ind,
        "coupled_ind_plus": ip,
        "coupled_ind_minus": im,
        "index": fredholm_index(t, m.e).index,
        "tau_bar_pairing": complex(pair_cyclic_cocycle(tau_bar_2k(t, k), m.e)),
    }
    if t.invertible:
        out["tau_pairing"] = complex(chern_pairing(t, m.e, k))
    return out
