"""Connes-Chern cochains of a twisted triple: tau_2k, phi_m, psi_m, the doubled tau-bar, and homotopy transgression."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.integrate import simpson

from .cyclic import Cochain, connes_B, cyclic_T, hochschild_b, pair_cyclic_cocycle
from .errors import DomainError, InvalidFamily
from .ktheory import Idempotent, check_over
from .linalg import even_part, min_singular_value, opnorm
from .triple import DoubledTriple, TwistedTriple, invertible_double


def chern_constant(k: int) -> float:
    """c_k = (1/2) (-1)^k k!/(2k)!."""
    return 0.5 * (-1) ** k * factorial(k) / factorial(2 * k)


def _X(t: TwistedTriple, a):
    return t.Dinv @ (t.D @ a - t.sigma(a) @ t.D)


def _str_product(signs, mats):
    p = mats[0]
    for m in mats[1:-1]:
        p = p @ m
    if len(mats) == 1:
        return complex(np.dot(signs, np.diagonal(p)))
    # Tr(gamma P M) without forming the last product
    return complex(np.sum((signs[:, None] * p) * mats[-1].T))


def tau2k(t: TwistedTriple, k: int) -> Cochain:
    """tau(a^0..a^2k) = c_k Str(prod_j D^-1 [D, a^j]_sigma)."""
    if k < 1:
        raise DomainError("k must be >= 1")
    t.Dinv
    ck = chern_constant(k)
    signs = t.space.signs

    def ev(*a):
        return ck * _str_product(signs, [_X(t, x) for x in a])

    return Cochain(2 * k, ev, lift=lambda q: tau2k(t.amplify(q), k), name=f"tau{2 * k}",
                   cyclic=True, normalized=True)


def phi_m(t: TwistedTriple, m: int) -> Cochain:
    """phi_m(a^0..a^m) = Str(a^0 X(a^1) ... X(a^m))."""
    t.Dinv
    signs = t.space.signs

    def ev(*a):
        return _str_product(signs, [a[0]] + [_X(t, x) for x in a[1:]])

    return Cochain(m, ev, lift=lambda q: phi_m(t.amplify(q), m), name=f"phi{m}")


def psi_m(t: TwistedTriple, m: int) -> Cochain:
    """psi_m(a^0..a^m) = Str(sigma(a^0) [D,a^1]_s D^-1 ... [D,a^m]_s D^-1)."""
    t.Dinv
    signs = t.space.signs

    def ev(*a):
        mats = [t.sigma(a[0])] + [t.twisted_commutator(x) @ t.Dinv for x in a[1:]]
        return _str_product(signs, mats)

    return Cochain(m, ev, lift=lambda q: psi_m(t.amplify(q), m), name=f"psi{m}")


def supertrace_index(t: TwistedTriple, e: Idempotent, k: int) -> complex:
    """(1/2) Str((D^-1 [D, e]_sigma)^{2k+1}) on H^q."""
    check_over(t, e)
    tq = t.amplify(e.q)
    X = _X(tq, e.matrix)
    return 0.5 * complex(np.dot(tq.space.signs, np.diagonal(np.linalg.matrix_power(X, 2 * k + 1))))


def chern_pairing(t: TwistedTriple, e: Idempotent, k: int) -> complex:
    return pair_cyclic_cocycle(tau2k(t, k), e)


def residual_scale(t: TwistedTriple, args) -> float:
    """dim H times the product over slots of the largest operator built from each argument."""
    s = float(t.n)
    for a in args:
        sa = t.sigma(a)
        cands = [opnorm(a), opnorm(sa), opnorm(_X(t, a))]
        if t.invertible:
            cands.append(opnorm(t.Dinv @ sa @ t.D))
        s *= max(max(cands), 1e-300)
    return max(s, 1e-300)


# --- invertible double ---------------------------------------------------

def tau_bar_2k(t: TwistedTriple, k: int, double: DoubledTriple | None = None) -> Cochain:
    """tau^{D~}_2k(pi(a^0), ..., pi(a^2k)) restricted to the algebra; works for singular D."""
    d = double or invertible_double(t)
    inner = tau2k(d.triple, k)

    def ev(*a):
        return inner(*[d.embed(x) for x in a])

    return Cochain(2 * k, ev, lift=lambda q: tau_bar_2k(t.amplify(q), k), name=f"taubar{2 * k}",
                   cyclic=True, normalized=False)


def double_block_residual(t: TwistedTriple, e: Idempotent) -> float:
    """|| sigma~(pi e) D~ pi(e) - diag(sigma(e) D e, 0) ||."""
    tq = t.amplify(e.q)
    d = invertible_double(tq)
    pe = d.embed(e.matrix)
    lhs = d.triple.sigma(pe) @ d.Dtilde @ pe
    rhs = d.embed(tq.sigma(e.matrix) @ tq.D @ e.matrix)
    return float(np.linalg.norm(lhs - rhs, 2))


# --- homotopy --------------------------------------------------------------

@dataclass
class HomotopyFamily:
    """D_t = D + V_t with V_t piecewise polynomial (degree <= 3) in t on [0, 1].

    ``pieces`` is a list of ``(t0, t1, coeffs)``; on [t0, t1],
    V_t = sum_i coeffs[i] (t - t0)^i.  Coefficients must be odd and selfadjoint.
    """

    triple: TwistedTriple
    pieces: list
    name: str = "family"

    def __post_init__(self):
        if not self.pieces:
            raise InvalidFamily("family needs at least one piece")
        space = self.triple.space
        prev = 0.0
        for i, (t0, t1, coeffs) in enumerate(self.pieces):
            if abs(t0 - prev) > 1e-14 or t1 <= t0:
                raise InvalidFamily(f"piece {i} does not continue the partition of [0, 1]")
            if len(coeffs) > 4:
                raise InvalidFamily(f"piece {i} has degree above 3")
            for c in coeffs:
                c = np.asarray(c, complex)
                sc = max(opnorm(c), 1.0)
                if np.linalg.norm(c - c.conj().T, 2) > 1e-12 * sc or \
                        np.linalg.norm(even_part(c, space), 2) > 1e-12 * sc:
                    raise InvalidFamily(f"piece {i} has a coefficient that is not odd selfadjoint")
            prev = t1
        if abs(prev - 1.0) > 1e-14:
            raise InvalidFamily("pieces must cover [0, 1]")
        for i in range(1, len(self.pieces)):
            tb = self.pieces[i][0]
            left = self._piece(i - 1)
            right = self._piece(i)
            for deriv in (0, 1):
                if np.linalg.norm(self._eval(left, tb, deriv) - self._eval(right, tb, deriv)) > 1e-12:
                    raise InvalidFamily(f"family is not C1 at t = {tb}")
        if np.linalg.norm(self.V(0.0)) > 1e-14:
            raise InvalidFamily("V_0 must vanish so that D_0 = D")

    def _piece(self, i):
        t0, t1, coeffs = self.pieces[i]
        return t0, [np.asarray(c, complex) for c in coeffs]

    @staticmethod
    def _eval(piece, t, deriv):
        t0, coeffs = piece
        s = t - t0
        out = np.zeros_like(coeffs[0])
        for i, c in enumerate(coeffs):
            if deriv == 0:
                out = out + c * s ** i
            elif i >= 1:
                out = out + i * c * s ** (i - 1)
        return out

    def _locate(self, t):
        for i, (t0, t1, _) in enumerate(self.pieces):
            if t <= t1 or i == len(self.pieces) - 1:
                return self._piece(i)

    def V(self, t):
        return self._eval(self._locate(t), t, 0)

    def Vdot(self, t):
        return self._eval(self._locate(t), t, 1)

    def D(self, t):
        return self.triple.D + self.V(t)

    def at(self, t) -> TwistedTriple:
        return self.triple.with_operator(self.D(t))


def polynomial_family(t: TwistedTriple, coeffs, name="polynomial") -> HomotopyFamily:
    """V_t = sum_i coeffs[i-1] t^i, i >= 1."""
    zero = np.zeros_like(t.D)
    return HomotopyFamily(t, [(0.0, 1.0, [zero] + list(coeffs))], name=name)


def random_odd_selfadjoint(space, rng, norm: float = 1.0) -> np.ndarray:
    n = space.dim
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    Z = Z + Z.conj().T
    Z = Z - even_part(Z, space)
    return norm * Z / max(opnorm(Z), 1e-300)


def doubled_family(t: TwistedTriple) -> tuple:
    """(double, family) with D~_t = D~_0 + tJ over the unitized algebra; needs D invertible."""
    d = invertible_double(t)
    n = t.n
    J = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    D0 = np.block([[t.D, np.zeros((n, n))], [np.zeros((n, n)), -t.D]])
    base = d.triple.with_operator(D0)
    return d, HomotopyFamily(base, [(0.0, 1.0, [np.zeros_like(J), J])], name="double tJ")


class _GridData:
    def __init__(self, fam: HomotopyFamily, panels: int):
        self.ts = np.linspace(0.0, 1.0, panels + 1)
        Ds = np.array([fam.D(s) for s in self.ts])
        self.min_singular = min(min_singular_value(D) for D in Ds)
        scale = max(opnorm(fam.triple.D), 1.0)
        if self.min_singular <= 1e-8 * scale:
            raise InvalidFamily(f"D_t is near-singular on the grid (min singular value {self.min_singular:.2e})")
        self.D = Ds
        self.Dinv = np.linalg.inv(Ds)
        self.Vdot = np.array([fam.Vdot(s) for s in self.ts])


def eta_cochain(fam: HomotopyFamily, k: int, panels: int = 64) -> Cochain:
    """eta = sum_j int_0^1 eta_j^t dt, a degree 2k+1 cochain, by composite Simpson."""
    if panels % 2:
        raise DomainError("Simpson needs an even number of panels")
    g = _GridData(fam, panels)
    sigma = fam.triple.sigma
    signs = fam.triple.space.signs
    m = 2 * k + 1

    def ev(*a):
        sa = [sigma(x) for x in a]
        X = [g.Dinv @ (g.D @ x - s @ g.D) for x, s in zip(a, sa)]
        VD = g.Vdot @ g.Dinv
        total = np.zeros(len(g.ts), complex)
        for j in range(1, m + 1):
            delta = g.Dinv @ (VD @ sa[j] - sa[j] @ VD) @ g.D
            alpha = a[0] if j % 2 == 0 else g.Dinv @ sa[0] @ g.D
            p = np.broadcast_to(alpha, g.D.shape)
            for i in range(1, m + 1):
                p = p @ (delta if i == j else X[i])
            total += np.einsum("i,tii->t", signs, p)
        return simpson(total, x=g.ts)

    return Cochain(m, ev, name=f"eta{m}")


@dataclass
class HomotopyReport:
    pairing_values: list
    pairing_deviation: float
    transgression_residual: float
    transgression_residual_refined: float
    transgression_scale: float
    refinement_ratio: float
    b_eta_residual: float
    b_eta_scale: float
    min_singular: float
    notes: dict = field(default_factory=dict)


def homotopy_invariance_check(fam: HomotopyFamily, e: Idempotent, k: int, tuples,
                              panels: int = 64, grid: int = 17) -> HomotopyReport:
    """Pairing constancy on a uniform grid, the transgression identity and b(eta) = 0.

    ``tuples`` are (2k+2)-tuples of algebra elements; the first 2k+1 entries
    are used for the transgression identity.
    """
    ts = np.linspace(0.0, 1.0, grid)
    pairs = [pair_cyclic_cocycle(tau2k(fam.at(s), k), e) for s in ts]
    dev = max(abs(p - pairs[0]) for p in pairs)
    t0, t1 = fam.at(0.0), fam.at(1.0)
    tau0, tau1 = tau2k(t0, k), tau2k(t1, k)
    const = (2 * k + 1) / chern_constant(k)
    results = {}
    for N in (panels, 2 * panels):
        eta = eta_cochain(fam, k, N)
        Beta = connes_B(eta)
        resid = 0.0
        scale = 0.0
        for args in tuples:
            args = args[:2 * k + 1]
            lhs = Beta(*args)
            rhs = const * (tau1(*args) - tau0(*args))
            resid = max(resid, abs(lhs - rhs))
            scale = max(scale, abs(const) * max(residual_scale(t0, args), residual_scale(t1, args)))
        results[N] = (resid, scale, eta)
    eta = results[panels][2]
    beta = hochschild_b(eta)
    bres = 0.0
    bscale = 0.0
    for args in tuples:
        pad = list(args) + [args[0]] * max(0, 2 * k + 3 - len(args))
        args = pad[:2 * k + 3]
        bres = max(bres, abs(beta(*args)))
        bscale = max(bscale, max(residual_scale(t0, args), residual_scale(t1, args)))
    r1, s1, _ = results[panels]
    r2, _, _ = results[2 * panels]
    ratio = r1 / r2 if r2 > 0 else float("inf")
    g = _GridData(fam, panels)
    return HomotopyReport([complex(p) for p in pairs], float(dev), float(r1), float(r2), float(s1),
                          float(ratio), float(bres), float(bscale), float(g.min_singular),
                          {"panels": panels, "grid": grid, "k": k, "family": fam.name})


def cocycle_residuals(t: TwistedTriple, k: int, tuples) -> dict:
    """Max relative residuals of the phi, psi boundary relations and of b tau = 0, T tau = tau, normalization."""
    tau = tau2k(t, k)
    ck = chern_constant(k)
    phi_o, psi_o = phi_m(t, 2 * k + 1), psi_m(t, 2 * k + 1)
    phi_e, psi_e = phi_m(t, 2 * k), psi_m(t, 2 * k)
    phi_l, psi_l = phi_m(t, 2 * k - 1), psi_m(t, 2 * k - 1)
    Bphi, Bpsi = connes_B(phi_o), connes_B(psi_o)
    bphi, bpsi = hochschild_b(phi_l), hochschild_b(psi_l)
    btau, Ttau = hochschild_b(tau), cyclic_T(tau)
    out = {key: 0.0 for key in ("B_phi", "B_psi", "b_phi", "b_psi", "tau_split", "phi_psi",
                                "b_tau", "T_tau", "normalized")}
    one = np.eye(t.n)
    Dinv, D = t.Dinv, t.D
    for args in tuples:
        a = list(args[:2 * k + 1])
        sc = residual_scale(t, a)
        tv = tau(*a) / ck
        out["B_phi"] = max(out["B_phi"], abs(Bphi(*a) - (2 * k + 1) * tv) / sc)
        out["B_psi"] = max(out["B_psi"], abs(Bpsi(*a) + (2 * k + 1) * tv) / sc)
        out["b_phi"] = max(out["b_phi"], abs(bphi(*a) - phi_e(*a)) / sc)
        out["b_psi"] = max(out["b_psi"], abs(bpsi(*a) + psi_e(*a)) / sc)
        out["tau_split"] = max(out["tau_split"], abs(tv - phi_e(*a) - psi_e(*a)) / sc)
        alt = -phi_e(Dinv @ t.sigma(a[0]) @ D, *a[1:])
        out["phi_psi"] = max(out["phi_psi"], abs(psi_e(*a) - alt) / sc)
        out["T_tau"] = max(out["T_tau"], abs(Ttau(*a) - tau(*a)) / sc)
        for j in range(1, 2 * k + 1):
            v = tau(*a[:j], one, *a[j + 1:])
            out["normalized"] = max(out["normalized"], abs(v) / sc)
        b_args = list(args[:2 * k + 2])
        if len(b_args) == 2 * k + 2:
            out["b_tau"] = max(out["b_tau"], abs(btau(*b_args)) / residual_scale(t, b_args))
    return out
