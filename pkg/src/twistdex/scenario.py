"""Scenario files, the named check suites, and report assembly."""
from __future__ import annotations

import json
import math
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import __version__
from .algebra import (ElementSampler, Identity, Inner, Linear, MatrixAlgebra, diagonal_algebra,
                      full_even_algebra, sample_elements, scalar_algebra)
from .chern import (chern_pairing, cocycle_residuals, double_block_residual, doubled_family,
                    homotopy_invariance_check, polynomial_family, random_odd_selfadjoint,
                    supertrace_index, tau2k, tau_bar_2k)
from .connections import (ProjectiveModule, canonical_iso_residual, connection_index_theorem,
                          coupled_vs_compressed, grassmannian_connection, one_form_connection)
from .cyclic import (Cochain, connes_B, cyclic_T, hochschild_b, normalizer_A, pair_cyclic_cocycle,
                     pair_normalized_even, periodicity_S)
from .errors import NoRibbonStructure, RibbonConstructionFailure, ScenarioError, TwistdexError
from .index import (adjoint_identity_check, dimension_count_index, fredholm_index,
                    hormander_trace_index, parametrix_check)
from .ktheory import (Idempotent, conjugate, direct_sum, graded_projection, random_invertible,
                      sigma_of_idempotent, sigma_selfadjoint_conjugate, zero_idempotent)
from .linalg import GradedSpace, even_part, min_singular_value, opnorm
from .triple import (TwistedTriple, conformal_commutator_residual, conformal_deformation,
                     invertible_double, validate_triple)

FORMAT_VERSION = 1
REPORT_SCHEMA = 1

DEFAULT_TOLERANCES = {
    "rank": 1e-9,
    "index": 1e-8,
    "cocycle": 1e-8,
    "conformal": 1e-10,
    "ribbon": 1e-9,
    "adjoint": 1e-9,
    "parametrix": 1e-9,
    "connection": 1e-10,
    "transgression": 1e-6,
    "bEta": 1e-6,
    "refinement": 8.0,
    "double": 1e-12,
    "idempotent": 1e-9,
}


# --- parsing -----------------------------------------------------------------

def _need(d, key, loc, kind=None, default=ScenarioError):
    if not isinstance(d, dict):
        raise ScenarioError("expected an object", loc)
    if key not in d:
        if default is ScenarioError:
            raise ScenarioError(f"missing required field '{key}'", loc)
        return default
    v = d[key]
    if kind is not None and not isinstance(v, kind) or isinstance(v, bool) and kind in (int, float, (int, float)):
        raise ScenarioError(f"field has the wrong type ({type(v).__name__})", f"{loc}.{key}")
    return v


def parse_complex(x, loc):
    if isinstance(x, bool):
        raise ScenarioError("expected a number or [re, im]", loc)
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ScenarioError("expected a number or [re, im]", loc)


def parse_matrix(x, loc, shape=None) -> np.ndarray:
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise ScenarioError("expected a row-major nested array", loc)
    cols = len(x[0])
    rows = []
    for i, r in enumerate(x):
        if len(r) != cols:
            raise ScenarioError("ragged matrix rows", f"{loc}[{i}]")
        rows.append([parse_complex(v, f"{loc}[{i}][{j}]") for j, v in enumerate(r)])
    m = np.array(rows, dtype=complex)
    if shape is not None and m.shape != shape:
        raise ScenarioError(f"matrix has shape {m.shape}, expected {shape}", loc)
    return m


def encode_matrix(m) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, complex)]


def load_scenario(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", "$") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from exc
    validate_scenario(data)
    return data


def validate_scenario(data):
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object", "$")
    fv = _need(data, "formatVersion", "$", int)
    if fv != FORMAT_VERSION:
        raise ScenarioError(f"unsupported formatVersion {fv}", "$.formatVersion")
    _need(data, "name", "$", str)
    _need(data, "seed", "$", int)
    sp = _need(data, "space", "$", dict)
    _need(sp, "plus", "$.space", int)
    _need(sp, "minus", "$.space", int)
    checks = _need(data, "checks", "$", list)
    for i, c in enumerate(checks):
        if c not in CHECKS:
            raise ScenarioError(f"unknown check '{c}'", f"$.checks[{i}]")
    tol = _need(data, "tolerances", "$", dict, {})
    for k, v in tol.items():
        if k not in DEFAULT_TOLERANCES:
            raise ScenarioError(f"unknown tolerance '{k}'", f"$.tolerances.{k}")
        if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
            raise ScenarioError("tolerance must be a positive number", f"$.tolerances.{k}")


# --- building ----------------------------------------------------------------

def _salted_rng(seed, salt):
    return np.random.default_rng([int(seed) % 2 ** 63, zlib.crc32(str(salt).encode())])


def _build_space(data):
    sp = data["space"]
    try:
        return GradedSpace.standard(sp["plus"], sp["minus"])
    except TwistdexError as exc:
        raise ScenarioError(str(exc), "$.space") from exc


def _build_algebra(data, space):
    spec = _need(data, "algebra", "$", dict, {"kind": "full-even"})
    kind = _need(spec, "kind", "$.algebra", str)
    n = space.dim
    try:
        if kind == "full-even":
            return full_even_algebra(space)
        if kind == "scalar":
            return scalar_algebra(space)
        if kind == "diagonal":
            projs = _need(spec, "projections", "$.algebra", list)
            mats = []
            for i, p in enumerate(projs):
                if not isinstance(p, list) or len(p) != n:
                    raise ScenarioError(f"projection must list {n} diagonal entries", f"$.algebra.projections[{i}]")
                mats.append(np.diag([parse_complex(v, f"$.algebra.projections[{i}][{j}]") for j, v in enumerate(p)]))
            return diagonal_algebra(space, mats)
        if kind == "generators":
            gens = _need(spec, "generators", "$.algebra", list)
            return MatrixAlgebra(space, [parse_matrix(g, f"$.algebra.generators[{i}]", (n, n))
                                         for i, g in enumerate(gens)], name="generated")
    except TwistdexError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc), "$.algebra") from exc
    raise ScenarioError(f"unknown algebra kind '{kind}'", "$.algebra.kind")


def _build_D(data, space, rng):
    spec = _need(data, "D", "$", dict)
    kind = _need(spec, "kind", "$.D", str)
    n = space.dim
    if kind == "zero":
        return np.zeros((n, n), complex)
    if kind == "explicit":
        return parse_matrix(_need(spec, "matrix", "$.D"), "$.D.matrix", (n, n))
    if kind == "random-odd-selfadjoint":
        lo, hi = _need(spec, "singularRange", "$.D", list, [0.5, 1.5])
        drop = _need(spec, "kernelDrop", "$.D", int, 0)
        p, m = space.dim_plus, space.dim_minus
        r = min(p, m)
        if drop > r:
            raise ScenarioError("kernelDrop exceeds the possible rank", "$.D.kernelDrop")
        U = sla.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))[0]
        V = sla.qr(rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p)))[0]
        s = np.zeros((m, p))
        vals = rng.uniform(lo, hi, r)
        vals[r - drop:] = 0
        s[:r, :r] = np.diag(vals)
        B = U @ s @ V.conj().T
        D = np.zeros((n, n), complex)
        D[np.ix_(space.minus, space.plus)] = B
        D[np.ix_(space.plus, space.minus)] = B.conj().T
        return D
    raise ScenarioError(f"unknown D kind '{kind}'", "$.D.kind")


def _build_positive(spec, loc, space, alg, rng):
    kind = _need(spec, "kind", loc, str)
    n = space.dim
    if kind == "explicit":
        return parse_matrix(_need(spec, "matrix", loc), f"{loc}.matrix", (n, n))
    if kind == "scalar":
        return parse_complex(_need(spec, "value", loc), f"{loc}.value").real * np.eye(n)
    if kind == "random-positive":
        strength = _need(spec, "strength", loc, (int, float), 0.7)
        a = sample_elements(alg, ElementSampler(seed=int(rng.integers(2 ** 63))), 1)[0]
        h = (a + a.conj().T) / 2
        h = h - np.trace(h) / n * np.eye(n)
        return sla.expm(strength * h / max(opnorm(h), 1e-300))
    raise ScenarioError(f"unknown positive-element kind '{kind}'", f"{loc}.kind")


def _build_sigma(data, space, alg, rng):
    spec = _need(data, "automorphism", "$", dict, {"kind": "identity"})
    kind = _need(spec, "kind", "$.automorphism", str)
    n = space.dim
    try:
        if kind == "identity":
            return Identity()
        if kind == "inner":
            k = _build_positive(_need(spec, "k", "$.automorphism", dict), "$.automorphism.k", space, alg, rng)
            return Inner(k)
        if kind == "linear":
            basis = [parse_matrix(b, f"$.automorphism.basis[{i}]", (n, n))
                     for i, b in enumerate(_need(spec, "basis", "$.automorphism", list))]
            images = [parse_matrix(b, f"$.automorphism.images[{i}]", (n, n))
                      for i, b in enumerate(_need(spec, "images", "$.automorphism", list))]
            return Linear(basis, images)
    except TwistdexError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc), "$.automorphism") from exc
    raise ScenarioError(f"unknown automorphism kind '{kind}'", "$.automorphism.kind")


def _block_entry(x, loc, alg):
    n = alg.n
    if x == "unit":
        return alg.unit()
    if x == "zero":
        return np.zeros((n, n), complex)
    if isinstance(x, int) and not isinstance(x, bool):
        if not 0 <= x < len(alg.generators):
            raise ScenarioError("generator index out of range", loc)
        return alg.generators[x]
    return parse_matrix(x, loc, (n, n))


def _build_idempotents(data, t, rng):
    specs = _need(data, "idempotents", "$", list, [{"kind": "unit"}])
    out = []
    n = t.n
    for i, spec in enumerate(specs):
        loc = f"$.idempotents[{i}]"
        kind = _need(spec, "kind", loc, str)
        q = _need(spec, "q", loc, int, 1)
        name = _need(spec, "name", loc, str, f"e{i}")
        if q < 1:
            raise ScenarioError("q must be >= 1", f"{loc}.q")
        try:
            if kind == "unit":
                e = Idempotent(q, n, np.eye(q * n))
            elif kind == "zero":
                e = zero_idempotent(n, q)
            elif kind == "explicit":
                e = Idempotent(q, n, parse_matrix(_need(spec, "matrix", loc), f"{loc}.matrix", (q * n, q * n)))
            elif kind in ("graded", "blocks"):
                if kind == "graded":
                    P = graded_projection(t.space, q, _need(spec, "plus", loc, int), _need(spec, "minus", loc, int))
                else:
                    blocks = _need(spec, "blocks", loc, list)
                    if len(blocks) != q:
                        raise ScenarioError(f"need {q} diagonal blocks", f"{loc}.blocks")
                    P = sla.block_diag(*[_block_entry(b, f"{loc}.blocks[{j}]", t.algebra)
                                         for j, b in enumerate(blocks)])
                strength = _need(spec, "conjugation", loc, (int, float), 0.0)
                e = Idempotent(q, n, P)
                if strength > 0:
                    e = conjugate(e, random_invertible(t, q, rng, strength))
            else:
                raise ScenarioError(f"unknown idempotent kind '{kind}'", f"{loc}.kind")
        except TwistdexError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(str(exc), loc) from exc
        out.append((name, e))
    return out


class Context:
    """Everything a check needs, built deterministically from a scenario."""

    def __init__(self, data: dict, seed_override=None, rank_tol=None):
        validate_scenario(data)
        self.data = data
        self.seed = int(seed_override if seed_override is not None else data["seed"])
        self.tol = dict(DEFAULT_TOLERANCES)
        self.tol.update(data.get("tolerances", {}))
        if rank_tol is not None:
            self.tol["rank"] = float(rank_tol)
        rng = _salted_rng(self.seed, "build")
        space = _build_space(data)
        alg = _build_algebra(data, space)
        D = _build_D(data, space, rng)
        sigma = _build_sigma(data, space, alg, rng)
        p = _need(data, "summability", "$", (int, float), 1.0)
        base = TwistedTriple(alg, D, sigma, float(p), self.tol["rank"])
        self.base = base
        self.conformal_k = None
        conf = _need(data, "conformal", "$", dict, None)
        if conf is not None:
            k = _build_positive(_need(conf, "k", "$.conformal", dict), "$.conformal.k", space, alg, rng)
            try:
                self.triple = conformal_deformation(base, k)
            except TwistdexError as exc:
                raise ScenarioError(str(exc), "$.conformal") from exc
            self.conformal_k = k
        else:
            self.triple = base
        self.idempotents = _build_idempotents(data, self.triple, rng)
        samples = _need(data, "samples", "$", dict, {})
        self.n_tuples = _need(samples, "tuples", "$.samples", int, 50)
        self.max_word = _need(samples, "maxWordLength", "$.samples", int, 2)
        degs = _need(data, "cocycleDegrees", "$", list, [1, 2, 3])
        if not degs or not all(isinstance(k, int) and k >= 1 for k in degs):
            raise ScenarioError("cocycle degrees must be positive integers", "$.cocycleDegrees")
        self.degrees = degs
        self.homotopy = _need(data, "homotopy", "$", list, [{"kind": "double"}])
        self.connections = _need(data, "connections", "$", dict, {})
        self.checks = data["checks"]

    def rng(self, salt):
        return _salted_rng(self.seed, salt)

    def tuples(self, algebra, length, count, salt):
        base = zlib.crc32(str(salt).encode())
        return [sample_elements(algebra, ElementSampler(seed=(self.seed * 1_000_003 + base + i) % 2 ** 63,
                                                        max_word_length=self.max_word), length)
                for i in range(count)]

    @cached_property
    def double(self):
        return invertible_double(self.triple)

    @cached_property
    def ribbon(self) -> bool:
        try:
            self.triple.sigma.sqrt()
            return True
        except NoRibbonStructure:
            return False

    def working(self):
        """(triple, embed) with an invertible operator: the triple itself or its double."""
        if self.triple.invertible:
            return self.triple, lambda e: e
        d = self.double

        def emb(e):
            return Idempotent(e.q, 2 * e.n, d.embed(e.matrix))
        return d.triple, emb


# --- checks -------------------------------------------------------------------

@dataclass
class CheckInfo:
    name: str
    operation: str
    module: str
    anchor: str
    fn: object = field(repr=False)


CHECKS: dict = {}


def check(name, operation, module, anchor):
    def deco(fn):
        CHECKS[name] = CheckInfo(name, operation, module, anchor, fn)
        return fn
    return deco


def record(values, residual, scale, ok, subject=None):
    r = {"values": values, "residual": float(residual), "scale": float(scale), "pass": bool(ok)}
    if subject is not None:
        r["subject"] = subject
    return r


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


@check("validate-triple", "validateTriple", "triple", "twisted spectral triple axioms")
def _validate(ctx):
    rep = validate_triple(ctx.triple, ElementSampler(ctx.seed, ctx.max_word), 8)
    worst = max(rep.residuals.values())
    return [record({"residuals": rep.residuals, "failures": rep.failures(), **rep.notes},
                   worst, 1.0, rep.ok)]


@check("conformal", "conformalDeformation", "triple", "conformal perturbation kDk with inner twist k^2 a k^-2")
def _conformal(ctx):
    if ctx.conformal_k is None:
        return [record({"applicable": False}, 0.0, 1.0, True)]
    els = sample_elements(ctx.base.algebra, ElementSampler(ctx.seed + 17, ctx.max_word), 10)
    worst = 0.0
    for a in els:
        r, s = conformal_commutator_residual(ctx.triple, ctx.base, ctx.conformal_k, a)
        worst = max(worst, r / s)
    rep = validate_triple(ctx.triple, ElementSampler(ctx.seed + 18, ctx.max_word), 8)
    ok = worst <= ctx.tol["conformal"] and rep.ok
    return [record({"commutatorIdentity": worst, "validators": rep.ok}, worst, 1.0, ok)]


@check("sigma-translate", "sigmaOfIdempotent", "ktheory", "sigma-translate of an idempotent")
def _translate(ctx):
    out = []
    for name, e in ctx.idempotents:
        f = sigma_of_idempotent(ctx.triple, e).matrix
        r = np.linalg.norm(f @ f - f, 2) / max(opnorm(f), 1.0) ** 2
        out.append(record({"q": e.q}, r, 1.0, r <= ctx.tol["idempotent"], name))
    return out


@check("index", "fredholmIndex", "index", "twisted index map ind D_{e,sigma}")
def _index(ctx):
    out = []
    for name, e in ctx.idempotents:
        rep = fredholm_index(ctx.triple, e)
        ip, im, ind = dimension_count_index(ctx.triple, e)
        resid = abs(rep.index - ind) + abs(rep.ind_plus - ip) + abs(rep.ind_minus - im)
        integral = abs(rep.index - round(rep.index)) <= ctx.tol["index"]
        ok = resid == 0 and (integral or not ctx.ribbon)
        vals = {**rep.as_dict(), "dimensionCount": ind, "ribbon": ctx.ribbon,
                "parity": "integer" if integral else "half-integer", "warnings": rep.warnings}
        out.append(record(vals, resid, 1.0, ok, name))
    return out


@check("adjoint-identity", "adjointIdentityCheck", "index", "adjoint of D_{e,sigma} through S_e")
def _adjoint(ctx):
    out = []
    for name, e in ctx.idempotents:
        r = adjoint_identity_check(ctx.triple, e)
        out.append(record({}, r, 1.0, r <= ctx.tol["adjoint"], name))
    return out


@check("parametrix", "parametrixCheck", "index", "parametrix Q_{e,sigma} = e D^-1")
def _parametrix(ctx):
    t, emb = ctx.working()
    out = []
    for name, e in ctx.idempotents:
        left, right = parametrix_check(t, emb(e))
        r = max(left, right)
        out.append(record({"left": left, "right": right, "doubled": t is not ctx.triple},
                          r, 1.0, r <= ctx.tol["parametrix"], name))
    return out


@check("hormander", "parametrixCheck", "index", "Schatten trace formula for the index")
def _hormander(ctx):
    t, emb = ctx.working()
    out = []
    for name, e in ctx.idempotents:
        ind_plus = fredholm_index(ctx.triple, e).ind_plus
        vals = {p: hormander_trace_index(t, emb(e), p) for p in (1, 2, 3)}
        r = max(abs(v - ind_plus) for v in vals.values())
        out.append(record({"indPlus": ind_plus, "traces": {str(p): _c(v) for p, v in vals.items()},
                           "doubled": t is not ctx.triple}, r, 1.0, r <= ctx.tol["index"], name))
    return out


@check("supertrace-index", "tau2k", "chern", "index as a supertrace of (D^-1[D,e]_sigma)^(2k+1)")
def _supertrace(ctx):
    t, emb = ctx.working()
    out = []
    for name, e in ctx.idempotents:
        ind = fredholm_index(ctx.triple, e).index
        vals = {k: supertrace_index(t, emb(e), k) for k in ctx.degrees}
        r = max(abs(v - ind) for v in vals.values())
        out.append(record({"index": ind, "supertrace": {str(k): _c(v) for k, v in vals.items()},
                           "doubled": t is not ctx.triple}, r, 1.0, r <= ctx.tol["index"], name))
    return out


@check("chern-pairing", "tau2k", "chern", "index formula ind D_{e,sigma} = <tau_2k, e>")
def _chern(ctx):
    if not ctx.triple.invertible:
        return [record({"applicable": False, "reason": "D singular; see tau-bar"}, 0.0, 1.0, True)]
    out = []
    for name, e in ctx.idempotents:
        ind = fredholm_index(ctx.triple, e).index
        vals = {k: chern_pairing(ctx.triple, e, k) for k in ctx.degrees}
        r = max(abs(v - ind) for v in vals.values())
        spread = max(abs(a - b) for a in vals.values() for b in vals.values())
        out.append(record({"index": ind, "pairing": {str(k): _c(v) for k, v in vals.items()},
                           "spreadAcrossK": spread}, max(r, spread), 1.0,
                          max(r, spread) <= ctx.tol["index"], name))
    return out


@check("tau-bar", "tauBar2k", "chern", "index formula through the invertible double")
def _taubar(ctx):
    out = []
    for name, e in ctx.idempotents:
        ind = fredholm_index(ctx.triple, e).index
        vals = {k: pair_cyclic_cocycle(tau_bar_2k(ctx.triple, k, ctx.double), e) for k in ctx.degrees}
        r = max(abs(v - ind) for v in vals.values())
        block = double_block_residual(ctx.triple, e)
        v = {"index": ind, "pairing": {str(k): _c(x) for k, x in vals.items()}, "blockIdentity": block}
        ok = r <= ctx.tol["index"] and block <= ctx.tol["double"] * max(opnorm(ctx.triple.D), 1.0) * max(opnorm(e.matrix), 1.0) ** 2
        if ctx.triple.invertible:
            agree = max(abs(vals[k] - chern_pairing(ctx.triple, e, k)) for k in ctx.degrees)
            v["agreementWithTau"] = agree
            ok = ok and agree <= ctx.tol["index"]
            r = max(r, agree)
        out.append(record(v, r, 1.0, ok, name))
    return out


@check("double", "invertibleDouble", "triple", "unital invertible double D~ = D~0 + J")
def _double(ctx):
    d = ctx.double
    Dt, g = d.Dtilde, d.space.gamma()
    n = ctx.triple.n
    anti = float(np.linalg.norm(g @ Dt + Dt @ g, 2))
    sq = Dt @ Dt
    D2 = ctx.triple.D @ ctx.triple.D
    target = np.block([[D2 + np.eye(n), np.zeros((n, n))], [np.zeros((n, n)), D2 + np.eye(n)]])
    sqr = float(np.linalg.norm(sq - target, 2)) / max(opnorm(D2), 1.0)
    smin = min_singular_value(Dt)
    out = [record({"anticommutator": anti, "squareIdentity": sqr, "minSingular": smin},
                  max(anti, sqr), 1.0, max(anti, sqr) <= ctx.tol["double"] * 10 and smin >= 1 - 1e-12)]
    for name, e in ctx.idempotents:
        de = Idempotent(e.q, 2 * n, d.embed(e.matrix))
        a = fredholm_index(ctx.triple, e).index
        b = fredholm_index(d.triple, de).index
        out.append(record({"index": a, "doubledIndex": b}, abs(a - b), 1.0, a == b, name))
    return out


def _generic_cochain(n, signs, degree, rng):
    mats = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(degree + 1)]
    mats = [m / opnorm(m) for m in mats]

    def ev(*a):
        p = np.diag(signs.astype(complex))
        for x, m in zip(a, mats):
            p = p @ x @ m
        return np.trace(p)

    return Cochain(degree, ev, name=f"chi{degree}")


def _scale(args, n):
    return n * float(np.prod([max(opnorm(a), 1.0) for a in args]))


@check("hochschild", "hochschildB", "cyclic", "Hochschild coboundary b, b^2 = 0")
def _hochschild(ctx):
    t = ctx.triple
    chi = _generic_cochain(t.n, t.space.signs, 2, ctx.rng("hochschild"))
    bb = hochschild_b(hochschild_b(chi))
    worst = 0.0
    for args in ctx.tuples(t.algebra, 5, ctx.n_tuples, "hochschild"):
        worst = max(worst, abs(bb(*args)) / _scale(args, t.n))
    tr = Cochain(0, lambda a: np.trace(a), name="Tr")
    btr = hochschild_b(tr)
    trace_prop = max(abs(btr(*a[:2])) / _scale(a[:2], t.n) for a in ctx.tuples(t.algebra, 2, 5, "tr"))
    r = max(worst, trace_prop)
    return [record({"bb": worst, "bTrace": trace_prop, "tuples": ctx.n_tuples}, r, 1.0, r <= ctx.tol["cocycle"])]


@check("connes-B", "connesB", "cyclic", "Connes boundary B = A B0 (1 - T)")
def _connesB(ctx):
    t = ctx.triple
    rng = ctx.rng("connesB")
    chi2 = _generic_cochain(t.n, t.space.signs, 2, rng)
    chi3 = _generic_cochain(t.n, t.space.signs, 3, rng)
    BB = connes_B(connes_B(chi3))
    anti = hochschild_b(connes_B(chi2)) + connes_B(hochschild_b(chi2))
    T4 = cyclic_T(cyclic_T(cyclic_T(cyclic_T(chi3))))
    res = {"BB": 0.0, "bB+Bb": 0.0, "Tfull": 0.0}
    for args in ctx.tuples(t.algebra, 4, ctx.n_tuples, "connesB"):
        s = _scale(args, t.n)
        res["BB"] = max(res["BB"], abs(BB(*args[:2])) / s)
        res["bB+Bb"] = max(res["bB+Bb"], abs(anti(*args[:3])) / s)
        res["Tfull"] = max(res["Tfull"], abs(T4(*args) - chi3(*args)) / s)
    r = max(res.values())
    return [record({**res, "tuples": ctx.n_tuples}, r, 1.0, r <= ctx.tol["cocycle"])]


@check("lemma-relations", "lemmaRelations", "chern", "b and B relations of phi_m, psi_m and tau_2k")
def _lemma(ctx):
    t, _ = ctx.working()
    out = []
    for k in ctx.degrees:
        tup = ctx.tuples(t.algebra, 2 * k + 2, ctx.n_tuples, f"lemma{k}")
        res = cocycle_residuals(t, k, tup)
        r = max(res.values())
        out.append(record({**res, "k": k, "tuples": len(tup), "doubled": t is not ctx.triple},
                          r, 1.0, r <= ctx.tol["cocycle"], f"k={k}"))
    return out


@check("periodicity", "periodicityS", "cyclic", "pairing invariance under the periodicity operator S")
def _periodicity(ctx):
    t, emb = ctx.working()
    out = []
    phi0 = Cochain(0, lambda a: a[0, 0], name="phi0")
    one = Idempotent(1, 1, np.eye(1))
    v0 = pair_cyclic_cocycle(periodicity_S(phi0), one)
    out.append(record({"S(phi0) paired with 1": _c(v0)}, abs(v0 - 1), 1.0, abs(v0 - 1) <= ctx.tol["index"], "phi0"))
    tau = tau2k(t, 1)
    Stau = periodicity_S(tau)
    for name, e in ctx.idempotents:
        if e.q > 2:
            continue
        a = pair_cyclic_cocycle(tau, emb(e))
        b = pair_cyclic_cocycle(Stau, emb(e))
        out.append(record({"tau2": _c(a), "S tau2": _c(b)}, abs(a - b), 1.0, abs(a - b) <= ctx.tol["index"], name))
    return out


@check("normalized-pairing", "pairNormalizedEven", "cyclic", "pairing of normalized cochains with K0")
def _normalized_pairing(ctx):
    if not ctx.triple.invertible:
        return [record({"applicable": False, "reason": "D singular; tau-bar is not normalized"}, 0.0, 1.0, True)]
    t = ctx.triple
    out = []
    for name, e in ctx.idempotents:
        for k in ctx.degrees[:1]:
            tau = tau2k(t, k)
            samples = ctx.tuples(t.algebra, 2 * k + 1, 3, f"norm{k}")
            a = pair_normalized_even({2 * k: tau}, e, check_samples=samples)
            b = pair_cyclic_cocycle(tau, e)
            out.append(record({"normalized": _c(a), "cyclic": _c(b), "k": k}, abs(a - b), 1.0,
                              abs(a - b) <= ctx.tol["index"], name))
    return out


@check("similarity", "conjugate", "ktheory", "similarity invariance of the index")
def _similarity(ctx):
    out = []
    for name, e in ctx.idempotents:
        base = fredholm_index(ctx.triple, e).index
        rng = ctx.rng(f"sim-{name}")
        vals = []
        for _ in range(10):
            g = random_invertible(ctx.triple, e.q, rng, 0.6)
            vals.append(fredholm_index(ctx.triple, conjugate(e, g)).index)
        r = max(abs(v - base) for v in vals)
        out.append(record({"index": base, "conjugated": vals}, r, 1.0, r <= ctx.tol["index"], name))
    return out


@check("direct-sum", "directSum", "ktheory", "additivity of the index under direct sums")
def _direct_sum(ctx):
    out = []
    ids = ctx.idempotents
    for i in range(len(ids)):
        for j in range(i, min(i + 2, len(ids))):
            (na, a), (nb, b) = ids[i], ids[j]
            ia = fredholm_index(ctx.triple, a).index
            ib = fredholm_index(ctx.triple, b).index
            s = fredholm_index(ctx.triple, direct_sum(a, b)).index
            r = abs(s - ia - ib)
            out.append(record({"sum": s, "parts": [ia, ib]}, r, 1.0,
                              r <= ctx.tol["index"], f"{na}+{nb}"))
    return out


@check("ribbon", "sigmaSelfadjointConjugate", "ktheory", "sigma-selfadjoint conjugate under a ribbon twist")
def _ribbon(ctx):
    out = []
    for name, e in ctx.idempotents:
        if not ctx.ribbon:
            try:
                sigma_selfadjoint_conjugate(ctx.triple, e, require_ribbon=False)
                outcome = "constructed"
            except RibbonConstructionFailure:
                outcome = "ribbon-construction-failure"
            ind = fredholm_index(ctx.triple, e).index
            out.append(record({"ribbon": False, "construction": outcome, "index": ind,
                               "parity": "integer" if ind == round(ind) else "half-integer"},
                              0.0, 1.0, True, name))
            continue
        rc = sigma_selfadjoint_conjugate(ctx.triple, e)
        r = max(rc.residuals.values())
        rep = fredholm_index(ctx.triple, rc.p)
        direct = rep.ker_plus - rep.ker_minus
        ok = r <= ctx.tol["ribbon"] and rep.index == fredholm_index(ctx.triple, e).index and rep.index == direct
        out.append(record({**rc.residuals, "conditionB": rc.condition_b, "index": rep.index,
                           "kernelDifference": direct}, r, 1.0, ok, name))
    return out


@check("connections", "connectionIndexTheorem", "connections", "index of sigma-connections and the Chern character")
def _connections(ctx):
    t = ctx.triple
    count = int(ctx.connections.get("perturbations", 5))
    nterms = int(ctx.connections.get("terms", 2))
    k = ctx.degrees[0]
    out = []
    for name, e in ctx.idempotents:
        m = ProjectiveModule(t, e)
        rng = ctx.rng(f"conn-{name}")
        iso = canonical_iso_residual(m, rng)
        eq = coupled_vs_compressed(t, m)
        g = connection_index_theorem(t, grassmannian_connection(m), k)
        vals = [g]
        for c in range(count):
            els = ctx.tuples(t.algebra, 2 * nterms, 1, f"conn-{name}-{c}")[0]
            terms = [(int(rng.integers(e.q)), int(rng.integers(e.q)), els[2 * s], els[2 * s + 1])
                     for s in range(nterms)]
            vals.append(connection_index_theorem(t, one_form_connection(m, terms), k))
        worst = 0.0
        for v in vals:
            worst = max(worst, abs(v["coupled_index"] - v["index"]), abs(v["tau_bar_pairing"] - v["index"]))
            if "tau_pairing" in v:
                worst = max(worst, abs(v["tau_pairing"] - v["index"]))
        ok = eq <= ctx.tol["connection"] and iso <= 1e-12 and worst <= ctx.tol["index"] \
            and m.metric_rank_deficit() == 0 and m.s_e_residual() <= 1e-12 * max(opnorm(e.matrix), 1.0)
        out.append(record({"grassmannianEquality": eq, "canonicalIso": iso,
                           "metricKernel": m.metric_rank_deficit(), "SeIdentity": m.s_e_residual(),
                           "coupledIndices": [v["coupled_index"] for v in vals],
                           "index": g["index"], "pairing": _c(g["tau_bar_pairing"]),
                           "perturbations": count}, max(eq, worst), 1.0, ok, name))
    return out


def _families(ctx):
    t = ctx.triple
    fams = []
    for i, spec in enumerate(ctx.homotopy):
        kind = spec.get("kind")
        if kind == "double":
            if not t.invertible:
                continue
            d, fam = doubled_family(t)
            fams.append((f"double-tJ", fam, lambda e, d=d: Idempotent(e.q, 2 * e.n, d.embed(e.matrix)),
                         d.triple.algebra))
        elif kind == "polynomial":
            if not t.invertible:
                continue
            rng = ctx.rng(f"family-{i}")
            deg = int(spec.get("degree", 3))
            strength = float(spec.get("strength", 0.3))
            sm = min_singular_value(t.D)
            coeffs = [random_odd_selfadjoint(t.space, rng, strength * sm / deg) for _ in range(deg)]
            fams.append((f"polynomial-{i}", polynomial_family(t, coeffs, f"polynomial-{i}"),
                         lambda e: e, t.algebra))
        else:
            raise ScenarioError(f"unknown homotopy kind '{kind}'", f"$.homotopy[{i}].kind")
    return fams


@check("homotopy", "homotopyInvarianceCheck", "chern", "homotopy invariance and transgression of tau_2k")
def _homotopy(ctx):
    out = []
    e_name, e = next(((n, x) for n, x in ctx.idempotents if x.q <= 2), ctx.idempotents[0])
    for label, fam, emb, alg in _families(ctx):
        for k in ctx.degrees[:2]:
            tup = ctx.tuples(alg, 2 * k + 3, 4, f"{label}-{k}")
            r = homotopy_invariance_check(fam, emb(e), k, tup)
            rel = r.transgression_residual / r.transgression_scale
            rel_b = r.b_eta_residual / r.b_eta_scale
            roundoff = r.transgression_residual <= 1e-12 * r.transgression_scale
            ok = (r.pairing_deviation <= ctx.tol["index"] and rel <= ctx.tol["transgression"]
                  and rel_b <= ctx.tol["bEta"] and (roundoff or r.refinement_ratio >= ctx.tol["refinement"]))
            out.append(record({"family": label, "k": k, "idempotent": e_name,
                               "pairingDeviation": r.pairing_deviation,
                               "pairing0": _c(r.pairing_values[0]),
                               "transgression": r.transgression_residual,
                               "transgressionRefined": r.transgression_residual_refined,
                               "refinementRatio": r.refinement_ratio,
                               "convergedToRoundoff": roundoff,
                               "bEta": r.b_eta_residual, "bEtaScale": r.b_eta_scale,
                               "minSingular": r.min_singular},
                              rel, r.transgression_scale, ok, f"{label}/k={k}"))
    if not out:
        out.append(record({"applicable": False, "reason": "no family with invertible D_0"}, 0.0, 1.0, True))
    return out


# --- running --------------------------------------------------------------------

def thread_count() -> int:
    v = os.environ.get("TWISTDEX_THREADS")
    if v:
        try:
            return max(1, int(v))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _run_check(ctx, name):
    info = CHECKS[name]
    t0 = time.perf_counter()
    try:
        recs = info.fn(ctx)
    except ScenarioError:
        raise
    except TwistdexError as exc:
        recs = [record({"error": type(exc).__name__, "message": str(exc)}, float("nan"), 1.0, False)]
    wall = time.perf_counter() - t0
    out = []
    for r in recs:
        full = {"record": "check", "check": name, "operation": info.operation, "anchor": info.anchor}
        full.update(r)
        full["wallTime"] = wall
        out.append(full)
    return out


def run_scenario(data: dict, seed=None, rank_tol=None, threads=None) -> list:
    """Run every requested suite; returns the records, environment block first."""
    ctx = Context(data, seed, rank_tol)
    env = {"record": "environment", "version": __version__, "reportSchema": REPORT_SCHEMA,
           "scenario": data["name"], "exercises": data.get("exercises", ""),
           "seed": ctx.seed, "tolerances": ctx.tol}
    workers = threads or thread_count()
    if workers > 1 and len(ctx.checks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda c: _run_check(ctx, c), ctx.checks))
    else:
        results = [_run_check(ctx, c) for c in ctx.checks]
    return [env] + [r for group in results for r in group]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return x
    return x


def format_json(records) -> str:
    return "".join(json.dumps(_jsonable(r), sort_keys=False) + "\n" for r in records)


def format_table(records) -> str:
    rows = [("check", "subject", "pass", "residual", "scale", "time[s]")]
    env = records[0]
    for r in records[1:]:
        rows.append((r["check"], str(r.get("subject", "")), "PASS" if r["pass"] else "FAIL",
                     f"{r['residual']:.3e}", f"{r['scale']:.3e}", f"{r['wallTime']:.3f}"))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = [f"scenario {env['scenario']}  seed {env['seed']}  twistdex {env['version']}"]
    for i, row in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def strip_timing(text: str) -> str:
    """Report body with the wallTime fields removed, for determinism comparisons."""
    out = []
    for line in text.splitlines():
        rec = json.loads(line)
        rec.pop("wallTime", None)
        out.append(json.dumps(rec))
    return "\n".join(out)


def traceability_table() -> str:
    rows = [("suite", "operation", "module", "result")]
    rows += [(c.name, c.operation, c.module, c.anchor) for c in CHECKS.values()]
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = []
    for i, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(r[:3], widths)) + "  " + r[3])
        if i == 0:
            lines.append("  ".join("-" * w for w in widths) + "  " + "-" * 6)
    return "\n".join(lines) + "\n"
