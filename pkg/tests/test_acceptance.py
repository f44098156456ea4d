"""Acceptance criteria, one test each.  Every test prints a single CRITERION line."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from builders import full_even_triple, graded_idempotent, positive_even, random_swap_model, tuples
from twistdex.chern import (chern_pairing, cocycle_residuals, doubled_family,
                            homotopy_invariance_check, phi_m, polynomial_family, psi_m,
                            random_odd_selfadjoint, residual_scale, supertrace_index, tau_bar_2k)
from twistdex.connections import (ProjectiveModule, connection_index_theorem, coupled_vs_compressed,
                                  grassmannian_connection, one_form_connection)
from twistdex.corpus import example_scenarios
from twistdex.cyclic import connes_B, hochschild_b, pair_cyclic_cocycle
from twistdex.index import dimension_count_index, fredholm_index, hormander_trace_index
from twistdex.ktheory import Idempotent, conjugate, direct_sum, random_invertible, sigma_selfadjoint_conjugate
from twistdex.scenario import strip_timing
from twistdex.triple import conformal_commutator_residual, conformal_deformation, validate_triple


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def mixed_scenarios(count, drop=0):
    """(label, triple, idempotent) cycling through identity, inner, conformal and linear twists."""
    out = []
    for i in range(count):
        kind = ("identity", "inner", "conformal", "linear")[i % 4]
        if kind == "linear":
            m = random_swap_model(100 + i, drop)
            subset = [0] if i % 8 == 3 else [0, 2]
            out.append((f"linear#{i}", m.triple, m.idempotent(subset)))
            continue
        plus = 2 + i % 2
        # balanced grading keeps D invertible; singular scenarios may be unbalanced
        minus = plus if drop == 0 else 2 + (i // 2) % 2
        t = full_even_triple(100 + i, plus, minus, kind, drop=drop)
        rng = np.random.default_rng(i)
        q = 1 + i % 2
        e = graded_idempotent(t, q, int(rng.integers(0, plus * q + 1)), int(rng.integers(0, minus * q + 1)), i)
        out.append((f"{kind}#{i}", t, e))
    return out


def test_criterion_1_index_triple_equality(report):
    worst, n = 0.0, 0
    for label, t, e in mixed_scenarios(24):
        ind = fredholm_index(t, e).index
        assert dimension_count_index(t, e)[2] == ind, label
        vals = []
        for k in (1, 2, 3):
            s, p = supertrace_index(t, e, k), chern_pairing(t, e, k)
            worst = max(worst, abs(s - ind), abs(p - ind))
            vals += [s, p]
        worst = max(worst, max(abs(v - vals[0]) for v in vals))
        n += 1
    report(1, worst <= 1e-8, f"{n} scenarios, k=1,2,3, max deviation {worst:.2e}")


def test_criterion_2_hormander(report):
    worst, n = 0.0, 0
    for label, t, e in mixed_scenarios(12):
        ind_plus = fredholm_index(t, e).ind_plus
        for p in (1, 2, 3):
            worst = max(worst, abs(hormander_trace_index(t, e, p) - ind_plus))
            n += 1
    report(2, worst <= 1e-8, f"{n} evaluations over p=1,2,3, max residual {worst:.2e}")


def _generic_scale(n, args):
    return n * np.prod([max(np.linalg.norm(a, 2), 1.0) for a in args])


def test_criterion_3_cocycles(report):
    worst_rel, worst_key = 0.0, ""
    ntup = 50
    for label, t, _ in mixed_scenarios(4):
        # b^2, B^2, bB + Bb on the non-cyclic cochains phi_m, psi_m
        for m in (1, 2, 3):
            for phi in (phi_m(t, m), psi_m(t, m)):
                bb = hochschild_b(hochschild_b(phi))
                BB = connes_B(connes_B(phi)) if m >= 2 else None
                mix_b, mix_B = hochschild_b(connes_B(phi)), connes_B(hochschild_b(phi))
                for args in tuples(t.algebra, m + 3, ntup, m):
                    checks = [("b^2", bb, args)]
                    if BB is not None:
                        checks.append(("B^2", BB, args[:m - 1]))
                    for key, c, a in checks:
                        r = abs(c(*a)) / residual_scale(t, a)
                        if r > worst_rel:
                            worst_rel, worst_key = r, f"{label} {phi.name} {key}"
                    a = args[:m + 1]
                    r = abs(mix_b(*a) + mix_B(*a)) / residual_scale(t, a)
                    if r > worst_rel:
                        worst_rel, worst_key = r, f"{label} {phi.name} bB+Bb"
        for k in (1, 2, 3):
            res = cocycle_residuals(t, k, tuples(t.algebra, 2 * k + 2, ntup, 10 + k))
            for key, r in res.items():
                if r > worst_rel:
                    worst_rel, worst_key = r, f"{label} k={k} {key}"
    report(3, worst_rel <= 1e-8, f"{ntup} tuples per relation, worst relative residual {worst_rel:.2e} ({worst_key})")


def test_criterion_4_non_invertible(report):
    worst_sing, worst_inv, n = 0.0, 0.0, 0
    for label, t, e in mixed_scenarios(8, drop=1):
        assert not t.invertible, label
        ind = fredholm_index(t, e).index
        for k in (1, 2):
            worst_sing = max(worst_sing, abs(pair_cyclic_cocycle(tau_bar_2k(t, k), e) - ind))
        n += 1
    for label, t, e in mixed_scenarios(8):
        for k in (1, 2):
            worst_inv = max(worst_inv, abs(pair_cyclic_cocycle(tau_bar_2k(t, k), e) - chern_pairing(t, e, k)))
    ok = worst_sing <= 1e-8 and worst_inv <= 1e-8
    report(4, ok, f"{n} singular scenarios, tau-bar vs kernel index {worst_sing:.2e}; invertible tau-bar vs tau {worst_inv:.2e}")


def _embedded(d, e):
    return Idempotent(e.q, d.triple.n, d.embed(e.matrix))


def test_criterion_5_homotopy(report):
    cases = []
    t = full_even_triple(31, 2, 2, "inner")
    d, fam = doubled_family(t)
    cases.append((fam, _embedded(d, graded_idempotent(t, 1, 2, 1, 3)), d.triple.algebra))
    for i, twist in enumerate(("identity", "inner", "conformal")):
        t = full_even_triple(40 + i, 2, 2, twist)
        rng = np.random.default_rng(i)
        coeffs = [random_odd_selfadjoint(t.space, rng, 0.2 / (j + 1)) for j in range(1 + i)]
        cases.append((polynomial_family(t, coeffs), graded_idempotent(t, 1, 1 + i % 2, 0, i), t.algebra))
    lines, ok = [], True
    for fam, e, alg in cases:
        for k in (1, 2):
            rep = homotopy_invariance_check(fam, e, k, tuples(alg, 2 * k + 3, 3, 7 + k), panels=64, grid=17)
            rel = rep.transgression_residual / rep.transgression_scale
            beta = rep.b_eta_residual / rep.b_eta_scale
            good = (rep.pairing_deviation <= 1e-8 and rel <= 1e-6 and beta <= 1e-6
                    and rep.refinement_ratio >= 8)
            ok &= good
            lines.append(f"{fam.name} k={k}: dev {rep.pairing_deviation:.1e} transg {rel:.1e} "
                         f"ratio {rep.refinement_ratio:.1f} b(eta) {beta:.1e}")
    report(5, ok, f"{len(cases)} families; " + "; ".join(lines))


def test_criterion_6_connections(report):
    worst_eq, mismatches, n = 0.0, [], 0
    for label, t, e in mixed_scenarios(8) + mixed_scenarios(4, drop=1)[:3]:
        m = ProjectiveModule(t, e)
        worst_eq = max(worst_eq, coupled_vs_compressed(t, m))
        rng = np.random.default_rng(n)
        conns = [grassmannian_connection(m)]
        for j in range(5):
            els = tuples(t.algebra, 2, 2, 50 * n + j)
            terms = [(int(rng.integers(0, e.q)), int(rng.integers(0, e.q)), 0.3 * a, b) for a, b in els]
            conns.append(one_form_connection(m, terms))
        for c in conns:
            out = connection_index_theorem(t, c)
            vals = [out["coupled_index"], out["index"], out["tau_bar_pairing"]]
            if "tau_pairing" in out:
                vals.append(out["tau_pairing"])
            if max(abs(v - vals[0]) for v in vals) > 1e-8:
                mismatches.append(label)
        n += 1
    ok = worst_eq <= 1e-10 and not mismatches
    report(6, ok, f"{n} modules x 6 connections, Grassmannian vs compression {worst_eq:.2e}, mismatches {mismatches}")


def test_criterion_7_ktheory(report):
    bad = []
    scen = mixed_scenarios(8)
    for label, t, e in scen:
        ind = fredholm_index(t, e).index
        rng = np.random.default_rng(7)
        for j in range(10):
            f = conjugate(e, random_invertible(t, e.q, rng, 0.9))
            if round(2 * fredholm_index(t, f).index) != round(2 * ind):
                bad.append(f"{label} conj {j}")
    for label, t, e in scen:
        f = graded_idempotent(t, 1, 1, 0, 5) if not label.startswith("linear") else e
        s = direct_sum(e, f)
        lhs = round(2 * fredholm_index(t, s).index)
        rhs = round(2 * fredholm_index(t, e).index) + round(2 * fredholm_index(t, f).index)
        if lhs != rhs:
            bad.append(f"{label} sum")
    report(7, not bad, f"{len(scen)} scenarios x 10 conjugations plus direct sums, failures {bad}")


def test_criterion_8_ribbon(report):
    worst, nonint, n = 0.0, [], 0
    for label, t, e in mixed_scenarios(16) + mixed_scenarios(8, drop=1):
        if label.startswith("linear"):
            continue
        rc = sigma_selfadjoint_conjugate(t, e)
        worst = max(worst, max(rc.residuals.values()))
        for f in (e, rc.p):
            ind = fredholm_index(t, f).index
            if abs(ind - round(ind)) > 1e-8:
                nonint.append(label)
        n += 1
    ok = worst <= 1e-9 and not nonint
    report(8, ok, f"{n} ribbon scenarios, max residual {worst:.2e}, non-integer indices {nonint}")


def test_criterion_9_conformal(report):
    worst, failed = 0.0, []
    for i in range(12):
        base = full_even_triple(200 + i, 2 + i % 3, 2 + (i // 3) % 2)
        k = positive_even(base.space, np.random.default_rng(i), 0.4 + 0.1 * (i % 5))
        c = conformal_deformation(base, k)
        if not validate_triple(c).ok:
            failed.append(i)
        for (a,) in tuples(base.algebra, 1, 10, i):
            raw, scale = conformal_commutator_residual(c, base, k, a)
            worst = max(worst, raw / scale)
    report(9, worst <= 1e-10 and not failed, f"12 deformations, max relative residual {worst:.2e}, validator failures {failed}")


def test_criterion_10_determinism(report, tmp_path):
    args = []
    for s in example_scenarios():
        p = tmp_path / f"{s['name']}.json"
        p.write_text(json.dumps(s))
        args += ["--scenario", str(p)]
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, TWISTDEX_THREADS=threads)
        r = subprocess.run([sys.executable, "-m", "twistdex", *args], capture_output=True, text=True, env=env)
        outs.append((r.returncode, strip_timing(r.stdout)))
    same = outs[0] == outs[1]
    nrec = len(outs[0][1].splitlines())
    report(10, same and outs[0][0] == 0, f"{nrec} records byte-identical modulo timing across two runs (1 and 4 threads)")
