"""The curated scenario corpus written by ``--emit-examples``."""
from __future__ import annotations

import json
import os

ALL_INDEX = ["validate-triple", "sigma-translate", "index", "adjoint-identity", "parametrix",
             "hormander", "supertrace-index", "chern-pairing", "tau-bar", "normalized-pairing",
             "similarity", "direct-sum", "ribbon"]

SWAP_P = [[1, 0, 0, 1, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 1, 1]]


def _diag(v):
    return [[v[i] if i == j else 0 for j in range(len(v))] for i in range(len(v))]


def example_scenarios() -> list:
    base = {"formatVersion": 1}
    out = [
        {"name": "minimal-point", "seed": 1,
         "exercises": "index map on the smallest triple: C acting on C^1 + C^1",
         "space": {"plus": 1, "minus": 1}, "algebra": {"kind": "scalar"},
         "D": {"kind": "explicit", "matrix": [[0, 1], [1, 0]]},
         "idempotents": [{"name": "one", "kind": "unit"}],
         "checks": ["validate-triple", "index", "chern-pairing", "tau-bar", "double", "lemma-relations"]},
        {"name": "untwisted-full-even", "seed": 11,
         "exercises": "index formula ind D_{e,sigma} = <tau_2k, e> with sigma = identity",
         "space": {"plus": 3, "minus": 3}, "D": {"kind": "random-odd-selfadjoint"},
         "idempotents": [{"kind": "graded", "q": 1, "plus": 2, "minus": 1, "conjugation": 0.8},
                         {"kind": "graded", "q": 2, "plus": 4, "minus": 1, "conjugation": 0.8},
                         {"kind": "graded", "q": 2, "plus": 1, "minus": 3, "conjugation": 0.8},
                         {"kind": "unit", "q": 1}, {"kind": "zero", "q": 1}],
         "checks": ALL_INDEX},
        {"name": "conformal-ribbon", "seed": 23,
         "exercises": "conformal perturbation kDk; ribbon twist gives integer indices",
         "space": {"plus": 3, "minus": 3}, "D": {"kind": "random-odd-selfadjoint"},
         "conformal": {"k": {"kind": "random-positive", "strength": 0.8}},
         "idempotents": [{"kind": "graded", "q": 1, "plus": 2, "minus": 0, "conjugation": 0.8},
                         {"kind": "graded", "q": 2, "plus": 3, "minus": 2, "conjugation": 0.8}],
         "checks": ["validate-triple", "conformal"] + ALL_INDEX[1:] + ["lemma-relations"]},
        {"name": "inner-twist-cocycles", "seed": 37,
         "exercises": "b and B relations of the Connes-Chern cochains under an inner twist",
         "space": {"plus": 4, "minus": 4}, "D": {"kind": "random-odd-selfadjoint"},
         "automorphism": {"kind": "inner", "k": {"kind": "random-positive", "strength": 1.0}},
         "idempotents": [{"kind": "graded", "q": 1, "plus": 3, "minus": 1, "conjugation": 0.7}],
         "samples": {"tuples": 50, "maxWordLength": 2},
         "checks": ["validate-triple", "hochschild", "connes-B", "lemma-relations", "periodicity",
                    "chern-pairing"]},
        {"name": "swap-half-integer", "seed": 41,
         "exercises": "non-ribbon linear twist; index map lands in half-integers",
         "space": {"plus": 3, "minus": 3},
         "algebra": {"kind": "diagonal", "projections": SWAP_P},
         "D": {"kind": "random-odd-selfadjoint"},
         "automorphism": {"kind": "linear", "basis": [_diag(p) for p in SWAP_P],
                          "images": [_diag(SWAP_P[1]), _diag(SWAP_P[0]), _diag(SWAP_P[2])]},
         "idempotents": [{"name": "p1", "kind": "blocks", "q": 1, "blocks": [0]},
                         {"name": "p2", "kind": "blocks", "q": 1, "blocks": [1]},
                         {"name": "p3", "kind": "blocks", "q": 1, "blocks": [2]},
                         {"name": "p1+p3", "kind": "blocks", "q": 2, "blocks": [0, 2]}],
         "checks": ["validate-triple", "index", "supertrace-index", "chern-pairing", "tau-bar",
                    "ribbon", "direct-sum", "lemma-relations", "connections"]},
        {"name": "singular-unbalanced", "seed": 53,
         "exercises": "index formula for singular D through the invertible double",
         "space": {"plus": 3, "minus": 2}, "D": {"kind": "random-odd-selfadjoint"},
         "idempotents": [{"kind": "unit"}, {"kind": "graded", "q": 2, "plus": 4, "minus": 1, "conjugation": 0.6}],
         "checks": ["validate-triple", "index", "tau-bar", "double", "parametrix", "hormander",
                    "supertrace-index", "lemma-relations", "connections"]},
        {"name": "singular-inner", "seed": 59,
         "exercises": "tau-bar pairing with a kernel in D and an inner twist",
         "space": {"plus": 3, "minus": 3}, "D": {"kind": "random-odd-selfadjoint", "kernelDrop": 1},
         "automorphism": {"kind": "inner", "k": {"kind": "random-positive", "strength": 0.6}},
         "idempotents": [{"kind": "graded", "q": 1, "plus": 2, "minus": 2, "conjugation": 0.6},
                         {"kind": "graded", "q": 1, "plus": 1, "minus": 0, "conjugation": 0.6}],
         "checks": ["index", "tau-bar", "double", "ribbon", "similarity"]},
        {"name": "homotopy", "seed": 67,
         "exercises": "homotopy invariance along D~_t = D~_0 + tJ and polynomial paths",
         "space": {"plus": 2, "minus": 2}, "D": {"kind": "random-odd-selfadjoint"},
         "automorphism": {"kind": "inner", "k": {"kind": "random-positive", "strength": 0.5}},
         "idempotents": [{"kind": "graded", "q": 1, "plus": 2, "minus": 1, "conjugation": 0.7}],
         "homotopy": [{"kind": "double"}, {"kind": "polynomial", "degree": 3, "strength": 0.5},
                      {"kind": "polynomial", "degree": 2, "strength": 0.5},
                      {"kind": "polynomial", "degree": 1, "strength": 0.5}],
         "cocycleDegrees": [1, 2],
         "checks": ["homotopy"]},
        {"name": "sigma-connections", "seed": 71,
         "exercises": "index of the coupled operator D_nabla equals the index map and the Chern pairing",
         "space": {"plus": 3, "minus": 3}, "D": {"kind": "random-odd-selfadjoint"},
         "conformal": {"k": {"kind": "random-positive", "strength": 0.6}},
         "idempotents": [{"kind": "graded", "q": 2, "plus": 4, "minus": 2, "conjugation": 0.6},
                         {"kind": "zero", "q": 1}],
         "connections": {"perturbations": 5, "terms": 2},
         "cocycleDegrees": [1],
         "checks": ["connections"]},
        {"name": "zero-operator", "seed": 2,
         "exercises": "D = 0 toy triple; tau-bar pairing reproduces the kernel count",
         "space": {"plus": 2, "minus": 1}, "algebra": {"kind": "scalar"},
         "D": {"kind": "zero"}, "idempotents": [{"kind": "unit"}],
         "checks": ["index", "tau-bar", "double"]},
    ]
    return [{**base, **s} for s in out]


def write_examples(out_dir) -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for s in example_scenarios():
        p = os.path.join(out_dir, f"{s['name']}.json")
        with open(p, "w", encoding="utf-8") as fh:
            json.dump(s, fh, indent=1)
            fh.write("\n")
        paths.append(p)
    return paths
