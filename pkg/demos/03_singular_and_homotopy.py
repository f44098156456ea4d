"""Singular D through the invertible double, and the transgression along a path of operators."""
import numpy as np

from twistdex import GradedSpace
from twistdex.algebra import ElementSampler, Inner, full_even_algebra, sample_elements
from twistdex.chern import (doubled_family, homotopy_invariance_check, polynomial_family,
                            random_odd_selfadjoint, tau_bar_2k)
from twistdex.cyclic import pair_cyclic_cocycle
from twistdex.index import fredholm_index
from twistdex.ktheory import Idempotent, graded_projection
from twistdex.triple import TwistedTriple

rng = np.random.default_rng(3)
space = GradedSpace.standard(3, 2)
alg = full_even_algebra(space)
# unbalanced grading: D cannot be invertible
D = random_odd_selfadjoint(space, rng, 1.0)
k = np.diag([1.2, 0.9, 1.0, 1.1, 0.8])
t = TwistedTriple(alg, D, Inner(k))
print("D invertible:", t.invertible)

e = Idempotent(1, 5, graded_projection(space, 1, 2, 1))
print("kernel-count index:", fredholm_index(t, e).index)
print("tau-bar pairing:   ", pair_cyclic_cocycle(tau_bar_2k(t, 1), e).real)

# a balanced triple, deformed along D + t V1 + t^2 V2
space = GradedSpace.standard(2, 2)
alg = full_even_algebra(space)
B = rng.standard_normal((2, 2)) + 2 * np.eye(2)
D = np.block([[np.zeros((2, 2)), B.T], [B, np.zeros((2, 2))]]).astype(complex)
t = TwistedTriple(alg, D, Inner(np.diag([1.1, 0.9, 1.0, 1.2])))
fam = polynomial_family(t, [random_odd_selfadjoint(space, rng, 0.2), random_odd_selfadjoint(space, rng, 0.1)])
e = Idempotent(1, 4, graded_projection(space, 1, 1, 0))
tuples = [sample_elements(alg, ElementSampler(s), 5) for s in range(3)]
rep = homotopy_invariance_check(fam, e, 1, tuples)
print("pairing along the path:", np.round(np.real(rep.pairing_values[::4]), 12))
print(f"transgression residual {rep.transgression_residual:.2e} (scale {rep.transgression_scale:.2e}),"
      f" shrinking {rep.refinement_ratio:.1f}x when the panels double")

d, fam = doubled_family(t)
pe = Idempotent(1, 8, d.embed(e.matrix))
rep = homotopy_invariance_check(fam, pe, 1, [sample_elements(d.triple.algebra, ElementSampler(s), 5) for s in range(3)])
print("doubled path pairing deviation:", rep.pairing_deviation)
