"""Index of a twisted Dirac operator three ways, on a small conformally deformed triple."""
import numpy as np
import scipy.linalg as sla

from twistdex import GradedSpace
from twistdex.algebra import full_even_algebra
from twistdex.chern import chern_pairing, supertrace_index
from twistdex.index import dimension_count_index, fredholm_index
from twistdex.ktheory import Idempotent, conjugate, graded_projection, random_invertible
from twistdex.triple import TwistedTriple, conformal_deformation, validate_triple

rng = np.random.default_rng(0)
space = GradedSpace.standard(3, 3)
alg = full_even_algebra(space)

# an odd selfadjoint D with an invertible off-diagonal block
B = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) + 3 * np.eye(3)
D = np.block([[np.zeros((3, 3)), B.conj().T], [B, np.zeros((3, 3))]])
base = TwistedTriple(alg, D)

# deform by a positive even k; the twist becomes a -> k^2 a k^-2
H = rng.standard_normal((6, 6))
H = np.where(np.equal.outer(space.signs, space.signs), H + H.T, 0)
k = sla.expm(0.3 * H / np.linalg.norm(H, 2))
t = conformal_deformation(base, k)
print("validators pass:", validate_triple(t).ok)

# a non-selfadjoint idempotent: conjugate of a graded projection of ranks (4, 1) in M_2
P = Idempotent(2, 6, graded_projection(space, 2, 4, 1))
e = conjugate(P, random_invertible(t, 2, rng, 0.8))
print("||e^2 - e|| =", np.linalg.norm(e.matrix @ e.matrix - e.matrix, 2))

report = fredholm_index(t, e)
print("kernel count:", report.as_dict())
print("dimension count:", dimension_count_index(t, e))
for kk in (1, 2, 3):
    print(f"k={kk}  supertrace {supertrace_index(t, e, kk).real:+.12f}"
          f"  pairing {chern_pairing(t, e, kk).real:+.12f}")
