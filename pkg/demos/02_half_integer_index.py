"""A twist that is not ribbon can give a half-integer index.

The algebra is C^3 acting diagonally; the twist swaps the first two
minimal projections, whose graded ranks differ.
"""
import numpy as np

from twistdex import GradedSpace
from twistdex.algebra import Linear, diagonal_algebra, ribbon_square_root
from twistdex.chern import chern_pairing
from twistdex.errors import NoRibbonStructure, RibbonConstructionFailure
from twistdex.index import fredholm_index
from twistdex.ktheory import Idempotent, sigma_selfadjoint_conjugate
from twistdex.triple import TwistedTriple

space = GradedSpace.standard(3, 3)
# graded ranks: p1 (1|1), p2 (1|0), p3 (1|2)
p1 = np.diag([1, 0, 0, 1, 0, 0]).astype(complex)
p2 = np.diag([0, 1, 0, 0, 0, 0]).astype(complex)
p3 = np.diag([0, 0, 1, 0, 1, 1]).astype(complex)
alg = diagonal_algebra(space, [p1, p2, p3])
sigma = Linear([p1, p2, p3], [p2, p1, p3])

rng = np.random.default_rng(1)
B = rng.standard_normal((3, 3)) + 2 * np.eye(3)
D = np.block([[np.zeros((3, 3)), B.T], [B, np.zeros((3, 3))]]).astype(complex)
t = TwistedTriple(alg, D, sigma)

try:
    ribbon_square_root(sigma)
except NoRibbonStructure as exc:
    print("no ribbon root:", exc)

e = Idempotent(1, 6, p1)
r = fredholm_index(t, e)
print("ind+ =", r.ind_plus, " ind- =", r.ind_minus, " index =", r.index)
print("pairing k=1:", chern_pairing(t, e, 1).real)

# the sigma-selfadjoint replacement breaks down exactly here
try:
    sigma_selfadjoint_conjugate(t, e, require_ribbon=False)
except RibbonConstructionFailure as exc:
    print("construction fails:", exc)
