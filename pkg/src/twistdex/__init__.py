"""Twisted spectral triples on finite-dimensional graded spaces: index maps, cyclic cocycles and Chern pairings."""

__version__ = "0.1.0"

from .algebra import (ElementSampler, Identity, Inner, Linear, MatrixAlgebra, apply_automorphism,
                      diagonal_algebra, full_even_algebra, ribbon_square_root, sample_elements,
                      scalar_algebra)
from .chern import (HomotopyFamily, chern_constant, chern_pairing, cocycle_residuals,
                    doubled_family, homotopy_invariance_check, phi_m, polynomial_family, psi_m,
                    supertrace_index, tau2k, tau_bar_2k)
from .connections import (ProjectiveModule, connection_index_theorem, couple_operator,
                          grassmannian_connection, one_form_connection)
from .cyclic import (B0, Cochain, connes_B, cyclic_T, hochschild_b, normalizer_A,
                     pair_cyclic_cocycle, pair_normalized_even, periodicity_S, trace_lift)
from .index import (adjoint_identity_check, compress, dimension_count_index, fredholm_index,
                    hormander_trace_index, parametrix_check)
from .ktheory import (Idempotent, conjugate, direct_sum, sigma_of_idempotent,
                      sigma_selfadjoint_conjugate)
from .linalg import (GradedOperator, GradedSpace, numerical_rank, pseudo_inverse, schatten_norm,
                     supertrace)
from .triple import (DoubledTriple, TwistedTriple, conformal_deformation, invertible_double,
                     twisted_commutator, validate_triple)
