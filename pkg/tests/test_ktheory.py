import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import SwapModel, full_even_triple, graded_idempotent, random_swap_model
from twistdex.errors import DomainError, NoRibbonStructure, RibbonConstructionFailure
from twistdex.index import fredholm_index
from twistdex.ktheory import (Idempotent, conjugate, direct_sum, graded_projection,
                              sigma_of_idempotent, sigma_selfadjoint_conjugate, unit_idempotent,
                              zero_idempotent)
from twistdex.linalg import GradedSpace


def test_idempotent_check():
    with pytest.raises(DomainError):
        Idempotent(1, 2, 2 * np.eye(2))
    e = Idempotent(1, 2, np.array([[1, 1], [0, 0]], complex))
    assert e.q == 1


def test_entry_blocks():
    e = unit_idempotent(2, 3)
    np.testing.assert_array_equal(e.entry(1, 1), np.eye(2))
    np.testing.assert_array_equal(e.entry(0, 2), np.zeros((2, 2)))


def test_graded_projection_ranks():
    sp = GradedSpace.standard(3, 2)
    P = graded_projection(sp, 2, 4, 1)
    assert np.trace(P).real == 5
    assert np.allclose(P @ P, P)


def test_direct_sum_block_layout():
    e, f = unit_idempotent(2), zero_idempotent(2, 2)
    s = direct_sum(e, f)
    assert s.q == 3
    np.testing.assert_array_equal(s.matrix, np.diag([1, 1, 0, 0, 0, 0]))


def test_sigma_translate_is_idempotent():
    t = full_even_triple(1, 2, 2, "inner")
    e = graded_idempotent(t, 2, 2, 1, seed=4)
    f = sigma_of_idempotent(t, e)
    assert np.linalg.norm(f.matrix @ f.matrix - f.matrix) < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_conjugation_invariance_of_index(seed):
    t = full_even_triple(seed, 3, 3, "inner", drop=seed % 2)
    e = graded_idempotent(t, 2, 3, 1, seed, strength=0.0)
    f = graded_idempotent(t, 2, 3, 1, seed, strength=0.9)
    assert fredholm_index(t, e).index == fredholm_index(t, f).index == 2.0


def test_direct_sum_additivity():
    t = full_even_triple(3, 2, 3, "conformal")
    e = graded_idempotent(t, 1, 2, 0, 1)
    f = graded_idempotent(t, 2, 1, 3, 2)
    ie, jf = fredholm_index(t, e).index, fredholm_index(t, f).index
    assert fredholm_index(t, direct_sum(e, f)).index == ie + jf


def test_conjugate_rejects_ill_conditioned():
    e = unit_idempotent(2)
    with pytest.raises(DomainError):
        conjugate(e, np.diag([1.0, 1e-12]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["identity", "inner", "conformal"]))
def test_ribbon_conjugate_properties(seed, twist):
    t = full_even_triple(seed, 2, 2, twist)
    rng = np.random.default_rng(seed)
    e = graded_idempotent(t, 2, int(rng.integers(0, 5)), int(rng.integers(0, 5)), seed)
    rc = sigma_selfadjoint_conjugate(t, e)
    assert max(rc.residuals.values()) <= 1e-9
    assert fredholm_index(t, rc.p).index == fredholm_index(t, e).index


def test_ribbon_requires_root():
    m = SwapModel([(1, 1), (1, 0), (1, 2)])
    with pytest.raises(NoRibbonStructure):
        sigma_selfadjoint_conjugate(m.triple, m.idempotent([0]))


def test_ribbon_construction_fails_for_swap_projection():
    # e = p_0, sigma(e)* = p_1; b is singular on p_2's range
    m = SwapModel([(1, 1), (1, 0), (1, 2)])
    with pytest.raises(RibbonConstructionFailure):
        sigma_selfadjoint_conjugate(m.triple, m.idempotent([0]), require_ribbon=False)


def test_swap_model_translates():
    m = random_swap_model(3)
    e = m.idempotent([0])
    f = sigma_of_idempotent(m.triple, e)
    np.testing.assert_allclose(f.matrix, m.projs[1])
