import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import SwapModel, full_even_triple, graded_idempotent, random_swap_model
from twistdex.index import (adjoint_identity_check, compress, dimension_count_index, fredholm_index,
                            hormander_trace_index, parametrix_check, s_e_inner_product_residual)
from twistdex.ktheory import unit_idempotent, zero_idempotent


def test_point_unit_has_index_zero():
    from test_triple import point_triple
    t = point_triple()
    r = fredholm_index(t, unit_idempotent(2))
    assert (r.ind_plus, r.ind_minus, r.index) == (0, 0, 0.0)


def test_zero_idempotent():
    t = full_even_triple(0, 2, 2)
    r = fredholm_index(t, zero_idempotent(4, 2))
    assert r.index == 0
    assert dimension_count_index(t, zero_idempotent(4, 2)) == (0, 0, 0.0)


def test_unbalanced_unit_index():
    # ind+ = 3 - 2, ind- = 2 - 3
    t = full_even_triple(1, 3, 2)
    r = fredholm_index(t, unit_idempotent(5))
    assert (r.ind_plus, r.ind_minus, r.index) == (1, -1, 1.0)


def test_report_keys():
    t = full_even_triple(1, 2, 2)
    d = fredholm_index(t, unit_idempotent(4)).as_dict()
    assert {"kerPlus", "kerMinus", "kerStarPlus", "kerStarMinus", "indPlus", "indMinus", "index"} <= set(d)


def test_half_integer_index():
    m = SwapModel([(1, 1), (1, 0), (1, 2)])
    e = m.idempotent([0])
    assert m.expected_index([0]) == 0.5
    assert fredholm_index(m.triple, e).index == 0.5
    assert dimension_count_index(m.triple, e)[2] == 0.5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["identity", "inner", "conformal"]),
       st.integers(0, 2))
def test_index_matches_rank_oracle(seed, twist, drop):
    t = full_even_triple(seed, 3, 3, twist, drop=drop)
    rng = np.random.default_rng(seed)
    q = int(rng.integers(1, 3))
    rp, rm = int(rng.integers(0, 3 * q + 1)), int(rng.integers(0, 3 * q + 1))
    e = graded_idempotent(t, q, rp, rm, seed)
    r = fredholm_index(t, e)
    assert (r.ind_plus, r.ind_minus, r.index) == dimension_count_index(t, e)
    assert r.index == rp - rm


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 1))
def test_swap_model_index(seed, drop):
    m = random_swap_model(seed, drop)
    subsets = [[0], [1], [0, 2], [2], [0, 1]]
    for s in subsets:
        if max(s) < len(m.ranks):
            assert fredholm_index(m.triple, m.idempotent(s)).index == m.expected_index(s)


@pytest.mark.parametrize("twist", ["identity", "inner", "conformal"])
def test_adjoint_identity(twist):
    t = full_even_triple(8, 3, 2, twist)
    e = graded_idempotent(t, 2, 3, 2, 9)
    assert adjoint_identity_check(t, e) <= 1e-9


def test_s_e_inner_product():
    t = full_even_triple(8, 2, 2)
    e = graded_idempotent(t, 1, 1, 1, 2, strength=1.2)
    assert s_e_inner_product_residual(e.matrix) <= 1e-10


@pytest.mark.parametrize("twist", ["identity", "inner", "conformal"])
def test_parametrix(twist):
    t = full_even_triple(12, 3, 3, twist)
    e = graded_idempotent(t, 2, 2, 4, 1)
    left, right = parametrix_check(t, e)
    assert left <= 1e-9 and right <= 1e-9


@pytest.mark.parametrize("p", [1, 2, 3])
def test_hormander_formula(p):
    t = full_even_triple(21, 3, 3, "inner")
    e = graded_idempotent(t, 2, 4, 1, 5)
    r = fredholm_index(t, e)
    v = hormander_trace_index(t, e, p)
    assert abs(v - r.ind_plus) <= 1e-8 * max(1, abs(r.ind_plus))


def test_compressed_blocks_are_odd():
    t = full_even_triple(3, 2, 3, "inner")
    e = graded_idempotent(t, 1, 2, 1, 3)
    c = compress(t, e)
    assert c.reconstruction_residual <= 1e-9
    assert c.block_plus.shape == (c.codomain["-"].shape[1], c.domain["+"].shape[1])
