import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import full_even_triple, graded_idempotent, tuples
from twistdex.cyclic import (B0, Cochain, connes_B, cyclic_T, hochschild_b, is_normalized,
                             normalizer_A, pair_cyclic_cocycle, pair_normalized_even,
                             pairing_constant, periodicity_S, trace_lift)
from twistdex.errors import ContractViolation, DomainError
from twistdex.ktheory import unit_idempotent


def weighted(degree, seed, n):
    """phi(a^0..a^m) = tr(a^0 M_1 a^1 M_2 ... a^m M_{m+1}): a generic, non-cyclic cochain."""
    rng = np.random.default_rng(seed)
    Ms = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(degree + 1)]

    def ev(*a):
        p = np.eye(n, dtype=complex)
        for x, M in zip(a, Ms):
            p = p @ x @ M
        return np.trace(p)

    return Cochain(degree, ev, name="w")


def rand_mats(rng, count, n):
    return [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(count)]


def test_trace_is_hochschild_cocycle():
    tr = Cochain(0, np.trace)
    rng = np.random.default_rng(0)
    a, b = rand_mats(rng, 2, 3)
    assert abs(hochschild_b(tr)(a, b)) < 1e-12
    np.testing.assert_allclose(hochschild_b(tr)(a, b), np.trace(a @ b) - np.trace(b @ a), atol=1e-12)


def test_b_of_degree_one_by_hand():
    phi = weighted(1, 1, 2)
    rng = np.random.default_rng(1)
    a, b, c = rand_mats(rng, 3, 2)
    expected = phi(a @ b, c) - phi(a, b @ c) + phi(c @ a, b)
    assert abs(hochschild_b(phi)(a, b, c) - expected) < 1e-12


def test_T_and_A_by_hand():
    phi = weighted(2, 2, 2)
    rng = np.random.default_rng(2)
    a, b, c = rand_mats(rng, 3, 2)
    assert abs(cyclic_T(phi)(a, b, c) - phi(c, a, b)) < 1e-12
    expected = phi(a, b, c) + phi(c, a, b) + phi(b, c, a)
    assert abs(normalizer_A(phi)(a, b, c) - expected) < 1e-11


def test_B0_inserts_unit():
    phi = weighted(1, 3, 2)
    a = np.arange(4.0).reshape(2, 2)
    assert abs(B0(phi)(a) - phi(np.eye(2), a)) < 1e-12


def test_arity_checked():
    with pytest.raises(DomainError):
        weighted(1, 0, 2)(np.eye(2))
    with pytest.raises(DomainError):
        B0(Cochain(0, np.trace))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 3))
def test_bb_BB_bB(seed, m):
    rng = np.random.default_rng(seed)
    n = 2
    phi = weighted(m, seed, n)
    scale_of = lambda args: n * np.prod([max(np.linalg.norm(x, 2), 1.0) for x in args]) * 10 ** m
    args = rand_mats(rng, m + 3, n)
    assert abs(hochschild_b(hochschild_b(phi))(*args)) <= 1e-9 * scale_of(args)
    if m >= 2:
        a = args[:m - 1]
        assert abs(connes_B(connes_B(phi))(*a)) <= 1e-9 * scale_of(a)
    if m >= 1:
        a = args[:m + 1]
        v = hochschild_b(connes_B(phi))(*a) + connes_B(hochschild_b(phi))(*a)
        assert abs(v) <= 1e-9 * scale_of(a)


def test_trace_lift_of_trace_product():
    # tr# of tr(a^0 a^1 a^2) is tr over M_q(M_n) of the product
    n, q = 2, 3
    phi = Cochain(2, lambda a, b, c: np.trace(a @ b @ c))
    rng = np.random.default_rng(5)
    x = rand_mats(rng, 3, n * q)
    assert abs(trace_lift(phi, q)(*x) - np.trace(x[0] @ x[1] @ x[2])) < 1e-10


def test_trace_lift_sparse_blocks_skipped_correctly():
    n, q = 2, 2
    phi = Cochain(1, lambda a, b: np.trace(a @ b))
    x = np.zeros((4, 4), complex)
    x[:2, 2:] = np.eye(2)
    y = x.T.copy()
    assert abs(trace_lift(phi, q)(x, y) - np.trace(x @ y)) < 1e-12


def test_pairing_constant():
    assert pairing_constant(0) == 1
    assert pairing_constant(1) == -2
    assert pairing_constant(2) == 12


def test_odd_pairing_rejected():
    with pytest.raises(DomainError):
        pair_cyclic_cocycle(weighted(1, 0, 2), unit_idempotent(2))


def test_periodicity_S_on_trace():
    tr = Cochain(0, np.trace, cyclic=True)
    S = periodicity_S(tr)
    rng = np.random.default_rng(4)
    a = rand_mats(rng, 4, 2)
    assert abs(hochschild_b(S)(*a)) < 1e-10
    assert abs(cyclic_T(S)(*a[:3]) - S(*a[:3])) < 1e-10


@pytest.mark.parametrize("ranks", [(2, 0), (0, 1), (1, 1)])
def test_S_preserves_pairing(ranks):
    from twistdex.chern import tau2k
    t = full_even_triple(2, 2, 2)
    e = graded_idempotent(t, 1, *ranks, 1)
    p1 = pair_cyclic_cocycle(tau2k(t, 1), e)
    p3 = pair_cyclic_cocycle(periodicity_S(tau2k(t, 1)), e)
    assert abs(p3 - p1) < 1e-8 * max(1, abs(p1))
    assert abs(p1 - (ranks[0] - ranks[1])) < 1e-8


def test_normalized_pairing_rejects_non_normalized():
    phi = weighted(2, 0, 2)
    samples = [rand_mats(np.random.default_rng(0), 3, 2)]
    assert not is_normalized(phi, samples)
    with pytest.raises(ContractViolation):
        pair_normalized_even({2: phi}, unit_idempotent(2), check_samples=samples)


def test_normalized_pairing_degree_zero():
    tr = Cochain(0, np.trace)
    e = unit_idempotent(3, 2)
    assert abs(pair_normalized_even({0: tr}, e) - 6) < 1e-12
