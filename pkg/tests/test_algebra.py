import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmcodes.algebra import (
    Fe,
    Matrix,
    PrimeField,
    build_systematic_mbr,
    build_vandermonde,
    custom_encoding,
    inverse_array,
    is_prime,
    mat_rank,
    mat_solve,
    mod_matmul,
    nullspace,
)
from pmcodes.errors import (
    DimensionMismatch,
    DivisionByZero,
    FieldMismatch,
    FieldTooSmall,
    InvalidParams,
    SingularSystem,
)

SMALL_PRIMES = [2, 3, 5, 7, 11, 13]


def brute_is_prime(q):
    return q >= 2 and all(q % f for f in range(2, q))


def test_is_prime_matches_trial_division():
    assert [q for q in range(200) if is_prime(q)] == [q for q in range(200) if brute_is_prime(q)]
    assert is_prime(2**31 - 1)


@pytest.mark.parametrize("q", [0, 1, 4, 9, 2**31 + 11, 2**40])
def test_bad_modulus_rejected(q):
    with pytest.raises(InvalidParams):
        PrimeField(q)


@given(st.sampled_from(SMALL_PRIMES + [2**31 - 1]), st.integers(), st.integers())
def test_field_ops_match_integer_arithmetic(q, a, b):
    F = PrimeField(q)
    x, y = F(a), F(b)
    assert int(x + y) == (a + b) % q
    assert int(x - y) == (a - b) % q
    assert int(x * y) == (a * b) % q
    assert int(-x) == (-a) % q
    if b % q:
        assert int((x / y) * y) == a % q
        assert int(y * y.inv()) == 1
    else:
        with pytest.raises(DivisionByZero):
            x / y


def test_every_nonzero_element_has_an_inverse():
    for q in SMALL_PRIMES:
        F = PrimeField(q)
        for a in range(1, q):
            assert F.mul(a, F.inv(a)) == 1


def test_fields_do_not_mix():
    with pytest.raises(FieldMismatch):
        PrimeField(5)(1) + PrimeField(7)(1)
    with pytest.raises(FieldMismatch):
        Matrix(PrimeField(5), [[PrimeField(7)(1)]])


def test_fe_is_immutable_and_hashable():
    x = PrimeField(5)(3)
    with pytest.raises(AttributeError):
        x.value = 4
    assert x == 3 and x == PrimeField(5)(8)
    assert len({x, PrimeField(5)(3)}) == 1
    assert isinstance(x, Fe)


def brute_rank(rows, q):
    """Largest number of rows with no nontrivial vanishing combination."""
    arr = np.array(rows, dtype=np.int64)
    best = 0
    for size in range(1, arr.shape[0] + 1):
        for idx in itertools.combinations(range(arr.shape[0]), size):
            sub = arr[list(idx)]
            dependent = any(
                not np.any(np.array(c) @ sub % q)
                for c in itertools.product(range(q), repeat=size)
                if any(c)
            )
            if not dependent:
                best = size
                break
    return best


@settings(max_examples=60)
@given(st.data())
def test_rank_matches_brute_force(data):
    q = data.draw(st.sampled_from([2, 3, 5]))
    r = data.draw(st.integers(1, 3))
    c = data.draw(st.integers(1, 3))
    rows = data.draw(st.lists(st.lists(st.integers(0, q - 1), min_size=c, max_size=c), min_size=r, max_size=r))
    assert mat_rank(Matrix(PrimeField(q), rows)) == brute_rank(rows, q)


@settings(max_examples=60)
@given(st.data())
def test_inverse_and_solve(data):
    q = data.draw(st.sampled_from([7, 13, 2**31 - 1]))
    n = data.draw(st.integers(1, 4))
    rows = data.draw(st.lists(st.lists(st.integers(0, q - 1), min_size=n, max_size=n), min_size=n, max_size=n))
    F = PrimeField(q)
    A = Matrix(F, rows)
    y = data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))
    if A.is_nonsingular():
        assert A @ A.inverse() == Matrix.identity(F, n)
        x = mat_solve(A, y)
        assert A @ x == tuple(y)
        np.testing.assert_array_equal(mod_matmul(A.to_numpy(), inverse_array(A.to_numpy(), F), q), np.eye(n))
    else:
        with pytest.raises(SingularSystem):
            A.inverse()
        with pytest.raises(SingularSystem):
            mat_solve(A, y)


def test_nullspace_vectors_vanish():
    F = PrimeField(7)
    A = Matrix(F, [[1, 2, 3, 4], [2, 4, 6, 1]])
    basis = nullspace(A)
    assert len(basis) == A.cols - A.rank()
    for v in basis:
        assert A @ v == (0, 0)


def test_dimension_checks():
    F = PrimeField(5)
    with pytest.raises(DimensionMismatch):
        Matrix(F, [[1, 2], [3]])
    with pytest.raises(DimensionMismatch):
        Matrix(F, [[1, 2]]) @ Matrix(F, [[1, 2]])
    with pytest.raises(DimensionMismatch):
        Matrix(F, [[1, 2]]).inverse()


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 2), st.integers(0, 2**31 - 2), st.integers(1, 6))
def test_mod_matmul_never_overflows(a, b, inner):
    q = 2**31 - 1
    A = np.full((2, inner), a, dtype=np.int64)
    B = np.full((inner, 3), b, dtype=np.int64)
    want = (a * b * inner) % q
    assert np.all(mod_matmul(A, B, q) == want)


def test_vandermonde_scan_and_explicit_points():
    F = PrimeField(13)
    enc = build_vandermonde(F, 7, 4, alpha=2)
    assert enc.points == (0, 1, 2, 3, 4, 5, 6)
    assert enc.violations(alpha=2) == []
    enc = build_vandermonde(F, 7, 4, alpha=2, points=[0, 1, 3, 2, 6, 5, 4])
    assert enc.row(2) == (1, 3, 9, 1)
    with pytest.raises(FieldTooSmall):
        build_vandermonde(F, 8, 4, alpha=2)
    with pytest.raises(FieldTooSmall):
        build_vandermonde(F, 3, 2, alpha=2, points=[1, 12, 0])


def test_any_d_rows_of_vandermonde_are_independent():
    enc = build_vandermonde(PrimeField(11), 7, 3)
    for rows in itertools.combinations(range(7), 3):
        assert enc.psi.take_rows(rows).is_nonsingular()


def test_systematic_mbr_matrix():
    F = PrimeField(13)
    enc = build_systematic_mbr(F, 6, 3, 4)
    assert enc.violations(k=3) == []
    np.testing.assert_array_equal(enc.array[:3], np.eye(3, 4, dtype=np.int64))


def test_violations_report_broken_invariants():
    F = PrimeField(5)
    enc = custom_encoding(F, [[1, 0], [2, 0], [1, 1]])
    assert "any d rows independent" in enc.violations()
    assert "MSR requires a Vandermonde matrix" in enc.violations(alpha=1)
