import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdof.qary import (
    CarryOverflow,
    QaryVector,
    add_carry_free,
    fraction_value,
    from_value,
    normalize,
    receiver_reduce,
    reduce_noisy,
    shift,
    value_of,
)


def test_value_of_examples():
    assert value_of(QaryVector(10, (3, 2, 1))) == 123
    assert value_of(QaryVector(10, ())) == 0
    # [1.2]_7 checked against plain rational arithmetic
    assert value_of(QaryVector(7, (2, 1), -1)) == Fraction(1) + Fraction(2, 7) == Fraction(9, 7)


def test_value_is_integer_for_nonnegative_exponent():
    v = value_of(QaryVector(5, (4, 0, 3), 2))
    assert isinstance(v, int) and v == (4 + 3 * 25) * 25


@pytest.mark.parametrize("digits", [(10,), (-1,)])
def test_rejects_bad_digits(digits):
    with pytest.raises(ValueError):
        QaryVector(10, digits)


def test_rejects_small_base():
    with pytest.raises(ValueError):
        QaryVector(2, (1,))


def test_shift():
    v = QaryVector(10, (2, 1))
    assert value_of(shift(v, 3)) == 12000
    assert shift(v, 0) == v
    assert shift(shift(v, -4), 4) == v


def test_add_carry_free_examples():
    assert add_carry_free([QaryVector(10, (2, 1)), QaryVector(10, (3, 2))]).digits == (5, 3)
    with pytest.raises(CarryOverflow):
        add_carry_free([QaryVector(10, (9,)), QaryVector(10, (1,))])


def test_add_carry_free_exhaustive_triples():
    # K=3, Q=10, digits in {1,2}: every triple sums to <= 6
    for a, b, c in itertools.product([1, 2], repeat=3):
        vs = [QaryVector(10, (a,)), QaryVector(10, (b,)), QaryVector(10, (c,))]
        out = add_carry_free(vs)
        assert out.digits == (a + b + c,)


def test_add_carry_free_aligns_exponents():
    a = QaryVector(10, (1, 2), -1)   # 2.1
    b = QaryVector(10, (3,), 2)      # 300
    out = add_carry_free([a, b])
    assert value_of(out) == Fraction(21, 10) + 300
    assert out.lowest_exponent == -1


@settings(max_examples=200, deadline=None)
@given(
    K=st.integers(2, 6),
    extra=st.integers(0, 40),
    data=st.data(),
)
def test_carry_free_closure(K, extra, data):
    Q = 2 * K + 4 + extra
    top = (Q - 1) // K - 1
    n = data.draw(st.integers(1, 6))
    vs = [
        QaryVector(Q, tuple(data.draw(st.lists(st.integers(0, top), min_size=n, max_size=n))),
                   data.draw(st.integers(-3, 3)))
        for _ in range(K)
    ]
    out = add_carry_free(vs)
    assert value_of(out) == sum(Fraction(value_of(v)) for v in vs)


@given(x=st.fractions(min_value=0, max_value=10**6).map(lambda f: f.limit_denominator(1)),
       lo=st.integers(-3, 0))
def test_from_value_round_trip(x, lo):
    v = from_value(x * Fraction(7) ** lo, 7, lo)
    assert value_of(v) == x * Fraction(7) ** lo


def test_from_value_width():
    assert from_value(5, 10, width=3).digits == (5, 0, 0)
    with pytest.raises(ValueError):
        from_value(1234, 10, width=3)
    with pytest.raises(ValueError):
        from_value(Fraction(1, 3), 10, 0)


def test_receiver_reduce_examples():
    assert receiver_reduce(1234.7, 10, 3).digits == (4, 3, 2)
    assert receiver_reduce(-5.2, 10, 2).digits == (5, 0)
    assert receiver_reduce(Fraction(10**40 + 7, 1), 10, 2).digits == (7, 0)
    with pytest.raises(ValueError):
        receiver_reduce(1.0, 10, 0)


def test_noise_below_threshold_never_moves_level_i():
    # grid of x with digits in {1..Q-2} and z with |z| <= Q**(i-1)
    Q, m = 10, 4
    for digits in itertools.product([1, 5, 8], repeat=m):
        x = QaryVector(Q, digits)
        clean = receiver_reduce(value_of(x), Q, m)
        for i in range(1, m):
            bound = Q ** (i - 1)
            for z in np.linspace(-bound, bound, 9):
                noisy = receiver_reduce(Fraction(value_of(x)) + Fraction(z), Q, m)
                assert noisy.digits[i] == clean.digits[i] == digits[i]


def test_noise_above_threshold_can_move_level():
    x = QaryVector(10, (1, 1, 1))
    assert receiver_reduce(value_of(x) - 12, 10, 3).digits[2] == 0


@settings(max_examples=300, deadline=None)
@given(
    digits=st.lists(st.integers(1, 14), min_size=1, max_size=8),
    z=st.floats(-50, 50, allow_nan=False),
    i=st.integers(1, 7),
)
def test_noise_containment_property(digits, z, i):
    Q = 16
    if i >= len(digits) or abs(z) > Q ** (i - 1):
        return
    x = QaryVector(Q, tuple(digits))
    noisy = receiver_reduce(Fraction(value_of(x)) + Fraction(z), Q, len(digits))
    assert noisy.digits[i] == digits[i]


def test_normalize_propagates_borrow_and_carry():
    d, top = normalize(np.array([[-1, 0, 3], [12, 9, 9]]), 10)
    assert d.tolist() == [[9, 9, 2], [2, 0, 0]]
    assert top.tolist() == [0, 1]


def test_fraction_value():
    # digits at exponents -2, -1 (low to high)
    assert fraction_value(np.array([[5, 2]]), 10)[0] == pytest.approx(0.25)


def test_reduce_noisy_matches_exact_path():
    rng = np.random.default_rng(7)
    Q, m, F = 16, 12, 3
    ints = rng.integers(0, Q, size=(500, m))
    ints[:5] = 0                       # tiny signals that go negative
    fracs = rng.integers(0, Q, size=(500, F))
    z = rng.standard_normal(500) * 3
    got = reduce_noisy(ints, fraction_value(fracs, Q), z, Q)
    for row in range(500):
        exact = (sum(int(d) * Q**p for p, d in enumerate(ints[row]))
                 + sum(Fraction(int(d), Q ** (F - p)) for p, d in enumerate(fracs[row]))
                 + Fraction(float(z[row])))
        assert tuple(got[row]) == receiver_reduce(exact, Q, m).digits
