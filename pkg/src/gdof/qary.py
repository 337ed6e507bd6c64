"""Exact base-Q positional arithmetic on nonnegative fixed-point numbers.

A :class:`QaryVector` stores its digits least-significant first together with
the exponent of the lowest stored digit, so ``[1.2]_7`` is
``QaryVector(7, (2, 1), -1)``. Everything here is exact integer/rational
arithmetic except :func:`receiver_reduce` and :func:`reduce_noisy`, which are
where continuous (noisy) values enter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

import numpy as np


class CarryOverflow(ArithmeticError):
    """A position-wise digit sum reached Q, i.e. the addition would carry."""


@dataclass(frozen=True)
class QaryVector:
    base: int
    digits: tuple[int, ...] = ()
    lowest_exponent: int = 0

    def __post_init__(self):
        if self.base < 3:
            raise ValueError(f"base must be >= 3, got {self.base}")
        digits = tuple(int(d) for d in self.digits)
        for d in digits:
            if not 0 <= d < self.base:
                raise ValueError(f"digit {d} outside [0, {self.base - 1}]")
        object.__setattr__(self, "digits", digits)

    def __len__(self) -> int:
        return len(self.digits)

    @property
    def highest_exponent(self) -> int:
        """Exponent one above the most significant stored digit."""
        return self.lowest_exponent + len(self.digits)

    def digit(self, exponent: int) -> int:
        """Digit at ``exponent``; positions outside the stored range are 0."""
        i = exponent - self.lowest_exponent
        if 0 <= i < len(self.digits):
            return self.digits[i]
        return 0

    def mantissa(self) -> int:
        return sum(d * self.base**i for i, d in enumerate(self.digits))

    def __str__(self) -> str:
        # most significant first, point placed between exponents 0 and -1
        lo = min(self.lowest_exponent, 0)
        hi = max(self.highest_exponent, 1)
        sep = "," if self.base > 10 else ""
        whole = sep.join(str(self.digit(e)) for e in range(hi - 1, -1, -1))
        frac = sep.join(str(self.digit(e)) for e in range(-1, lo - 1, -1))
        return f"[{whole}.{frac or '0'}]_{self.base}"


def value_of(v: QaryVector) -> int | Fraction:
    """Exact value ``sum(digits[i] * Q**(lowest_exponent + i))``."""
    mant = v.mantissa()
    if v.lowest_exponent >= 0:
        return mant * v.base**v.lowest_exponent
    return Fraction(mant, v.base ** (-v.lowest_exponent))


def from_value(x, base: int, lowest_exponent: int = 0, width: int | None = None) -> QaryVector:
    """Base-``base`` expansion of a nonnegative exact value.

    ``x * base**-lowest_exponent`` must be an integer. With ``width`` the
    result has exactly that many digits (leading zeros kept); a value that
    does not fit raises ``ValueError``.
    """
    x = Fraction(x)
    if x < 0:
        raise ValueError("QaryVector values are nonnegative")
    scaled = x * Fraction(base) ** (-lowest_exponent)
    if scaled.denominator != 1:
        raise ValueError(f"{x} is not representable at exponent {lowest_exponent}")
    digits = int_to_digits(scaled.numerator, base, width)
    return QaryVector(base, digits, lowest_exponent)


def int_to_digits(n: int, base: int, width: int | None = None) -> tuple[int, ...]:
    out = []
    while n and (width is None or len(out) < width):
        n, d = divmod(n, base)
        out.append(d)
    if n:
        raise ValueError(f"value needs more than {width} digits")
    if width is not None:
        out.extend([0] * (width - len(out)))
    return tuple(out)


def shift(v: QaryVector, s: int) -> QaryVector:
    """Multiply by ``Q**s``: digits unchanged, exponent moved by ``s``."""
    return QaryVector(v.base, v.digits, v.lowest_exponent + s)


def add_carry_free(vs: Sequence[QaryVector]) -> QaryVector:
    """Position-wise digit sums of ``vs``.

    Raises :class:`CarryOverflow` if any position sums past ``Q - 1``.
    """
    if not vs:
        raise ValueError("need at least one vector")
    base = vs[0].base
    if any(v.base != base for v in vs):
        raise ValueError("mixed bases")
    lo = min(v.lowest_exponent for v in vs)
    hi = max(v.highest_exponent for v in vs)
    digits = []
    for e in range(lo, hi):
        total = sum(v.digit(e) for v in vs)
        if total >= base:
            raise CarryOverflow(f"digit sum {total} >= {base} at exponent {e}")
        digits.append(total)
    return QaryVector(base, tuple(digits), lo)


def receiver_reduce(y: Real, Q: int, m: int) -> QaryVector:
    """m-digit expansion of ``floor(|y| mod Q**m)``.

    ``y`` may be an int, a :class:`~fractions.Fraction` or a float; floats are
    converted exactly, so the only rounding is whatever the caller already did
    when forming ``y``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    n = math.floor(abs(Fraction(y))) % Q**m
    return QaryVector(Q, int_to_digits(n, Q, m), 0)


# -- batched helpers (numpy digit arrays, last axis = exponent 0..m-1) --


def normalize(digits: np.ndarray, Q: int) -> tuple[np.ndarray, np.ndarray]:
    """Propagate carries/borrows upward along the last axis.

    Returns ``(digits mod Q, carry out of the top position)``; a negative
    carry out means the represented integer went below zero.
    """
    d = np.array(digits, dtype=np.int64, copy=True)
    carry = np.zeros(d.shape[:-1], dtype=np.int64)
    for p in range(d.shape[-1]):
        col = d[..., p] + carry
        carry = np.floor_divide(col, Q)
        d[..., p] = col - carry * Q
    return d, carry


def fraction_value(frac_digits: np.ndarray, Q: int) -> np.ndarray:
    """Float value of digits at exponents -F..-1 (last axis ordered low to high)."""
    out = np.zeros(frac_digits.shape[:-1])
    for p in range(frac_digits.shape[-1]):
        out = (out + frac_digits[..., p]) / Q
    return out


def reduce_noisy(
    int_digits: np.ndarray,
    frac: np.ndarray,
    noise: np.ndarray,
    Q: int,
) -> np.ndarray:
    """Batched ``receiver_reduce(exact + noise)``.

    ``int_digits`` (shape ``(..., m)``) and ``frac`` (in ``[0, 1)``) are the
    exact noise-free integer digits and fractional part; ``noise`` is added
    as ``floor(frac + noise)`` to digit 0 and propagated, so arbitrarily long
    signals stay exact above the lowest few levels. Rows whose total goes
    negative (tiny signals) are redone through the scalar path.
    """
    w = frac + noise
    c = np.floor(w).astype(np.int64)
    d = np.array(int_digits, dtype=np.int64, copy=True)
    d[..., 0] += c
    out, top = normalize(d, Q)
    neg = np.argwhere(top < 0)
    if len(neg):
        m = d.shape[-1]
        for idx in map(tuple, neg):
            n_int = int(sum(int(v) * Q**p for p, v in enumerate(int_digits[idx])))
            y = Fraction(n_int) + Fraction(float(frac[idx])) + Fraction(float(noise[idx]))
            out[idx] = receiver_reduce(y, Q, m).digits
    return out


def digits_value(digits: Iterable[int], Q: int) -> int:
    return sum(int(d) * Q**p for p, d in enumerate(digits))
