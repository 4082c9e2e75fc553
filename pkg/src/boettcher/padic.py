"""Base-p digit combinatorics and exact p-adic valuations of rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Sequence, Union

Rational = Union[int, Fraction]


class NotPIntegralError(ValueError):
    """A rational expected to be p-integral has negative valuation."""


class ValuationMismatchError(ValueError):
    """A value did not have the valuation it was asserted to have."""

    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected valuation {expected}, got {actual}")


def is_odd_prime(p: int) -> bool:
    """Trial-division primality test, restricted to odd primes."""
    if p < 3 or p % 2 == 0:
        return False
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


def require_odd_prime(p: int) -> None:
    if not is_odd_prime(p):
        raise ValueError(f"p must be an odd prime >= 3, got {p!r}")


@total_ordering
class Valuation:
    """An integer p-adic valuation, or the infinite valuation of zero.

    The infinite valuation compares greater than every finite one, so
    inequality checks against lower bounds cannot be spoofed by a sentinel.
    """

    __slots__ = ("_value",)

    def __init__(self, value: int):
        if not isinstance(value, int):
            raise TypeError(f"valuation must be an int, got {value!r}")
        self._value = value

    @classmethod
    def infinite(cls) -> "Valuation":
        v = object.__new__(cls)
        v._value = None
        return v

    @property
    def is_infinite(self) -> bool:
        return self._value is None

    @property
    def value(self) -> int:
        if self._value is None:
            raise ValueError("the infinite valuation has no integer value")
        return self._value

    @staticmethod
    def _coerce(other) -> "Valuation":
        if isinstance(other, Valuation):
            return other
        if isinstance(other, int):
            return Valuation(other)
        return NotImplemented

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self._value == o._value

    def __lt__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self._value is None:
            return False
        if o._value is None:
            return True
        return self._value < o._value

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self._value is None or o._value is None:
            return Valuation.infinite()
        return Valuation(self._value + o._value)

    __radd__ = __add__

    def __hash__(self):
        return hash(self._value)

    def __repr__(self):
        if self._value is None:
            return "Valuation.infinite()"
        return f"Valuation({self._value})"

    def __str__(self):
        return "inf" if self._value is None else str(self._value)


def digits(n: int, p: int) -> tuple[int, ...]:
    """Little-endian base-p digits of n >= 0; (0,) for n = 0."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return (0,)
    out = []
    while n:
        n, d = divmod(n, p)
        out.append(d)
    return tuple(out)


@dataclass(frozen=True)
class DigitExpansion:
    """The base-p digit string of a nonnegative integer, least digit first."""

    base: int
    digits: tuple[int, ...]

    def __post_init__(self):
        require_odd_prime(self.base)
        if not self.digits:
            raise ValueError("digit string may not be empty")
        if any(d < 0 or d >= self.base for d in self.digits):
            raise ValueError("digits out of range")
        if len(self.digits) > 1 and self.digits[-1] == 0:
            raise ValueError("most significant digit must be nonzero")

    @classmethod
    def of(cls, n: int, p: int) -> "DigitExpansion":
        return cls(p, digits(n, p))

    @property
    def value(self) -> int:
        return sum(d * self.base**i for i, d in enumerate(self.digits))

    @property
    def digit_sum(self) -> int:
        return sum(self.digits)


def digit_sum(n: int, p: int) -> int:
    """Sum of the base-p digits of n >= 0."""
    require_odd_prime(p)
    if n < 0:
        raise ValueError("n must be nonnegative")
    s = 0
    while n:
        n, d = divmod(n, p)
        s += d
    return s


def ord_p(x: Rational, p: int) -> Valuation:
    """Exact p-adic valuation of an integer or Fraction; infinite for 0."""
    require_odd_prime(p)
    if isinstance(x, int):
        num, den = x, 1
    elif isinstance(x, Fraction):
        num, den = x.numerator, x.denominator
    else:
        raise TypeError(f"expected int or Fraction, got {type(x).__name__}")
    if num == 0:
        return Valuation.infinite()
    v = 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return Valuation(v)


def factorial_valuation(n: int, p: int) -> Valuation:
    """ord_p(n!) as (n - digit_sum(n)) / (p - 1)."""
    require_odd_prime(p)
    if n < 0:
        raise ValueError("n must be nonnegative")
    return Valuation((n - digit_sum(n, p)) // (p - 1))


def prime_part_factorial_mod_p(n: int, p: int) -> int:
    """The prime-to-p part of n! reduced mod p.

    Works block by block in base p: each complete block of p consecutive
    integers contributes -1 by Wilson's theorem, so n! never has to be
    materialized.
    """
    require_odd_prime(p)
    if n < 0:
        raise ValueError("n must be nonnegative")
    small = [1] * p
    for i in range(2, p):
        small[i] = small[i - 1] * i % p
    res = 1
    while n > 0:
        n, rem = divmod(n, p)
        res = res * small[rem] % p
        if n % 2 == 1:
            res = p - res
    return res


def carry_defect(summands: Sequence[int], p: int) -> int:
    """Number of base-p carries performed when adding the summands."""
    require_odd_prime(p)
    if not summands:
        raise ValueError("need at least one summand")
    if any(n < 0 for n in summands):
        raise ValueError("summands must be nonnegative")
    excess = sum(digit_sum(n, p) for n in summands) - digit_sum(sum(summands), p)
    carries, rem = divmod(excess, p - 1)
    if rem != 0 or carries < 0:
        raise ArithmeticError(f"digit-sum defect {excess} is not a carry count")
    return carries


def mod_p_reduce(x: Rational, p: int) -> int:
    """Reduce a p-integral rational mod p.

    Raises NotPIntegralError when ord_p(x) < 0; a positive valuation
    reduces to 0.
    """
    require_odd_prime(p)
    if isinstance(x, int):
        return x % p
    if not isinstance(x, Fraction):
        raise TypeError(f"expected int or Fraction, got {type(x).__name__}")
    if x.denominator % p == 0:
        raise NotPIntegralError(f"{x} has negative {p}-adic valuation")
    return x.numerator * pow(x.denominator, -1, p) % p


def unit_part_mod_p(x: Rational, p: int, expected_valuation: int) -> int:
    """Reduce x / p^expected_valuation mod p, insisting that the division
    leaves a unit.  A wrong expected_valuation raises ValuationMismatchError
    carrying both valuations."""
    require_odd_prime(p)
    actual = ord_p(x, p)
    if actual != Valuation(expected_valuation):
        raise ValuationMismatchError(Valuation(expected_valuation), actual)
    if expected_valuation >= 0:
        shifted = Fraction(x) / p**expected_valuation
    else:
        shifted = Fraction(x) * p ** (-expected_valuation)
    return mod_p_reduce(shifted, p)
