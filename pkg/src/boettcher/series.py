"""Truncated formal power series over exact rationals, plus sparse
multivariate polynomials over a prime field.

Univariate series are dense and carry an explicit truncation order.
Binary operations truncate to the shorter operand, and reading a
coefficient beyond the truncation raises instead of returning zero, so a
missing term can never masquerade as a vanishing one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .padic import require_odd_prime


class TruncationError(IndexError):
    """Requested coefficient lies beyond a series' truncation order."""


@dataclass(frozen=True)
class PowerSeries:
    """A univariate series sum c_n x^n with exact rational coefficients,
    known through degree len(coefficients) - 1."""

    coefficients: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("a series must carry at least the constant term")

    @classmethod
    def from_coefficients(cls, values: Iterable, order: int | None = None) -> "PowerSeries":
        cs = [Fraction(v) for v in values]
        if order is not None:
            if order < 0:
                raise ValueError("truncation order must be >= 0")
            if len(cs) > order + 1:
                raise ValueError(f"{len(cs)} coefficients exceed truncation order {order}")
            cs.extend([Fraction(0)] * (order + 1 - len(cs)))
        if not cs:
            raise ValueError("no coefficients given and no order to pad to")
        return cls(tuple(cs))

    @classmethod
    def one(cls, order: int) -> "PowerSeries":
        return cls.from_coefficients([1], order=order)

    @classmethod
    def zero(cls, order: int) -> "PowerSeries":
        return cls.from_coefficients([0], order=order)

    @property
    def truncation_order(self) -> int:
        return len(self.coefficients) - 1

    def coefficient(self, n: int) -> Fraction:
        if n < 0:
            raise ValueError("coefficient index must be >= 0")
        if n > self.truncation_order:
            raise TruncationError(
                f"coefficient {n} beyond truncation order {self.truncation_order}"
            )
        return self.coefficients[n]


def _min_order(a: PowerSeries, b: PowerSeries) -> int:
    return min(a.truncation_order, b.truncation_order)


def ps_add(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    k = _min_order(a, b)
    return PowerSeries(tuple(a.coefficients[i] + b.coefficients[i] for i in range(k + 1)))


def ps_sub(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    k = _min_order(a, b)
    return PowerSeries(tuple(a.coefficients[i] - b.coefficients[i] for i in range(k + 1)))


def ps_scale(a: PowerSeries, c) -> PowerSeries:
    c = Fraction(c)
    return PowerSeries(tuple(c * x for x in a.coefficients))


def ps_mul(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """Cauchy product truncated to the shorter operand."""
    k = _min_order(a, b)
    out = [Fraction(0)] * (k + 1)
    for i, ai in enumerate(a.coefficients[: k + 1]):
        if ai == 0:
            continue
        for j in range(k + 1 - i):
            bj = b.coefficients[j]
            if bj != 0:
                out[i + j] += ai * bj
    return PowerSeries(tuple(out))


def ps_pow(s: PowerSeries, e: int) -> PowerSeries:
    """s**e by repeated squaring, at the truncation order of s."""
    if e < 1:
        raise ValueError("exponent must be >= 1")
    result = PowerSeries.one(s.truncation_order)
    base = s
    while e:
        if e & 1:
            result = ps_mul(result, base)
        e >>= 1
        if e:
            base = ps_mul(base, base)
    return result


def ps_substitute_power(s: PowerSeries, q: int) -> PowerSeries:
    """Substitute x -> x^q; coefficient i of s lands at index q*i."""
    if q < 1:
        raise ValueError("substitution power must be >= 1")
    if q == 1:
        return s
    k_in = s.truncation_order
    k_out = q * (k_in + 1) - 1
    out = [Fraction(0)] * (k_out + 1)
    for i, ci in enumerate(s.coefficients):
        out[q * i] = ci
    return PowerSeries(tuple(out))


def _ps_divide(num: PowerSeries, den: PowerSeries) -> PowerSeries:
    """num / den by forward substitution; den must have unit constant term."""
    if den.coefficients[0] == 0:
        raise ValueError("division requires an invertible constant term")
    k = _min_order(num, den)
    inv0 = 1 / den.coefficients[0]
    out = [Fraction(0)] * (k + 1)
    for n in range(k + 1):
        acc = num.coefficients[n]
        for i in range(n):
            di = den.coefficients[n - i]
            if di != 0:
                acc -= out[i] * di
        out[n] = acc * inv0
    return PowerSeries(tuple(out))


def ps_log(s: PowerSeries) -> PowerSeries:
    """Formal logarithm of a series with constant term 1, via the identity
    log(s)' = s'/s integrated termwise."""
    if s.coefficients[0] != 1:
        raise ValueError("ps_log requires constant term 1")
    k = s.truncation_order
    out = [Fraction(0)] * (k + 1)
    if k >= 1:
        deriv = PowerSeries(tuple((i + 1) * s.coefficients[i + 1] for i in range(k)))
        w = _ps_divide(deriv, PowerSeries(s.coefficients[:k]))
        for n in range(1, k + 1):
            out[n] = w.coefficients[n - 1] / n
    return PowerSeries(tuple(out))


def ps_exp(s: PowerSeries) -> PowerSeries:
    """Formal exponential of a series with constant term 0.

    Solved from E' = s'E, so the only denominators introduced are the
    integers 1..K.
    """
    if s.coefficients[0] != 0:
        raise ValueError("ps_exp requires constant term 0")
    k = s.truncation_order
    out = [Fraction(0)] * (k + 1)
    out[0] = Fraction(1)
    for n in range(1, k + 1):
        acc = Fraction(0)
        for i in range(1, n + 1):
            si = s.coefficients[i]
            if si != 0:
                acc += i * si * out[n - i]
        out[n] = acc / n
    return PowerSeries(tuple(out))


# ---------------------------------------------------------------------------
# Multivariate polynomials over F_p

TermKey = tuple[tuple[int, ...], int]  # (exponents of t_1..t_r, exponent of y)


@dataclass(frozen=True)
class MVPolynomial:
    """A polynomial over F_p in variables t_1..t_r and y, truncated at a
    total t-degree cap and a y-degree cap.  Absent monomials are zero."""

    prime: int
    nvars: int
    t_degree_cap: int
    y_degree_cap: int
    terms: tuple[tuple[tuple[int, ...], int, int], ...]  # (t_exps, y_exp, residue)

    @classmethod
    def from_terms(
        cls,
        prime: int,
        nvars: int,
        t_degree_cap: int,
        y_degree_cap: int,
        mapping: Mapping[TermKey, int],
    ) -> "MVPolynomial":
        require_odd_prime(prime)
        if nvars < 0 or t_degree_cap < 0 or y_degree_cap < 0:
            raise ValueError("variable count and degree caps must be >= 0")
        cleaned = {}
        for (t_exps, y_exp), coeff in mapping.items():
            t_exps = tuple(t_exps)
            if len(t_exps) != nvars or any(e < 0 for e in t_exps) or y_exp < 0:
                raise ValueError(f"bad exponent vector {(t_exps, y_exp)}")
            if sum(t_exps) > t_degree_cap or y_exp > y_degree_cap:
                raise ValueError(f"exponent vector {(t_exps, y_exp)} exceeds degree caps")
            c = coeff % prime
            if c:
                cleaned[(t_exps, y_exp)] = c
        terms = tuple(sorted((t, y, c) for (t, y), c in cleaned.items()))
        return cls(prime, nvars, t_degree_cap, y_degree_cap, terms)

    @classmethod
    def one(cls, prime: int, nvars: int, t_degree_cap: int, y_degree_cap: int) -> "MVPolynomial":
        return cls.from_terms(prime, nvars, t_degree_cap, y_degree_cap,
                              {((0,) * nvars, 0): 1})

    def as_dict(self) -> dict[TermKey, int]:
        return {(t, y): c for t, y, c in self.terms}

    def coefficient(self, t_exps: tuple[int, ...], y_exp: int) -> int:
        t_exps = tuple(t_exps)
        if len(t_exps) != self.nvars:
            raise ValueError("wrong number of t exponents")
        if sum(t_exps) > self.t_degree_cap or y_exp > self.y_degree_cap:
            raise TruncationError(f"monomial {(t_exps, y_exp)} beyond degree caps")
        return self.as_dict().get((t_exps, y_exp), 0)


def _require_same_shape(a: MVPolynomial, b: MVPolynomial) -> None:
    if (a.prime, a.nvars, a.t_degree_cap, a.y_degree_cap) != (
        b.prime, b.nvars, b.t_degree_cap, b.y_degree_cap
    ):
        raise ValueError("operands differ in prime, variables, or degree caps")


def mv_add(a: MVPolynomial, b: MVPolynomial) -> MVPolynomial:
    _require_same_shape(a, b)
    out = a.as_dict()
    for key, c in b.as_dict().items():
        out[key] = (out.get(key, 0) + c) % a.prime
    return MVPolynomial.from_terms(a.prime, a.nvars, a.t_degree_cap, a.y_degree_cap, out)


def mv_scale(a: MVPolynomial, c: int) -> MVPolynomial:
    out = {key: v * c for key, v in a.as_dict().items()}
    return MVPolynomial.from_terms(a.prime, a.nvars, a.t_degree_cap, a.y_degree_cap, out)


def mv_mul(a: MVPolynomial, b: MVPolynomial) -> MVPolynomial:
    """Product truncated at the common degree caps."""
    _require_same_shape(a, b)
    p = a.prime
    tcap, ycap = a.t_degree_cap, a.y_degree_cap
    out: dict[TermKey, int] = {}
    for ta, ya, ca in a.terms:
        for tb, yb, cb in b.terms:
            yy = ya + yb
            if yy > ycap:
                continue
            tt = tuple(x + y for x, y in zip(ta, tb))
            if sum(tt) > tcap:
                continue
            key = (tt, yy)
            out[key] = (out.get(key, 0) + ca * cb) % p
    return MVPolynomial.from_terms(p, a.nvars, tcap, ycap, out)


def mv_log(m: MVPolynomial) -> MVPolynomial:
    """Truncated logarithm over F_p of a polynomial with constant term 1.

    Every nonconstant term of the input must involve some t variable, so
    that the expansion log(1+z) = sum (-1)^(m-1) z^m / m terminates at
    m = t_degree_cap.  The cap must stay below p for the 1/m to exist.
    """
    p = m.prime
    one_key = ((0,) * m.nvars, 0)
    body = m.as_dict()
    if body.get(one_key, 0) != 1:
        raise ValueError("mv_log requires constant term 1")
    del body[one_key]
    if any(sum(t) == 0 for (t, _y) in body):
        raise ValueError("mv_log requires every nonconstant term to involve t")
    if m.t_degree_cap >= p:
        raise ValueError(
            f"t-degree cap {m.t_degree_cap} would require inverting a multiple of {p}"
        )
    z = MVPolynomial.from_terms(p, m.nvars, m.t_degree_cap, m.y_degree_cap, body)
    acc = MVPolynomial.from_terms(p, m.nvars, m.t_degree_cap, m.y_degree_cap, {})
    power = MVPolynomial.one(p, m.nvars, m.t_degree_cap, m.y_degree_cap)
    for order in range(1, m.t_degree_cap + 1):
        power = mv_mul(power, z)
        sign = 1 if order % 2 == 1 else -1
        acc = mv_add(acc, mv_scale(power, sign * pow(order, -1, p)))
    return acc
