"""Monomial combinatorics behind the coefficient recursion.

The bracketed B and C coefficients expand over lattices of exponent
vectors (partition-like multi-indices), each carrying an exact rational
coefficient whose p-adic valuation is a digit-sum expression in the
carries of two base-p additions.  This module enumerates those lattices,
computes the coefficients and their carry defects, classifies the
unit-coefficient survivors, and implements the block-series machinery
(digit vectors, vector partitions, truncated exponentials, the tree
function, and the multivariate cumulant collapse) used to verify the
congruence theorems.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, prod
from typing import Iterator, Sequence

from .padic import Valuation, digit_sum, mod_p_reduce, ord_p, require_odd_prime
from .reports import CheckReport, Witness
from .series import MVPolynomial, PowerSeries, mv_log, ps_pow, ps_scale, ps_exp
from .solver import CoefficientTable

# Beyond this index the B/C lattices blow up; refuse rather than sample,
# since a partial enumeration would fake classification results.
ENUMERATION_MAX_K = 40
VECTOR_WEIGHT_MAX = 6


class EnumerationGuardError(ValueError):
    """The requested enumeration exceeds the supported size."""


@dataclass(frozen=True)
class MultiIndex:
    """Sparse exponent vector e, stored as (index, multiplicity) pairs with
    multiplicity >= 1 and indices ascending."""

    entries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        last = -1
        for n, e_n in self.entries:
            if n <= last or n < 0:
                raise ValueError("indices must be ascending and nonnegative")
            if e_n < 1:
                raise ValueError("multiplicities must be >= 1")
            last = n

    @classmethod
    def from_mapping(cls, mapping: dict[int, int]) -> "MultiIndex":
        return cls(tuple(sorted((n, e) for n, e in mapping.items() if e)))

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    @property
    def sigma(self) -> int:
        """Total multiplicity (number of factors chosen)."""
        return sum(e for _, e in self.entries)

    @property
    def weight(self) -> int:
        """Degree contributed, sum of index * multiplicity."""
        return sum(n * e for n, e in self.entries)

    def positive_indices(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.entries if n >= 1)


@dataclass(frozen=True)
class MonomialRecord:
    """A multi-index with its exact coefficient, valuation, and (for the
    B lattice) the two carry defects that predict the valuation."""

    index: MultiIndex
    coefficient: Fraction
    valuation: Valuation
    carry_defects: tuple[int, int] | None


def _partitions(total: int, max_part: int, max_parts: int) -> Iterator[tuple[int, ...]]:
    """Partitions of total into at most max_parts parts, each <= max_part,
    parts listed in descending order (lexicographic enumeration)."""
    if total == 0:
        yield ()
        return

    def rec(rem: int, largest: int, room: int):
        if rem == 0:
            yield ()
            return
        if room == 0:
            return
        for part in range(min(rem, largest), 0, -1):
            for rest in rec(rem - part, part, room - 1):
                yield (part,) + rest

    yield from rec(total, max_part, max_parts)


def _guard(p: int, k: int) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if p != 3 and k > ENUMERATION_MAX_K:
        raise EnumerationGuardError(
            f"monomial enumeration supports p=3 or k <= {ENUMERATION_MAX_K}, got p={p}, k={k}"
        )


def enumerate_b_monomials(p: int, k: int) -> list[MultiIndex]:
    """All exponent vectors of the degree-k coefficient of the q-th power
    of the truncation to degrees < k: total multiplicity q = p^2, weight k,
    positive indices at most k-1."""
    require_odd_prime(p)
    _guard(p, k)
    q = p * p
    out = []
    for parts in _partitions(k, k - 1, q):
        e: dict[int, int] = {}
        for n in parts:
            e[n] = e.get(n, 0) + 1
        e[0] = q - len(parts)
        out.append(MultiIndex.from_mapping(e))
    return out


def enumerate_c_monomials(p: int, k: int) -> list[MultiIndex]:
    """As enumerate_b_monomials, for the shifted lattice of the C bracket:
    total multiplicity q + 1 and weight k - 1."""
    require_odd_prime(p)
    _guard(p, k)
    q = p * p
    out = []
    for parts in _partitions(k - 1, k - 1, q + 1):
        e: dict[int, int] = {}
        for n in parts:
            e[n] = e.get(n, 0) + 1
        e[0] = q + 1 - len(parts)
        out.append(MultiIndex.from_mapping(e))
    return out


def _multinomial(total: int, mults: Sequence[int]) -> int:
    value = factorial(total)
    for m in mults:
        value //= factorial(m)
    return value


def b_coefficient(e: MultiIndex, p: int, k: int) -> MonomialRecord:
    """Exact coefficient of the monomial e in the B bracket at index k,
    with its two carry defects.

    The valuation always equals (carries of the weight addition)
    + (carries of the multiplicity addition) - 2; a discrepancy would mean
    the closed valuation formula is wrong, so it is rechecked here.
    """
    require_odd_prime(p)
    q = p * p
    if e.sigma != q or e.weight != k:
        raise ValueError(f"multi-index {e} does not lie on the B lattice at k={k}")
    mults = [m for _, m in e.entries]
    coeff = Fraction(factorial(k) * _multinomial(q, mults), q)
    for n, e_n in e.entries:
        if n >= 2:
            coeff /= Fraction(factorial(n)) ** e_n
    c_defect = (sum(e_n * digit_sum(n, p) for n, e_n in e.entries) - digit_sum(k, p)) // (p - 1)
    d_defect = (sum(digit_sum(e_n, p) for _, e_n in e.entries) - 1) // (p - 1)
    val = ord_p(coeff, p)
    if val != c_defect + d_defect - 2:
        raise ArithmeticError(
            f"carry-defect valuation {c_defect}+{d_defect}-2 disagrees with ord {val} at {e}"
        )
    return MonomialRecord(e, coeff, val, (c_defect, d_defect))


def c_coefficient(e: MultiIndex, p: int, k: int) -> MonomialRecord:
    """Exact coefficient of the monomial e in the C bracket at index k."""
    require_odd_prime(p)
    q = p * p
    if e.sigma != q + 1 or e.weight != k - 1:
        raise ValueError(f"multi-index {e} does not lie on the C lattice at k={k}")
    mults = [m for _, m in e.entries]
    coeff = Fraction(factorial(k) * _multinomial(q + 1, mults))
    for n, e_n in e.entries:
        if n >= 2:
            coeff /= Fraction(factorial(n)) ** e_n
    sigma_digits = sum(digit_sum(e_n, p) for _, e_n in e.entries)
    weighted_digits = sum(e_n * digit_sum(n, p) for n, e_n in e.entries)
    val = ord_p(coeff, p)
    expected_scaled = -digit_sum(k, p) - 1 + sigma_digits + weighted_digits
    if (p - 1) * val.value != expected_scaled:
        raise ArithmeticError(
            f"digit-sum valuation {expected_scaled}/(p-1) disagrees with ord {val} at {e}"
        )
    return MonomialRecord(e, coeff, val, None)


@dataclass(frozen=True)
class SurvivorClassification:
    """Unit-coefficient B monomials at a divisible index, split into the
    two permitted shapes plus anything unexplained."""

    p: int
    k: int
    exceptional: tuple[MultiIndex, ...]
    all_divisible: tuple[MultiIndex, ...]
    unexplained: tuple[MultiIndex, ...]


def classify_b_survivors(p: int, k: int) -> SurvivorClassification:
    """Scan the B lattice at an index divisible by p and classify every
    monomial whose coefficient is a p-adic unit.

    The two permitted shapes are the exceptional monomial a_0^(q-p) a_1^p
    and monomials all of whose positive indices are divisible by p.
    """
    require_odd_prime(p)
    if k % p != 0:
        raise ValueError(f"k={k} is not divisible by p={p}")
    q = p * p
    exceptional_entries = MultiIndex.from_mapping({0: q - p, 1: p})
    exceptional, divisible, unexplained = [], [], []
    for e in enumerate_b_monomials(p, k):
        record = b_coefficient(e, p, k)
        if record.valuation != 0:
            continue
        if e == exceptional_entries:
            exceptional.append(e)
        elif all(n % p == 0 for n in e.positive_indices()):
            divisible.append(e)
        else:
            unexplained.append(e)
    return SurvivorClassification(
        p, k, tuple(exceptional), tuple(divisible), tuple(unexplained)
    )


# ---------------------------------------------------------------------------
# Digit vectors and vector partitions

@dataclass(frozen=True)
class DigitVector:
    """Digits d_1..d_r of an index above the units place, in base prime.
    Its numeric value is sum d_i * prime^i."""

    prime: int
    components: tuple[int, ...]

    def __post_init__(self):
        require_odd_prime(self.prime)
        if not self.components:
            raise ValueError("a digit vector needs at least one component")
        if any(d < 0 or d >= self.prime for d in self.components):
            raise ValueError("components must be base-p digits")

    @property
    def weight(self) -> int:
        return sum(self.components)

    @property
    def numeric_value(self) -> int:
        return sum(d * self.prime ** (i + 1) for i, d in enumerate(self.components))

    @property
    def factorial_product(self) -> int:
        return prod(factorial(d) for d in self.components)

    def is_zero(self) -> bool:
        return self.weight == 0


@dataclass(frozen=True)
class VectorPartition:
    """A multiset of nonzero digit vectors summing componentwise to a
    target vector; blocks stored as (vector, repeat) with repeat >= 1."""

    blocks: tuple[tuple[DigitVector, int], ...]

    @property
    def block_count(self) -> int:
        return sum(rep for _, rep in self.blocks)

    def as_dict(self) -> dict[DigitVector, int]:
        return dict(self.blocks)


def enumerate_vector_partitions(d: DigitVector) -> list[VectorPartition]:
    """All multisets of nonzero digit vectors with componentwise sum d."""
    if d.is_zero():
        raise ValueError("the zero vector has no partitions")
    if d.weight > VECTOR_WEIGHT_MAX:
        raise EnumerationGuardError(
            f"vector partitions supported for weight <= {VECTOR_WEIGHT_MAX}, got {d.weight}"
        )
    width = len(d.components)
    candidates: list[tuple[int, ...]] = []

    def gen(i: int, acc: list[int]):
        if i == width:
            if any(acc):
                candidates.append(tuple(acc))
            return
        for v in range(d.components[i] + 1):
            gen(i + 1, acc + [v])

    gen(0, [])
    candidates.sort(reverse=True)
    out: list[VectorPartition] = []

    def rec(rem: tuple[int, ...], start: int, acc: list[tuple[tuple[int, ...], int]]):
        if not any(rem):
            blocks = tuple(
                (DigitVector(d.prime, comps), rep) for comps, rep in acc
            )
            out.append(VectorPartition(blocks))
            return
        for j in range(start, len(candidates)):
            b = candidates[j]
            if all(b[i] <= rem[i] for i in range(width)):
                if acc and acc[-1][0] == b:
                    acc[-1] = (b, acc[-1][1] + 1)
                else:
                    acc.append((b, 1))
                rec(tuple(rem[i] - b[i] for i in range(width)), j, acc)
                if acc[-1][1] == 1:
                    acc.pop()
                else:
                    acc[-1] = (b, acc[-1][1] - 1)

    rec(d.components, 0, [])
    return out


# ---------------------------------------------------------------------------
# Univariate series mod p (coefficient lists of fixed length cap+1)

def _fp_mul(u: list[int], v: list[int], p: int, cap: int) -> list[int]:
    out = [0] * (cap + 1)
    for i, ui in enumerate(u[: cap + 1]):
        if ui == 0:
            continue
        for j in range(cap + 1 - i):
            vj = v[j]
            if vj:
                out[i + j] = (out[i + j] + ui * vj) % p
    return out


def _fp_inv(u: list[int], p: int, cap: int) -> list[int]:
    if u[0] % p != 1:
        raise ValueError("series inversion requires constant term 1")
    out = [0] * (cap + 1)
    out[0] = 1
    for n in range(1, cap + 1):
        acc = 0
        for i in range(1, n + 1):
            if i < len(u) and u[i]:
                acc = (acc + u[i] * out[n - i]) % p
        out[n] = (-acc) % p
    return out


def _fp_pow(u: list[int], e: int, p: int, cap: int) -> list[int]:
    out = [0] * (cap + 1)
    out[0] = 1
    base = list(u)
    while e:
        if e & 1:
            out = _fp_mul(out, base, p, cap)
        e >>= 1
        if e:
            base = _fp_mul(base, base, p, cap)
    return out


def shifted_coefficient_series(
    table: CoefficientTable, shift: int, degree: int
) -> list[int]:
    """The mod-p block series: coefficient j is a_(shift+j) / j! reduced
    mod p, for 0 <= j <= degree (degree must stay below p so that j! is a
    unit)."""
    p = table.params.p
    if degree >= p:
        raise ValueError(f"block degree {degree} must be < p={p}")
    if shift + degree > table.max_k:
        raise ValueError("table too short for the requested block")
    return [
        mod_p_reduce(table.a[shift + j], p) * pow(factorial(j) % p, -1, p) % p
        for j in range(degree + 1)
    ]


def scale_by_index_plus_one(series: list[int], p: int) -> list[int]:
    """Apply the operator sending the y^j coefficient to (j+1) times
    itself (multiplication by 1 + y d/dy)."""
    return [(j + 1) * c % p for j, c in enumerate(series)]


# ---------------------------------------------------------------------------
# Block expansion of the B bracket at an index with nonzero units digit

def vector_b_expansion(table: CoefficientTable, d: DigitVector, a: int) -> int:
    """Evaluate, mod p, the vector-partition expansion of the B bracket at
    index k = numeric_value(d) + a, from block series built on the table.

    The one-block partition enters through the truncated top block (its
    top coefficient is the unknown a_k itself and is excluded); every
    proper partition contributes a signed multinomial multiple of a
    product of normalized block series.
    """
    p = table.params.p
    if table.params.r != 0:
        raise ValueError("block expansion applies to the r = 0 table")
    if not 1 <= a <= p - 1:
        raise ValueError(f"units digit a must lie in 1..{p - 1}")
    if d.prime != p:
        raise ValueError("digit vector prime differs from table prime")
    k = d.numeric_value + a
    if k > table.max_k:
        raise ValueError(f"table solved to {table.max_k}, need index {k}")

    base = shifted_coefficient_series(table, 0, a)
    base_inv = _fp_inv(base, p, a)

    truncated_top = [0] * (a + 1)
    for j in range(a):
        truncated_top[j] = (
            mod_p_reduce(table.a[d.numeric_value + j], p)
            * pow(factorial(j) % p, -1, p)
            % p
        )
    acc = _fp_mul(truncated_top, base_inv, p, a)[a]

    d_factorials = d.factorial_product % p
    one_block = {DigitVector(d.prime, d.components): 1}
    for partition in enumerate_vector_partitions(d):
        if partition.as_dict() == one_block:
            continue
        blocks = partition.blocks
        r_total = partition.block_count
        numer = (-1) ** (r_total - 1) * factorial(r_total - 1) % p
        denom = 1
        for beta, rep in blocks:
            denom = denom * factorial(rep) % p * pow(beta.factorial_product % p, rep, p) % p
        scalar = numer * d_factorials % p * pow(denom, -1, p) % p
        series = [0] * (a + 1)
        series[0] = 1
        for beta, rep in blocks:
            block = shifted_coefficient_series(table, beta.numeric_value, a)
            normalized = _fp_mul(block, base_inv, p, a)
            series = _fp_mul(series, _fp_pow(normalized, rep, p, a), p, a)
        acc = (acc + scalar * series[a]) % p

    return acc * factorial(a) % p


# ---------------------------------------------------------------------------
# Scalar identities

def truncated_exp_identity(p: int, m: int) -> CheckReport:
    """Compare, as exact rationals, the y^m coefficient of the q-th power
    of the truncated exponential sum_{i<m} y^i / (p^i i!) against
    p^m/m! - q/(p^m m!)."""
    require_odd_prime(p)
    if m < 1:
        raise ValueError("m must be >= 1")
    q = p * p
    truncated = PowerSeries.from_coefficients(
        [Fraction(1, p**i * factorial(i)) for i in range(m)], order=m
    )
    lhs = ps_pow(truncated, q).coefficient(m)
    rhs = Fraction(p**m, factorial(m)) - Fraction(q, p**m * factorial(m))
    report = CheckReport("truncated_exp", {"p": p})
    report.witnesses.append(
        Witness(index=m, expected=str(rhs), actual=str(lhs), passed=lhs == rhs)
    )
    return report


def tree_function_coefficients(max_order: int) -> PowerSeries:
    """The series solving U = x * exp(-U), to the requested order."""
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    coeffs = [Fraction(0)] * (max_order + 1)
    for n in range(1, max_order + 1):
        known = PowerSeries.from_coefficients(coeffs[:n], order=n - 1)
        exp_part = ps_exp(ps_scale(known, -1))
        coeffs[n] = exp_part.coefficient(n - 1)
    return PowerSeries(tuple(coeffs))


def tree_function_check(p: int, max_order: int | None = None) -> CheckReport:
    """Solve U = x exp(-U) by coefficient recursion and compare each
    coefficient with (-m)^(m-1) / m!, exactly over the rationals."""
    require_odd_prime(p)
    order = p if max_order is None else max_order
    series = tree_function_coefficients(order)
    report = CheckReport("tree_function", {"p": p, "max_order": order})
    for m in range(1, order + 1):
        expected = Fraction((-m) ** (m - 1), factorial(m))
        actual = series.coefficient(m)
        report.witnesses.append(
            Witness(index=m, expected=str(expected), actual=str(actual), passed=actual == expected)
        )
    return report


# ---------------------------------------------------------------------------
# Multivariate cumulant collapse

def cumulant_collapse_check(table: CoefficientTable, a: int, d: DigitVector) -> CheckReport:
    """Build the moment polynomial of the normalized derivative blocks in
    variables t_1..t_r over F_p, take its truncated logarithm, and compare
    the (t^d, y^a) cumulant coefficient with the one-variable prediction
    (-1)^(s+1) a^(s+1) a_(a-1) mod p, s the weight of d.

    Because the blocks depend only on total weight, the whole logarithm
    collapses to a series in t_1 + ... + t_r; the check recovers that
    collapse numerically instead of assuming it.
    """
    p = table.params.p
    if table.params.r != 0:
        raise ValueError("cumulant collapse applies to the r = 0 table")
    if not 1 <= a <= p - 1:
        raise ValueError(f"a must lie in 1..{p - 1}")
    if d.prime != p:
        raise ValueError("digit vector prime differs from table prime")
    s = d.weight
    if s == 0:
        raise ValueError("d must be nonzero")
    if s >= p:
        raise ValueError(f"weight {s} must stay below p={p} for the logarithm")
    if table.max_k < a:
        raise ValueError("table too short")

    width = len(d.components)
    base = shifted_coefficient_series(table, 0, a)
    base_inv = _fp_inv(base, p, a)
    normalized_derivatives: dict[int, list[int]] = {}
    current = list(base)
    for m in range(1, s + 1):
        current = scale_by_index_plus_one(current, p)
        signed = [(-1) ** m * c % p for c in _fp_mul(current, base_inv, p, a)]
        normalized_derivatives[m] = signed

    terms: dict[tuple[tuple[int, ...], int], int] = {((0,) * width, 0): 1}

    def gen(i: int, acc: list[int]):
        if i == width:
            weight = sum(acc)
            if 0 < weight <= s:
                beta = tuple(acc)
                inv_fact = pow(prod(factorial(b) for b in beta) % p, -1, p)
                for j, coeff in enumerate(normalized_derivatives[weight]):
                    if coeff:
                        key = (beta, j)
                        terms[key] = (terms.get(key, 0) + coeff * inv_fact) % p
            return
        for v in range(min(p - 1, s) + 1):
            gen(i + 1, acc + [v])

    gen(0, [])
    moments = MVPolynomial.from_terms(p, width, s, a, terms)
    log_moments = mv_log(moments)
    raw = log_moments.coefficient(d.components, a)
    got = raw * factorial(a) % p * (d.factorial_product % p) % p
    expected = (
        (-1) ** (s + 1) * pow(a, s + 1, p) * mod_p_reduce(table.a[a - 1], p) % p
    )
    report = CheckReport(
        "cumulant",
        {"p": p, "a": a, "d": d.components},
    )
    report.witnesses.append(
        Witness(
            index=f"d={d.components},a={a}",
            expected=f"{expected} mod {p}",
            actual=f"{got} mod {p}",
            passed=got == expected,
        )
    )
    return report
