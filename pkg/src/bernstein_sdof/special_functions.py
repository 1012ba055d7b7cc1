"""Exact combinatorics and Kummer's confluent hypergeometric series.

Everything here is a pure function. Integer results are exact and capped at the
signed 64-bit range; the weighted inner products of the Bernstein basis are
closed-form multiples of ``kummer_1f1``.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import ConvergenceError

INT64_MAX = 2**63 - 1

__all__ = [
    "INT64_MAX",
    "binomial",
    "rising_factorial",
    "kummer_1f1",
    "comb_ratio",
]


def _check_int64(value: int, what: str) -> int:
    if value > INT64_MAX:
        raise OverflowError(f"{what} = {value} exceeds the exact 64-bit range")
    return value


def binomial(n: int, k: int) -> int:
    """Binomial coefficient C(n, k); zero when k < 0 or k > n.

    Raises OverflowError when the exact value does not fit in a signed 64-bit
    integer, ValueError for negative n.
    """
    if n < 0:
        raise ValueError(f"binomial: n must be >= 0, got {n}")
    if k < 0 or k > n:
        return 0
    return _check_int64(math.comb(n, k), f"C({n},{k})")


def rising_factorial(i: int, q: int) -> int:
    """Rising factorial i^(q) = i (i+1) ... (i+q-1), with i^(0) = 1."""
    if i < 0 or q < 0:
        raise ValueError(f"rising_factorial: need i, q >= 0, got ({i}, {q})")
    out = 1
    for r in range(q):
        out *= i + r
        _check_int64(out, f"{i}^({q})")
    return out


def comb_ratio(num: tuple[tuple[int, int], ...], den: tuple[tuple[int, int], ...]) -> float:
    """Correctly rounded float of prod C(n,k) over ``num`` divided by prod over ``den``.

    Python integers are unbounded, so the quotient is formed exactly and rounded once.
    """
    top = 1
    for n, k in num:
        top *= math.comb(n, k) if 0 <= k <= n else 0
    bottom = 1
    for n, k in den:
        c = math.comb(n, k) if 0 <= k <= n else 0
        if c == 0:
            raise ZeroDivisionError(f"C({n},{k}) = 0 in denominator")
        bottom *= c
    return float(Fraction(top, bottom))


def kummer_1f1(a: int, b: int, z: float, rel_tol: float = 1e-15, max_terms: int = 500) -> float:
    """Kummer's function 1F1(a; b; z) = sum_n a^(n) z^n / (b^(n) n!).

    Terms follow the ratio recurrence ``t_{n+1} = t_n (a+n) z / ((b+n)(n+1))``;
    summation stops once three consecutive terms are below ``rel_tol`` times the
    partial sum.

    Parameters
    ----------
    a, b : int
        Integer parameters with ``b >= a >= 1``.
    z : float
        Argument, ``0 <= z <= 50`` (in this package ``z = c*h``).

    Raises
    ------
    ConvergenceError
        If the stopping rule is not met within ``max_terms`` terms.
    """
    if a < 1 or b < a:
        raise ValueError(f"kummer_1f1 requires b >= a >= 1, got a={a}, b={b}")
    if not (0.0 <= z <= 50.0):
        raise ValueError(f"kummer_1f1 requires 0 <= z <= 50, got z={z}")
    if z == 0.0:
        return 1.0
    term = 1.0
    total = 1.0
    small = 0
    for n in range(max_terms):
        term *= (a + n) * z / ((b + n) * (n + 1))
        total += term
        if abs(term) <= rel_tol * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise ConvergenceError(
        f"1F1({a};{b};{z}) did not converge within {max_terms} terms (last term {term:.3e})"
    )
