"""Shifted Legendre expansions and the Bernstein -> Legendre change of basis.

Expansions are stored against the L2-normalised shifted Legendre functions on
[0, h], ``phi_m(t) = sqrt(2m+1) L_m(2t/h - 1)``, each of which has squared norm
``h`` on the interval. Hence ``||f||^2 = h * sum(coeffs**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bernstein import BernsteinPoly, inner_l20

__all__ = [
    "LegendreExpansion",
    "BernLegMatrix",
    "DECAY_MODELS",
    "shifted_legendre_eval",
    "bernstein_to_legendre",
    "to_legendre",
    "remove_mean",
    "tail_projection",
    "kernel_projection",
    "coefficient_exponent",
    "coefficient_exponent_study",
]

# upper-bound linear models s(p, m) = slope * p + intercept reported for 4 <= p <= 25
DECAY_MODELS = {
    "last": (-0.216573775474902, 0.649721326424705),
    "next_to_last": (-0.190609494287812, 0.542455736079486),
    "half": (-0.0457451923495941, 0.107862830264831),
}


@dataclass(frozen=True)
class LegendreExpansion:
    """sum_m coeffs[m] * sqrt(2m+1) L_m(2t/h - 1) on [0, h]."""

    h: float
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def norm_sq(self) -> float:
        return self.h * float(np.dot(self.coeffs, self.coeffs))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def inner(self, other: "LegendreExpansion") -> float:
        n = min(self.coeffs.size, other.coeffs.size)
        return self.h * float(np.dot(self.coeffs[:n], other.coeffs[:n]))

    def __call__(self, t):
        x = np.asarray(t, dtype=float) / self.h
        out = sum(a * math.sqrt(2 * m + 1) * shifted_legendre_eval(m, x) for m, a in enumerate(self.coeffs))
        return out


def shifted_legendre_eval(m: int, x):
    """L_m(2x - 1) by the three-term recurrence."""
    if m < 0:
        raise ValueError("Legendre degree must be >= 0")
    y = 2.0 * np.asarray(x, dtype=float) - 1.0
    prev = np.ones_like(y)
    if m == 0:
        return float(prev) if prev.ndim == 0 else prev
    cur = y.copy()
    for n in range(1, m):
        prev, cur = cur, ((2 * n + 1) * y * cur - n * prev) / (n + 1)
    return float(cur) if cur.ndim == 0 else cur


@dataclass(frozen=True)
class BernLegMatrix:
    """entries[i-1, m] = coefficient of sqrt(2m+1) L_m(2x-1) in B(i, p, 1)."""

    p: int
    entries: np.ndarray

    def reconstruct(self, i: int, x):
        row = self.entries[i - 1]
        x = np.asarray(x, dtype=float)
        return sum(row[m] * math.sqrt(2 * m + 1) * shifted_legendre_eval(m, x) for m in range(self.p))


@lru_cache(maxsize=None)
def _bernleg_rational(p: int) -> tuple[tuple[Fraction, ...], ...]:
    # exact rationals: the alternating sum cancels badly in floating point for p > 20
    rows = []
    for i in range(1, p + 1):
        ci = math.comb(p - 1, i - 1)
        row = []
        for m in range(p):
            s = Fraction(0)
            for q in range(m + 1):
                term = Fraction(math.comb(m, q) ** 2, math.comb(p + m - 1, i + q - 1))
                s += term if (m + q) % 2 == 0 else -term
            row.append(s * Fraction(ci, p + m))
        rows.append(tuple(row))
    return tuple(rows)


@lru_cache(maxsize=None)
def _bernleg_float(p: int) -> np.ndarray:
    rat = _bernleg_rational(p)
    out = np.array([[math.sqrt(2 * m + 1) * float(v) for m, v in enumerate(row)] for row in rat])
    out.setflags(write=False)
    return out


def bernstein_to_legendre(p: int) -> BernLegMatrix:
    """Change-of-basis matrix from B(., p, 1) to the normalised shifted Legendre basis.

    Entry (i, m) is ``sqrt(2m+1)/(p+m) * C(p-1,i-1) * sum_q (-1)^(m+q) C(m,q)^2 / C(p+m-1,i+q-1)``,
    evaluated in exact rational arithmetic and rounded once.
    """
    if p < 1:
        raise ValueError("basis size must be >= 1")
    return BernLegMatrix(p, _bernleg_float(p))


def to_legendre(f: BernsteinPoly) -> LegendreExpansion:
    """Rewrite a Bernstein polynomial on [0, h] in the normalised Legendre basis."""
    return LegendreExpansion(f.h, f.coeffs @ bernstein_to_legendre(f.p).entries)


def remove_mean(F: LegendreExpansion) -> LegendreExpansion:
    c = F.coeffs.copy()
    c[0] = 0.0
    return LegendreExpansion(F.h, c)


def tail_projection(F: LegendreExpansion, p: int) -> LegendreExpansion:
    """Orthogonal projection onto degrees >= p-1.

    The complement (mean plus degrees 1..p-2) is the space of derivatives of
    interior test functions, so what survives is the part of F the weak form
    cannot see.
    """
    c = F.coeffs.copy()
    c[: max(p - 1, 0)] = 0.0
    return LegendreExpansion(F.h, c)


def kernel_projection(F: LegendreExpansion, p: int) -> LegendreExpansion:
    """Projection onto zero-mean polynomials of degree <= p-2 (Legendre degrees 1..p-2)."""
    c = np.zeros_like(F.coeffs)
    hi = min(p - 1, c.size)
    c[1:hi] = F.coeffs[1:hi]
    return LegendreExpansion(F.h, c)


def coefficient_exponent(p: int, m: int) -> float:
    """Worst-case base-p exponent of |Lambda_im| relative to ||B(i,p,1) - 1/p||."""
    lam = bernstein_to_legendre(p).entries[:, m]
    best = -math.inf
    for i in range(1, p + 1):
        if lam[i - 1] == 0.0:
            continue  # vanishes by symmetry; contributes -inf to the max
        centred = inner_l20(i, p, i, p, 1.0) - 1.0 / p**2
        val = (math.log(abs(lam[i - 1])) - 0.5 * math.log(centred)) / math.log(p)
        best = max(best, val)
    return best


def coefficient_exponent_study(p_range) -> list[dict]:
    """Rows ``{"p", "m", "which", "s"}`` for m in {p-1, p-2, floor(p/2)}."""
    rows = []
    for p in p_range:
        if not 3 <= p <= 25:
            raise ValueError(f"coefficient study is defined for 3 <= p <= 25, got {p}")
        for which, m in (("last", p - 1), ("next_to_last", p - 2), ("half", p // 2)):
            rows.append({"p": p, "m": m, "which": which, "s": coefficient_exponent(p, m)})
    return rows
