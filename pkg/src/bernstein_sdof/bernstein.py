"""Bernstein-basis algebra on an interval [0, h].

The basis is indexed the way the rest of the package uses it: ``B(i, p, h)`` for
``i = 1..p`` spans polynomials of degree ``p - 1``, so ``p`` is the basis size.
Coefficient vectors are 0-based numpy arrays, entry ``i - 1`` multiplying
``B(i, p, h)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError
from .special_functions import binomial, comb_ratio, kummer_1f1

__all__ = [
    "BernsteinPoly",
    "ScaledBasis",
    "eval_basis",
    "eval_poly",
    "eval_poly_deriv",
    "elevate_degree",
    "elevate_to",
    "derivative",
    "antiderivative",
    "integrate_poly",
    "definite_integral",
    "product_basis",
    "moment",
    "inner_l20",
    "inner_l2c",
    "gram_l2c",
    "derivative_gram_l2c",
    "exp_weighted_double_integral",
    "exp_times_bernstein",
    "exp_series_terms",
]


@dataclass(frozen=True)
class BernsteinPoly:
    """Polynomial sum_i coeffs[i-1] * B(i, p, h) on [0, h]."""

    p: int
    h: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size != self.p:
            raise ValueError(f"expected {self.p} coefficients, got shape {c.shape}")
        if self.p < 1 or self.h <= 0:
            raise ValueError(f"need p >= 1 and h > 0, got p={self.p}, h={self.h}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, i: int, p: int, h: float, scale: float = 1.0) -> "BernsteinPoly":
        c = np.zeros(p)
        c[i - 1] = scale
        return cls(p, h, c)

    @classmethod
    def constant(cls, value: float, p: int, h: float) -> "BernsteinPoly":
        return cls(p, h, np.full(p, float(value)))

    def __call__(self, t):
        return eval_poly(self, t)

    def __add__(self, other: "BernsteinPoly") -> "BernsteinPoly":
        a, b = _align(self, other)
        return BernsteinPoly(a.p, a.h, a.coeffs + b.coeffs)

    def __sub__(self, other: "BernsteinPoly") -> "BernsteinPoly":
        a, b = _align(self, other)
        return BernsteinPoly(a.p, a.h, a.coeffs - b.coeffs)

    def __mul__(self, scalar: float) -> "BernsteinPoly":
        return BernsteinPoly(self.p, self.h, self.coeffs * float(scalar))

    __rmul__ = __mul__


def _align(a: BernsteinPoly, b: BernsteinPoly):
    if a.h != b.h:
        raise ValueError("polynomials live on different intervals")
    p = max(a.p, b.p)
    return elevate_to(a, p), elevate_to(b, p)


class ScaledBasis(NamedTuple):
    """``scale * B(i, p, h)``: the single-term results of products and moments."""

    scale: float
    i: int
    p: int
    h: float

    def as_poly(self) -> BernsteinPoly:
        return BernsteinPoly.basis(self.i, self.p, self.h, self.scale)

    def __call__(self, t):
        return self.scale * eval_basis(self.i, self.p, self.h, t)


def eval_basis(i: int, p: int, h: float, t):
    """Value of B(i, p, h) at t; zero outside [0, h]."""
    if not 1 <= i <= p:
        raise ValueError(f"basis index {i} outside 1..{p}")
    t = np.asarray(t, dtype=float)
    s = t / h
    inside = (t >= 0.0) & (t <= h)
    s = np.clip(s, 0.0, 1.0)
    val = binomial(p - 1, i - 1) * s ** (i - 1) * (1.0 - s) ** (p - i)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def _de_casteljau(coeffs: np.ndarray, s):
    s = np.asarray(s, dtype=float)
    b = np.broadcast_to(coeffs, s.shape + coeffs.shape).copy()
    s_ = s[..., None]
    for r in range(coeffs.size - 1, 0, -1):
        b = (1.0 - s_) * b[..., :r] + s_ * b[..., 1 : r + 1]
    out = b[..., 0]
    return float(out) if out.ndim == 0 else out


def eval_poly(f: BernsteinPoly, t):
    """Evaluate f at t in [0, h] by de Casteljau's convex-combination scheme."""
    return _de_casteljau(f.coeffs, np.asarray(t, dtype=float) / f.h)


def eval_poly_deriv(f: BernsteinPoly, t):
    """Evaluate df/dt at t."""
    if f.p == 1:
        t = np.asarray(t, dtype=float)
        return 0.0 if t.ndim == 0 else np.zeros_like(t)
    return eval_poly(derivative(f), t)


def elevate_degree(f: BernsteinPoly) -> BernsteinPoly:
    """Same polynomial written in the basis of size p + 1."""
    p = f.p
    c = f.coeffs
    j = np.arange(1, p + 2)
    new = np.zeros(p + 1)
    # c'_j = (j-1)/p c_{j-1} + (p+1-j)/p c_j
    new[1:] += (j[1:] - 1) / p * c
    new[:-1] += (p + 1 - j[:-1]) / p * c
    return BernsteinPoly(p + 1, f.h, new)


def elevate_to(f: BernsteinPoly, p: int) -> BernsteinPoly:
    if p < f.p:
        raise ValueError(f"cannot lower basis size {f.p} to {p}")
    while f.p < p:
        f = elevate_degree(f)
    return f


def derivative(f: BernsteinPoly) -> BernsteinPoly:
    """d/dt of f in the basis of size p - 1."""
    if f.p < 2:
        raise ValueError("derivative needs p >= 2")
    return BernsteinPoly(f.p - 1, f.h, (f.p - 1) / f.h * np.diff(f.coeffs))


def antiderivative(i: int, p: int, h: float) -> BernsteinPoly:
    """Primitive t -> int_0^t B(i, p, h), in the basis of size p + 1."""
    if not 1 <= i <= p:
        raise ValueError(f"basis index {i} outside 1..{p}")
    c = np.zeros(p + 1)
    c[i:] = h / p
    return BernsteinPoly(p + 1, h, c)


def integrate_poly(f: BernsteinPoly) -> BernsteinPoly:
    """Primitive of f vanishing at 0, in the basis of size p + 1."""
    c = np.zeros(f.p + 1)
    c[1:] = f.h / f.p * np.cumsum(f.coeffs)
    return BernsteinPoly(f.p + 1, f.h, c)


def definite_integral(f: BernsteinPoly) -> float:
    """int_0^h f; every basis function integrates to h/p."""
    return f.h / f.p * math.fsum(f.coeffs)


def product_basis(i: int, p: int, j: int, q: int, h: float) -> ScaledBasis:
    """B(i,p,h) * B(j,q,h) as a multiple of B(i+j-1, p+q-1, h)."""
    scale = comb_ratio(((p - 1, i - 1), (q - 1, j - 1)), ((p + q - 2, i + j - 2),))
    return ScaledBasis(scale, i + j - 1, p + q - 1, h)


def moment(i: int, p: int, h: float, q: int) -> ScaledBasis:
    """t**q * B(i,p,h) = h**q * i^(q) / p^(q) * B(i+q, p+q, h)."""
    if q < 0:
        raise ValueError("moment order must be >= 0")
    ratio = 1.0
    for r in range(q):
        ratio *= (i + r) / (p + r)
    return ScaledBasis(h**q * ratio, i + q, p + q, h)


def inner_l20(i: int, p: int, j: int, q: int, h: float) -> float:
    """int_0^h B(i,p,h) B(j,q,h) dt."""
    return h * comb_ratio(((p - 1, i - 1), (q - 1, j - 1)), ((p + q - 2, i + j - 2),)) / (p + q - 1)


def inner_l2c(i: int, p: int, j: int, q: int, h: float, c: float) -> float:
    """int_0^h exp(c t) B(i,p,h) B(j,q,h) dt, through 1F1(i+j-1; p+q; c h)."""
    if c < 0:
        raise ValueError("damping weight c must be >= 0")
    base = inner_l20(i, p, j, q, h)
    if c == 0:
        return base
    return base * kummer_1f1(i + j - 1, p + q, c * h)


def gram_l2c(p: int, q: int, h: float, c: float) -> np.ndarray:
    """Matrix of inner_l2c over i = 1..p, j = 1..q."""
    return np.array([[inner_l2c(i, p, j, q, h, c) for j in range(1, q + 1)] for i in range(1, p + 1)])


def derivative_gram_l2c(p: int, h: float, c: float) -> np.ndarray:
    """p x p matrix of <dB_i/dt, dB_j/dt>_c for the size-p basis.

    Uses dB(i,p)/dt = (p-1)/h (B(i-1,p-1) - B(i,p-1)) with out-of-range terms zero.
    """
    if p < 2:
        return np.zeros((p, p))
    D = np.zeros((p, p - 1))
    for i in range(1, p + 1):
        if i - 1 >= 1:
            D[i - 1, i - 2] += 1.0
        if i <= p - 1:
            D[i - 1, i - 1] -= 1.0
    G = gram_l2c(p - 1, p - 1, h, c)
    return ((p - 1) / h) ** 2 * D @ G @ D.T


def exp_weighted_double_integral(i: int, p: int, h: float, c: float) -> float:
    """int_0^h int_0^t exp(c s) B(i,p,h)(s) ds dt."""
    base = h * h * (p - i + 1) / (p * (p + 1))
    if c == 0:
        return base
    return base * kummer_1f1(i, p + 2, c * h)


def exp_series_terms(i: int, p: int, ch: float, tol: float = 1e-14, cap: int = 60) -> int:
    """Smallest n_terms whose neglected tail of the exp(c t) B_i series is below ``tol``.

    The tail is measured relative to the accumulated coefficient sum, which bounds
    the sup norm because the basis is non-negative and sums to one.
    """
    if ch == 0:
        return 0
    a = 1.0
    total = 1.0
    for n in range(cap + 1):
        if _series_tail_bound(a, i, p, ch, n) <= tol * total:
            return n
        a *= ch * (i + n) / ((n + 1) * (p + n))
        total += a
    raise ConvergenceError(
        f"exp series for B({i},{p}) with c*h={ch} needs more than {cap} extra degrees"
    )


def _series_tail_bound(a_n: float, i: int, p: int, ch: float, n: int) -> float:
    # bound on sum_{m>n} a_m; later ratios are <= ch/(m+1)
    a_next = a_n * ch * (i + n) / ((n + 1) * (p + n))
    r = ch / (n + 2)
    if r >= 1.0:
        return math.inf
    return a_next / (1.0 - r)


def exp_times_bernstein(i: int, p: int, h: float, c: float, n_terms: int | None = None) -> BernsteinPoly:
    """exp(c t) B(i,p,h)(t), truncated after ``n_terms`` extra degrees.

    The series sum_n (ch)^n/n! * i^(n)/p^(n) * B(i+n, p+n, h) is accumulated in
    the basis of size ``p + n_terms``. With ``n_terms=None`` the smallest count
    meeting a 1e-14 relative tail is used.

    Raises
    ------
    ConvergenceError
        If the requested (or capped automatic) truncation leaves a tail above 1e-14.
    """
    ch = c * h
    if n_terms is None:
        n_terms = exp_series_terms(i, p, ch)
    poly = BernsteinPoly.basis(i, p, h)
    a = 1.0
    total = 1.0
    for n in range(n_terms):
        a *= ch * (i + n) / ((n + 1) * (p + n))
        total += a
        poly = elevate_degree(poly)
        poly.coeffs[i + n] += a
    if ch > 0 and _series_tail_bound(a, i, p, ch, n_terms) > 1e-14 * total:
        raise ConvergenceError(
            f"n_terms={n_terms} leaves a tail above 1e-14 for B({i},{p}) at c*h={ch}"
        )
    return poly

