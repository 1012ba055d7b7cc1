"""Exact SDOF responses and the explicit three-coefficient (p = 3) integrators.

The p = 3 formulas double as a fast path and as an independent check on the
general assembly in :mod:`weakform`.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .special_functions import kummer_1f1
from .weakform import SdofSystem

__all__ = [
    "XiCoefficients",
    "xi_coefficients",
    "p3_undamped_step",
    "p3_damped_step",
    "p3_run",
    "exact_free_response",
    "exact_forced_response",
    "mechanical_energy",
    "modified_mechanical_energy",
    "TaylorCheck",
    "leading_coefficient",
    "loglog_slope",
    "taylor_checks",
]


class XiCoefficients(NamedTuple):
    xi1: float
    xi2: float
    xi3: float


def xi_coefficients(h: float, c: float, k: float) -> XiCoefficients:
    """Weak-form row of the p = 3 system under the exp(c t) weight."""
    if h <= 0 or c < 0 or k <= 0:
        raise ValueError(f"need h > 0, c >= 0, k > 0; got h={h}, c={c}, k={k}")
    z = c * h
    F = lambda a, b: kummer_1f1(a, b, z)  # noqa: E731
    f14, f24, f34 = F(1, 4), F(2, 4), F(3, 4)
    xi1 = 2.0 / (3.0 * h) * (2.0 * f14 - f24) + k * h / 10.0 * F(2, 6)
    # <B2', B2'>_c = 4/(3h) (F(1,4) - F(2,4) + F(3,4)); reduces to -4/(3h) + 2kh/15 at c = 0
    xi2 = -4.0 / (3.0 * h) * (f14 - f24 + f34) + 2.0 * k * h / 15.0 * F(3, 6)
    xi3 = -2.0 / (3.0 * h) * (f24 - 2.0 * f34) + k * h / 10.0 * F(4, 6)
    return XiCoefficients(xi1, xi2, xi3)


def p3_undamped_step(x: float, v: float, h: float, k: float, force_term: float) -> tuple[float, float]:
    """One undamped p = 3 step; ``force_term`` is int f B_{2,3,h} over the step."""
    d = 20.0 + 3.0 * k * h * h
    x1 = (30.0 * h * force_term + (20.0 - 7.0 * k * h * h) * x + 2.0 * (10.0 - k * h * h) * h * v) / d
    v1 = (60.0 * force_term - 20.0 * k * h * x + (20.0 - 7.0 * k * h * h) * v) / d
    return x1, v1


def p3_damped_step(x: float, v: float, h: float, c: float, k: float, force_term: float,
                   xi: XiCoefficients | None = None) -> tuple[float, float]:
    """One damped p = 3 step; ``force_term`` is int exp(c t) f B_{2,3,h} over the step."""
    x1_, x2_, x3_ = xi if xi is not None else xi_coefficients(h, c, k)
    x_next = (force_term - (x1_ + x2_) * x - 0.5 * h * x2_ * v) / x3_
    v_next = 2.0 / h * (force_term - (x1_ + x2_ + x3_) * x - 0.5 * h * (x2_ + x3_) * v) / x3_
    return x_next, v_next


def p3_run(system: SdofSystem, force_terms, x0: float, v0: float, h: float):
    """Iterate the p = 3 step over precomputed per-step force terms; returns (xs, vs)."""
    xs, vs = [float(x0)], [float(v0)]
    xi = xi_coefficients(h, system.c, system.k) if system.c > 0 else None
    for ft in force_terms:
        if xi is None:
            x, v = p3_undamped_step(xs[-1], vs[-1], h, system.k, ft)
        else:
            x, v = p3_damped_step(xs[-1], vs[-1], h, system.c, system.k, ft, xi)
        xs.append(x)
        vs.append(v)
    return np.array(xs), np.array(vs)


def exact_free_response(system: SdofSystem, x0: float, v0: float, t):
    """Underdamped free vibration (x(t), v(t))."""
    if not system.underdamped:
        raise ValueError("exact response is only provided for underdamped systems")
    c = system.c
    wd = system.omega_d
    t = np.asarray(t, dtype=float)
    e = np.exp(-0.5 * c * t)
    cs, sn = np.cos(wd * t), np.sin(wd * t)
    a = x0
    b = (v0 + 0.5 * c * x0) / wd
    x = e * (a * cs + b * sn)
    v = e * ((b * wd - 0.5 * c * a) * cs - (a * wd + 0.5 * c * b) * sn)
    return x, v


def exact_forced_response(system: SdofSystem, kind: str, t):
    """Response from rest to f = 1 (``"constant"``) or f = exp(-c t) (``"exponential"``)."""
    t = np.asarray(t, dtype=float)
    k = system.k
    if kind == "constant":
        # particular 1/k, homogeneous part cancels the initial offset
        xh, vh = exact_free_response(system, 1.0, 0.0, t)
        return (1.0 - xh) / k, -vh / k
    if kind == "exponential":
        c = system.c
        xh, vh = exact_free_response(system, 1.0, -c, t)
        e = np.exp(-c * t)
        return (e - xh) / k, (-c * e - vh) / k
    raise ValueError(f"unsupported forced-response kind {kind!r}")


def mechanical_energy(x, v, k: float):
    return 0.5 * k * np.asarray(x) ** 2 + 0.5 * np.asarray(v) ** 2


def modified_mechanical_energy(x, v, k: float, c: float, t):
    """exp(c t) times the mechanical energy, which offsets the decay of a damped free response."""
    return np.exp(c * np.asarray(t)) * mechanical_energy(x, v, k)


# --- Taylor-coefficient checks ----------------------------------------------

TAYLOR_STEPS = (0.2, 0.1, 0.05, 0.025)


class TaylorCheck(NamedTuple):
    name: str
    measured: float
    expected: float
    rel_tol: float

    @property
    def passed(self) -> bool:
        return abs(self.measured - self.expected) <= self.rel_tol * abs(self.expected)


def leading_coefficient(hs, errors, order: int, extra_terms: int = 2) -> float:
    """Coefficient a_0 of errors ~ h**order (a_0 + a_1 h + ...) by least squares."""
    hs = np.asarray(hs, dtype=float)
    scaled = np.asarray(errors, dtype=float) / hs**order
    return float(np.polyfit(hs, scaled, extra_terms)[-1])


def loglog_slope(hs, values) -> float:
    return float(np.polyfit(np.log(hs), np.log(np.abs(values)), 1)[0])


def taylor_checks(hs=TAYLOR_STEPS, damping=(0.05, 0.1)) -> list[TaylorCheck]:
    """One-step error and energy-drift coefficients of the p = 3 scheme (k = 1).

    Errors are approximate minus exact. Energy drift ME_1 - ME_0 has the exact
    form +-20 h^4/(20 + 3h^2)^2 for the (1, 0) and (0, 1) starts, hence +-1/20.
    """
    hs = np.asarray(hs, dtype=float)
    und = SdofSystem(0.0, 1.0)
    step = lambda x, v, h, ft=0.0: p3_undamped_step(x, v, h, 1.0, ft)  # noqa: E731
    out = []
    e = [step(1, 0, h)[0] - math.cos(h) for h in hs]
    out.append(TaylorCheck("x(1,0)/h^4", leading_coefficient(hs, e, 4), 1 / 30, 0.05))
    e = [step(1, 0, h)[1] + math.sin(h) for h in hs]
    out.append(TaylorCheck("v(1,0)/h^3", leading_coefficient(hs, e, 3), -1 / 60, 0.05))
    e = [step(0, 1, h)[0] - math.sin(h) for h in hs]
    out.append(TaylorCheck("x(0,1)/h^3", leading_coefficient(hs, e, 3), -1 / 12, 0.05))
    # f = 1: int f B_{2,3,h} = h/3
    e = [step(0, 0, h, h / 3)[0] - float(exact_forced_response(und, "constant", h)[0]) for h in hs]
    out.append(TaylorCheck("x(f=1)/h^4", leading_coefficient(hs, e, 4), -1 / 30, 0.05))
    for (x0, v0), sign in (((1, 0), 1.0), ((0, 1), -1.0)):
        d = [float(mechanical_energy(*step(x0, v0, h), 1.0) - mechanical_energy(x0, v0, 1.0)) for h in hs]
        out.append(TaylorCheck(f"dME({x0},{v0})/h^4", leading_coefficient(hs, d, 4), sign / 20, 0.05))
        out.append(TaylorCheck(f"dME({x0},{v0}) order", loglog_slope(hs, d), 4.0, 0.15 / 4.0))
    for c in damping:
        sys_c = SdofSystem(c, 1.0)
        e = [p3_damped_step(1, 0, h, c, 1.0, 0.0)[0] - float(exact_free_response(sys_c, 1, 0, h)[0]) for h in hs]
        out.append(TaylorCheck(f"x(1,0)/h^3 c={c}", leading_coefficient(hs, e, 3), c / 12, 0.10))
    return out
