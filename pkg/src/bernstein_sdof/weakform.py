"""Step-by-step weak-form solver for x'' + c x' + k x = f (unit mass).

On each step [jh, (j+1)h] the displacement is a Bernstein polynomial
``sum_i u_i B(i, p, h)``. The first two coefficients are pinned by the incoming
displacement and velocity; the remaining ``p - 2`` come from testing the
equation against the interior basis functions ``B_2..B_{p-1}`` in the
exp(c t)-weighted product. Integration by parts turns the weighted
``x'' + c x'`` into ``-<x', B_i'>_c``, because exp(c t)(x'' + c x') is the
derivative of exp(c t) x'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .bernstein import BernsteinPoly, derivative_gram_l2c, eval_poly, eval_poly_deriv, gram_l2c
from .errors import ConfigError, IllConditionedError, StepError
from .special_functions import kummer_1f1

__all__ = [
    "SdofSystem",
    "Zero",
    "Constant",
    "PiecewiseConstant",
    "PiecewiseExponential",
    "Harmonic",
    "Tabulated",
    "StepState",
    "StepAssembly",
    "Trajectory",
    "assemble_B",
    "assemble_BB",
    "force_vector",
    "solve_step",
    "step_outputs",
    "simulate",
]

COND_LIMIT = 1e14


@dataclass(frozen=True)
class SdofSystem:
    """Damping c >= 0 and stiffness k > 0; the mass is 1."""

    c: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise ConfigError(f"damping c must be finite and >= 0, got {self.c}")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ConfigError(f"stiffness k must be finite and > 0, got {self.k}")

    @property
    def period(self) -> float:
        """Undamped natural period 2 pi / sqrt(k)."""
        return 2.0 * math.pi / math.sqrt(self.k)

    @property
    def underdamped(self) -> bool:
        return self.c < 2.0 * math.sqrt(self.k)

    @property
    def omega_d(self) -> float:
        if not self.underdamped:
            raise ValueError(f"system with c={self.c}, k={self.k} is not underdamped")
        return math.sqrt(self.k - 0.25 * self.c**2)

    def rescaled(self) -> tuple["SdofSystem", float]:
        """Equivalent unit-stiffness system and the time factor sqrt(k).

        With s = sqrt(k) t the equation becomes x'' + (c/sqrt(k)) x' + x = f/k.
        """
        w = math.sqrt(self.k)
        return SdofSystem(self.c / w, 1.0), w


# --- excitations -------------------------------------------------------------


def _gauss_nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


def _quad_weighted(f, t0: float, a: float, b: float, p: int, h: float, c: float) -> np.ndarray:
    """int_a^b exp(c t) f(t0 + t) B_i(t) dt for i = 2..p-1 (local t in [0, h])."""
    n = max(p + 8, 24)
    x, w = _gauss_nodes(n)
    t = 0.5 * (b - a) * (x + 1.0) + a
    w = 0.5 * (b - a) * w * np.exp(c * t) * f(t0 + t)
    s = t / h
    i = np.arange(2, p)
    binom = np.array([math.comb(p - 1, k - 1) for k in i], dtype=float)
    basis = binom[:, None] * s[None, :] ** (i[:, None] - 1) * (1.0 - s[None, :]) ** (p - i[:, None])
    return basis @ w


def _const_moments(value: float, p: int, h: float, c: float) -> np.ndarray:
    # <1, B_i>_c = (h/p) 1F1(i; p+1; ch)
    i = np.arange(2, p)
    if c == 0:
        return np.full(p - 2, value * h / p)
    return np.array([value * h / p * kummer_1f1(int(k), p + 1, c * h) for k in i])


@dataclass(frozen=True)
class Zero:
    def __call__(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)


@dataclass(frozen=True)
class PiecewiseConstant:
    """values[j] on step j."""

    values: tuple
    h: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        j = np.clip((t / self.h).astype(int), 0, len(self.values) - 1)
        return np.asarray(self.values, dtype=float)[j]


@dataclass(frozen=True)
class PiecewiseExponential:
    """f_j * exp(-c (t - jh)) on step j, with c the system damping."""

    values: tuple
    h: float
    c: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        j = np.clip((t / self.h).astype(int), 0, len(self.values) - 1)
        return np.asarray(self.values, dtype=float)[j] * np.exp(-self.c * (t - j * self.h))


@dataclass(frozen=True)
class Harmonic:
    """amplitude * cos(frequency * t + phase)."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.cos(self.frequency * np.asarray(t, dtype=float) + self.phase)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolant through (times, values)."""

    times: tuple
    values: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or len(self.values) != t.size:
            raise ConfigError("tabulated excitation needs matching time/value arrays of length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("tabulated sample times must be strictly increasing")

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)


Excitation = Zero | Constant | PiecewiseConstant | PiecewiseExponential | Harmonic | Tabulated


def force_vector(excitation, system: SdofSystem, p: int, h: float, j: int) -> np.ndarray:
    """Entries <f(. + jh), B_i>_c for i = 2..p-1."""
    c = system.c
    if isinstance(excitation, Zero):
        return np.zeros(p - 2)
    if isinstance(excitation, Constant):
        return _const_moments(excitation.value, p, h, c)
    if isinstance(excitation, PiecewiseConstant):
        if not 0 <= j < len(excitation.values):
            raise ConfigError(f"piecewise-constant force has no value for step {j}")
        return _const_moments(excitation.values[j], p, h, c)
    if isinstance(excitation, PiecewiseExponential):
        if not 0 <= j < len(excitation.values):
            raise ConfigError(f"piecewise-exponential force has no value for step {j}")
        if excitation.c != c:
            raise ConfigError("piecewise-exponential decay rate must equal the system damping")
        # exp(c t) cancels the decay, leaving <1, B_i>_0 = h/p
        return np.full(p - 2, excitation.values[j] * h / p)
    if isinstance(excitation, Harmonic):
        return _quad_weighted(excitation, j * h, 0.0, h, p, h, c)
    if isinstance(excitation, Tabulated):
        t0, t1 = j * h, (j + 1) * h
        times = np.asarray(excitation.times, dtype=float)
        tol = 1e-12 * max(1.0, abs(t1))
        if times[0] > t0 + tol or times[-1] < t1 - tol:
            raise ConfigError(
                f"tabulated force covers [{times[0]}, {times[-1]}], step {j} needs [{t0}, {t1}]"
            )
        # split at the sample times so each piece is exactly linear
        cuts = np.concatenate(([0.0], times[(times > t0) & (times < t1)] - t0, [h]))
        out = np.zeros(p - 2)
        for a, b in zip(cuts[:-1], cuts[1:]):
            out += _quad_weighted(excitation, t0, a, b, p, h, c)
        return out
    raise ConfigError(f"unsupported excitation {type(excitation).__name__}")


# --- assembly ----------------------------------------------------------------


def assemble_B(p: int, h: float, c: float, k: float) -> np.ndarray:
    """(p-2) x p matrix B_ij = -<B_i', B_j'>_c + k <B_i, B_j>_c, rows i = 2..p-1."""
    if p < 3:
        raise ValueError(f"need p >= 3, got {p}")
    full = -derivative_gram_l2c(p, h, c) + k * gram_l2c(p, p, h, c)
    return full[1 : p - 1, :]


def assemble_BB(p: int, h: float, c: float, k: float) -> np.ndarray:
    """Full p x p system: two initial-condition rows on top of the weak-form rows."""
    BB = np.zeros((p, p))
    BB[0, 0] = 1.0
    BB[1, 0] = -(p - 1) / h
    BB[1, 1] = (p - 1) / h
    BB[2:, :] = assemble_B(p, h, c, k)
    return BB


@dataclass(frozen=True)
class StepState:
    j: int
    x: float
    v: float


@dataclass(frozen=True)
class StepAssembly:
    """Per-(p, h, system) matrices with [B^(2)] factorised once."""

    p: int
    h: float
    system: SdofSystem
    B: np.ndarray = field(repr=False)
    lu: tuple = field(repr=False)
    condition: float = 0.0

    @classmethod
    def build(cls, p: int, h: float, system: SdofSystem) -> "StepAssembly":
        B = assemble_B(p, h, system.c, system.k)
        B2 = B[:, 2:]
        with np.errstate(all="ignore"):
            cond = float(np.linalg.cond(B2, 1))
        if not math.isfinite(cond) or cond > COND_LIMIT:
            raise IllConditionedError(
                f"[B^(2)] for p={p}, h={h}, c={system.c}, k={system.k} has 1-norm condition {cond:.3e}",
                condition=cond,
            )
        return cls(p, h, system, B, lu_factor(B2), cond)


def solve_step(state: StepState, system: SdofSystem, excitation, p: int, h: float,
               assembly: StepAssembly | None = None) -> np.ndarray:
    """Coefficients u_1..u_p of the displacement on step ``state.j``."""
    if assembly is None:
        assembly = StepAssembly.build(p, h, system)
    B = assembly.B
    u = np.empty(p)
    u[0] = state.x
    u[1] = state.x + h / (p - 1) * state.v
    rhs = force_vector(excitation, system, p, h, state.j) - u[0] * B[:, 0] - u[1] * B[:, 1]
    u[2:] = lu_solve(assembly.lu, rhs)
    return u


def step_outputs(u, p: int, h: float) -> tuple[float, float]:
    """End-of-step displacement and velocity."""
    u = np.asarray(u, dtype=float)
    return float(u[p - 1]), float((p - 1) / h * (u[p - 1] - u[p - 2]))


@dataclass
class Trajectory:
    p: int
    h: float
    l: int
    coeffs: np.ndarray
    states: list

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.l + 1)

    @property
    def x(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    @property
    def v(self) -> np.ndarray:
        return np.array([s.v for s in self.states])

    def step_poly(self, j: int) -> BernsteinPoly:
        return BernsteinPoly(self.p, self.h, self.coeffs[j])

    def sample(self, n_per_step: int = 16):
        """Dense (t, x, v) samples, ``n_per_step`` points per step plus the final end point."""
        s = np.arange(n_per_step) / n_per_step * self.h
        ts, xs, vs = [], [], []
        for j in range(self.l):
            f = self.step_poly(j)
            ts.append(j * self.h + s)
            xs.append(eval_poly(f, s))
            vs.append(eval_poly_deriv(f, s))
        ts.append(np.array([self.l * self.h]))
        xs.append(np.array([self.states[-1].x]))
        vs.append(np.array([self.states[-1].v]))
        return np.concatenate(ts), np.concatenate(xs), np.concatenate(vs)

    def gluing_defect(self) -> tuple[float, float]:
        """Largest C0 and relative C1 mismatch between consecutive steps."""
        u = self.coeffs
        if self.l < 2:
            return 0.0, 0.0
        c0 = np.abs(u[1:, 0] - u[:-1, -1])
        pred = 2.0 * u[:-1, -1] - u[:-1, -2]
        c1 = np.abs(u[1:, 1] - pred) / np.maximum(1.0, np.abs(pred))
        return float(c0.max()), float(c1.max())


def simulate(system: SdofSystem, excitation, x0: float, v0: float, p: int, h: float, l: int,
             assembly: StepAssembly | None = None) -> Trajectory:
    """Run ``l`` steps of length ``h`` from (x0, v0)."""
    if p < 3:
        raise ConfigError(f"need p >= 3, got {p}")
    if l < 1:
        raise ConfigError(f"need at least one step, got {l}")
    if not h > 0:
        raise ConfigError(f"step length must be positive, got {h}")
    if assembly is None:
        assembly = StepAssembly.build(p, h, system)
    state = StepState(0, float(x0), float(v0))
    states = [state]
    coeffs = np.empty((l, p))
    for j in range(l):
        try:
            u = solve_step(state, system, excitation, p, h, assembly)
            if not np.all(np.isfinite(u)):
                raise FloatingPointError("non-finite coefficients")
        except (ConfigError, StepError):
            raise
        except Exception as exc:
            raise StepError(j, exc) from exc
        coeffs[j] = u
        x, v = step_outputs(u, p, h)
        state = StepState(j + 1, x, v)
        states.append(state)
    return Trajectory(p, h, l, coeffs, states)
