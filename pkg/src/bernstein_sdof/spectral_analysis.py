"""Projected-force analysis of the weak-form step.

For a trial displacement ``x = sum_i u_i B_i`` on one step, the integrated
residual force is ``u . F`` with

    F_i(t) = exp(c t) B_i'(t) + k int_0^t exp(c s) B_i(s) ds.

The weak form only sees the component of ``F`` in the span of zero-mean
polynomials of degree <= p - 2 (the "kernel" here); the Legendre tail of
degree >= p - 1 is what the method cannot control. This module builds the
family ``F_i``, finds the two-dimensional set of homogeneous solutions through
the Gram matrix of the kernel projections, and samples exponents describing
how fast the tail shrinks with p and h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bernstein import (
    BernsteinPoly,
    derivative,
    exp_times_bernstein,
    integrate_poly,
)
from .errors import ConvergenceError, SpectralStructureError
from .legendre import LegendreExpansion, bernstein_to_legendre, remove_mean, to_legendre

__all__ = [
    "jacobi_eigh",
    "ForceFamily",
    "GramStudy",
    "ExponentTriple",
    "ExponentCell",
    "build_force_family",
    "gram_study",
    "null_count",
    "spectral_gap",
    "homogeneous_tail_norms",
    "nonhomogeneous_sines",
    "exponent_homogeneous",
    "exponent_nonhomogeneous",
    "aggregate_factor",
    "study_cell",
    "run_study",
    "integrated_tail_norm_sq",
    "HOM_BASELINE",
    "NONHOM_BASELINE",
    "hom_baseline",
    "nonhom_baseline",
    "ProjectionDecay",
    "integrated_heaviside",
    "projection_error_study",
    "end_of_step_error_report",
]

NULL_THRESHOLD = 1e-2
MIN_GAP = 1e2
# broken-line upper models (slope, intercept) for the undamped h = T exponents;
# first leg up to the breakpoint, second leg after it
HOM_BASELINE = ((-1.1725005559764048, 5.771540799001279), (0.729932981104102, -32.27712994260885), 20)
NONHOM_BASELINE = ((-0.2530595464212411, -0.19694374410552673), (-0.20385935288152152, -0.44294471180412476), 5)


def _broken_line(model, p: float) -> float:
    (a1, b1), (a2, b2), brk = model
    a, b = (a1, b1) if p <= brk else (a2, b2)
    return a * p + b


def hom_baseline(p: int) -> float:
    return _broken_line(HOM_BASELINE, p)


def nonhom_baseline(p: int) -> float:
    return _broken_line(NONHOM_BASELINE, p)


# --- eigen solver ------------------------------------------------------------


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns. Sweeps stop once every off-diagonal entry is below
    ``tol`` times the largest diagonal magnitude of the input.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("jacobi_eigh needs a square matrix")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    scale = max(float(np.max(np.abs(np.diag(A)))) if n else 0.0, 1e-300)
    for _ in range(max_sweeps):
        off = np.abs(A - np.diag(np.diag(A)))
        if n < 2 or off.max() <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                cs = 1.0 / math.hypot(1.0, t)
                sn = t * cs
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = cs * Ap - sn * Aq
                A[:, q] = sn * Ap + cs * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = cs * Ap - sn * Aq
                A[q, :] = sn * Ap + cs * Aq
                A[p, q] = A[q, p] = 0.0
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = cs * Vp - sn * Vq
                V[:, q] = sn * Vp + cs * Vq
    else:
        raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


# --- force family ------------------------------------------------------------


def _exp_times(f: BernsteinPoly, c: float) -> BernsteinPoly:
    """exp(c t) f(t) as a single truncated Bernstein polynomial."""
    out = None
    for i, a in enumerate(f.coeffs, start=1):
        if a == 0.0:
            continue
        term = exp_times_bernstein(i, f.p, f.h, c) * a
        out = term if out is None else out + term
    return out if out is not None else BernsteinPoly.constant(0.0, f.p, f.h)


@dataclass(frozen=True)
class ForceFamily:
    p: int
    h: float
    c: float
    k: float
    # mean-free Legendre coefficients, one row per F_i (index i-1)
    coeffs: np.ndarray = field(repr=False)

    @property
    def kernel(self) -> np.ndarray:
        return self.coeffs[:, 1 : self.p - 1]

    @property
    def tail(self) -> np.ndarray:
        return self.coeffs[:, self.p - 1 :]

    def expansion(self, i: int) -> LegendreExpansion:
        return LegendreExpansion(self.h, self.coeffs[i - 1])


def build_force_family(p: int, h: float, c: float = 0.0, k: float = 1.0) -> ForceFamily:
    """Mean-free Legendre expansions of F_i for i = 1..p."""
    if p < 3:
        raise ValueError(f"need p >= 3, got {p}")
    rows = []
    for i in range(1, p + 1):
        Bi = BernsteinPoly.basis(i, p, h)
        Fi = _exp_times(derivative(Bi), c) + k * integrate_poly(_exp_times(Bi, c))
        rows.append(remove_mean(to_legendre(Fi)).coeffs)
    width = max(r.size for r in rows)
    coeffs = np.zeros((p, width))
    for i, r in enumerate(rows):
        coeffs[i, : r.size] = r
    return ForceFamily(p, h, c, k, coeffs)


def integrated_tail_norm_sq(u, p: int, h: float, k: float = 1.0) -> float:
    """Squared tail norm of k * int(sum_i u_i B_i), straight from the transform matrix.

    int_0^t B(i,p,h) = (h/p) sum_{j > i} B(j, p+1, h), so the Legendre coefficient
    of degree m is (k h/p) sum_i u_i sum_{j=i+1}^{p+1} Lambda_jm(p+1). Only m = p-1, p
    survive the tail projection.
    """
    lam = bernstein_to_legendre(p + 1).entries
    u = np.asarray(u, dtype=float)
    total = 0.0
    for m in (p - 1, p):
        coef = sum(u[i - 1] * lam[i:, m].sum() for i in range(1, p + 1))
        total += (k * h / p * coef) ** 2
    return h * total


# --- Gram study --------------------------------------------------------------


@dataclass(frozen=True)
class GramStudy:
    family: ForceFamily
    gram: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    scale: float
    e_disp: np.ndarray
    e_vel: np.ndarray
    # columns: non-null eigenvectors with their first two coordinates zeroed
    e_tilde: np.ndarray = field(repr=False)

    @property
    def null_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[:2]

    @property
    def gap(self) -> float:
        return spectral_gap(self.eigenvalues, self.scale)


def _clipped(w: np.ndarray, scale: float) -> np.ndarray:
    # rounding puts exact zeros anywhere in [-eps, eps] * scale
    return np.maximum(w, np.finfo(float).eps * scale)


def null_count(w: np.ndarray, scale: float) -> int:
    """Eigenvalues below the largest jump of the (clipped) ascending spectrum.

    The non-null eigenvalues fall off geometrically with p, so a fixed
    threshold misclassifies them for larger p; the jump does not.
    """
    if w.size < 2:
        return w.size
    lw = np.log(_clipped(w, scale))
    return int(np.argmax(np.diff(lw))) + 1


def spectral_gap(w: np.ndarray, scale: float) -> float:
    """Ratio of the first non-null eigenvalue to the largest null one."""
    if w.size < 3:
        return math.inf
    c = _clipped(w, scale)
    return float(c[2] / c[1])


def gram_study(family: ForceFamily) -> GramStudy:
    """Gram matrix of kernel projections and the homogeneous/non-homogeneous split.

    Raises
    ------
    SpectralStructureError
        When the null space is not exactly two-dimensional, the gap to the
        rest of the spectrum is below 1e2, or the null vectors cannot be
        recombined to match arbitrary initial data.
    """
    p, h = family.p, family.h
    K = family.kernel
    G = h * (K @ K.T)
    scale = float(np.max(np.diag(G)))
    if not scale > 0:
        raise SpectralStructureError("null_count", "Gram matrix vanishes")
    w, V = jacobi_eigh(G / scale)
    w = w * scale
    n_null = null_count(w, scale)
    if n_null != 2:
        raise SpectralStructureError("null_count", f"expected 2 null eigenvalues at p={p}, found {n_null}")
    if w[1] >= NULL_THRESHOLD * scale:
        raise SpectralStructureError("null_count", f"null eigenvalue {w[1] / scale:.3e} (scaled) above {NULL_THRESHOLD:g}")
    gap = spectral_gap(w, scale)
    if gap < MIN_GAP:
        raise SpectralStructureError("gap", f"gap {gap:.3e} below {MIN_GAP:g} at p={p}")
    e1, e2 = V[:, 0], V[:, 1]
    A = np.array([[e1[0], e2[0]], [e1[1], e2[1]]])
    if np.linalg.cond(A) > 1e12:
        raise SpectralStructureError("singular_A", f"null vectors fix no initial data (cond {np.linalg.cond(A):.3e})")
    a1 = np.linalg.solve(A, [1.0, 0.0])
    a2 = np.linalg.solve(A, [0.0, 1.0])
    t1 = a1[0] * e1 + a1[1] * e2  # u_1 = 1, u_2 = 0
    t2 = a2[0] * e1 + a2[1] * e2  # u_1 = 0, u_2 = 1
    # u_1 = x0, u_2 = x0 + h v0/(p-1)
    e_disp = t1 + t2
    e_vel = h / (p - 1) * t2
    rest = V[:, 2:]
    e_tilde = rest - np.outer(t1, rest[0]) - np.outer(t2, rest[1])
    return GramStudy(family, G, w, V, scale, e_disp, e_vel, e_tilde)


# --- exponents ---------------------------------------------------------------


@dataclass(frozen=True)
class ExponentTriple:
    """Exponents from the largest, average and smallest sampled norms."""

    worst: float
    mean: float
    best: float

    def as_dict(self) -> dict:
        return {"worst": self.worst, "mean": self.mean, "best": self.best}


def _boundary_samples(samples: int, seed: int) -> np.ndarray:
    """Uniform points on the boundary of the square max(|x0|, |v0|) = 1."""
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, 4.0, samples)
    side = np.minimum(s.astype(int), 3)
    r = 2.0 * (s - side) - 1.0
    x0 = np.where(side == 0, 1.0, np.where(side == 1, -1.0, r))
    v0 = np.where(side == 2, 1.0, np.where(side == 3, -1.0, r))
    return np.column_stack([x0, v0])


def homogeneous_tail_norms(study: GramStudy, samples: int, seed: int) -> np.ndarray:
    """Squared tail norms of the forces of sampled homogeneous solutions."""
    fam = study.family
    basis = np.vstack([study.e_disp, study.e_vel])  # 2 x p
    tails = _boundary_samples(samples, seed) @ (basis @ fam.tail)
    return fam.h * np.einsum("ij,ij->i", tails, tails)


def nonhomogeneous_sines(study: GramStudy, samples: int, seed: int) -> np.ndarray:
    """sin of the angle between sampled zero-data forces and the kernel."""
    fam = study.family
    E = study.e_tilde
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((samples, E.shape[1]))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    F = (w @ E.T) @ fam.coeffs
    tail = np.linalg.norm(F[:, fam.p - 1 :], axis=1)
    full = np.linalg.norm(F, axis=1)
    return tail / full


def _triple(values: np.ndarray, p: int, h_over_T: float, s_at_T: float | None) -> ExponentTriple:
    # worst = largest value; at h != T the base-(h/T) exponent after removing p^{s(T)}
    logs = np.log(values)
    if h_over_T == 1.0 or s_at_T is None:
        ex = logs / math.log(p)
        return ExponentTriple(float(ex.max()), float(ex.mean()), float(ex.min()))
    ex = (logs - s_at_T * math.log(p)) / math.log(h_over_T)
    hi, lo = (ex.min(), ex.max()) if h_over_T < 1.0 else (ex.max(), ex.min())
    return ExponentTriple(float(hi), float(ex.mean()), float(lo))


def exponent_homogeneous(study: GramStudy, p: int, h_over_T: float = 1.0, samples: int = 10000,
                         seed: int = 0, s_at_T: float | None = None) -> ExponentTriple:
    """Sampled s_h; the squared tail norm enters, so p**s_h bounds it directly."""
    return _triple(homogeneous_tail_norms(study, samples, seed), p, h_over_T, s_at_T)


def exponent_nonhomogeneous(study: GramStudy, p: int, h_over_T: float = 1.0, samples: int = 10000,
                            seed: int = 0, s_at_T: float | None = None) -> ExponentTriple:
    """Sampled s_nh from sin(theta) = |tail| / |force|."""
    return _triple(nonhomogeneous_sines(study, samples, seed), p, h_over_T, s_at_T)


def aggregate_factor(p: int, s_T: float, s_h: float, h_over_T: float) -> float:
    """p**s(p,c,T) * (h/T)**s(p,c,h)."""
    return p**s_T * h_over_T**s_h


@dataclass(frozen=True)
class ExponentCell:
    p: int
    c: float
    h_over_T: float
    s_h: ExponentTriple
    s_nh: ExponentTriple
    phi_h: float
    phi_nh: float
    n_samples: int
    seed: int

    def as_dict(self) -> dict:
        return {
            "s_h": self.s_h.as_dict(),
            "s_nh": self.s_nh.as_dict(),
            "phi_h": self.phi_h,
            "phi_nh": self.phi_nh,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def study_cell(p: int, c: float, h_over_T: float, samples: int = 10000, seed: int = 0,
               k: float = 1.0, base: ExponentCell | None = None) -> ExponentCell:
    """Exponents and aggregate factors at one (p, c, h/T).

    ``base`` is the h = T cell for the same (p, c); it is computed when missing.
    """
    T = 2.0 * math.pi / math.sqrt(k)
    if h_over_T != 1.0 and base is None:
        base = study_cell(p, c, 1.0, samples, seed, k)
    st = gram_study(build_force_family(p, h_over_T * T, c, k))
    sT_h = base.s_h.worst if base is not None else None
    sT_nh = base.s_nh.worst if base is not None else None
    sh = exponent_homogeneous(st, p, h_over_T, samples, seed, sT_h)
    snh = exponent_nonhomogeneous(st, p, h_over_T, samples, seed, sT_nh)
    if h_over_T == 1.0:
        phi_h, phi_nh = aggregate_factor(p, sh.worst, 0.0, 1.0), aggregate_factor(p, snh.worst, 0.0, 1.0)
    else:
        phi_h = aggregate_factor(p, sT_h, sh.worst, h_over_T)
        phi_nh = aggregate_factor(p, sT_nh, snh.worst, h_over_T)
    return ExponentCell(p, c, h_over_T, sh, snh, phi_h, phi_nh, samples, seed)


def cell_key(p: int, c: float, h_over_T: float) -> str:
    return f"p={p},c={c!r},h_over_T={h_over_T!r}"


def run_study(p_values, c_values, h_over_T_values, samples: int = 10000, seed: int = 0) -> dict:
    """Grid of cells keyed by :func:`cell_key`; failed cells hold ``{"failed": ...}``."""
    out = {}
    for p in p_values:
        for c in c_values:
            try:
                base = study_cell(p, c, 1.0, samples, seed)
            except (SpectralStructureError, ConvergenceError) as exc:
                base = None
                base_err = exc
            for hT in h_over_T_values:
                key = cell_key(p, c, hT)
                if base is None:
                    out[key] = {"failed": f"{type(base_err).__name__}: {base_err}"}
                    continue
                try:
                    cell = base if hT == 1.0 else study_cell(p, c, hT, samples, seed, base=base)
                    out[key] = cell.as_dict()
                except (SpectralStructureError, ConvergenceError) as exc:
                    out[key] = {"failed": f"{type(exc).__name__}: {exc}"}
    return out


# --- projection-error decay --------------------------------------------------


@dataclass(frozen=True)
class ProjectionDecay:
    rows: list  # (p, h, error)
    slope_p: float
    slope_h: float


def integrated_heaviside(t0_fraction: float = 1.0 / 3.0):
    """F(t) = max(0, t - t0) with the jump of F' at t0 = t0_fraction * h.

    Returns ``(func, breakpoints)`` in the form :func:`projection_error_study` expects.
    """
    def func(t, h):
        return np.maximum(0.0, np.asarray(t) - t0_fraction * h)

    def breakpoints(h):
        return [t0_fraction * h]

    return func, breakpoints


def _legendre_coeffs(func, h: float, n_coeffs: int, breaks) -> np.ndarray:
    """Normalised Legendre coefficients of func(., h) on [0, h] by composite Gauss."""
    x, w = np.polynomial.legendre.leggauss(n_coeffs + 8)
    edges = [0.0, *sorted(b for b in breaks if 0.0 < b < h), h]
    out = np.zeros(n_coeffs)
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * (x + 1.0) + a
        wt = 0.5 * (b - a) * w * func(t, h)
        s = t / h
        # three-term recurrence over all degrees at once
        prev, cur = np.ones_like(s), 2.0 * s - 1.0
        out[0] += wt.sum()
        if n_coeffs > 1:
            out[1] += math.sqrt(3.0) * (wt * cur).sum()
        y = 2.0 * s - 1.0
        for m in range(1, n_coeffs - 1):
            prev, cur = cur, ((2 * m + 1) * y * cur - m * prev) / (m + 1)
            out[m + 1] += math.sqrt(2 * m + 3) * (wt * cur).sum()
    return out / h


def projection_error_study(func, p_range, h_range, breakpoints=None, n_coeffs: int | None = None) -> ProjectionDecay:
    """||F - (degree <= p-2 projection of F)|| on [0, h] over a (p, h) grid.

    ``slope_p`` is the log-log slope in p at the first h; ``slope_h`` the slope
    in h at the first p.
    """
    p_range = list(p_range)
    h_range = list(h_range)
    if n_coeffs is None:
        n_coeffs = max(8 * max(p_range), 200)
    rows = []
    for h in h_range:
        brk = breakpoints(h) if breakpoints is not None else []
        a = _legendre_coeffs(func, h, n_coeffs, brk)
        for p in p_range:
            rows.append((p, h, math.sqrt(h * float(np.sum(a[p - 1 :] ** 2)))))
    arr = np.array(rows)
    sel = arr[:, 1] == h_range[0]
    slope_p = float(np.polyfit(np.log(arr[sel, 0]), np.log(arr[sel, 2]), 1)[0]) if sel.sum() > 1 else math.nan
    sel = arr[:, 0] == p_range[0]
    slope_h = float(np.polyfit(np.log(arr[sel, 1]), np.log(arr[sel, 2]), 1)[0]) if sel.sum() > 1 else math.nan
    return ProjectionDecay(rows, slope_p, slope_h)


# --- per-step error report ---------------------------------------------------


def end_of_step_error_report(traj, system, oracle=None, phi=None) -> list[dict]:
    """Per-step local errors of a free-vibration run and the residual-force ingredients.

    ``oracle(x, v, h)`` returns the exact state after one step from ``(x, v)``;
    it defaults to the closed-form free response. The residual force of step j
    is ``u^j . F`` (the family forces, valid for f = 0); its tail norm enters
    as ``exp(-c h / 2) sqrt(h) |tail|``. ``phi`` is an optional (phi_h, phi_nh)
    pair echoed into each row, since the unknown constant of the bound is not
    reported.
    """
    from .closed_form import exact_free_response, modified_mechanical_energy

    p, h, c, k = traj.p, traj.h, system.c, system.k
    if oracle is None:
        def oracle(x, v, hh):
            return tuple(float(z) for z in exact_free_response(system, x, v, hh))
    fam = build_force_family(p, h, c, k)
    rows = []
    for j in range(traj.l):
        s0, s1 = traj.states[j], traj.states[j + 1]
        xe, ve = oracle(s0.x, s0.v, h)
        tail = traj.coeffs[j] @ fam.tail
        tnorm = math.sqrt(h * float(tail @ tail))
        me_num = float(modified_mechanical_energy(s1.x, s1.v, k, c, h))
        me_ex = float(modified_mechanical_energy(xe, ve, k, c, h))
        row = {
            "step": j,
            "x_err": abs(s1.x - xe),
            "v_err": abs(s1.v - ve),
            "residual_tail_norm": tnorm,
            "bound_ingredient": math.exp(-0.5 * c * h) * math.sqrt(h) * tnorm,
            "me_c_err": abs(me_num - me_ex),
        }
        if phi is not None:
            row["phi_h"], row["phi_nh"] = phi
        rows.append(row)
    return rows
