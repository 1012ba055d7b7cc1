import math

import numpy as np
import pytest
from scipy.integrate import quad

from bernstein_sdof import weakform
from bernstein_sdof.bernstein import BernsteinPoly, eval_basis, eval_poly, eval_poly_deriv
from bernstein_sdof.closed_form import mechanical_energy, xi_coefficients
from bernstein_sdof.errors import ConfigError, IllConditionedError, StepError
from bernstein_sdof.weakform import (
    Constant,
    Harmonic,
    PiecewiseConstant,
    PiecewiseExponential,
    SdofSystem,
    StepAssembly,
    StepState,
    Tabulated,
    Zero,
    assemble_B,
    assemble_BB,
    force_vector,
    simulate,
    solve_step,
    step_outputs,
)


def test_system_validation_and_derived_quantities():
    s = SdofSystem(0.3, 4.0)
    assert s.period == pytest.approx(math.pi)
    assert s.omega_d == pytest.approx(math.sqrt(4 - 0.0225))
    r, w = s.rescaled()
    assert (r.c, r.k, w) == (pytest.approx(0.15), 1.0, 2.0)
    with pytest.raises(ConfigError):
        SdofSystem(-0.1, 1.0)
    with pytest.raises(ConfigError):
        SdofSystem(0.0, 0.0)
    with pytest.raises(ValueError):
        SdofSystem(3.0, 1.0).omega_d


@pytest.mark.parametrize("h,k", [(0.1, 1.0), (0.7, 2.5)])
def test_assemble_B_p3_undamped(h, k):
    row = assemble_B(3, h, 0.0, k)
    ref = [2 / (3 * h) + k * h / 10, -4 / (3 * h) + 2 * k * h / 15, 2 / (3 * h) + k * h / 10]
    assert row.shape == (1, 3)
    assert np.allclose(row[0], ref, rtol=1e-14)


@pytest.mark.parametrize("h,c,k", [(0.2, 0.1, 1.0), (1.0, 0.3, 1.0), (0.5, 1.5, 3.0)])
def test_assemble_B_p3_damped_matches_xi(h, c, k):
    assert np.allclose(assemble_B(3, h, c, k)[0], xi_coefficients(h, c, k), rtol=1e-13)


@pytest.mark.parametrize("p", [4, 7, 12])
def test_interior_block_symmetric_undamped(p):
    B = assemble_B(p, 0.4, 0.0, 1.3)
    inner = B[:, 1 : p - 1]
    assert np.allclose(inner, inner.T, rtol=0, atol=1e-13 * np.abs(inner).max())


def test_assemble_B_against_quadrature():
    p, h, c, k = 5, 0.8, 0.6, 2.0
    B = assemble_B(p, h, c, k)
    eps = 1e-6
    for i in range(2, p):
        for j in range(1, p + 1):
            def integrand(t):
                db_i = (eval_basis(i, p, h, min(t + eps, h)) - eval_basis(i, p, h, max(t - eps, 0.0))) / (
                    min(t + eps, h) - max(t - eps, 0.0))
                db_j = (eval_basis(j, p, h, min(t + eps, h)) - eval_basis(j, p, h, max(t - eps, 0.0))) / (
                    min(t + eps, h) - max(t - eps, 0.0))
                return math.exp(c * t) * (-db_i * db_j + k * eval_basis(i, p, h, t) * eval_basis(j, p, h, t))
            ref = quad(integrand, 0, h, epsabs=1e-12, limit=200)[0]
            assert B[i - 2, j - 1] == pytest.approx(ref, rel=1e-5, abs=1e-6)


def test_assemble_rejects_small_p():
    with pytest.raises(ValueError):
        assemble_B(2, 1.0, 0.0, 1.0)


def test_BB_structure():
    h = 0.37
    BB = assemble_BB(3, h, 0.0, 1.0)
    assert np.allclose(BB[:2, :2], [[1, 0], [-2 / h, 2 / h]])
    assert np.allclose(BB[:2, 2:], 0)
    assert np.allclose(np.triu(BB, 1), 0)  # lower triangular at p = 3
    BB = assemble_BB(6, h, 0.2, 1.0)
    assert np.allclose(BB[1, :2], [-5 / h, 5 / h]) and np.allclose(BB[:2, 2:], 0)


def test_BB_solve_reproduces_initial_data():
    h, x0 = 0.25, 1.0
    BB = assemble_BB(3, h, 0.0, 1.0)
    u = np.linalg.solve(BB, [x0, 0.0, 0.0])
    assert u[1] == pytest.approx(x0)


def test_force_vector_closed_forms():
    h = 0.3
    und, dmp = SdofSystem(0.0, 1.0), SdofSystem(0.4, 1.0)
    assert force_vector(Constant(1.0), und, 3, h, 0) == pytest.approx([h / 3])
    assert force_vector(PiecewiseExponential((1.0,), h, 0.4), dmp, 3, h, 0) == pytest.approx([h / 3])
    assert np.array_equal(force_vector(Zero(), dmp, 6, h, 0), np.zeros(4))


@pytest.mark.parametrize("exc", [
    Constant(2.0),
    PiecewiseConstant((1.0, -3.0, 0.5), 0.4),
    PiecewiseExponential((1.0, 2.0, -1.0), 0.4, 0.7),
    Harmonic(1.5, 3.0, 0.2),
    Tabulated((0.0, 0.13, 0.5, 0.9, 1.3), (0.0, 1.0, -2.0, 0.5, 0.0)),
])
def test_force_vector_against_quadrature(exc):
    p, h, c = 6, 0.4, 0.7
    system = SdofSystem(c, 1.0)
    for j in range(3):
        got = force_vector(exc, system, p, h, j)
        for i in range(2, p):
            pts = [tt - j * h for tt in getattr(exc, "times", ()) if j * h < tt < (j + 1) * h]
            ref = quad(lambda t: math.exp(c * t) * float(exc(j * h + t)) * eval_basis(i, p, h, t), 0, h,
                       points=pts or None, epsabs=1e-14, epsrel=1e-13)[0]
            assert got[i - 2] == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_force_vector_errors():
    s = SdofSystem(0.2, 1.0)
    with pytest.raises(ConfigError):
        force_vector(Tabulated((0.0, 0.5), (1.0, 1.0)), s, 4, 0.4, 1)
    with pytest.raises(ConfigError):
        force_vector(PiecewiseConstant((1.0,), 0.4), s, 4, 0.4, 3)
    with pytest.raises(ConfigError):
        force_vector(PiecewiseExponential((1.0,), 0.4, 0.5), s, 4, 0.4, 0)
    with pytest.raises(ConfigError):
        force_vector(object(), s, 4, 0.4, 0)
    with pytest.raises(ConfigError):
        Tabulated((0.0, 0.0, 1.0), (1.0, 2.0, 3.0))


def test_solve_step_p3_example():
    s = SdofSystem(0.0, 1.0)
    u = solve_step(StepState(0, 1.0, 0.0), s, Zero(), 3, 0.1)
    assert u[:2] == pytest.approx([1.0, 1.0])
    assert u[2] == pytest.approx(19.93 / 20.03, rel=1e-14)
    x, v = step_outputs(u, 3, 0.1)
    assert x == pytest.approx(0.99500749, abs=5e-9)
    assert v == pytest.approx(-0.0998502, abs=5e-8)


def test_solve_step_p3_damped_formula():
    h, c, k = 0.3, 0.4, 1.5
    s = SdofSystem(c, k)
    x0, v0 = 0.7, -0.2
    xi1, xi2, xi3 = xi_coefficients(h, c, k)
    ft = force_vector(Constant(1.0), s, 3, h, 0)[0]
    u = solve_step(StepState(0, x0, v0), s, Constant(1.0), 3, h)
    assert u[2] == pytest.approx((ft - (xi1 + xi2) * x0 - h / 2 * xi2 * v0) / xi3, rel=1e-13)


def test_solve_step_zero_data():
    u = solve_step(StepState(0, 0.0, 0.0), SdofSystem(0.2, 1.0), Zero(), 7, 0.3)
    assert np.array_equal(u, np.zeros(7))


@pytest.mark.parametrize("p", [3, 5, 9])
def test_step_outputs_consistent_with_polynomial(p):
    h = 0.45
    u = solve_step(StepState(0, 0.3, 1.1), SdofSystem(0.1, 2.0), Harmonic(), p, h)
    x, v = step_outputs(u, p, h)
    f = BernsteinPoly(p, h, u)
    assert eval_poly(f, h) == pytest.approx(x, abs=1e-12)
    assert eval_poly_deriv(f, h) == pytest.approx(v, abs=1e-12)
    # start of the step reproduces the initial data
    assert eval_poly(f, 0.0) == pytest.approx(0.3, abs=1e-14)
    assert eval_poly_deriv(f, 0.0) == pytest.approx(1.1, abs=1e-12)


def test_step_outputs_constant():
    assert step_outputs(np.full(5, 2.5), 5, 0.3) == (2.5, 0.0)


def test_simulate_single_step_example():
    tr = simulate(SdofSystem(0.0, 1.0), Zero(), 1.0, 0.0, 3, 0.1, 1)
    assert tr.states[-1].x == pytest.approx(0.99500749, abs=5e-9)
    assert tr.states[-1].x - math.cos(0.1) == pytest.approx(0.1**4 / 30, rel=0.01)


def test_simulate_zero_data():
    tr = simulate(SdofSystem(0.3, 1.0), Zero(), 0.0, 0.0, 6, 0.2, 10)
    assert not np.any(tr.coeffs) and not np.any(tr.x) and not np.any(tr.v)


@pytest.mark.parametrize("p,c", [(3, 0.0), (5, 0.2), (10, 0.05)])
def test_gluing(p, c):
    tr = simulate(SdofSystem(c, 1.0), Harmonic(0.5, 2.0), 1.0, -0.3, p, 0.3, 25)
    for j in range(tr.l - 1):
        assert tr.coeffs[j + 1, 0] == tr.coeffs[j, -1]
    c0, c1 = tr.gluing_defect()
    assert c0 == 0.0 and c1 <= 1e-12


@pytest.mark.parametrize("p", [3, 6])
def test_rescaling_invariance(p):
    k, c, h, l = 4.0, 0.3, 0.15, 12
    a = simulate(SdofSystem(c, k), Zero(), 1.0, 0.5, p, h, l)
    w = math.sqrt(k)
    b = simulate(SdofSystem(c / w, 1.0), Zero(), 1.0, 0.5 / w, p, h * w, l)
    assert np.allclose(a.x, b.x, rtol=1e-10, atol=1e-14)
    assert np.allclose(a.v, w * b.v, rtol=1e-10, atol=1e-14)


def test_factorization_reuse_is_deterministic():
    s, exc = SdofSystem(0.1, 1.0), Harmonic(1.0, 0.7)
    p, h, l = 7, 0.3, 15
    tr = simulate(s, exc, 0.2, 0.1, p, h, l)
    state = StepState(0, 0.2, 0.1)
    for j in range(l):
        u = solve_step(state, s, exc, p, h, StepAssembly.build(p, h, s))
        assert np.array_equal(u, tr.coeffs[j])
        state = StepState(j + 1, *step_outputs(u, p, h))


def test_energy_drift_per_step_bounded():
    s = SdofSystem(0.0, 1.0)
    for h in (0.5, 0.25, 0.1, 0.05):
        for x0, v0 in ((1.0, 0.0), (0.0, 1.0)):
            tr = simulate(s, Zero(), x0, v0, 3, h, 1)
            drift = mechanical_energy(tr.x[1], tr.v[1], 1.0) - mechanical_energy(x0, v0, 1.0)
            assert abs(drift) <= 0.06 * h**4


def test_energy_drift_mixed_start_is_third_order():
    # exact drift: 2 h^3 (h v + 2 x)(h^2 v + 5 h x - 10 v) / (3 h^2 + 20)^2 = -h^3 x v / 10 + O(h^4)
    x0, v0 = 0.6, -0.8
    for h in (0.2, 0.1, 0.05):
        tr = simulate(SdofSystem(), Zero(), x0, v0, 3, h, 1)
        drift = mechanical_energy(tr.x[1], tr.v[1], 1.0) - mechanical_energy(x0, v0, 1.0)
        exact = 2 * h**3 * (h * v0 + 2 * x0) * (h**2 * v0 + 5 * h * x0 - 10 * v0) / (3 * h**2 + 20) ** 2
        assert drift == pytest.approx(exact, rel=1e-9)


def test_simulate_validation():
    s = SdofSystem()
    with pytest.raises(ConfigError):
        simulate(s, Zero(), 1, 0, 2, 0.1, 1)
    with pytest.raises(ConfigError):
        simulate(s, Zero(), 1, 0, 3, 0.1, 0)
    with pytest.raises(ConfigError):
        simulate(s, Zero(), 1, 0, 3, -0.1, 1)


def test_step_error_carries_index():
    # finite until t = 0.25, then NaN
    exc = Tabulated((0.0, 0.25, 0.26, 10.0), (0.0, 0.0, float("nan"), 0.0))
    with pytest.raises(StepError) as info:
        simulate(SdofSystem(), exc, 1.0, 0.0, 4, 0.1, 5)
    assert info.value.step == 2


def test_condition_guard(monkeypatch):
    monkeypatch.setattr(weakform, "COND_LIMIT", 1.0)
    with pytest.raises(IllConditionedError) as info:
        StepAssembly.build(5, 0.2, SdofSystem())
    assert info.value.condition > 1.0


def test_dense_sampling():
    tr = simulate(SdofSystem(), Zero(), 1.0, 0.0, 4, 0.2, 3)
    t, x, v = tr.sample(8)
    assert t.size == 25 and t[-1] == pytest.approx(0.6)
    assert np.allclose(x[::8], tr.x, atol=1e-14)
    assert np.allclose(v[::8], tr.v, atol=1e-12)
