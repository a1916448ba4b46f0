import math

import numpy as np
import pytest

from hardedge.errors import DomainError, SingularityError
from hardedge.painleve import (
    LocalSeries,
    PainleveParams,
    alt_third_order_terms,
    asymptote_error,
    asymptotic_v,
    asymptotic_v_coefficients,
    identity_residual,
    initial_values,
    integrate_piii,
    integrate_r,
    integrate_r_forward,
    q_of_s,
    qprime_of_s,
    r_of_s,
    residual_alt_third_order,
    residual_piii,
    residual_system,
    residual_third_order,
    rprime_of_s,
    state,
    t_of_s,
    taylor_coefficients,
    taylor_start,
    tprime_of_s,
    v_of_s,
)

TOL = 1e-10


@pytest.fixture(scope="module")
def sol_half():
    return integrate_r(0.5, 50.0, TOL)


@pytest.fixture(scope="module")
def sol_three_halves():
    return integrate_r(1.5, 50.0, TOL)


# ---------------------------------------------------------------------------
# closed forms and series


@pytest.mark.parametrize(
    "alpha, expected",
    [
        (0.5, (0.0, 0.0, 0.0)),
        (1.5, (0.0, -1.0, 0.0)),
        (0.75, ((2.25 - 1) * (2.25 - 9) / 128, (1 - 2.25) / 8, (2.25 - 1) * (2.25 - 9) * (2.25 - 13) / 1536)),
    ],
)
def test_initial_values(alpha, expected):
    assert initial_values(alpha) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "alpha, r0, r1",
    [(0.5, 0.0, 2.0), (1.5, -1.0, 2.0 / 3.0)],
)
def test_taylor_leading(alpha, r0, r1):
    c = taylor_coefficients(alpha)
    assert c[0] == pytest.approx(r0, abs=1e-15)
    assert c[1] == pytest.approx(r1, rel=1e-15)


def test_taylor_r2_half():
    assert taylor_coefficients(0.5)[2] == pytest.approx(8.0 / 3.0, rel=1e-15)


@pytest.mark.parametrize("alpha", [0.5, 0.75, 1.5, 2.5])
def test_taylor_coefficients_solve_equation(alpha):
    # the cubic polynomial satisfies the equation through order s^1
    r0, r1, r2, r3 = taylor_coefficients(alpha)
    for s in [1e-4, 5e-5]:
        r = r0 + r1 * s + r2 * s * s + r3 * s ** 3
        rp = r1 + 2 * r2 * s + 3 * r3 * s * s
        rpp = 2 * r2 + 6 * r3 * s
        rppp = 6 * r3
        res = (2 * s * s * rp * rppp - s * s * rpp ** 2 + 2 * s * rp * rpp - 4 * s * rp ** 3
               + (2 * r - 0.25) * rp * rp + 1)
        assert abs(res) < 50 * s * s * (1 + abs(r3))


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_resonant_alpha_refused(alpha):
    with pytest.raises(SingularityError):
        taylor_coefficients(alpha)
    with pytest.raises(SingularityError):
        integrate_r(alpha, 10.0, 1e-8)


def test_taylor_start_domain():
    with pytest.raises(DomainError):
        taylor_start(0.5, 2e-3)
    r, rp, rpp = taylor_start(0.5, 1e-4)
    assert r == pytest.approx(2e-4, rel=1e-3)
    assert rp == pytest.approx(2.0, rel=1e-3)


def test_params_invariants():
    with pytest.raises(DomainError):
        PainleveParams(0.5, l=0.1)
    with pytest.raises(DomainError):
        PainleveParams(-1.0)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.5, 2.5])
def test_local_series_residual(alpha):
    series = LocalSeries(alpha)
    assert series.residual_max(-1.7) < 1e-10


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_asymptotic_series(alpha):
    a = asymptotic_v_coefficients(alpha)
    assert a[0] == 1.0
    assert a[1] == pytest.approx(-alpha / 3, rel=1e-15)
    s = 2000.0
    v, tv, s2v2, err = asymptotic_v(alpha, s)
    t2v = s2v2 + tv
    # theta-form of the PIII equation: v theta^2 v - (theta v)^2 - v^3 - alpha s v + s^2 = 0
    res = v * t2v - tv * tv - v ** 3 - alpha * s * v + s * s
    assert abs(res) < 1e-9 * s * s
    assert err < 1e-12


# ---------------------------------------------------------------------------
# integrated solution


def test_queries_at_zero(sol_half, sol_three_halves):
    assert r_of_s(sol_half, 0.0) == 0.0
    assert rprime_of_s(sol_half, 0.0) == 2.0
    assert q_of_s(sol_half, 0.0) == 0.0
    assert qprime_of_s(sol_half, 0.0) == pytest.approx(-1.0, abs=1e-15)
    assert t_of_s(sol_half, 0.0) == 0.0
    assert tprime_of_s(sol_half, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert q_of_s(sol_three_halves, 0.0) == 0.0
    assert t_of_s(sol_three_halves, 0.0) == 0.0
    assert r_of_s(sol_three_halves, 0.0) == -1.0


@pytest.mark.parametrize("alpha", [0.5, 0.75, 1.5])
def test_q0_formula(alpha):
    r0 = (1 - 4 * alpha ** 2) / 8
    assert r0 * (1 + r0) / 2 == pytest.approx(initial_values(alpha)[0], abs=1e-15)


def test_r_near_zero_approaches_r0(sol_half):
    assert abs(r_of_s(sol_half, 1e-7)) < 1e-6
    assert abs(q_of_s(sol_half, 1e-7)) < 1e-6
    assert abs(t_of_s(sol_half, 1e-7)) < 1e-6


def test_continuity_across_series_start(sol_half):
    s0 = sol_half.s0
    lo, hi = s0 * (1 - 1e-9), s0 * (1 + 1e-9)
    assert state(sol_half, lo) == pytest.approx(state(sol_half, hi), rel=1e-6)
    assert t_of_s(sol_half, lo) == pytest.approx(t_of_s(sol_half, hi), abs=1e-12)


def test_identity_log_spaced(sol_half):
    for s in np.geomspace(1e-3, sol_half.s_max, 100):
        assert identity_residual(sol_half, s) <= 1e-8


def test_residual_at_nodes(sol_half):
    ts = sol_half.traj.ts
    for s in ts[:: max(1, len(ts) // 200)]:
        assert residual_third_order(sol_half, s) <= 1e-8


@pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
def test_alt_residual_half(sol_half, s):
    assert residual_alt_third_order(sol_half, s) <= 1e-7


def test_alt_residual_three_halves(sol_three_halves):
    assert residual_alt_third_order(sol_three_halves, 5.0) <= 1e-7


@pytest.mark.parametrize("s", [1.0, 0.01, 7.0, 50.0])
def test_residual_system(sol_half, s):
    res = residual_system(sol_half, s)
    assert max(res) <= 1e-8
    assert res[1] <= 1e-9
    assert res[3] <= 1e-14


def test_residual_system_finite_difference(sol_half):
    res = residual_system(sol_half, 1.0, exact=False)
    assert max(res) <= 1e-5
    assert res[1] <= 1e-9


def test_rprime_positive(sol_half):
    assert np.all(sol_half.traj.ys[:, 1] > 0)


def test_perturbed_slope_breaks_alt_equation():
    # r'(0) = 1/alpha + 0.1 makes the alternative equation fail by alpha_1 r'
    alpha, delta = 0.5, 0.1
    alpha1 = -delta / ((1 / alpha) * (1 / alpha + delta))
    tr = integrate_r_forward(1 / alpha + delta, 0.4, TOL)
    for i in range(0, len(tr.ts), 7):
        s, y = tr.ts[i], tr.ys[i]
        lhs = float(np.sum(alt_third_order_terms(alpha, s, y[0], y[1], y[2], tr.fs[i][2])))
        assert lhs == pytest.approx(alpha1 * y[1], rel=1e-6)


def test_self_convergence(sol_half):
    finer = integrate_r(0.5, 50.0, TOL / 2)
    assert abs(r_of_s(finer, 50.0) - r_of_s(sol_half, 50.0)) <= 20 * TOL
    assert abs(r_of_s(finer, 1.0) - r_of_s(sol_half, 1.0)) <= 10 * TOL


def test_domain_errors(sol_half):
    with pytest.raises(DomainError):
        integrate_r(0.5, 0.5, TOL)
    with pytest.raises(DomainError):
        integrate_r(0.5, 10.0, 1e-3)
    with pytest.raises(DomainError):
        r_of_s(sol_half, 51.0)
    with pytest.raises(DomainError):
        residual_alt_third_order(sol_half, 1e-5)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_large_s_asymptote(alpha):
    sol = integrate_r(alpha, 1e4, TOL)
    e4 = asymptote_error(sol, 1e4)
    e3 = asymptote_error(sol, 1e3)
    assert abs(e4) <= 10
    assert abs(e4 - e3) <= abs(e3)
    assert np.all(sol.traj.ys[:, 1] > 0)


# ---------------------------------------------------------------------------
# Painleve III form


def test_piii_small_s_slope():
    ps = integrate_piii(0.5, 10.0, TOL)
    # v/s = 2 + O(s^alpha) from the s^(1+alpha) term of the series
    assert v_of_s(ps, 1e-14) / 1e-14 == pytest.approx(2.0, rel=1e-5)
    assert abs(v_of_s(ps, 1e-8) / 1e-8 - 2.0) < abs(v_of_s(ps, 1e-6) / 1e-6 - 2.0)
    assert v_of_s(ps, 0.0) == 0.0


@pytest.mark.parametrize("alpha", [0.5, 1.5, 2.5])
def test_piii_equivalence(alpha):
    sol = integrate_r(alpha, 50.0, TOL)
    ps = integrate_piii(alpha, 50.0, TOL)
    err = max(abs(v_of_s(ps, s) - s * rprime_of_s(sol, s)) for s in np.linspace(0.1, 50, 60))
    assert err <= 100 * TOL
    for s in np.linspace(0.1, 50, 12):
        assert residual_piii(ps, s) <= 1e-8


def test_piii_matches_constant():
    # independent shooting solves for the same series constant
    sol = integrate_r(0.5, 50.0, TOL)
    ps = integrate_piii(0.5, 50.0, TOL)
    assert ps.c == pytest.approx(sol.c, rel=1e-6)
    assert math.isfinite(sol.c)
