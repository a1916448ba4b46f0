import math

import numpy as np
import pytest

from hardedge.errors import DomainError, SingularityError
from hardedge.specfun import (
    AIRY_ASYMPTOTIC_MIN,
    _airy_asym_neg,
    _airy_asym_pos,
    _airy_taylor_march,
    _airy_via_k,
    _j_hankel,
    _j_miller,
    _j_series,
    airy_ai,
    bessel_j,
    bessel_j_value,
    bessel_k,
    gamma_fn,
    gauss_legendre,
    log_bessel_k,
)

# Reference values below were computed once at 30 digits with an
# arbitrary-precision library and frozen here.
AIRY_REF = [
    (-30.0, -0.087968188456842162833, 1.2286206026374851347),
    (-9.0, -0.022133721547341403674, -0.97566398092633159471),
    (-8.0, -0.052705050356386202622, 0.93556093819830655103),
    (-5.0, 0.35076100902411431979, 0.32719281855444313679),
    (-1.0, 0.5355608832923521188, -0.010160567116645209395),
    (0.7, 0.18916240039815008218, -0.19985119158228048105),
    (1.5, 0.071749497008105409674, -0.097382012842301319218),
    (2.0, 0.034924130423274379135, -0.053090384433653631704),
    (5.0, 0.00010834442813607441735, -0.000247413890868462476),
    (8.0, 4.6922076160992316256e-8, -1.3414392979067865743e-7),
    (10.0, 1.1047532552898685934e-10, -3.5206336767389236366e-10),
    (30.0, 3.2082175915504955711e-49, -1.7598765814327259821e-48),
]

J_REF = [
    (2.5, 5.0, 0.24037720111131735285, -0.28983990670039943794),
    (1.5, 12.5, -0.22637633819446598575, 0.0121979111246675353),
    (3.3, 20.0, -0.028626257783182674297, -0.17421836921865281371),
    (7.0, 40.0, -0.1080234317357794287, 0.067404214691555927651),
    (10.0, 99.0, 0.019217738228763876665, -0.077764894124234798637),
    (0.25, 60.0, -0.066426734438988207037, -0.078172992744728122901),
]

K_REF = [
    (0.0, 1.0, 0.42102443824070833334),
    (1.0 / 3.0, 2.0, 0.11654496129616524846),
    (10.0, 0.5, 188937569319.90025964),
    (80.0, 3.0, 3.5558229274750454138e102),
    (25.5, 100.0, 1.1635757916604124885e-43),
    (0.0, 200.0, 1.2256819797765334517e-88),
]


# ---------------------------------------------------------------- gamma


@pytest.mark.parametrize(
    "x, expected",
    [
        (1.0, 1.0),
        (0.5, math.sqrt(math.pi)),
        (5.0, 24.0),
        (0.1, 9.5135076986687312858),
        (2.5, 1.3293403881791370205),
        (7.3, 1271.4236336639088399),
        (33.3, 7.4875775965226323274e35),
        (120.5, 6.1002949740240058744e197),
    ],
)
def test_gamma_values(x, expected):
    assert gamma_fn(x) == pytest.approx(expected, rel=1e-13)


def test_gamma_recurrence():
    for x in np.linspace(0.05, 30.0, 97):
        assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=2e-13)


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_gamma_poles(x):
    with pytest.raises(SingularityError):
        gamma_fn(x)


# ---------------------------------------------------------------- Airy


def test_airy_at_zero():
    a = airy_ai(0.0)
    assert a.ai == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), rel=1e-14)
    assert a.ai_prime == pytest.approx(-(3 ** (-1 / 3)) / math.gamma(1 / 3), rel=1e-14)
    assert a.ai == pytest.approx(0.3550280539, abs=1e-10)
    assert a.ai_prime == pytest.approx(-0.2588194038, abs=1e-10)


@pytest.mark.parametrize("x, ai, aip", AIRY_REF)
def test_airy_reference(x, ai, aip):
    a = airy_ai(x)
    if x < 0:
        # oscillatory region: measure against the local amplitude
        amp = math.hypot(ai, aip / math.sqrt(abs(x)))
        assert abs(a.ai - ai) <= 1e-12 * amp
        assert abs(a.ai_prime - aip) <= 1e-12 * amp * math.sqrt(abs(x))
    else:
        assert a.ai == pytest.approx(ai, rel=1e-12)
        assert a.ai_prime == pytest.approx(aip, rel=1e-12)


def test_airy_five_example():
    assert airy_ai(5.0).ai == pytest.approx(1.0834e-4, rel=1e-4)


def test_airy_ode_residual_at_one():
    h = 1e-4
    second = (airy_ai(1 + h).ai - 2 * airy_ai(1.0).ai + airy_ai(1 - h).ai) / h**2
    assert abs(second - airy_ai(1.0).ai) <= 1e-5


@pytest.mark.parametrize("x", np.arange(-10, 11))
def test_airy_second_difference_grid(x):
    h = 1e-4
    x = float(x)
    second = (airy_ai(x + h).ai - 2 * airy_ai(x).ai + airy_ai(x - h).ai) / h**2
    assert abs(second - x * airy_ai(x).ai) <= 1e-5 * (1 + abs(airy_ai(x).ai))


def test_airy_wronskian_with_derivative():
    # Ai' must be the derivative of Ai: centred difference check on all branches
    h = 1e-5
    for x in [-20.0, -8.5, -3.0, 0.4, 1.4, 3.0, 7.9, 12.0]:
        fd = (airy_ai(x + h).ai - airy_ai(x - h).ai) / (2 * h)
        assert fd == pytest.approx(airy_ai(x).ai_prime, rel=1e-7, abs=1e-12)


def test_airy_positive_and_decreasing():
    xs = np.linspace(0, 40, 801)
    vals = [airy_ai(x).ai for x in xs]
    assert all(v > 0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("x", [-9.0, -8.5, -8.0, -7.5])
def test_airy_overlap_negative(x):
    ai1, aip1 = _airy_asym_neg(x)
    ai2, aip2 = _airy_taylor_march(x)
    amp = math.hypot(ai2, aip2 / math.sqrt(-x))
    assert abs(ai1 - ai2) <= 1e-11 * amp
    assert abs(aip1 - aip2) <= 1e-11 * amp * math.sqrt(-x)


@pytest.mark.parametrize("x", [7.5, 8.0, 8.5, 9.0])
def test_airy_overlap_positive(x):
    ai1, aip1 = _airy_asym_pos(x)
    ai2, aip2 = _airy_via_k(x)
    assert ai1 == pytest.approx(ai2, rel=1e-11)
    assert aip1 == pytest.approx(aip2, rel=1e-11)


def test_airy_switch_point_constant():
    assert AIRY_ASYMPTOTIC_MIN == 8.0


@pytest.mark.parametrize("x", [-40.01, 40.5, -100.0])
def test_airy_domain(x):
    with pytest.raises(DomainError):
        airy_ai(x)


# ---------------------------------------------------------------- Bessel J


def test_bessel_half_closed_form():
    j = bessel_j(0.5, math.pi / 2).j
    assert j == pytest.approx(2 / math.pi, rel=1e-14)
    assert j == pytest.approx(0.6366198, abs=1e-7)


def test_bessel_half_at_one():
    b = bessel_j(0.5, 1.0)
    j_exact = math.sqrt(2 / math.pi) * math.sin(1.0)
    jp_exact = math.sqrt(2 / math.pi) * (math.cos(1.0) - 0.5 * math.sin(1.0))
    assert b.j == pytest.approx(j_exact, rel=1e-14)
    assert b.j_prime == pytest.approx(jp_exact, rel=1e-13)
    assert b.j == pytest.approx(0.6714, abs=1e-4)
    assert b.j_prime == pytest.approx(0.0954, abs=1e-4)


@pytest.mark.parametrize("alpha, x, j, jp", J_REF)
def test_bessel_reference(alpha, x, j, jp):
    b = bessel_j(alpha, x)
    assert abs(b.j - j) <= 1e-12
    assert abs(b.j_prime - jp) <= 1e-12


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0, 8.5])
def test_bessel_vanishes_at_origin(alpha):
    assert abs(bessel_j(alpha, 1e-8).j) < 1e-8 ** alpha


@pytest.mark.parametrize("alpha", [0.5, 1.5, 2.5])
def test_bessel_three_term_recurrence(alpha):
    for x in np.linspace(0.5, 40, 160):
        res = bessel_j_value(alpha - 1, x) + bessel_j_value(alpha + 1, x) - 2 * alpha / x * bessel_j_value(alpha, x)
        assert abs(res) <= 1e-10


@pytest.mark.parametrize("alpha", [0.5, 1.3, 4.0, 9.7])
def test_bessel_derivative_identity(alpha):
    for x in np.linspace(0.1, 50, 120):
        b = bessel_j(alpha, x)
        res = b.j_prime - (bessel_j_value(alpha - 1, x) - alpha / x * b.j)
        assert abs(res) <= 1e-10


@pytest.mark.parametrize("alpha", [0.5, 2.0, 6.5])
@pytest.mark.parametrize("x", [8.0, 10.0, 12.0])
def test_bessel_series_matches_recurrence_branch(alpha, x):
    assert _j_series(alpha, x) == pytest.approx(_j_miller(alpha, x, 1)[0], abs=1e-11)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
@pytest.mark.parametrize("x", [30.0, 45.0, 80.0])
def test_bessel_asymptotic_matches_recurrence_branch(alpha, x):
    assert _j_hankel(alpha, x) == pytest.approx(_j_miller(alpha, x, 1)[0], abs=1e-11)


@pytest.mark.parametrize("alpha, x", [(0.5, 0.0), (0.5, -1.0), (0.0, 1.0), (10.5, 1.0), (1.0, 100.5)])
def test_bessel_domain(alpha, x):
    with pytest.raises(DomainError):
        bessel_j(alpha, x)


# ---------------------------------------------------------------- Bessel K


def test_bessel_k_half():
    expected = math.sqrt(math.pi / 2) * math.exp(-1)
    assert bessel_k(0.5, 1.0) == pytest.approx(expected, rel=1e-13)
    assert bessel_k(0.5, 1.0) == pytest.approx(0.4610685, abs=1e-7)


def test_bessel_k_three_halves():
    expected = math.sqrt(math.pi / 4) * math.exp(-2) * 1.5
    assert bessel_k(1.5, 2.0) == pytest.approx(expected, rel=1e-13)
    assert bessel_k(1.5, 2.0) == pytest.approx(0.1799, abs=1e-4)


@pytest.mark.parametrize("nu", [0.3, 2.0, 17.25])
def test_bessel_k_even_in_order(nu):
    assert bessel_k(-nu, 1.7) == bessel_k(nu, 1.7)


@pytest.mark.parametrize("nu, x, expected", K_REF)
def test_bessel_k_reference(nu, x, expected):
    assert bessel_k(nu, x) == pytest.approx(expected, rel=1e-12)


def test_bessel_k_log_convex():
    xs = np.linspace(0.5, 20, 391)
    for nu in [0.0, 0.5, 3.0, 12.0]:
        lk = np.array([log_bessel_k(nu, x) for x in xs])
        assert np.min(lk[2:] - 2 * lk[1:-1] + lk[:-2]) >= -1e-8


def test_log_bessel_k_beyond_overflow():
    # K_131(1e-4) is far beyond double range; its logarithm is not
    lk = log_bessel_k(131.0, 1e-4)
    assert lk > 709
    assert math.isfinite(lk)


@pytest.mark.parametrize("x", [0.0, -2.0])
def test_bessel_k_domain(x):
    with pytest.raises(DomainError):
        bessel_k(1.0, x)


# ---------------------------------------------------------------- quadrature


def test_gauss_one_point():
    g = gauss_legendre(1)
    assert list(g.nodes) == [0.0]
    assert list(g.weights) == [2.0]


def test_gauss_two_point():
    g = gauss_legendre(2)
    assert np.allclose(g.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    assert np.allclose(g.weights, [1.0, 1.0], atol=1e-15)


def test_gauss_three_point_x4():
    assert gauss_legendre(3).integrate(lambda x: x**4) == pytest.approx(0.4, abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7, 16, 33, 64, 128, 257, 512])
def test_gauss_structure(n):
    g = gauss_legendre(n)
    assert abs(g.weights.sum() - 2) <= 1e-13
    assert np.all(np.diff(g.nodes) > 0)
    assert np.all(g.weights > 0)
    assert np.max(np.abs(g.nodes + g.nodes[::-1])) <= 1e-13
    assert np.all(np.abs(g.nodes) < 1)


@pytest.mark.parametrize("n", [1, 2, 5, 10, 20, 40])
def test_gauss_exact_degree(n):
    g = gauss_legendre(n)
    for d in range(2 * n):
        exact = 0.0 if d % 2 else 2.0 / (d + 1)
        assert abs(g.integrate(lambda x: x**d) - exact) <= 1e-13 * (abs(exact) + 1)


def test_gauss_rule_is_immutable():
    g = gauss_legendre(5)
    with pytest.raises(ValueError):
        g.nodes[0] = 0.0


@pytest.mark.parametrize("n", [0, 513])
def test_gauss_domain(n):
    with pytest.raises(DomainError):
        gauss_legendre(n)
