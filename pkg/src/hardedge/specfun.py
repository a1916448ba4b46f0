"""
Real-argument special functions and Gauss-Legendre quadrature.

Everything here is implemented from scratch in double precision:

- ``gamma_fn``      Lanczos approximation with reflection
- ``airy_ai``       Ai and Ai' on [-40, 40]
- ``bessel_j``      J_alpha and J'_alpha for x in (0, 100]
- ``bessel_k``      K_nu via a trapezoid rule on the cosh integral
- ``gauss_legendre`` nodes/weights by Newton on the Legendre recurrence
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, SeriesOverflowError, SingularityError

SERIES_TERM_CAP = 600

# Branch switch points (see README for the accuracy discussion)
AIRY_MACLAURIN_MAX = 1.5
AIRY_ASYMPTOTIC_MIN = 8.0
AIRY_TAYLOR_STEP = 0.5
BESSEL_SERIES_MAX = 12.0


@dataclass(frozen=True)
class AiryPair:
    ai: float
    ai_prime: float


@dataclass(frozen=True)
class BesselJPair:
    j: float
    j_prime: float


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [-1, 1]; arrays are read-only."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f, a=-1.0, b=1.0):
        """Apply the rule to a vectorised callable on [a, b]."""
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        return half * float(np.dot(self.weights, f(mid + half * self.nodes)))

    def scaled(self, a, b):
        """Return (nodes, weights) mapped to [a, b]."""
        half = 0.5 * (b - a)
        return 0.5 * (b + a) + half * self.nodes, half * self.weights


# ---------------------------------------------------------------------------
# Gamma

_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x):
    """Gamma function for real x (reflection formula for x < 1/2)."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise SingularityError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    # small positive integers are exact
    if x == math.floor(x) and x <= 171:
        return float(math.factorial(int(x) - 1))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, _LANCZOS_G + 2):
        acc += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    if x > 140:
        # split the power to avoid overflow before the exponential damps it
        p = t ** (0.5 * (z + 0.5))
        return math.sqrt(2 * math.pi) * p * (p * math.exp(-t)) * acc
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def log_gamma(x):
    """log Gamma(x) for x > 0."""
    if x <= 0:
        raise DomainError("log_gamma needs x > 0")
    if x < 100:
        return math.log(gamma_fn(x))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, _LANCZOS_G + 2):
        acc += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(acc)


# ---------------------------------------------------------------------------
# Airy

_AI0 = 3.0 ** (-2.0 / 3.0) / gamma_fn(2.0 / 3.0)
_AIP0 = -(3.0 ** (-1.0 / 3.0)) / gamma_fn(1.0 / 3.0)


def _airy_taylor(x0, y0, yp0, h):
    """Advance a solution of y'' = x y from x0 to x0 + h by its Taylor series."""
    # coefficients about x0 obey c[k] = (x0 c[k-2] + c[k-3]) / (k (k-1))
    c = [y0, yp0]
    val = y0 + yp0 * h
    der = yp0
    hp = h  # h**(k-1)
    scale = abs(y0) + abs(yp0)
    quiet = 0
    for k in range(2, SERIES_TERM_CAP):
        ck = (x0 * c[k - 2] + (c[k - 3] if k >= 3 else 0.0)) / (k * (k - 1))
        c.append(ck)
        dterm = k * ck * hp
        hp *= h
        term = ck * hp
        val += term
        der += dterm
        # three consecutive negligible terms: the recurrence cannot revive them
        quiet = quiet + 1 if abs(term) + abs(dterm) < 1e-17 * scale else 0
        if quiet >= 3:
            return val, der
    raise SeriesOverflowError("Airy Taylor step did not converge")


def _airy_uv(kmax):
    u = [1.0]
    for k in range(1, kmax + 1):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, kmax + 1)]
    return u, v


_AIRY_U, _AIRY_V = _airy_uv(40)


def _airy_asym_pos(x):
    zeta = 2.0 / 3.0 * x ** 1.5
    su = sv = 0.0
    last = math.inf
    for k in range(len(_AIRY_U)):
        tu = (-1) ** k * _AIRY_U[k] / zeta ** k
        if abs(tu) > last:
            break
        su += tu
        sv += (-1) ** k * _AIRY_V[k] / zeta ** k
        last = abs(tu)
        if last < 1e-17:
            break
    pref = math.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    return pref * su / x ** 0.25, -pref * sv * x ** 0.25


def _airy_asym_neg(x):
    z = -x
    zeta = 2.0 / 3.0 * z ** 1.5
    ue = uo = ve = vo = 0.0
    last = math.inf
    for k in range(len(_AIRY_U)):
        t = _AIRY_U[k] / zeta ** k
        if t > last:
            break
        sign = (-1) ** (k // 2)
        if k % 2 == 0:
            ue += sign * t
            ve += sign * _AIRY_V[k] / zeta ** k
        else:
            uo += sign * t
            vo += sign * _AIRY_V[k] / zeta ** k
        last = t
        if t < 1e-17:
            break
    th = zeta - math.pi / 4
    c, s = math.cos(th), math.sin(th)
    rp = 1.0 / math.sqrt(math.pi)
    ai = rp / z ** 0.25 * (c * ue + s * uo)
    aip = rp * z ** 0.25 * (s * ve - c * vo)
    return ai, aip


def _airy_maclaurin(x):
    return _airy_taylor(0.0, _AI0, _AIP0, x)


def _airy_via_k(x):
    zeta = 2.0 / 3.0 * x ** 1.5
    ai = math.sqrt(x / 3.0) / math.pi * bessel_k(1.0 / 3.0, zeta)
    aip = -x / (math.pi * math.sqrt(3.0)) * bessel_k(2.0 / 3.0, zeta)
    return ai, aip


def _airy_taylor_march(x):
    nstep = max(1, math.ceil(abs(x) / AIRY_TAYLOR_STEP))
    h = x / nstep
    y, yp = _AI0, _AIP0
    for i in range(nstep):
        y, yp = _airy_taylor(i * h, y, yp, h)
    return y, yp


def airy_ai(x):
    """Ai(x) and Ai'(x) for real x in [-40, 40]."""
    x = float(x)
    if not (-40.0 <= x <= 40.0):
        raise DomainError(f"airy_ai: x={x} outside [-40, 40]")
    if x <= -AIRY_ASYMPTOTIC_MIN:
        ai, aip = _airy_asym_neg(x)
    elif x < 0:
        ai, aip = _airy_taylor_march(x)
    elif x <= AIRY_MACLAURIN_MAX:
        ai, aip = _airy_maclaurin(x)
    elif x < AIRY_ASYMPTOTIC_MIN:
        ai, aip = _airy_via_k(x)
    else:
        ai, aip = _airy_asym_pos(x)
    return AiryPair(ai, aip)


# ---------------------------------------------------------------------------
# Bessel J


def _j_series(nu, x):
    """Ascending series for J_nu(x), nu > -1."""
    q = -0.25 * x * x
    term = (0.5 * x) ** nu / gamma_fn(nu + 1.0)
    total = term
    for k in range(1, SERIES_TERM_CAP):
        term *= q / (k * (k + nu))
        total += term
        # past the peak the terms alternate and shrink, so the next term bounds the tail
        if k * (k + nu) > abs(q) and abs(term) <= 1e-17 * abs(total):
            return total
    raise SeriesOverflowError(f"J series for nu={nu}, x={x} exceeded {SERIES_TERM_CAP} terms")


def _j_hankel(nu, x):
    """Large-argument expansion; returns None if it cannot reach full accuracy."""
    mu = 4.0 * nu * nu
    p = q = 0.0
    a = 1.0
    last = math.inf
    k = 0
    while True:
        t = a / x ** k
        if abs(t) > last:
            return None  # asymptotic terms started growing before full accuracy
        if k % 4 == 0:
            p += t
        elif k % 4 == 1:
            q += t
        elif k % 4 == 2:
            p -= t
        else:
            q -= t
        last = abs(t)
        if last < 1e-17 * (abs(p) + abs(q)):
            break
        k += 1
        a *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
        if a == 0.0:
            break
        if k > 200:
            return None
    w = x - 0.5 * nu * math.pi - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(w) - q * math.sin(w))


def _j_miller(nu, x, count=2):
    """Backward recurrence for J_nu, J_{nu+1}, ... (count values), nu > -1."""
    base = math.floor(nu)
    nu0 = nu - base  # in [0, 1)
    top = int(max(x, nu + count) + 30 + 12 * x ** (1.0 / 3.0))
    top += top % 2
    f = np.zeros(top + 2)
    f[top] = 1e-300 ** 0.5
    for m in range(top, 0, -1):
        f[m - 1] = 2.0 * (nu0 + m) / x * f[m] - f[m + 1]
        if abs(f[m - 1]) > 1e200:
            f *= 1e-200
    # normalisation: (x/2)^nu0 = sum_k (nu0 + 2k) Gamma(nu0 + k)/k! J_{nu0+2k}
    g = gamma_fn(nu0 + 1.0)  # Gamma(nu0 + k)/k! times (nu0 + 2k) at k = 0 equals Gamma(nu0 + 1)
    norm = g * f[0]
    ratio = gamma_fn(nu0 + 1.0)  # Gamma(nu0 + k)/k! at k = 1
    for k in range(1, top // 2 + 1):
        if k > 1:
            ratio *= (nu0 + k - 1) / k
        norm += (nu0 + 2 * k) * ratio * f[2 * k]
    scale = (0.5 * x) ** nu0 / norm
    vals = f * scale
    out = []
    for j in range(count):
        order = base + j
        if order >= 0:
            out.append(vals[order])
        else:
            # one step below nu0: J_{nu0-1} = (2 nu0/x) J_{nu0} - J_{nu0+1}
            out.append(2.0 * nu0 / x * vals[0] - vals[1])
    return out


def bessel_j_value(nu, x):
    """J_nu(x) for real nu > -1 and x > 0 (branch-selecting worker)."""
    if x <= 0:
        raise DomainError("bessel_j needs x > 0")
    if nu <= -1:
        raise DomainError("bessel_j_value needs nu > -1")
    if x <= BESSEL_SERIES_MAX:
        return _j_series(nu, x)
    val = _j_hankel(nu, x)
    if val is not None:
        return val
    return _j_miller(nu, x, 1)[0]


def bessel_j(alpha, x):
    """J_alpha(x) and its x-derivative for alpha in (0, 10], x in (0, 100]."""
    alpha = float(alpha)
    x = float(x)
    if x <= 0 or x > 100:
        raise DomainError(f"bessel_j: x={x} outside (0, 100]")
    if not (0 < alpha <= 10):
        raise DomainError(f"bessel_j: alpha={alpha} outside (0, 10]")
    j = bessel_j_value(alpha, x)
    j1 = bessel_j_value(alpha + 1.0, x)
    return BesselJPair(j, alpha / x * j - j1)


# ---------------------------------------------------------------------------
# Bessel K


def log_bessel_k(nu, x):
    """log K_nu(x) from K_nu(x) = 1/2 int exp(-x cosh t + nu t) dt over the real line."""
    x = float(x)
    if x <= 0:
        raise DomainError("bessel_k needs x > 0")
    nu = abs(float(nu))
    tstar = math.asinh(nu / x)
    phistar = -x * math.cosh(tstar) + nu * tstar

    def phi(t):
        return -x * np.cosh(t) + nu * t

    width = 1.0 / math.sqrt(x * math.cosh(tstar))
    # bracket the region where the integrand exceeds e^-45 of its peak
    lo = tstar
    step = width
    while phi(lo) - phistar > -45.0:
        lo -= step
        step *= 1.5
    hi = tstar
    step = width
    while phi(hi) - phistar > -45.0:
        hi += step
        step *= 1.5
    h = min(0.5, width)
    prev = None
    for _ in range(30):
        t = tstar + h * np.arange(-math.ceil((tstar - lo) / h), math.ceil((hi - tstar) / h) + 1)
        val = float(np.sum(np.exp(phi(t) - phistar))) * h
        if prev is not None and abs(val - prev) <= 1e-15 * val:
            return phistar + math.log(0.5 * val)
        prev = val
        h *= 0.5
    raise SeriesOverflowError("bessel_k trapezoid rule failed to converge")


def bessel_k(nu, x):
    """Modified Bessel function K_nu(x) for x > 0 (even in nu)."""
    lk = log_bessel_k(nu, x)
    if lk > 709.0:
        raise SeriesOverflowError(f"K_{nu}({x}) overflows double precision")
    return math.exp(lk)


# ---------------------------------------------------------------------------
# Gauss-Legendre


def _legendre_and_derivative(n, x):
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """n-point Gauss-Legendre rule on [-1, 1], 1 <= n <= 512."""
    n = int(n)
    if not (1 <= n <= 512):
        raise DomainError("gauss_legendre needs 1 <= n <= 512")
    if n == 1:
        nodes, weights = np.array([0.0]), np.array([2.0])
    else:
        m = (n + 1) // 2
        i = np.arange(1, m + 1)
        x = np.cos(math.pi * (i - 0.25) / (n + 0.5))
        for _ in range(100):
            p, dp = _legendre_and_derivative(n, x)
            dx = p / dp
            x = x - dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        p, dp = _legendre_and_derivative(n, x)
        w = 2.0 / ((1.0 - x * x) * dp * dp)
        if n % 2 == 1:
            x[-1] = 0.0
        nodes = np.concatenate([-x, x[::-1][n % 2:]])
        weights = np.concatenate([w, w[::-1][n % 2:]])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)
