"""
The pole-free solution r(s) of the third-order equation

    2 s^2 r' r''' - s^2 r''^2 + 2 s r' r'' - 4 s r'^3 + (2 r - 1/4) r'^2 + 1 = 0,

with r(0) = (1 - 4 alpha^2)/8 and r'(0) = 1/alpha, together with the derived
quantities

    q  = -s r' + r/2 + r^2/2
    q' = -s r'' - r'/2 + r r'
    t' = (1 - q'^2) / r'           (so that q'^2 + r' t' = 1)
    t  = t(0) + int_0^s t'

and the equivalent Painleve III function v = s r'.

Near s = 0 the two initial values leave a one-parameter family of solutions

    r(s) = r0 + r1 s + r2 s^2 + ... + c s^(1+alpha) + ...

and for every member but one the trajectory either reaches a pole or turns
back (r' -> 0).  The member that stays regular on (0, inf) grows like
(3/2) s^(2/3) - alpha s^(1/3) and is a separatrix: the linearisation at large
s has modes exp(+-3 sqrt(3) s^(1/3)), so plain forward integration loses it
after s ~ 300 in double precision.  We therefore solve a boundary-value
problem by multiple shooting: the free constant c is fixed by matching the
large-s asymptotic series of v at a far right endpoint.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import DomainError, InvariantError, SingularityError, StepSizeError
from .ode import Trajectory, dopri45
from .specfun import gauss_legendre

S0_DEFAULT = 1e-4
SERIES_MAX_EXPONENT = 7.0
NODE_SPACING = 0.5  # spacing of shooting nodes in s^(1/3)
SMALL_S_DECADE = 0.25  # log10 spacing of shooting nodes below s = 1
COEFF_SINGULAR = 1e-8


@dataclass(frozen=True)
class PainleveParams:
    alpha: float
    l: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if self.l != 0.0:
            raise DomainError("only the integration constant l = 0 is supported")


def _as_params(params):
    if isinstance(params, PainleveParams):
        return params
    return PainleveParams(float(params))


def initial_values(alpha):
    """Closed-form (q(0), r(0), t(0)) of the pole-free solution."""
    a2 = 4.0 * alpha * alpha
    q0 = (a2 - 1) * (a2 - 9) / 128.0
    r0 = (1 - a2) / 8.0
    t0 = (a2 - 1) * (a2 - 9) * (a2 - 13) / 1536.0
    return q0, r0, t0


# ---------------------------------------------------------------------------
# Series at s = 0


def _check_divisor(alpha, e):
    # order-s^(e+1) balance divides by 2 r1 e ((e-1)^2 - alpha^2)
    d = (e - 1.0) ** 2 - alpha * alpha
    if abs(d) < COEFF_SINGULAR:
        raise SingularityError(
            f"series coefficient of s^{e:g} is singular for alpha={alpha} (resonant exponent)"
        )
    return d


def taylor_coefficients(alpha):
    """(r0, r1, r2, r3) of the regular part of r(s) at s = 0."""
    r0 = (1 - 4 * alpha * alpha) / 8.0
    r1 = 1.0 / alpha
    _check_divisor(alpha, 2.0)
    _check_divisor(alpha, 3.0)
    r2 = r1 * r1 / (2.0 * (1.0 - alpha * alpha))
    r3 = 1.0 / (alpha ** 3 * (alpha * alpha - 1.0) * (alpha * alpha - 4.0))
    return r0, r1, r2, r3


def taylor_start(params, s0):
    """(r, r', r'') of the cubic Taylor polynomial at s0 (no s^(1+alpha) term)."""
    p = _as_params(params)
    if not (0 < s0 <= 1e-3):
        raise DomainError("taylor_start needs 0 < s0 <= 1e-3")
    r0, r1, r2, r3 = taylor_coefficients(p.alpha)
    r = r0 + s0 * (r1 + s0 * (r2 + s0 * r3))
    rp = r1 + s0 * (2 * r2 + 3 * r3 * s0)
    rpp = 2 * r2 + 6 * r3 * s0
    return r, rp, rpp


class _Series:
    """Truncated series in the exponents j + k(1 + alpha), keyed by (j, k)."""

    def __init__(self, beta, emax):
        self.beta = beta
        self.emax = emax

    def exp(self, key):
        return key[0] + key[1] * self.beta

    def mul(self, a, b):
        out = {}
        for ka, va in a.items():
            ea = self.exp(ka)
            for kb, vb in b.items():
                if ea + self.exp(kb) > self.emax + 1e-9:
                    continue
                key = (ka[0] + kb[0], ka[1] + kb[1])
                out[key] = out.get(key, 0.0) + va * vb
        return out

    def theta(self, a, k):
        """Apply s^k (d/ds)^k, i.e. the falling factorial of the exponent."""
        out = {}
        for key, v in a.items():
            e = self.exp(key)
            f = 1.0
            for i in range(k):
                f *= e - i
            if f != 0.0:
                out[key] = v * f
        return out

    @staticmethod
    def add(*terms):
        out = {}
        for scale, a in terms:
            for key, v in a.items():
                out[key] = out.get(key, 0.0) + scale * v
        return out


class LocalSeries:
    """
    Generalised power series of r(s) at s = 0 for a given constant c.

    Coefficients are computed once for c = 1; the coefficient of
    s^(j + k(1+alpha)) is homogeneous of degree k in c.
    """

    def __init__(self, alpha, emax=SERIES_MAX_EXPONENT):
        self.alpha = alpha
        beta = 1.0 + alpha
        ser = _Series(beta, emax + 1.0)
        keys = sorted(
            ((j, k) for k in range(int(emax / beta) + 1) for j in range(int(emax) + 1)
             if j + k * beta <= emax + 1e-9),
            key=lambda jk: jk[0] + jk[1] * beta,
        )
        r0, r1 = (1 - 4 * alpha * alpha) / 8.0, 1.0 / alpha
        coef = {(0, 0): r0, (1, 0): r1, (0, 1): 1.0}
        for key in keys:
            if key in coef:
                continue
            e = ser.exp(key)
            d = _check_divisor(alpha, e)
            coef[key] = 0.0
            res = self._residual(ser, coef)
            target = (key[0] + 1, key[1])
            coef[key] = -res.get(target, 0.0) / (2.0 * r1 * e * d)
        self.keys = sorted(coef, key=lambda jk: jk[0] + jk[1] * beta)
        self.exps = np.array([ser.exp(k) for k in self.keys])
        self.kpow = np.array([k[1] for k in self.keys])
        self.coef = np.array([coef[k] for k in self.keys])
        self._ser = ser
        self._dict = coef

    @staticmethod
    def _residual(ser, a):
        # s^2 times the third-order equation written with theta-derivatives
        p1, p2, p3 = ser.theta(a, 1), ser.theta(a, 2), ser.theta(a, 3)
        p1sq = ser.mul(p1, p1)
        return ser.add(
            (2.0, ser.mul(p1, p3)),
            (-1.0, ser.mul(p2, p2)),
            (2.0, ser.mul(p1, p2)),
            (-4.0, ser.mul(p1sq, p1)),
            (2.0, ser.mul(a, p1sq)),
            (-0.25, p1sq),
            (1.0, {(2, 0): 1.0}),
        )

    def residual_max(self, c):
        """Largest coefficient of the truncated residual below the truncation order."""
        a = {k: v * c ** k[1] for k, v in self._dict.items()}
        res = self._residual(self._ser, a)
        emax = self._ser.emax - 1.0
        return max(abs(v) for k, v in res.items() if self._ser.exp(k) <= emax + 1e-9)

    def theta_values(self, s, c):
        """(r, s r', s^2 r'', s^3 r''') at s > 0."""
        a = self.coef * c ** self.kpow
        pw = a * s ** self.exps
        e = self.exps
        return (
            float(np.sum(pw)),
            float(np.sum(pw * e)),
            float(np.sum(pw * e * (e - 1))),
            float(np.sum(pw * e * (e - 1) * (e - 2))),
        )

    def state(self, s, c):
        """(r, r', r'') at s > 0."""
        r, p1, p2, _ = self.theta_values(s, c)
        return np.array([r, p1 / s, p2 / (s * s)])

    def dstate_dc(self, s, c):
        """Derivative of (r, r', r'') with respect to c."""
        k = self.kpow
        mask = k > 0
        a = np.where(mask, self.coef * k * c ** np.where(mask, k - 1, 0), 0.0)
        pw = a * s ** self.exps
        e = self.exps
        return np.array([np.sum(pw), np.sum(pw * e) / s, np.sum(pw * e * (e - 1)) / (s * s)])

    def q_qprime(self, s, c):
        """(q, q', r') at 0 < s, evaluated without forming r'' (which may blow up)."""
        r, p1, p2, _ = self.theta_values(s, c)
        rp = p1 / s
        q = -p1 + 0.5 * r + 0.5 * r * r
        qp = -p2 / s - 0.5 * rp + r * rp
        return q, qp, rp


# ---------------------------------------------------------------------------
# Large-s asymptotic series of v = s r'


@lru_cache(maxsize=32)
def asymptotic_v_coefficients(alpha, count=80):
    """
    Coefficients a_k of v(s) ~ sum_k a_k s^((2-k)/3) as s -> +inf.

    Substituting into s^2 v v'' = s^2 v'^2 - s v v' + v^3 + alpha s v - s^2
    and balancing powers of s^(1/3) gives a_0 = 1, a_1 = -alpha/3 and an
    explicit recursion for the rest.  The series is divergent (Gevrey type).
    """
    a = [1.0]
    m = lambda k: (2.0 - k) / 3.0  # noqa: E731
    for n in range(1, count):
        # quadratic part: v theta^2 v - (theta v)^2, pairs with i + j = n - 2
        quad = 0.0
        for i in range(0, n - 1):
            j = n - 2 - i
            quad += a[i] * a[j] * (m(j) ** 2 - m(i) * m(j))
        cubic = 0.0
        for i in range(0, n + 1):
            for j in range(0, n + 1 - i):
                l = n - i - j
                if l == n or j == n or i == n:
                    continue
                cubic += a[i] * a[j] * a[l]
        a.append((quad - cubic - alpha * a[n - 1]) / 3.0)
    return tuple(a)


def asymptotic_v(alpha, s):
    """
    Optimally truncated large-s series: returns (v, s v', s^2 v'', error_estimate).
    """
    a = asymptotic_v_coefficients(float(alpha))
    x = s ** (1.0 / 3.0)
    terms = np.array([a[k] * x ** (2.0 - k) for k in range(len(a))])
    mags = np.abs(terms)
    # truncate just before the smallest term beyond the first few
    nz = [k for k in range(4, len(a)) if mags[k] > 0]
    kstop = min(nz, key=lambda k: mags[k]) if nz else len(a)
    ms = np.array([(2.0 - k) / 3.0 for k in range(kstop)])
    t = terms[:kstop]
    v = float(np.sum(t))
    tv = float(np.sum(t * ms))
    t2v = float(np.sum(t * ms * ms))
    err = float(mags[kstop]) if kstop < len(a) else 0.0
    return v, tv, t2v - tv, err


def r_from_v(alpha, s, v, vp):
    """Recover (r, r', r'') algebraically from v = s r' and v'."""
    rp = v / s
    rpp = (s * vp - v) / (s * s)
    r = 0.125 - s * s * rpp * rpp / (2 * rp * rp) + s * rp - alpha / rp + 1.0 / (2 * rp * rp)
    return np.array([r, rp, rpp])


def asymptotic_state(alpha, s):
    """(r, r', r'') from the large-s series, plus an error estimate for v."""
    v, sv1, _, err = asymptotic_v(alpha, s)
    return r_from_v(alpha, s, v, sv1 / s), err


# ---------------------------------------------------------------------------
# Right-hand sides


def _r_rhs(s, y):
    r, p, q = y[0], y[1], y[2]
    num = s * s * q * q - 2 * s * p * q + 4 * s * p ** 3 - (2 * r - 0.25) * p * p - 1.0
    return num / (2 * s * s * p)


def _r_jac(s, y):
    r, p, q = y[0], y[1], y[2]
    f = _r_rhs(s, y)
    den = 2 * s * s * p
    dn_dp = -2 * s * q + 12 * s * p * p - 2 * (2 * r - 0.25) * p
    return np.array([
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [-p / (s * s), dn_dp / den - f / p, (s * q - p) / (s * p)],
    ])


def _r_system(s, y):
    return np.array([y[1], y[2], _r_rhs(s, y)])


def _r_system_t(s, y):
    # (r, r', r'', t) with t' = (1 - q'^2)/r'
    r, rp, rpp = y[0], y[1], y[2]
    qp = -s * rpp - 0.5 * rp + r * rp
    return np.array([rp, rpp, _r_rhs(s, y), (1 - qp * qp) / rp])


def _make_piii(alpha):
    def rhs(s, y):
        v, w = y[0], y[1]
        return np.array([w, w * w / v - w / s + v * v / (s * s) + alpha / s - 1.0 / v])

    def jac(s, y):
        v, w = y[0], y[1]
        return np.array([
            [0.0, 1.0],
            [-w * w / (v * v) + 2 * v / (s * s) + 1.0 / (v * v), 2 * w / v - 1.0 / s],
        ])

    return rhs, jac


def _variational(rhs_vec, jac, n):
    def f(s, z):
        y = z[:n]
        phi = z[n:].reshape(n, -1)
        return np.concatenate([rhs_vec(s, y), (jac(s, y) @ phi).ravel()])

    return f


# ---------------------------------------------------------------------------
# Boundary-value solve


def _right_endpoint(s_max):
    x = max(s_max ** (1.0 / 3.0) + 2.5, 7.5)
    return x ** 3


def _shooting_nodes(s0, s_right):
    xr = s_right ** (1.0 / 3.0)
    m = max(2, int(math.ceil((xr - 1.0) / NODE_SPACING)))
    xs = np.linspace(1.0, xr, m + 1)
    # geometric nodes on [s0, 1]: the s^(1+alpha) mode grows like s^alpha
    # relative to the solution, so long segments near 0 amplify local errors
    k = max(1, int(math.ceil(-math.log10(s0) / SMALL_S_DECADE)))
    small = np.logspace(math.log10(s0), 0.0, k + 1)[:-1]
    return np.concatenate([small, xs ** 3])


@dataclass
class _BVP:
    n: int
    rhs: object
    jac: object
    left: object  # c -> (state, dstate/dc)
    bc: object  # state -> (g, dg/dstate)
    bad: object  # state -> bool (left the physical branch)


def _classify(bvp, alpha, c, s0, s_end, tol, to_v):
    """Forward-integrate from the left series and report 'high' or 'low'."""
    y0, _ = bvp.left(c)

    def stop(s, y):
        v = to_v(s, y)
        if not math.isfinite(v) or v <= 0:
            return "low"
        if v > 10 * s ** (2.0 / 3.0) + 10:
            return "high"
        return None

    try:
        tr = dopri45(bvp.rhs, s0, y0, s_end, rtol=tol, atol=tol, stop=stop)
    except (StepSizeError, ZeroDivisionError, FloatingPointError):
        return "high", None
    if tr.status != "done":
        return tr.status, tr
    v_end = to_v(tr.ts[-1], tr.ys[-1])
    v_as = asymptotic_v(alpha, tr.ts[-1])[0]
    return ("high" if v_end > v_as else "low"), tr


def _bisect_c(bvp, alpha, s0, tol, to_v, s_end=150.0):
    lo = hi = None
    c = 0.0
    label, _ = _classify(bvp, alpha, c, s0, s_end, tol, to_v)
    step = 1.0
    if label == "high":
        hi = c
        while lo is None:
            c -= step
            step *= 2
            lab, _ = _classify(bvp, alpha, c, s0, s_end, tol, to_v)
            if lab == "high":
                hi = c
            else:
                lo = c
            if step > 1e8:
                raise InvariantError("could not bracket the pole-free solution")
    else:
        lo = c
        while hi is None:
            c += step
            step *= 2
            lab, _ = _classify(bvp, alpha, c, s0, s_end, tol, to_v)
            if lab == "high":
                hi = c
            else:
                lo = c
            if step > 1e8:
                raise InvariantError("could not bracket the pole-free solution")
    best = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        lab, tr = _classify(bvp, alpha, mid, s0, s_end, tol, to_v)
        if tr is not None:
            best = tr
        if lab == "high":
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), best


def _solve_bvp(bvp, nodes, c, guesses, tol, max_iter=40):
    """Newton iteration for multiple shooting; returns (c, node states)."""
    n = bvp.n
    m = len(nodes) - 1
    states = [np.array(g, dtype=float) for g in guesses]  # states at nodes[1..m-1]
    fvar = _variational(bvp.rhs, bvp.jac, n)
    eye = np.eye(n)
    size = 1 + n * (m - 1)
    last_norm = math.inf
    for it in range(max_iter):
        F = np.zeros(size)
        J = np.zeros((size, size))
        y0, dy0 = bvp.left(c)
        try:
            for i in range(m):
                start = y0 if i == 0 else states[i - 1]
                z0 = np.concatenate([start, eye.ravel()])
                tr = dopri45(fvar, nodes[i], z0, nodes[i + 1], rtol=tol, atol=tol)
                end = tr.ys[-1]
                phi, Phi = end[:n], end[n:].reshape(n, n)
                if i < m - 1:
                    rows = slice(n * i, n * i + n)
                    F[rows] = phi - states[i]
                    J[rows, 1 + n * i: 1 + n * i + n] = -eye
                    if i == 0:
                        J[rows, 0] = Phi @ dy0
                    else:
                        J[rows, 1 + n * (i - 1): 1 + n * i] = Phi
                else:
                    g, gy = bvp.bc(phi)
                    F[-1] = g
                    if i == 0:
                        J[-1, 0] = gy @ Phi @ dy0
                    else:
                        J[-1, 1 + n * (i - 1): 1 + n * i] = gy @ Phi
        except (StepSizeError, FloatingPointError, ZeroDivisionError) as exc:
            raise InvariantError(f"multiple shooting diverged: {exc}") from exc
        delta = np.linalg.solve(J, -F)
        # c is measured by its effect on the left state: for large alpha the
        # s^(1+alpha) term is invisible at s0 and c itself is only weakly fixed
        c_effect = abs(delta[0]) * float(np.max(np.abs(dy0) / (1.0 + np.abs(y0))))
        scale = np.concatenate([1.0 + np.abs(s) for s in states])
        norm = max(c_effect, float(np.max(np.abs(delta[1:]) / scale)))
        # damped update if a full step leaves the physical branch
        lam = 1.0
        while True:
            c_new = c + lam * delta[0]
            new_states = [states[i] + lam * delta[1 + n * i: 1 + n * i + n] for i in range(m - 1)]
            if not any(bvp.bad(s) for s in new_states) or lam < 1e-3:
                break
            lam *= 0.5
        c, states = c_new, new_states
        if norm < 1e-13 or (norm < 1e-9 and norm > 0.5 * last_norm):
            return _polish(bvp, nodes, c, states, J, tol)
        last_norm = norm
    raise InvariantError("multiple shooting did not converge")


def _polish(bvp, nodes, c, states, J, tol, max_iter=4):
    """
    Simplified Newton with the frozen Jacobian, using plain (non-variational)
    segment integrations.  The variational solve takes different steps, so its
    segment ends miss the next node state at the tolerance level; the plain
    integrations are the ones later replayed for the dense trajectory, and
    driving their mismatch to roundoff makes the trajectory continuous.
    """
    n = bvp.n
    m = len(nodes) - 1
    best = (math.inf, c, states)
    for _ in range(max_iter):
        F = np.zeros_like(J[:, 0])
        y0 = bvp.left(c)[0]
        bc_scale = 1.0
        for i in range(m):
            start = y0 if i == 0 else states[i - 1]
            end = dopri45(bvp.rhs, nodes[i], start, nodes[i + 1], rtol=tol, atol=tol).ys[-1]
            if i < m - 1:
                F[n * i: n * i + n] = end - states[i]
            else:
                F[-1] = bvp.bc(end)[0]
                bc_scale = 1.0 + float(np.max(np.abs(end)))
        scale = np.concatenate([1.0 + np.abs(s) for s in states] + [[bc_scale]])
        size = float(np.max(np.abs(F) / scale))
        if size < best[0]:
            best = (size, c, states)
        if size < 1e-15 or size > 0.5 * best[0] and size != best[0]:
            break
        delta = np.linalg.solve(J, -F)
        c = c + delta[0]
        states = [states[i] + delta[1 + n * i: 1 + n * i + n] for i in range(m - 1)]
    return best[1], best[2]


def _guess_states(bvp, alpha, nodes, traj, to_state, n):
    """Initial node states from the forward trajectory (small s) or the asymptotic series."""
    guesses = []
    t_end = traj.ts[-1] if traj is not None else 0.0
    for s in nodes[1:-1]:
        _, err = asymptotic_state(alpha, s)
        if traj is not None and s <= 0.5 * t_end and (err > 1e-9 * s ** (2 / 3) or s < 30):
            guesses.append(traj(s)[:n])
        else:
            guesses.append(to_state(s))
    return guesses


# ---------------------------------------------------------------------------
# Solutions


@dataclass(frozen=True)
class PainleveSolution:
    params: PainleveParams
    s0: float
    s_max: float
    tol: float
    c: float
    t_at_0: float
    traj: Trajectory = field(repr=False)
    series: LocalSeries = field(repr=False)
    s_right: float = 0.0

    @property
    def alpha(self):
        return self.params.alpha


def _r_bvp(alpha, series, s0, s_right):
    def left(c):
        return series.state(s0, c), series.dstate_dc(s0, c)

    v_target = asymptotic_v(alpha, s_right)[0]

    def bc(y):
        return s_right * y[1] - v_target, np.array([0.0, s_right, 0.0])

    return _BVP(3, _r_system, _r_jac, left, bc, lambda y: not (y[1] > 0))


def _t_integral_near_zero(series, c, s0):
    # int_0^s0 t' ds with s = s0 u^2 to absorb the fractional powers
    g = gauss_legendre(30)
    u, w = g.scaled(0.0, 1.0)
    total = 0.0
    for ui, wi in zip(u, w):
        s = s0 * ui * ui
        _, qp, rp = series.q_qprime(s, c)
        total += wi * (1 - qp * qp) / rp * 2 * s0 * ui
    return total


@lru_cache(maxsize=16)
def _solve_r(alpha, s_right, tol, s0):
    series = LocalSeries(alpha)
    bvp = _r_bvp(alpha, series, s0, s_right)
    to_v = lambda s, y: s * y[1]  # noqa: E731
    c, traj = _bisect_c(bvp, alpha, s0, max(tol, 1e-12), to_v)
    nodes = _shooting_nodes(s0, s_right)
    guesses = _guess_states(bvp, alpha, nodes, traj, lambda s: asymptotic_state(alpha, s)[0], 3)
    c, states = _solve_bvp(bvp, nodes, c, guesses, tol)
    return series, c, nodes, tuple(tuple(s) for s in states)


def integrate_r(params, s_max, tol=1e-10, s0=S0_DEFAULT):
    """
    Pole-free solution r(s) on [0, s_max] with dense output.

    The trajectory is the union of the converged shooting segments,
    integrated with the Dormand-Prince 5(4) pair; t is carried along as a
    fourth state component.
    """
    p = _as_params(params)
    if not (1.0 <= s_max <= 1e5):
        raise DomainError("s_max must lie in [1, 1e5]")
    if not (1e-12 <= tol <= 1e-6):
        raise DomainError("tol must lie in [1e-12, 1e-6]")
    alpha = p.alpha
    s_right = _right_endpoint(s_max)
    series, c, nodes, states = _solve_r(alpha, s_right, tol, s0)
    t_at_0 = initial_values(alpha)[2]

    t_carry = t_at_0 + _t_integral_near_zero(series, c, s0)
    ts, ys, fs = [], [], []
    for i in range(len(nodes) - 1):
        if nodes[i] >= s_max:
            break
        y_start = series.state(s0, c) if i == 0 else np.array(states[i - 1])
        # error control on (r, r', r'') only: same steps as the shooting pass
        tr = dopri45(_r_system_t, nodes[i], np.concatenate([y_start, [t_carry]]),
                     min(nodes[i + 1], s_max), rtol=tol, atol=tol, controlled=3)
        if i > 0:
            # the joint is represented by the shooting state of the new segment
            ts[-1], ys[-1], fs[-1] = ts[-1][:-1], ys[-1][:-1], fs[-1][:-1]
        ts.append(tr.ts)
        ys.append(tr.ys)
        fs.append(tr.fs)
        t_carry = tr.ys[-1][3]
    traj = Trajectory(np.concatenate(ts), np.concatenate(ys), np.concatenate(fs))
    sol = PainleveSolution(p, s0, float(s_max), tol, c, t_at_0, traj, series, s_right)
    _check_solution(sol)
    return sol


def _check_solution(sol):
    ys = sol.traj.ys
    if np.any(ys[:, 1] <= 0):
        raise InvariantError("r' vanished: the trajectory left the pole-free branch")
    s = sol.traj.ts
    r, rp, rpp = ys[:, 0], ys[:, 1], ys[:, 2]
    qp = -s * rpp - 0.5 * rp + r * rp
    tp = sol.traj.fs[:, 3]
    if np.max(np.abs(qp * qp + rp * tp - 1)) > 1e-6:
        raise InvariantError("identity q'^2 + r' t' = 1 violated")


# ---------------------------------------------------------------------------
# Queries


def _check_range(sol, s):
    if not (0 <= s <= sol.s_max * (1 + 1e-12)):
        raise DomainError(f"s={s} outside [0, {sol.s_max}]")


def _local(sol, s):
    """State (r, r', r'', t) and its derivative at s >= s0, accurate to tol.

    Starts from the nearest stored node at or below s and takes one adaptive
    sub-integration, so values between nodes carry the integrator accuracy
    rather than the interpolation error of the Hermite dense output.
    """
    ts = sol.traj.ts
    i = int(np.searchsorted(ts, s, side="right")) - 1
    i = min(max(i, 0), len(ts) - 1)
    y0, f0 = sol.traj.ys[i], sol.traj.fs[i]
    if s == ts[i]:
        return y0, f0
    tr = dopri45(_r_system_t, ts[i], y0, s, rtol=sol.tol, atol=sol.tol, h0=s - ts[i])
    return tr.ys[-1], tr.fs[-1]


def state(sol, s):
    """(r, r', r'', r''') at s; s in (0, s0) is served from the series."""
    _check_range(sol, s)
    if s == 0:
        raise DomainError("state() needs s > 0; use the *_of_s helpers at s = 0")
    if s < sol.s0:
        r, p1, p2, p3 = sol.series.theta_values(s, sol.c)
        return np.array([r, p1 / s, p2 / s ** 2, p3 / s ** 3])
    y, f = _local(sol, s)
    return np.array([y[0], y[1], y[2], f[2]])


def hermite_state(sol, s):
    """(r, r', r'', t) from the cubic Hermite dense output (no re-integration)."""
    _check_range(sol, s)
    return sol.traj(s)


def r_of_s(sol, s):
    _check_range(sol, s)
    if s == 0:
        return (1 - 4 * sol.alpha ** 2) / 8.0
    return float(state(sol, s)[0])


def rprime_of_s(sol, s):
    _check_range(sol, s)
    if s == 0:
        return 1.0 / sol.alpha
    return float(state(sol, s)[1])


def rsecond_of_s(sol, s):
    return float(state(sol, s)[2])


def q_of_s(sol, s):
    _check_range(sol, s)
    if s == 0:
        r0 = (1 - 4 * sol.alpha ** 2) / 8.0
        return 0.5 * r0 * (1 + r0)
    if s < sol.s0:
        return sol.series.q_qprime(s, sol.c)[0]
    r, rp = state(sol, s)[:2]
    return -s * rp + 0.5 * r + 0.5 * r * r


def qprime_of_s(sol, s):
    _check_range(sol, s)
    if s == 0:
        r0 = (1 - 4 * sol.alpha ** 2) / 8.0
        return (r0 - 0.5) / sol.alpha
    if s < sol.s0:
        return sol.series.q_qprime(s, sol.c)[1]
    r, rp, rpp = state(sol, s)[:3]
    return -s * rpp - 0.5 * rp + r * rp


def tprime_of_s(sol, s):
    rp = rprime_of_s(sol, s)
    if abs(rp) < 1e-12:
        raise SingularityError("r' is numerically zero; t' = (1 - q'^2)/r' undefined")
    qp = qprime_of_s(sol, s)
    return (1 - qp * qp) / rp


def t_of_s(sol, s):
    _check_range(sol, s)
    if s == 0:
        return sol.t_at_0
    if s < sol.s0:
        return sol.t_at_0 + _t_integral_near_zero(sol.series, sol.c, s)
    return float(_local(sol, s)[0][3])


def third_order_terms(sol, s):
    """The six terms of the third-order equation at s."""
    r, rp, rpp, rppp = state(sol, s)
    return np.array([
        2 * s * s * rp * rppp,
        -s * s * rpp * rpp,
        2 * s * rp * rpp,
        -4 * s * rp ** 3,
        (2 * r - 0.25) * rp * rp,
        1.0,
    ])


def residual_third_order(sol, s):
    """Residual of the defining equation scaled by 1 + max |term|."""
    t = third_order_terms(sol, s)
    return abs(float(np.sum(t))) / (1 + float(np.max(np.abs(t))))


def residual_alt_third_order(sol, s):
    """
    Scaled residual of s^2 r' r''' - s^2 r''^2 + s r' r'' - s r'^3 - alpha r' + 1.

    The equation involves alpha explicitly, so it vanishes only on the
    solution with r'(0) = 1/alpha.
    """
    if not (sol.s0 <= s <= sol.s_max):
        raise DomainError("s outside the integrated range")
    t = alt_third_order_terms(sol.alpha, s, *state(sol, s))
    return abs(float(np.sum(t))) / (1 + float(np.max(np.abs(t))))


def alt_third_order_terms(alpha, s, r, rp, rpp, rppp):
    """The six terms of the alternative equation (alpha enters via -alpha r')."""
    return np.array([s * s * rp * rppp, -s * s * rpp * rpp, s * rp * rpp, -s * rp ** 3,
                     -alpha * rp, 1.0])


def integrate_r_forward(r_prime0, s_end, tol=1e-10, c=0.0, s0=S0_DEFAULT):
    """
    Initial-value integration of the third-order equation with r'(0) = r_prime0.

    The equation at s = 0 forces r(0) = 1/8 - 1/(2 r'(0)^2); the start uses
    the series of that one-parameter family with the given constant c.  No
    boundary condition is imposed, so the trajectory is generally not the
    pole-free solution and is only meaningful on short ranges.  Returns a
    Trajectory of (r, r', r'') whose ``fs[:, 2]`` holds r'''.
    """
    if not r_prime0 > 0:
        raise DomainError("r'(0) must be positive")
    series = LocalSeries(1.0 / r_prime0)
    return dopri45(_r_system, s0, series.state(s0, c), s_end, rtol=tol, atol=tol)


def residual_system(sol, s, exact=True):
    """
    Residuals of the coupled first/second-order system for (q, r, t):

        s q'' = q r' + t'/2
        s r'' = -q' - r'/2 + r r'
        s t'' = -2 q q' + t'/2 - r t'
        q'^2 + r' t' = 1

    With ``exact=True`` (default) q'' and t'' are differentiated analytically
    through r''' from the equation.  With ``exact=False`` they are centred
    differences with step 1e-5 max(1, s), which limits the residuals to
    about 1e-6.  Each residual is scaled by 1 + the largest magnitude among
    its terms.
    """
    if not (sol.s0 <= s <= sol.s_max):
        raise DomainError("s outside the integrated range")
    r, rp, rpp, rppp = state(sol, s)
    q = q_of_s(sol, s)
    qp = qprime_of_s(sol, s)
    tp = tprime_of_s(sol, s)
    if exact:
        qpp = -1.5 * rpp - s * rppp + rp * rp + r * rpp
        tpp = (-2 * qp * qpp * rp - (1 - qp * qp) * rpp) / (rp * rp)
    else:
        h = 1e-5 * max(1.0, s)
        h = min(h, 0.5 * (s - sol.s0)) if s - h < sol.s0 else h
        h = min(h, 0.5 * (sol.s_max - s)) if s + h > sol.s_max else h
        qpp = (qprime_of_s(sol, s + h) - qprime_of_s(sol, s - h)) / (2 * h)
        tpp = (tprime_of_s(sol, s + h) - tprime_of_s(sol, s - h)) / (2 * h)

    def scaled(*terms):
        return abs(sum(terms)) / (1 + max(abs(x) for x in terms))

    return (
        scaled(s * qpp, -q * rp, -0.5 * tp),
        scaled(s * rpp, qp, 0.5 * rp, -r * rp),
        scaled(s * tpp, 2 * q * qp, -0.5 * tp, r * tp),
        scaled(qp * qp, rp * tp, -1.0),
    )


def identity_residual(sol, s):
    """|q'^2 + r' t' - 1| at s."""
    qp = qprime_of_s(sol, s)
    return abs(qp * qp + rprime_of_s(sol, s) * tprime_of_s(sol, s) - 1.0)


def with_t_shift(sol, delta):
    """Copy of ``sol`` with t(s) shifted by ``delta`` (for sensitivity checks)."""
    ys = sol.traj.ys.copy()
    ys[:, 3] += delta
    traj = Trajectory(sol.traj.ts, ys, sol.traj.fs, sol.traj.status)
    return replace(sol, t_at_0=sol.t_at_0 + delta, traj=traj)


def asymptote_error(sol, s):
    """r(s) - ((3/2) s^(2/3) - alpha s^(1/3))."""
    return r_of_s(sol, s) - (1.5 * s ** (2.0 / 3.0) - sol.alpha * s ** (1.0 / 3.0))


# ---------------------------------------------------------------------------
# Painleve III form


@dataclass(frozen=True)
class PIIISolution:
    alpha: float
    s0: float
    s_max: float
    tol: float
    c: float
    traj: Trajectory = field(repr=False)
    series: LocalSeries = field(repr=False)
    rhs: object = field(repr=False, default=None)


@lru_cache(maxsize=16)
def _solve_piii(alpha, s_right, tol, s0):
    series = LocalSeries(alpha)
    rhs, jac = _make_piii(alpha)

    def left(c):
        _, p1, p2, _ = series.theta_values(s0, c)
        d = series.dstate_dc(s0, c)
        # v = s r', v' = r' + s r''
        return np.array([p1, (p1 + p2) / s0]), np.array([s0 * d[1], d[1] + s0 * d[2]])

    v_target = asymptotic_v(alpha, s_right)[0]

    def bc(y):
        return y[0] - v_target, np.array([1.0, 0.0])

    def bad(y):
        return not (y[0] > 1e-10)

    bvp = _BVP(2, rhs, jac, left, bc, bad)
    to_v = lambda s, y: y[0]  # noqa: E731
    c, traj = _bisect_c(bvp, alpha, s0, max(tol, 1e-12), to_v)
    nodes = _shooting_nodes(s0, s_right)

    def asym(s):
        v, sv1, _, _ = asymptotic_v(alpha, s)
        return np.array([v, sv1 / s])

    guesses = _guess_states(bvp, alpha, nodes, traj, asym, 2)
    c, states = _solve_bvp(bvp, nodes, c, guesses, tol)
    return series, c, nodes, tuple(tuple(s) for s in states), left


def integrate_piii(params, s_max, tol=1e-10, s0=S0_DEFAULT):
    """
    Pole-free solution of v'' = v'^2/v - v'/s + v^2/s^2 + alpha/s - 1/v.

    Uses the same series start as integrate_r (v = s r'), including the
    s^(1+alpha) term, and its own multiple-shooting solve for c.
    """
    p = _as_params(params)
    if not (1.0 <= s_max <= 1e5):
        raise DomainError("s_max must lie in [1, 1e5]")
    if not (1e-12 <= tol <= 1e-6):
        raise DomainError("tol must lie in [1e-12, 1e-6]")
    alpha = p.alpha
    s_right = _right_endpoint(s_max)
    series, c, nodes, states, left = _solve_piii(alpha, s_right, tol, s0)
    rhs, _ = _make_piii(alpha)

    def guarded(s, y):
        if abs(y[0]) < 1e-10:
            raise SingularityError(f"v vanished at s={s}: pole of the 1/v term")
        return rhs(s, y)

    ts, ys, fs = [], [], []
    for i in range(len(nodes) - 1):
        if nodes[i] >= s_max:
            break
        start = left(c)[0] if i == 0 else np.array(states[i - 1])
        tr = dopri45(guarded, nodes[i], start, min(nodes[i + 1], s_max), rtol=tol, atol=tol)
        if i > 0:
            ts[-1], ys[-1], fs[-1] = ts[-1][:-1], ys[-1][:-1], fs[-1][:-1]
        ts.append(tr.ts)
        ys.append(tr.ys)
        fs.append(tr.fs)
    traj = Trajectory(np.concatenate(ts), np.concatenate(ys), np.concatenate(fs))
    return PIIISolution(alpha, s0, float(s_max), tol, c, traj, series, guarded)


def _local_piii(psol, s):
    ts = psol.traj.ts
    i = int(np.searchsorted(ts, s, side="right")) - 1
    i = min(max(i, 0), len(ts) - 1)
    y0, f0 = psol.traj.ys[i], psol.traj.fs[i]
    if s == ts[i]:
        return y0, f0
    tr = dopri45(psol.rhs, ts[i], y0, s, rtol=psol.tol, atol=psol.tol, h0=s - ts[i])
    return tr.ys[-1], tr.fs[-1]


def v_of_s(psol, s):
    if not (0 <= s <= psol.s_max):
        raise DomainError("s outside the integrated range")
    if s == 0:
        return 0.0
    if s < psol.s0:
        return psol.series.theta_values(s, psol.c)[1]
    return float(_local_piii(psol, s)[0][0])


def vprime_of_s(psol, s):
    if not (0 < s <= psol.s_max):
        raise DomainError("s outside the integrated range")
    if s < psol.s0:
        _, p1, p2, _ = psol.series.theta_values(s, psol.c)
        return (p1 + p2) / s
    return float(_local_piii(psol, s)[0][1])


def residual_piii(psol, s):
    """Scaled residual of the PIII equation at s (v'' from the integrator)."""
    if not (psol.s0 <= s <= psol.s_max):
        raise DomainError("s outside the integrated range")
    y, f = _local_piii(psol, s)
    v, w, vpp = y[0], y[1], f[1]
    terms = [vpp, -w * w / v, w / s, -v * v / s ** 2, -psol.alpha / s, 1.0 / v]
    return abs(sum(terms)) / (1 + max(abs(x) for x in terms))
