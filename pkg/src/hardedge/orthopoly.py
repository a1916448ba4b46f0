"""
Orthogonal polynomials for the weight w(x; t) = x^alpha e^(-x - t/x) on (0, inf).

The recurrence coefficients come from the discretised Stieltjes procedure:
the weight is replaced by a Gauss-Legendre rule in y = ln x, gated against
the closed-form moments

    mu_m = int_0^inf x^m w(x; t) dx = 2 t^(nu/2) K_nu(2 sqrt t),  nu = m + alpha + 1,

and the monic recurrence

    pi_(k+1)(x) = (x - a_k) pi_k(x) - b_k pi_(k-1)(x)

is run on the nodes.  All evaluations use the orthonormal polynomials
p_k = gamma_k pi_k, which stay bounded where the monic ones overflow, and
sqrt(w) is assembled in log space so the factor e^(-t/x) near the origin
cannot underflow prematurely.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InvariantError
from .kernels import NEAR_DIAGONAL
from .specfun import gauss_legendre, log_bessel_k

N_MAX_LIMIT = 64
MOMENT_TOL = 1e-12
PANEL_POINTS = 20


@dataclass(frozen=True)
class Weight:
    alpha: float
    t: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.t > 0):
            raise DomainError("the weight needs alpha > 0 and t > 0")

    def log_w(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha * np.log(x) - x - self.t / x


@dataclass(frozen=True)
class Discretization:
    """
    Rule for int_0^inf f(x) w(x; t) dx: ``weights`` include w, ``dx_weights``
    are the plain weights for int f(x) dx on the same nodes.
    """

    weight: Weight
    nodes: np.ndarray
    weights: np.ndarray
    dx_weights: np.ndarray
    n_max: int

    def integrate(self, values):
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class RecurrenceTable:
    """
    Monic recurrence coefficients a_0..a_n_max and b_0..b_n_max, with the
    convention b_0 = mu_0; gamma_k is the leading coefficient of p_k.
    """

    weight: Weight
    a: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    n_max: int


# ---------------------------------------------------------------------------
# moments


@lru_cache(maxsize=4096)
def log_moment(weight, m):
    """log mu_m from the modified-Bessel closed form."""
    if not (0 <= m <= 160):
        raise DomainError("moments are available for 0 <= m <= 160")
    nu = m + weight.alpha + 1.0
    return math.log(2.0) + 0.5 * nu * math.log(weight.t) + log_bessel_k(nu, 2.0 * math.sqrt(weight.t))


def moments_closed_form(weight, m):
    """mu_m = 2 t^((m+alpha+1)/2) K_(m+alpha+1)(2 sqrt t)."""
    return math.exp(log_moment(weight, int(m)))


# ---------------------------------------------------------------------------
# discretisation


def _panel_edges(weight, n_max, n_panels):
    """Panel edges in y = ln x with doubled density near x = sqrt(t) and x = O(n_max)."""
    lo = math.log(weight.t / 50.0) - 20.0
    hi = math.log(40.0 * (n_max + 20))
    peaks = [(0.5 * math.log(weight.t) - 3.0, 0.5 * math.log(weight.t) + 3.0),
             (math.log(max(1.0, 0.5 * n_max)) - 2.0, math.log(4.0 * (n_max + 1)) + 1.0)]
    grid = np.linspace(lo, hi, 4001)
    density = np.ones_like(grid)
    for a, b in peaks:
        density[(grid >= a) & (grid <= b)] = 2.0
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(grid))])
    return np.interp(np.linspace(0.0, cum[-1], n_panels + 1), cum, grid)


def moment_errors(disc, count):
    """Relative errors of the rule on mu_0..mu_(count-1)."""
    errs = []
    logx = np.log(disc.nodes)
    for m in range(count):
        exact = log_moment(disc.weight, m)
        approx = float(np.sum(disc.weights * np.exp(m * logx - exact)))
        errs.append(abs(approx - 1.0))
    return np.array(errs)


def build_discretization(weight, n_nodes, n_max=N_MAX_LIMIT):
    """
    Composite Gauss-Legendre rule in y = ln x on [ln(t/50) - 20, ln(40 (n_max + 20))].

    Raises InvariantError unless mu_0..mu_(2 n_max + 1) are reproduced to
    1e-12 relative.  Nodes whose weight underflows to zero are dropped.
    """
    if not (200 <= n_nodes <= 20000):
        raise DomainError("n_nodes must lie in [200, 20000]")
    if not (1 <= n_max <= N_MAX_LIMIT):
        raise DomainError(f"n_max must lie in [1, {N_MAX_LIMIT}]")
    n_panels = max(1, n_nodes // PANEL_POINTS)
    edges = _panel_edges(weight, n_max, n_panels)
    rule = gauss_legendre(PANEL_POINTS)
    ys, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        y, w = rule.scaled(a, b)
        ys.append(y)
        ws.append(w)
    y = np.concatenate(ys)
    gw = np.concatenate(ws)
    x = np.exp(y)
    dxw = gw * x
    w = dxw * np.exp(weight.log_w(x))
    keep = w > 0
    disc = Discretization(weight, x[keep], w[keep], dxw[keep], int(n_max))
    worst = float(np.max(moment_errors(disc, 2 * n_max + 2)))
    if worst > MOMENT_TOL:
        raise InvariantError(f"discretisation misses the moments by {worst:.3g}; raise n_nodes")
    return disc


# ---------------------------------------------------------------------------
# recurrence


def stieltjes(weight, n_max, disc):
    """Discretised Stieltjes procedure for a_0..a_n_max, b_0..b_n_max and gamma."""
    if not (1 <= n_max <= N_MAX_LIMIT):
        raise DomainError(f"n_max must lie in [1, {N_MAX_LIMIT}]")
    if disc.weight != weight:
        raise DomainError("the discretisation was built for a different weight")
    if disc.n_max < n_max:
        raise DomainError("the discretisation was gated for a smaller n_max")
    x, w = disc.nodes, disc.weights
    a = np.zeros(n_max + 1)
    b = np.zeros(n_max + 1)
    b[0] = float(np.sum(w))
    # orthonormal vectors on the nodes; b_k is the squared norm of the
    # unnormalised successor, which equals <pi_k, pi_k>/<pi_(k-1), pi_(k-1)>
    prev = np.zeros_like(x)
    cur = np.full_like(x, 1.0 / math.sqrt(b[0]))
    for k in range(n_max + 1):
        a[k] = float(np.sum(w * x * cur * cur))
        if k == n_max:
            break
        nxt = (x - a[k]) * cur - (math.sqrt(b[k]) if k else 0.0) * prev
        norm2 = float(np.sum(w * nxt * nxt))
        if not norm2 > 0:
            raise InvariantError(f"Stieltjes breakdown at k={k + 1}: <pi_k, pi_k> <= 0")
        b[k + 1] = norm2
        prev, cur = cur, nxt / math.sqrt(norm2)
    gamma = np.empty(n_max + 1)
    gamma[0] = 1.0 / math.sqrt(b[0])
    for k in range(1, n_max + 1):
        gamma[k] = gamma[k - 1] / math.sqrt(b[k])
    return RecurrenceTable(weight, a, b, gamma, int(n_max))


def build_table(weight, n_max, n_nodes=2000):
    """Discretisation and Stieltjes in one call."""
    return stieltjes(weight, n_max, build_discretization(weight, n_nodes, n_max))


def _check_n(table, n):
    if not (0 <= n <= table.n_max):
        raise DomainError(f"n must lie in [0, {table.n_max}]")


def eval_orthonormal(table, n, x):
    """p_0(x)..p_n(x) by the orthonormal three-term recurrence."""
    _check_n(table, n)
    x = float(x)
    a, b = table.a, table.b
    p = np.empty(n + 1)
    p[0] = table.gamma[0]
    if n >= 1:
        p[1] = (x - a[0]) * p[0] / math.sqrt(b[1])
    for k in range(1, n):
        p[k + 1] = ((x - a[k]) * p[k] - math.sqrt(b[k]) * p[k - 1]) / math.sqrt(b[k + 1])
    return p


def _orthonormal_with_derivative(table, n, x):
    a, b = table.a, table.b
    p = np.zeros(n + 1)
    dp = np.zeros(n + 1)
    p[0] = table.gamma[0]
    for k in range(n):
        lower = math.sqrt(b[k]) * p[k - 1] if k else 0.0
        dlower = math.sqrt(b[k]) * dp[k - 1] if k else 0.0
        p[k + 1] = ((x - a[k]) * p[k] - lower) / math.sqrt(b[k + 1])
        dp[k + 1] = (p[k] + (x - a[k]) * dp[k] - dlower) / math.sqrt(b[k + 1])
    return p, dp


# ---------------------------------------------------------------------------
# kernels


def cd_kernel(table, weight, n, x, y):
    """
    K_n(x, y; t) = sqrt(b_n) sqrt(w(x) w(y)) (p_n(x) p_(n-1)(y) - p_(n-1)(x) p_n(y)) / (x - y),

    the Christoffel-Darboux form in the orthonormal normalisation; on (and
    within 1e-6 relative of) the diagonal the confluent form is used.
    """
    _check_n(table, n)
    if n < 1:
        raise DomainError("the kernel needs n >= 1")
    if not (x > 0 and y > 0):
        raise DomainError("the kernel needs x, y > 0")
    x, y = float(x), float(y)
    if abs(x - y) < NEAR_DIAGONAL * (1.0 + abs(x)):
        m = 0.5 * (x + y)
        p, dp = _orthonormal_with_derivative(table, n, m)
        sw = math.exp(float(weight.log_w(m)))
        return math.sqrt(table.b[n]) * sw * (dp[n] * p[n - 1] - dp[n - 1] * p[n])
    px = eval_orthonormal(table, n, x)
    py = eval_orthonormal(table, n, y)
    sw = math.exp(0.5 * float(weight.log_w(x) + weight.log_w(y)))
    num = px[n] * py[n - 1] - px[n - 1] * py[n]
    return math.sqrt(table.b[n]) * sw * num / (x - y)


def cd_kernel_sum(table, weight, n, x, y):
    """sqrt(w(x) w(y)) sum_(k<n) p_k(x) p_k(y), the defining sum form."""
    _check_n(table, n)
    px = eval_orthonormal(table, n, x)
    py = eval_orthonormal(table, n, y)
    sw = math.exp(0.5 * float(weight.log_w(x) + weight.log_w(y)))
    return sw * float(np.dot(px[:n], py[:n]))


def hard_edge_rescale(table, weight, n, u, v):
    """(1/(4n)) K_n(u/(4n), v/(4n); t)."""
    if not (0.1 <= u <= 50 and 0.1 <= v <= 50):
        raise DomainError("u, v must lie in [0.1, 50]")
    if table.weight != weight:
        raise DomainError("the table was built for a different weight")
    scale = 4.0 * n
    return cd_kernel(table, weight, n, u / scale, v / scale) / scale


def hard_edge_shift(alpha, n):
    """The shifted hard-edge scale 4n + 2 alpha."""
    return 4.0 * n + 2.0 * alpha


def hard_edge_rescale_shifted(table, weight, n, u, v):
    """
    (1/h) K_n(u/h, v/h; t) with h = 4n + 2 alpha; paired with t = 2 s / h it
    approaches K_Psi(u, v, s) at O(1/n^2) instead of O(1/n).
    """
    if not (0.1 <= u <= 50 and 0.1 <= v <= 50):
        raise DomainError("u, v must lie in [0.1, 50]")
    if table.weight != weight:
        raise DomainError("the table was built for a different weight")
    h = hard_edge_shift(weight.alpha, n)
    return cd_kernel(table, weight, n, u / h, v / h) / h
