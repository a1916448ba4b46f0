"""
Reference correlation kernels: sine, Airy and Bessel.

Each kernel is an integrable (Christoffel-Darboux type) difference quotient.
The numerator is formed so that swapping the arguments negates it exactly,
which makes every kernel exactly symmetric in floating point.  Close to the
diagonal the quotient is replaced by the analytic diagonal value at the
midpoint, which is second-order accurate for a symmetric kernel.
"""

import math
from dataclasses import dataclass

import numpy as np

from .specfun import airy_ai, bessel_j

NEAR_DIAGONAL = 1e-6


@dataclass(frozen=True)
class KernelGrid:
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray


def _near(x, y):
    return abs(x - y) < NEAR_DIAGONAL * (1.0 + abs(x))


def sine_kernel(x, y):
    """sin(pi (x - y)) / (x - y), with value pi on the diagonal."""
    d = x - y
    if _near(x, y):
        return math.pi - math.pi ** 3 * d * d / 6.0
    return math.sin(math.pi * d) / d


def airy_diagonal(x):
    a = airy_ai(x)
    return a.ai_prime ** 2 - x * a.ai ** 2


def airy_kernel(x, y):
    """(Ai(x) Ai'(y) - Ai(y) Ai'(x)) / (x - y)."""
    if _near(x, y):
        return airy_diagonal(0.5 * (x + y))
    ax, ay = airy_ai(x), airy_ai(y)
    num = ax.ai * ay.ai_prime - ay.ai * ax.ai_prime
    return num / (x - y)


def bessel_diagonal(alpha, x):
    z = math.sqrt(x)
    b = bessel_j(alpha, z)
    return 0.25 * (b.j_prime ** 2 + (1.0 - alpha * alpha / x) * b.j ** 2)


def bessel_kernel(alpha, x, y):
    """
    Hard-edge Bessel kernel

        (J(sqrt x) sqrt y J'(sqrt y) - J(sqrt y) sqrt x J'(sqrt x)) / (2 (x - y))

    with J = J_alpha.  On the diagonal the Bessel equation gives
    (J'^2 + (1 - alpha^2/x) J^2) / 4.
    """
    if _near(x, y):
        return bessel_diagonal(alpha, 0.5 * (x + y))
    sx, sy = math.sqrt(x), math.sqrt(y)
    bx, by = bessel_j(alpha, sx), bessel_j(alpha, sy)
    num = bx.j * (sy * by.j_prime) - by.j * (sx * bx.j_prime)
    return num / (2.0 * (x - y))


def kernel_grid(kernel, xs, ys=None):
    """Tabulate a two-argument kernel on the product grid xs x ys."""
    xs = np.asarray(xs, dtype=float)
    ys = xs if ys is None else np.asarray(ys, dtype=float)
    vals = np.empty((len(xs), len(ys)))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            vals[i, j] = kernel(float(x), float(y))
    return KernelGrid(xs, ys, vals)
