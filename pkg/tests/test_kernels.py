import math

import numpy as np
import pytest

from hardedge.kernels import airy_kernel, bessel_kernel, kernel_grid, sine_kernel
from hardedge.specfun import airy_ai

H = 1e-5


def _half_bessel(x):
    # J_{1/2}(z) = sqrt(2/(pi z)) sin z and its derivative
    j = math.sqrt(2 / (math.pi * x)) * math.sin(x)
    jp = math.sqrt(2 / (math.pi * x)) * (math.cos(x) - math.sin(x) / (2 * x))
    return j, jp


def test_sine_diagonal():
    assert sine_kernel(1.0, 1.0) == pytest.approx(math.pi, abs=1e-15)


def test_sine_offdiagonal():
    assert sine_kernel(0.0, 0.5) == pytest.approx(2.0, abs=1e-15)
    assert sine_kernel(0.3, 0.7) == sine_kernel(0.7, 0.3)


def test_sine_near_diagonal_continuity():
    d = 5e-7
    assert sine_kernel(2.0 + d, 2.0) == pytest.approx(math.sin(math.pi * d) / d, rel=1e-12)


def test_airy_diagonal_at_zero():
    assert airy_kernel(0.0, 0.0) == pytest.approx(airy_ai(0.0).ai_prime ** 2, rel=1e-14)
    assert airy_kernel(0.0, 0.0) == pytest.approx(0.0669873, abs=1e-6)  # quoted value is rounded to 6 digits


def test_bessel_half_example():
    jx, jpx = _half_bessel(1.0)
    jy, jpy = _half_bessel(2.0)
    expected = (jx * 2.0 * jpy - jy * 1.0 * jpx) / (2 * (1.0 - 4.0))
    assert bessel_kernel(0.5, 1.0, 4.0) == pytest.approx(expected, rel=1e-13)
    assert bessel_kernel(0.5, 1.0, 4.0) == pytest.approx(0.0894, abs=1e-4)


@pytest.mark.parametrize(
    "kernel",
    [sine_kernel, airy_kernel, lambda x, y: bessel_kernel(1.5, x + 11, y + 11)],
    ids=["sine", "airy", "bessel"],
)
def test_numerator_antisymmetry(kernel):
    for x, y in [(-2.0, 1.0), (0.25, 3.5), (-7.1, -6.4), (4.0, -0.5)]:
        assert kernel(x, y) * (x - y) + kernel(y, x) * (y - x) == 0.0


@pytest.mark.parametrize("x", np.linspace(-10, 5, 10))
def test_airy_diagonal_consistency(x):
    fd = airy_kernel(x + H, x - H)
    assert abs(airy_kernel(x, x) - fd) <= 1e-7


@pytest.mark.parametrize("x", np.linspace(0.2, 60, 10))
def test_bessel_diagonal_consistency(x):
    fd = bessel_kernel(2.5, x + H, x - H)
    assert abs(bessel_kernel(2.5, x, x) - fd) <= 1e-7


@pytest.mark.parametrize("x", np.linspace(-5, 5, 10))
def test_sine_diagonal_consistency(x):
    assert abs(sine_kernel(x, x) - sine_kernel(x + H, x - H)) <= 1e-7


def test_documented_diagonal_examples():
    assert abs(bessel_kernel(0.5, 1.0, 1.0) - bessel_kernel(0.5, 1.0 + H, 1.0 - H)) <= 1e-7
    assert airy_kernel(-2.0, 1.0) == pytest.approx(
        0.5 * (airy_kernel(-2.0 + H, 1.0) + airy_kernel(-2.0 - H, 1.0)), abs=1e-7
    )


def test_airy_diagonal_nonnegative():
    for x in np.linspace(-10, 5, 151):
        assert airy_kernel(x, x) >= 0


def test_grid_symmetric_and_finite():
    xs = np.linspace(0.1, 30, 9)
    g = kernel_grid(lambda x, y: bessel_kernel(0.7, x, y), xs)
    assert np.all(np.isfinite(np.diag(g.values)))
    assert np.all(np.abs(g.values - g.values.T) <= 1e-12 * (1 + np.abs(g.values)))
