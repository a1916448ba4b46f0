import math

import numpy as np
import pytest

from hardedge.errors import DomainError
from hardedge.harness import (
    AIRY_C,
    RunConfig,
    airy_arguments,
    fit_loglog,
    grid_points,
    run_airy_transition,
    run_bessel_transition,
    run_hard_edge,
    run_validate,
)


@pytest.fixture(scope="module")
def bessel_report():
    return run_bessel_transition(RunConfig(alpha=0.5))


@pytest.fixture(scope="module")
def hard_edge_report():
    return run_hard_edge(RunConfig(alpha=0.5, s=1.0, n_schedule=(8, 16)))


# ---------------------------------------------------------------------------
# helpers


@pytest.mark.parametrize(
    "spec, expected",
    [("0:1:3", (0.0, 0.5, 1.0)), ("1,2,5", (1.0, 2.0, 5.0)), ("2:2:1", (2.0,))],
)
def test_grid_points(spec, expected):
    assert grid_points(spec) == expected


@pytest.mark.parametrize("spec", ["1:2", "2:1:4", "0:1:0"])
def test_grid_points_invalid(spec):
    with pytest.raises(DomainError):
        grid_points(spec)


def test_fit_loglog_exact():
    xs = [1e-2, 5e-3, 2.5e-3]
    slope, resid = fit_loglog(xs, [3 * x ** 2 for x in xs])
    assert slope == pytest.approx(2.0, rel=1e-12)
    assert resid <= 1e-12
    with pytest.raises(DomainError):
        fit_loglog([1.0], [1.0])


def test_airy_arguments_centre():
    # x = 0 sits at s^(2/3); positive x moves towards the origin
    s = 1e3
    us = airy_arguments(s, [0.0, 1.0])
    assert us[0] == pytest.approx(100.0, rel=1e-14)
    assert us[1] == pytest.approx(100.0 * (1 - 1 / (AIRY_C * s ** (2 / 9))), rel=1e-14)


# ---------------------------------------------------------------------------
# reports


def test_bessel_report(bessel_report):
    r = bessel_report
    assert r.regime == "bessel"
    assert len(r.rows) == 3 * 64
    assert all(row["abs_error"] >= 0 and math.isfinite(row["abs_error"]) for row in r.rows)
    assert 0.7 <= r.rates["slope"] <= 1.3
    assert r.rates["fit_residual"] >= 0
    assert r.passes == {"error_symmetric": True, "slope_band": True}
    assert r.passed


def test_bessel_rows_carry_both_kernels(bessel_report):
    row = bessel_report.rows[5]
    assert row["abs_error"] == abs(row["model"] - row["limit"])
    assert set(row) == {"param", "u", "v", "model", "limit", "abs_error"}


def test_bessel_ceiling():
    r = run_bessel_transition(RunConfig(alpha=0.5, s_schedule=(1e-3,)))
    assert r.errors[0][1] <= 0.05
    assert r.passes["ceiling"]
    assert "slope_band" not in r.passes


@pytest.mark.parametrize("cfg", [RunConfig(s_schedule=(0.2,)), RunConfig(grid=(0.4, 1.0))])
def test_bessel_domain(cfg):
    with pytest.raises(DomainError):
        run_bessel_transition(cfg)


def test_hard_edge_report(hard_edge_report):
    r = hard_edge_report
    errs = dict(r.errors)
    assert errs[16] < errs[8]
    assert r.metadata["alpha_n"] == {"8": 1 / 32, "16": 1 / 64}
    assert set(r.rates) == {"ratios", "slope", "fit_residual"}
    assert len(r.rows) == 2 * 9
    # the shifted scale converges faster on the same grid
    sh = dict(r.supplement["errors"])
    assert sh[16] < errs[16] and sh[8] < errs[8]


def test_hard_edge_fixed_product(hard_edge_report):
    # the limit column is the same K_Psi(u, v, s) for every n
    by_n = {}
    for row in hard_edge_report.rows:
        by_n.setdefault((row["u"], row["v"]), set()).add(row["limit"])
    assert all(len(v) == 1 for v in by_n.values())


@pytest.mark.parametrize("cfg", [RunConfig(n_schedule=(12,)), RunConfig(grid=(0.05, 1.0))])
def test_hard_edge_domain(cfg):
    with pytest.raises(DomainError):
        run_hard_edge(cfg)


@pytest.mark.parametrize("cfg", [RunConfig(s_schedule=(100.0,)), RunConfig(grid=(-3.0, 0.0))])
def test_airy_domain(cfg):
    with pytest.raises(DomainError):
        run_airy_transition(cfg)


# ---------------------------------------------------------------------------
# validation


@pytest.fixture(scope="module")
def checks():
    return run_validate()


def test_validate_all_pass(checks):
    assert [c for c in checks if not c.passed] == []
    assert {c.module for c in checks} == {"specfun", "painleve", "psi_system", "orthopoly"}


def test_validate_tighter_tol():
    assert all(c.passed for c in run_validate(1e-11))


def test_validate_detects_shifted_t():
    failed = [c.name for c in run_validate(t_shift=1e-3) if not c.passed]
    assert failed == ["c1_fit against painleve"]


def test_validate_domain():
    with pytest.raises(DomainError):
        run_validate(1e-3)
