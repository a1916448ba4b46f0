"""
Verification harness for the three limit regimes of the finite-n kernel and
the Psi-kernel, plus a one-shot validation of every module's invariants.

Each run returns a TransitionReport whose rows carry the inputs, both kernel
values and the absolute error; every fitted rate is reported with the
residual of its fit.  Acceptance bands:

    bessel     slope of log E against log s in [0.7, 1.3]
    airy       E decreasing, and E(10 s)/E(s) <= 0.8 per decade
    hard_edge  E(n)/E(2n) in [2.5, 6]

The hard-edge report also carries, as a supplement outside the pass flags,
the same comparison on the shifted scale 4n + 2 alpha (see run_hard_edge).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import painleve as pv
from .errors import DomainError
from .kernels import airy_kernel, bessel_kernel
from .orthopoly import (
    Weight,
    build_discretization,
    build_table,
    cd_kernel,
    cd_kernel_sum,
    hard_edge_rescale,
    hard_edge_rescale_shifted,
    hard_edge_shift,
    moment_errors,
    stieltjes,
)
from .psi import (
    PsiConfig,
    c1_fit,
    c1_relative_error,
    default_r_start,
    lax_compatibility_check,
    psi_eval,
    psi_kernel,
    psi_kernel_grid,
    wronskian_drift,
)
from .specfun import (
    _airy_asym_neg,
    _airy_asym_pos,
    _airy_taylor_march,
    _airy_via_k,
    _j_hankel,
    _j_miller,
    _j_series,
)

AIRY_C = 1.5 ** (2.0 / 3.0)
SLOPE_BAND = (0.7, 1.3)
RATIO_BAND = (2.5, 6.0)
DECADE_RATIO_MAX = 0.8
BESSEL_CEILING = 0.05  # sup-grid error bound at s <= 1e-3
AIRY_DIAGONAL_TOL = 0.1


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.5
    s: float = 1.0
    s_schedule: tuple = ()
    n_schedule: tuple = ()
    grid: tuple = ()
    tol: float = 1e-10


@dataclass
class TransitionReport:
    regime: str
    params: dict
    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    passes: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    supplement: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.passes.values())


def grid_points(spec):
    """'MIN:MAX:COUNT' (linspace) or a comma list of values."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DomainError("grid must be MIN:MAX:COUNT")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1 or (count > 1 and not hi > lo):
            raise DomainError("grid needs COUNT >= 1 and MAX > MIN")
        return tuple(float(x) for x in np.linspace(lo, hi, count))
    return tuple(float(x) for x in spec.split(",") if x.strip())


def fit_loglog(xs, ys):
    """(slope, rms residual) of the least-squares line through (log x, log y)."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    if len(lx) < 2:
        raise DomainError("a rate fit needs at least two points")
    coef = np.polyfit(lx, ly, 1)
    resid = ly - np.polyval(coef, lx)
    return float(coef[0]), float(math.sqrt(np.mean(resid ** 2)))


def _grid_rows(param, us, vs, model, limit):
    rows = []
    for i, u in enumerate(us):
        for j, v in enumerate(vs):
            rows.append({"param": float(param), "u": float(u), "v": float(v),
                         "model": float(model[i, j]), "limit": float(limit[i, j]),
                         "abs_error": float(abs(model[i, j] - limit[i, j]))})
    return rows


def _check_errors(report):
    for row in report.rows:
        if not (math.isfinite(row["abs_error"]) and row["abs_error"] >= 0):
            raise DomainError(f"non-finite error in row {row}")


# ---------------------------------------------------------------------------
# Bessel regime


def run_bessel_transition(cfg):
    """Small-s limit: K_Psi(u, v, s) -> J_alpha(u, v) at rate O(s)."""
    schedule = cfg.s_schedule or (1e-2, 5e-3, 2.5e-3)
    grid = cfg.grid or grid_points("0.5:10:8")
    if not all(0 < s <= 0.1 for s in schedule):
        raise DomainError("the Bessel s-schedule must lie in (0, 0.1]")
    if not all(0.5 <= u <= 10 for u in grid):
        raise DomainError("the Bessel grid must lie in [0.5, 10]")
    sol = pv.integrate_r(cfg.alpha, 1.0, cfg.tol)
    pcfg = PsiConfig(tol=cfg.tol)
    limit = np.array([[bessel_kernel(cfg.alpha, u, v) for v in grid] for u in grid])
    report = TransitionReport("bessel", {"alpha": cfg.alpha, "s_schedule": list(schedule),
                                         "grid": list(grid), "tol": cfg.tol})
    symmetric = True
    for s in schedule:
        model = psi_kernel_grid(sol, s, grid, cfg=pcfg).values
        err = np.abs(model - limit)
        symmetric &= bool(np.allclose(err, err.T, rtol=1e-10, atol=1e-15))
        report.rows += _grid_rows(s, grid, grid, model, limit)
        report.errors.append((float(s), float(err.max())))
    _check_errors(report)
    report.passes["error_symmetric"] = symmetric
    small = [e for s, e in report.errors if s <= 1e-3]
    if small:
        report.passes["ceiling"] = max(small) <= BESSEL_CEILING
    if len(schedule) >= 2:
        slope, resid = fit_loglog(*zip(*report.errors))
        report.rates = {"slope": slope, "fit_residual": resid}
        report.passes["slope_band"] = SLOPE_BAND[0] <= slope <= SLOPE_BAND[1]
    return report


# ---------------------------------------------------------------------------
# Airy regime


def airy_arguments(s, xs):
    """Psi-kernel arguments s^(2/3) (1 - x/(c s^(2/9))) for Airy variables x."""
    return [s ** (2.0 / 3.0) * (1.0 - x / (AIRY_C * s ** (2.0 / 9.0))) for x in xs]


def run_airy_transition(cfg):
    """Large-s limit: (s^(4/9)/c) K_Psi at the soft-edge scaling -> Airy kernel."""
    schedule = tuple(sorted(cfg.s_schedule or (1e3, 1e4)))
    grid = cfg.grid or grid_points("-2:2:5")
    if not all(500 <= s <= 2e4 for s in schedule):
        raise DomainError("the Airy s-schedule must lie in [500, 2e4]")
    if not all(-2 <= x <= 2 for x in grid):
        raise DomainError("the Airy grid must lie in [-2, 2]")
    pcfg = PsiConfig(tol=cfg.tol)
    limit = np.array([[airy_kernel(x, y) for y in grid] for x in grid])
    report = TransitionReport("airy", {"alpha": cfg.alpha, "s_schedule": list(schedule),
                                       "grid": list(grid), "tol": cfg.tol})
    diagonal = None
    for s in schedule:
        sol = pv.integrate_r(cfg.alpha, s, cfg.tol)
        us = airy_arguments(s, grid)
        r_start = default_r_start(sol, s)
        if min(us) < pcfg.u_min or max(us) > r_start / 10:
            raise DomainError("induced Psi arguments leave [u_min, r_start/10]")
        scale = s ** (4.0 / 9.0) / AIRY_C
        model = scale * psi_kernel_grid(sol, s, us, cfg=pcfg).values
        report.rows += _grid_rows(s, grid, grid, model, limit)
        report.errors.append((float(s), float(np.max(np.abs(model - limit)))))
        u0 = s ** (2.0 / 3.0)
        diagonal = (float(s), scale * psi_kernel(sol, s, u0, u0, pcfg))
    _check_errors(report)
    es = [e for _, e in report.errors]
    report.passes["decreasing"] = all(b < a for a, b in zip(es, es[1:]))
    ratios = []
    for (s1, e1), (s2, e2) in zip(report.errors, report.errors[1:]):
        per_decade = (e2 / e1) ** (1.0 / math.log10(s2 / s1))
        ratios.append(per_decade)
    if ratios:
        slope, resid = fit_loglog(schedule, es)
        report.rates = {"decade_ratios": ratios, "slope": slope, "fit_residual": resid}
        report.passes["decade_ratio"] = all(r <= DECADE_RATIO_MAX for r in ratios)
    target = airy_kernel(0.0, 0.0)
    report.metadata["diagonal"] = {"s": diagonal[0], "scaled": diagonal[1], "airy": target}
    report.passes["diagonal"] = abs(diagonal[1] - target) <= AIRY_DIAGONAL_TOL
    return report


# ---------------------------------------------------------------------------
# hard edge


def run_hard_edge(cfg):
    """
    Finite n against the Psi-kernel: (1/(4n)) K_n(u/(4n), v/(4n); s/(2n)) -> K_Psi(u, v, s).

    The supplement repeats the comparison on the scale h = 4n + 2 alpha with
    t = 2 s / h, which removes the O(1/n) term of the plain 4n scaling.
    """
    schedule = tuple(sorted(cfg.n_schedule or (16, 32)))
    grid = cfg.grid or (1.0, 2.0, 5.0)
    if not all(n in (8, 16, 32, 64) for n in schedule):
        raise DomainError("the n-schedule must be drawn from {8, 16, 32, 64}")
    if not all(0.1 <= u <= 50 for u in grid):
        raise DomainError("the hard-edge grid must lie in [0.1, 50]")
    s, alpha = cfg.s, cfg.alpha
    sol = pv.integrate_r(alpha, max(1.0, s), cfg.tol)
    limit = psi_kernel_grid(sol, s, grid, cfg=PsiConfig(tol=cfg.tol)).values
    report = TransitionReport("hard_edge", {"alpha": alpha, "s": s, "n_schedule": list(schedule),
                                            "grid": list(grid), "tol": cfg.tol})
    shifted = []
    for n in schedule:
        weight = Weight(alpha, s / (2.0 * n))
        table = build_table(weight, n)
        model = np.array([[hard_edge_rescale(table, weight, n, u, v) for v in grid] for u in grid])
        report.rows += _grid_rows(n, grid, grid, model, limit)
        report.errors.append((n, float(np.max(np.abs(model - limit)))))
        report.metadata.setdefault("alpha_n", {})[str(n)] = s ** (2.0 / 3.0) / (4.0 * n)
        wsh = Weight(alpha, 2.0 * s / hard_edge_shift(alpha, n))
        tsh = build_table(wsh, n)
        msh = np.array([[hard_edge_rescale_shifted(tsh, wsh, n, u, v) for v in grid] for u in grid])
        shifted.append((n, float(np.max(np.abs(msh - limit)))))
    _check_errors(report)
    errs = dict(report.errors)
    ratios = {f"{n}->{2 * n}": errs[n] / errs[2 * n] for n in schedule if 2 * n in errs}
    report.rates = {"ratios": ratios}
    if len(schedule) >= 2:
        slope, resid = fit_loglog(*zip(*report.errors))
        report.rates.update({"slope": slope, "fit_residual": resid})
    report.passes["decreasing"] = all(b[1] < a[1] for a, b in zip(report.errors, report.errors[1:]))
    if ratios:
        report.passes["ratio_band"] = all(RATIO_BAND[0] <= r <= RATIO_BAND[1] for r in ratios.values())
    sh = dict(shifted)
    sh_ratios = {f"{n}->{2 * n}": sh[n] / sh[2 * n] for n in schedule if 2 * n in sh}
    report.supplement = {"scale": "4n + 2 alpha", "errors": shifted, "ratios": sh_ratios,
                         "ratio_band": all(RATIO_BAND[0] <= r <= RATIO_BAND[1] for r in sh_ratios.values())}
    return report


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    module: str
    name: str
    passed: bool
    detail: str


def _check(module, name, value, bound):
    return Check(module, name, bool(value <= bound), f"{value:.3g} <= {bound:.3g}")


def _validate_specfun():
    out = []
    worst = 0.0
    for x in (-9.0, -8.0):
        a1, d1 = _airy_asym_neg(x)
        a2, d2 = _airy_taylor_march(x)
        amp = math.hypot(a2, d2 / math.sqrt(-x))
        worst = max(worst, abs(a1 - a2) / amp, abs(d1 - d2) / (amp * math.sqrt(-x)))
    for x in (8.0, 9.0):
        a1, d1 = _airy_asym_pos(x)
        a2, d2 = _airy_via_k(x)
        worst = max(worst, abs(a1 / a2 - 1), abs(d1 / d2 - 1))
    out.append(_check("specfun", "airy overlap at |x| = 8", worst, 1e-11))
    worst = 0.0
    for alpha in (0.5, 2.0):
        for x in (8.0, 12.0):
            worst = max(worst, abs(_j_series(alpha, x) - _j_miller(alpha, x, 1)[0]))
        for x in (30.0, 80.0):
            worst = max(worst, abs(_j_hankel(alpha, x) - _j_miller(alpha, x, 1)[0]))
    out.append(_check("specfun", "bessel branch agreement", worst, 1e-11))
    return out


def _validate_painleve(tol, sols):
    out = []
    for alpha, sol in sols.items():
        ts = sol.traj.ts
        nodes = ts[:: max(1, len(ts) // 100)]
        out.append(_check("painleve", f"alpha={alpha} residual at nodes",
                          max(pv.residual_third_order(sol, s) for s in nodes), 1e-8))
        out.append(_check("painleve", f"alpha={alpha} identity q'^2 + r't' = 1",
                          max(pv.identity_residual(sol, s) for s in np.geomspace(1e-3, 50, 40)), 1e-8))
        out.append(_check("painleve", f"alpha={alpha} alternative equation",
                          max(pv.residual_alt_third_order(sol, s) for s in (0.1, 1.0, 10.0)), 1e-7))
        psol = pv.integrate_piii(alpha, 50.0, tol)
        err = max(abs(pv.v_of_s(psol, s) - s * pv.rprime_of_s(sol, s)) for s in np.linspace(0.1, 50, 40))
        out.append(_check("painleve", f"alpha={alpha} PIII equivalence", err, 100 * tol))
    return out


def _validate_psi(tol, sols, t_shift):
    out = []
    pcfg = PsiConfig(tol=tol)
    half = sols[0.5]
    out.append(_check("psi_system", "Wronskian constancy (s = 1)", wronskian_drift(half, 1.0, pcfg), 1e-8))
    us = [0.5, 1.0, 2.0, 5.0, 10.0]
    a = psi_eval(half, 1.0, us, PsiConfig(ray_eps=1e-3, tol=tol))
    b = psi_eval(half, 1.0, us, PsiConfig(ray_eps=5e-4, tol=tol))
    ray = max(max(abs(x.psi1 - y.psi1) / abs(y.psi1), abs(x.psi2 - y.psi2) / abs(y.psi2))
              for x, y in zip(a, b))
    out.append(_check("psi_system", "ray-offset independence", ray, 1e-6))
    worst = 0.0
    for alpha, sol in sols.items():
        ref = pv.with_t_shift(sol, t_shift) if t_shift else sol
        for s in (0.1, 0.5, 1.0, 2.0):
            worst = max(worst, float(np.max(c1_relative_error(c1_fit(sol, s, pcfg), ref, s))))
    out.append(_check("psi_system", "c1_fit against painleve", worst, 1e-3))
    res = max(lax_compatibility_check(sols[0.5], 1.0, -5.0, 1e-4, pcfg),
              lax_compatibility_check(sols[1.5], 2.0, -10.0, 2e-4, pcfg))
    out.append(_check("psi_system", "Lax compatibility", res, 1e-4))
    return out


def _validate_orthopoly():
    out = []
    weight = Weight(0.5, 1.0)
    disc = build_discretization(weight, 2000, 16)
    out.append(_check("orthopoly", "moment oracle (m <= 33)", float(np.max(moment_errors(disc, 34))), 1e-12))
    table = stieltjes(weight, 16, disc)
    out.append(Check("orthopoly", "recurrence positivity", bool(np.all(table.b > 0)), "all b_k > 0"))
    trace = max(abs(sum(dx * cd_kernel(table, weight, n, x, x)
                        for x, dx in zip(disc.nodes, disc.dx_weights)) - n) for n in (4, 8, 16))
    out.append(_check("orthopoly", "kernel trace = n", trace, 1e-6))
    pts = [0.5 / 32, 1.0 / 32, 2.0 / 32, 5.0 / 32, 10.0 / 32]
    cd = max(abs(cd_kernel(table, weight, 8, x, y) / cd_kernel_sum(table, weight, 8, x, y) - 1)
             for x in pts for y in pts)
    out.append(_check("orthopoly", "CD against sum form (n = 8)", cd, 1e-8))
    lag = Weight(0.5, 1e-10)
    lt = build_table(lag, 10)
    k = np.arange(11)
    err = max(float(np.max(np.abs(lt.a - (2 * k + 1.5)))), float(np.max(np.abs(lt.b[1:] - k[1:] * (k[1:] + 0.5)))))
    out.append(_check("orthopoly", "near-Laguerre recurrence", err, 1e-6))
    return out


def run_validate(tol=1e-10, t_shift=0.0):
    """Every module's invariant suite; returns a list of Check."""
    if not (1e-12 <= tol <= 1e-6):
        raise DomainError("tol must lie in [1e-12, 1e-6]")
    sols = {alpha: pv.integrate_r(alpha, 50.0, tol) for alpha in (0.5, 1.5)}
    return (_validate_specfun() + _validate_painleve(tol, sols)
            + _validate_psi(tol, sols, t_shift) + _validate_orthopoly())
