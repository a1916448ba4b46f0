"""
Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output.

Real or complex state vectors are supported.  The controller keeps the
embedded error estimate below ``atol + rtol * |y|`` componentwise (RMS norm).
An optional ``stop`` callback is consulted after each accepted step and may
end the integration early by returning a truthy label.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepSizeError

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@dataclass
class Trajectory:
    """Accepted steps of an integration: nodes, states and derivatives."""

    ts: np.ndarray
    ys: np.ndarray
    fs: np.ndarray
    status: str = "done"

    @property
    def t_end(self):
        return self.ts[-1]

    def _locate(self, t):
        ts = self.ts
        forward = ts[-1] >= ts[0]
        if forward:
            i = int(np.searchsorted(ts, t, side="right")) - 1
        else:
            i = int(np.searchsorted(-ts, -t, side="right")) - 1
        return min(max(i, 0), len(ts) - 2)

    def hermite(self, t):
        """Interpolated state and derivative at t (cubic Hermite per step)."""
        if len(self.ts) == 1:
            return self.ys[0].copy(), self.fs[0].copy()
        i = self._locate(t)
        t0, t1 = self.ts[i], self.ts[i + 1]
        h = t1 - t0
        th = (t - t0) / h
        y0, y1 = self.ys[i], self.ys[i + 1]
        f0, f1 = self.fs[i], self.fs[i + 1]
        h00 = (1 + 2 * th) * (1 - th) ** 2
        h10 = th * (1 - th) ** 2
        h01 = th * th * (3 - 2 * th)
        h11 = th * th * (th - 1)
        y = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
        d00 = 6 * th * (th - 1) / h
        d10 = (1 - th) * (1 - 3 * th)
        d01 = -d00
        d11 = th * (3 * th - 2)
        dy = d00 * y0 + d10 * f0 + d01 * y1 + d11 * f1
        return y, dy

    def __call__(self, t):
        return self.hermite(t)[0]


def _initial_step(f, t0, y0, f0, direction, atol, rtol, nc):
    scale = atol + rtol * np.abs(y0[:nc])
    d0 = np.sqrt(np.mean(np.abs(y0[:nc] / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0[:nc] / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1[:nc] - f0[:nc]) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri45(f, t0, y0, t_end, rtol=1e-10, atol=1e-10, h0=None, stop=None,
            max_steps=2_000_000, h_max=None, min_step_rel=1e-14, controlled=None):
    """
    Integrate y' = f(t, y) from t0 to t_end.

    Returns a Trajectory holding every accepted step.  Raises StepSizeError
    when the step falls below ``min_step_rel * max(|t|, 1e-300)``.  If
    ``controlled`` is given, only the first ``controlled`` components enter
    the error estimate (the rest are quadratures riding along), so the step
    sequence is identical to integrating those components alone.
    """
    y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float)
    t = float(t0)
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    fy = np.asarray(f(t, y))
    nc = len(y) if controlled is None else controlled
    if h0 is None:
        h = _initial_step(lambda t_, y_: np.asarray(f(t_, y_)), t, y, fy, direction, atol, rtol, nc)
    else:
        h = abs(h0)
    if h_max is None:
        h_max = span
    h = min(h, h_max, span) if span > 0 else 0.0
    ts, ys, fs = [t], [y.copy()], [fy.copy()]
    status = "done"
    k = [None] * 7
    for _ in range(max_steps):
        if direction * (t_end - t) <= 0:
            break
        remaining = abs(t_end - t)
        last = h >= remaining * (1 - 1e-12)
        if last:
            h = remaining
        k[0] = fy
        for s in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[s]):
                if a != 0.0:
                    acc = acc + (direction * h * a) * k[j]
            if s == 6:
                ynew = acc
            k[s] = np.asarray(f(t + direction * h * _C[s], acc))
        err_vec = direction * h * sum(_E[j] * k[j][:nc] for j in range(7) if _E[j] != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y[:nc]), np.abs(ynew[:nc]))
        err = math.sqrt(float(np.mean(np.abs(err_vec / scale) ** 2)))
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t = t_end if last else t + direction * h
            y = ynew
            fy = k[6]
            ts.append(t)
            ys.append(y.copy())
            fs.append(fy.copy())
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * fac, h_max)
            if stop is not None:
                label = stop(t, y)
                if label:
                    status = label
                    break
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
        if h < min_step_rel * max(abs(t), 1e-300) and direction * (t_end - t) > 0:
            raise StepSizeError(f"step size underflow at t={t} (h={h})")
    else:
        raise StepSizeError("maximum number of steps exceeded")
    return Trajectory(np.array(ts), np.array(ys), np.array(fs), status)
