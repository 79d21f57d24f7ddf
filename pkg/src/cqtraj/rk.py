"""Adaptive embedded Runge-Kutta integration for complex-valued systems.

Dormand-Prince 5(4) with proportional step control and cubic Hermite dense
output, plus a fixed-step classical RK4 fallback.  The state vector is a small
complex ndarray; the right-hand side must be autonomous-friendly
``f(t, y) -> ndarray``.

A guard callback can veto steps that stray too close to a singularity of the
field (zeros of psi are simple poles of the velocity): any accepted step whose
endpoint or interpolated midpoint violates the guard radius is rejected and
retried with a halved step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NodeProximity, StepFailure

# Dormand-Prince 5(4) tableau (FSAL)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

# coefficients of the fourth-order continuous extension for this tableau:
# y(t + theta h) = y + h * (K^T P) @ [theta, theta^2, theta^3, theta^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_MAX_STEPS = 1_000_000


@dataclass
class DenseSolution:
    """Accepted steps plus a continuous interpolant between them.

    Adaptive runs carry the tableau's quartic continuous extension per step
    (``q``); fixed-step runs fall back to cubic Hermite interpolation.
    """

    t: np.ndarray
    y: np.ndarray  # shape (N, dim), complex
    f: np.ndarray  # derivatives at the accepted times
    q: Optional[np.ndarray] = None  # shape (N-1, dim, 4) extension coefficients
    stats: dict = field(default_factory=dict)

    def __call__(self, tq):
        tq_arr = np.atleast_1d(np.asarray(tq, dtype=float))
        t = self.t
        idx = np.clip(np.searchsorted(t, tq_arr, side="right") - 1, 0, len(t) - 2)
        t0 = t[idx]
        h = t[idx + 1] - t0
        s = (tq_arr - t0) / h
        y0 = self.y[idx]
        if self.q is not None:
            p = s[:, None] ** np.arange(1, 5)
            out = y0 + h[:, None] * np.einsum("mdk,mk->md", self.q[idx], p)
        else:
            s = s[:, None]
            y1 = self.y[idx + 1]
            f0 = self.f[idx]
            f1 = self.f[idx + 1]
            h00 = (1 + 2 * s) * (1 - s) ** 2
            h10 = s * (1 - s) ** 2
            h01 = s * s * (3 - 2 * s)
            h11 = s * s * (s - 1)
            out = h00 * y0 + h[:, None] * h10 * f0 + h01 * y1 + h[:, None] * h11 * f1
        if np.ndim(tq) == 0:
            return out[0]
        return out

    @property
    def t_end(self) -> float:
        return float(self.t[-1])


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


def solve_rk45(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    t1: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-10,
    max_step: float = math.inf,
    guard: Optional[Callable[[np.ndarray], float]] = None,
    guard_radius: float = 0.0,
) -> DenseSolution:
    """Integrate from t0 to t1 (t1 > t0) and return a dense solution."""
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    y = np.asarray(y0, dtype=complex).copy()
    t = float(t0)
    k1 = np.asarray(fun(t, y), dtype=complex)

    scale0 = abs_tol + rel_tol * max(1.0, _rms(y))
    f0 = _rms(k1)
    h = 0.01 * scale0 / f0 if f0 > 0 else (t1 - t0) / 100.0
    h = min(h, max_step, t1 - t0)

    ts = [t]
    ys = [y.copy()]
    fs = [k1.copy()]
    qs = []
    n_accept = 0
    n_reject_err = 0
    n_reject_guard = 0
    min_guard = math.inf

    while t < t1:
        if n_accept + n_reject_err + n_reject_guard > _MAX_STEPS:
            raise StepFailure(f"step budget exhausted at t={t:g}")
        h = min(h, t1 - t, max_step)
        if h <= 1e-14 * max(1.0, abs(t)):
            raise StepFailure(f"step size underflow at t={t:g}")

        k2 = fun(t + _A21 * h, y + h * (_A21 * k1))
        k3 = fun(t + 3 / 10 * h, y + h * (_A31 * k1 + _A32 * k2))
        k4 = fun(t + 4 / 5 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = fun(t + 8 / 9 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = fun(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = fun(t + h, y_new)

        err = h * (
            _E[0] * k1 + _E[2] * k3 + _E[3] * k4 + _E[4] * k5 + _E[5] * k6 + _E[6] * k7
        )
        tol = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms(err / tol)

        if err_norm > 1.0:
            n_reject_err += 1
            h *= max(0.1, 0.9 * err_norm ** -0.2)
            continue

        K = np.stack([k1, k2, k3, k4, k5, k6, k7])
        Q = np.einsum("sd,sk->dk", K, _P)

        if guard is not None:
            y_mid = y + h * (Q @ np.array([0.5, 0.25, 0.125, 0.0625]))
            d = min(guard(y_new), guard(y_mid))
            if d < guard_radius:
                if h <= 64e-14 * max(1.0, abs(t)):
                    raise NodeProximity(
                        f"trajectory driven within {guard_radius:g} of a node near t={t:g}"
                    )
                n_reject_guard += 1
                h *= 0.5
                continue
            min_guard = min(min_guard, d)

        t += h
        y = y_new
        k1 = k7
        ts.append(t)
        ys.append(y.copy())
        fs.append(k1.copy())
        qs.append(Q)
        n_accept += 1
        factor = 5.0 if err_norm == 0.0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
        h *= factor

    return DenseSolution(
        np.array(ts),
        np.array(ys),
        np.array(fs),
        q=np.array(qs),
        stats={
            "accepted_steps": n_accept,
            "rejected_steps": n_reject_err,
            "guard_rejections": n_reject_guard,
            "min_node_distance": min_guard,
        },
    )


def solve_rk4(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    t1: float,
    step: float,
    guard: Optional[Callable[[np.ndarray], float]] = None,
    guard_radius: float = 0.0,
) -> DenseSolution:
    """Fixed-step classical RK4 over [t0, t1] with uniform step <= step."""
    if not (step > 0 and math.isfinite(step)):
        raise ValueError("fixed RK4 needs a finite positive max_step")
    n = max(1, math.ceil((t1 - t0) / step))
    h = (t1 - t0) / n
    y = np.asarray(y0, dtype=complex).copy()
    t = float(t0)
    ts = [t]
    ys = [y.copy()]
    fs = [np.asarray(fun(t, y), dtype=complex)]
    min_guard = math.inf
    for i in range(n):
        k1 = fs[-1]
        k2 = fun(t + h / 2, y + h / 2 * k1)
        k3 = fun(t + h / 2, y + h / 2 * k2)
        k4 = fun(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h
        if guard is not None:
            d = guard(y)
            if d < guard_radius:
                raise NodeProximity(f"fixed-step path within {guard_radius:g} of a node at t={t:g}")
            min_guard = min(min_guard, d)
        ts.append(t)
        ys.append(y.copy())
        fs.append(np.asarray(fun(t, y), dtype=complex))
    return DenseSolution(
        np.array(ts),
        np.array(ys),
        np.array(fs),
        stats={
            "accepted_steps": n,
            "rejected_steps": 0,
            "guard_rejections": 0,
            "min_node_distance": min_guard,
        },
    )
