"""Complex velocity field, trajectory and path integration, axis crossings.

The guiding equation is  m dx/dt = (hbar/i) psi'(x)/psi(x);  its solutions in
the complex position plane are simultaneously the characteristic curves of the
extended probability conservation law, so everything downstream (boundary
values, conserved path labels, crossing verdicts) is built on this module.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import states
from .errors import (
    DegeneratePoint,
    NodeProximity,
    StationaryPoint,
    UnsupportedState,
)
from .rk import DenseSolution, solve_rk4, solve_rk45
from .states import (
    ConstantPotentialWave,
    HarmonicOscillator,
    InfiniteSquareWell,
    PotentialStep,
    StateSpec,
)

DEFAULT_NODE_GUARD = 1e-3

# time horizon (bound states) used when hunting for crossings / loop closure
_BOUND_HORIZON = 60.0
_OPEN_PERIODS = 10  # spatial 2k-oscillation periods for scattering states
_CLOSURE_TOL = 1e-6


@dataclass(frozen=True)
class IntegratorSettings:
    method: str = "rk45"  # "rk45" (adaptive embedded) or "rk4" (fixed step)
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = math.inf
    node_guard: float = DEFAULT_NODE_GUARD

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.node_guard <= 0:
            raise ValueError("tolerances and node_guard must be positive")


@dataclass
class Trajectory:
    state: StateSpec
    t: np.ndarray
    x: np.ndarray  # complex positions at accepted steps
    xdot: np.ndarray
    path_constant: float  # |A| at the initial point (nan when no catalog form)
    diagnostics: dict
    dense: DenseSolution

    def sample(self, t):
        """Interpolated positions at arbitrary times within the span."""
        y = self.dense(np.asarray(t, dtype=float))
        return y[..., 0]


@dataclass
class PathCurve:
    state: StateSpec
    s: np.ndarray  # arc length parameter
    x: np.ndarray
    dense: DenseSolution

    def sample(self, s):
        y = self.dense(np.asarray(s, dtype=float))
        return y[..., 0]


@dataclass(frozen=True)
class Crossing:
    x_r0: float
    t: float
    P: float  # unnormalized Born density psi*psi at the crossing
    direction: int  # sign of dx_i/dt at the crossing


@dataclass(frozen=True)
class Verdict:
    kind: str  # "defined" | "overdetermined" | "unreached"
    f: Optional[float] = None


@dataclass
class CrossingSet:
    state: StateSpec
    crossings: Tuple[Crossing, ...]
    verdict: Verdict
    loop_period: Optional[float]  # time for one full loop, None for open curves


def velocity(spec: StateSpec, x: complex, node_guard: float = DEFAULT_NODE_GUARD) -> complex:
    """Complex particle velocity (hbar/(i m)) psi'/psi."""
    x = complex(x)
    if node_guard > 0 and states.node_distance(spec, x) < node_guard:
        raise NodeProximity(f"x={x} lies within {node_guard:g} of a node")
    s = states.evaluate(spec, x)
    u = spec.units
    return (u.hbar / (1j * u.mass)) * (s.dpsi / s.psi)


def velocity_alt(spec: StateSpec, x: complex) -> complex:
    """Velocity via the derivative route 2i(E-V) chi / (hbar chi') with chi = psi'.

    chi' comes from the eigenvalue relation, so this is an independent
    arithmetic path to the same field and is used as its cross-check.
    """
    x = complex(x)
    s = states.evaluate(spec, x)
    u = spec.units
    ev = s.E - s.V
    if s.psi == 0 or ev == 0:
        raise DegeneratePoint(f"psi=0 or E=V at x={x}")
    chi = s.dpsi
    chi_prime = -(2.0 * u.mass / u.hbar**2) * ev * s.psi
    return (2j * ev / u.hbar) * chi / chi_prime


def velocity_derivative(spec: StateSpec, x: complex) -> complex:
    """d(xdot)/dx = (hbar/(i m)) (psi''/psi - (psi'/psi)^2), psi'' from E-V."""
    x = complex(x)
    s = states.evaluate(spec, x)
    if s.psi == 0:
        raise NodeProximity(f"psi vanishes at x={x}")
    u = spec.units
    ratio = s.dpsi / s.psi
    second = -(2.0 * u.mass / u.hbar**2) * (s.E - s.V)
    return (u.hbar / (1j * u.mass)) * (second - ratio * ratio)


def complex_energy(spec: StateSpec, x: complex) -> complex:
    """(1/2) m xdot^2 + V + (hbar/2i) d(xdot)/dx; equals E + 0i pointwise."""
    x = complex(x)
    u = spec.units
    v = velocity(spec, x, node_guard=0.0)
    s = states.evaluate(spec, x)
    if s.psi == 0:
        raise NodeProximity(f"psi vanishes at x={x}")
    return 0.5 * u.mass * v * v + s.V + (u.hbar / 2j) * velocity_derivative(spec, x)


def path_constant(spec: StateSpec, x: complex) -> float:
    """Conserved label |A| of the path through x (catalog closed forms)."""
    x = complex(x)
    xr, xi = x.real, x.imag
    if isinstance(spec, HarmonicOscillator):
        if spec.n == 0:
            return spec.alpha * abs(x)
        if spec.n == 1:
            return abs(spec.alpha**2 * x * x - 1.0)
        raise UnsupportedState(f"no closed-form path constant for oscillator n={spec.n}")
    if isinstance(spec, InfiniteSquareWell):
        c = 2.0 * spec.n * math.pi / spec.a
        return math.sqrt(math.cosh(c * xi) + math.cos(c * xr))
    if isinstance(spec, PotentialStep):
        k, r = spec.k, spec.r
        val = math.exp(-2 * k * xi) + r * r * math.exp(2 * k * xi) - 2 * r * math.cos(2 * k * xr)
        return math.sqrt(max(val, 0.0))
    if isinstance(spec, ConstantPotentialWave):
        return math.exp(-spec.k * xi)
    raise TypeError(f"not a StateSpec: {spec!r}")


def _try_path_constant(spec: StateSpec, x: complex) -> float:
    try:
        return path_constant(spec, x)
    except UnsupportedState:
        return math.nan


def _trajectory_rhs(spec: StateSpec):
    u = spec.units
    coeff = u.hbar / (1j * u.mass)

    def rhs(t, y):
        s = states.evaluate(spec, complex(y[0]))
        if s.psi == 0:
            raise NodeProximity(f"stage evaluation hit a node at x={y[0]}")
        return np.array([coeff * s.dpsi / s.psi], dtype=complex)

    return rhs


def _guard_fn(spec: StateSpec):
    return lambda y: states.node_distance(spec, complex(y[0]))


def _run(spec, rhs, t0, y0, t1, settings: IntegratorSettings) -> DenseSolution:
    guard = _guard_fn(spec)
    if settings.method == "rk4":
        return solve_rk4(rhs, t0, y0, t1, step=settings.max_step, guard=guard,
                         guard_radius=settings.node_guard)
    return solve_rk45(
        rhs, t0, y0, t1,
        rel_tol=settings.rel_tol, abs_tol=settings.abs_tol, max_step=settings.max_step,
        guard=guard, guard_radius=settings.node_guard,
    )


def integrate_trajectory(
    spec: StateSpec,
    x0: complex,
    t_span: Tuple[float, float],
    settings: IntegratorSettings = IntegratorSettings(),
) -> Trajectory:
    """Integrate dx/dt = velocity(x) over t_span with dense output."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be nondegenerate and increasing")
    x0 = complex(x0)
    if states.node_distance(spec, x0) < settings.node_guard:
        raise NodeProximity(f"seed {x0} lies within the node guard")
    sol = _run(spec, _trajectory_rhs(spec), t0, np.array([x0], dtype=complex), t1, settings)
    x = sol.y[:, 0]
    pc0 = _try_path_constant(spec, x0)
    diagnostics = dict(sol.stats)
    if math.isfinite(pc0) and pc0 > 0:
        pcs = np.array([_try_path_constant(spec, complex(z)) for z in x])
        diagnostics["path_constant_drift"] = float(np.max(np.abs(pcs - pc0)) / pc0)
    return Trajectory(
        state=spec, t=sol.t, x=x, xdot=sol.f[:, 0],
        path_constant=pc0, diagnostics=diagnostics, dense=sol,
    )


def integrate_path(
    spec: StateSpec,
    x0: complex,
    arc_length: float,
    settings: IntegratorSettings = IntegratorSettings(),
    arc_step: float = 0.01,
) -> PathCurve:
    """Arc-length parameterized geometric path through x0.

    The direction field xdot/|xdot| is regular wherever the velocity is
    finite and nonzero, so this avoids the dx_i/dx_r singularity on the real
    axis for bound states.
    """
    x0 = complex(x0)
    if arc_length <= 0:
        raise ValueError("arc_length must be positive")
    v0 = velocity(spec, x0, node_guard=settings.node_guard)
    if abs(v0) < 1e-12:
        raise StationaryPoint(f"velocity vanishes at seed {x0}")
    u = spec.units
    coeff = u.hbar / (1j * u.mass)

    def rhs(s, y):
        smp = states.evaluate(spec, complex(y[0]))
        if smp.psi == 0:
            raise NodeProximity(f"stage evaluation hit a node at x={y[0]}")
        v = coeff * smp.dpsi / smp.psi
        av = abs(v)
        if av == 0:
            raise StationaryPoint(f"stationary point reached at x={y[0]}")
        return np.array([v / av], dtype=complex)

    sol = _run(spec, rhs, 0.0, np.array([x0], dtype=complex), arc_length, settings)
    n = max(2, int(math.ceil(arc_length / arc_step)) + 1)
    s_samples = np.linspace(0.0, arc_length, n)
    x_samples = sol(s_samples)[:, 0]
    return PathCurve(state=spec, s=s_samples, x=x_samples, dense=sol)


def _default_horizon(spec: StateSpec) -> float:
    if isinstance(spec, (PotentialStep, ConstantPotentialWave)):
        u = spec.units
        # time to traverse _OPEN_PERIODS spatial periods (pi/k) at speed hbar k/m
        return _OPEN_PERIODS * math.pi * u.mass / (u.hbar * spec.k**2)
    return _BOUND_HORIZON


def _scan_crossings(sol: DenseSolution, refine_tol: float = 1e-12) -> List[Tuple[float, float]]:
    """(t, x_r) of each sign change of x_i, bisected on the dense interpolant."""
    events: List[Tuple[float, float]] = []
    t = sol.t
    for i in range(len(t) - 1):
        sub = np.linspace(t[i], t[i + 1], 9)
        xi = sol(sub)[:, 0].imag
        for j in range(8):
            a, b = sub[j], sub[j + 1]
            fa, fb = xi[j], xi[j + 1]
            if fa == 0.0 and (j > 0 or i > 0):
                continue  # handled as the right endpoint of the previous bracket
            if fa * fb > 0.0:
                continue
            if fa == 0.0 and fb == 0.0:
                continue
            lo, hi, flo = a, b, fa
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = complex(sol(mid)[0]).imag
                if abs(fm) <= refine_tol or hi - lo <= 1e-15 * max(1.0, abs(mid)):
                    lo = hi = mid
                    break
                if flo * fm <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            tc = 0.5 * (lo + hi)
            xc = complex(sol(tc)[0])
            events.append((tc, xc.real))
    return events


def find_real_crossings(
    spec: StateSpec,
    x0: complex,
    settings: IntegratorSettings = IntegratorSettings(),
    horizon: Optional[float] = None,
) -> CrossingSet:
    """Enumerate real-axis crossings of the path through x0 and judge them.

    Closed curves are followed for exactly one loop (detected by recurrence of
    the first crossing with matching direction); open curves are followed over
    a fixed time horizon.  Each crossing carries the boundary density
    P(x_r0) = psi*psi(x_r0); the verdict compares the boundary candidates
    f_j = P(x_r0j) / h(x_r0j, 0).
    """
    from .extended_probability import h_solution  # local import to avoid a cycle
    from .born import born_direct

    x0 = complex(x0)
    if states.node_distance(spec, x0) < settings.node_guard:
        raise NodeProximity(f"seed {x0} lies within the node guard")
    T = horizon if horizon is not None else _default_horizon(spec)
    traj = integrate_trajectory(spec, x0, (0.0, T), settings)
    events = _scan_crossings(traj.dense)
    if abs(x0.imag) <= 1e-13:
        # the seed itself is the first crossing; drop any rescan of t ~ 0
        events = [(0.0, x0.real)] + [e for e in events if e[0] > 1e-9]
    if not events:
        return CrossingSet(spec, (), Verdict("unreached"), None)

    def direction_at(tc: float, xr: float) -> int:
        v = complex(traj.dense(tc)[0])
        vel = velocity(spec, complex(xr, 0.0), node_guard=0.0)
        return 1 if vel.imag >= 0 else -1

    t0c, xr0 = events[0]
    dir0 = direction_at(t0c, xr0)
    scale = max(1.0, abs(xr0))
    loop_period: Optional[float] = None
    unique: List[Tuple[float, float, int]] = [(t0c, xr0, dir0)]
    for tc, xr in events[1:]:
        d = direction_at(tc, xr)
        if abs(xr - xr0) <= _CLOSURE_TOL * scale and d == dir0 and tc - t0c > 1e-3:
            loop_period = tc - t0c
            break
        unique.append((tc, xr, d))
    if loop_period is None:
        # open curve: keep one representative per distinct (x_r, direction)
        dedup: List[Tuple[float, float, int]] = []
        for tc, xr, d in unique:
            if not any(abs(xr - q[1]) <= 1e-9 * max(1.0, abs(q[1])) and d == q[2] for q in dedup):
                dedup.append((tc, xr, d))
        unique = dedup

    crossings = tuple(
        Crossing(x_r0=xr, t=tc, P=born_direct(spec, xr), direction=d) for tc, xr, d in unique
    )

    try:
        f_vals = [c.P / h_solution(spec, complex(c.x_r0, 0.0)) for c in crossings]
        fmax, fmin = max(f_vals), min(f_vals)
        if fmax - fmin <= 1e-6 * max(abs(fmax), abs(fmin)):
            verdict = Verdict("defined", f=float(np.mean(f_vals)))
        else:
            verdict = Verdict("overdetermined")
    except UnsupportedState:
        # no catalog h: crossings exist but consistency cannot be judged
        verdict = Verdict("defined", f=None)
    return CrossingSet(spec, crossings, verdict, loop_period)


def detect_loop(
    spec: StateSpec,
    x0: complex,
    settings: IntegratorSettings = IntegratorSettings(),
    horizon: Optional[float] = None,
) -> Tuple[Trajectory, Optional[float]]:
    """Integrate through x0 and detect closure (return to start, same heading).

    Returns the trajectory over the search horizon and the loop period, or
    None if the curve did not close.
    """
    x0 = complex(x0)
    T = horizon if horizon is not None else _default_horizon(spec)
    traj = integrate_trajectory(spec, x0, (0.0, T), settings)
    d = np.abs(traj.x - x0)
    scale = max(1.0, abs(x0))
    # must leave a neighborhood of the start before a return can count
    departed = np.nonzero(d > 0.1 * scale)[0]
    if len(departed) == 0:
        return traj, None
    i0 = departed[0]
    v0 = traj.xdot[0] / abs(traj.xdot[0])
    for i in range(i0, len(d) - 2):
        if not (d[i + 1] < 0.1 * scale and d[i + 1] <= d[i] and d[i + 1] <= d[i + 2]):
            continue
        # refine the closest approach inside [t_i, t_{i+2}]
        lo = traj.t[i]
        hi = traj.t[i + 2]
        for _ in range(120):
            m1 = lo + (hi - lo) / 3
            m2 = hi - (hi - lo) / 3
            if abs(complex(traj.dense(m1)[0]) - x0) < abs(complex(traj.dense(m2)[0]) - x0):
                hi = m2
            else:
                lo = m1
        tc = 0.5 * (lo + hi)
        xc = complex(traj.dense(tc)[0])
        if abs(xc - x0) <= _CLOSURE_TOL * scale:
            vc = velocity(spec, xc, node_guard=0.0)
            if (vc / abs(vc) / v0).real > 0.99:
                return traj, float(tc)
    return traj, None
