"""Born probability on the real line, recovered from the velocity field.

The central identity: on the real axis the imaginary velocity component obeys
xdot_i = -(hbar/2m) d ln(psi*psi)/dx_r, so exponentiating the cumulative
integral of xdot_i reproduces the psi*psi density up to one constant per
node-free segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import states
from .dynamics import DEFAULT_NODE_GUARD, velocity
from .errors import NodeOnGrid
from .states import (
    ConstantPotentialWave,
    HarmonicOscillator,
    InfiniteSquareWell,
    PotentialStep,
    StateSpec,
)

_SIMPSON_TOL = 1e-12


@dataclass
class RealLineGrid:
    points: np.ndarray
    values: np.ndarray
    normalized: bool = False

    def normalize(self) -> "RealLineGrid":
        total = np.trapezoid(self.values, self.points)
        return RealLineGrid(self.points, self.values / total, normalized=True)


def born_direct(spec: StateSpec, x_r: float) -> float:
    """Unnormalized psi*psi on the real axis."""
    psi = states.evaluate(spec, complex(x_r, 0.0)).psi
    return abs(psi) ** 2


def _xidot(spec: StateSpec, x_r: float) -> float:
    return velocity(spec, complex(x_r, 0.0), node_guard=0.0).imag


def _adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                      tol: float = _SIMPSON_TOL) -> float:
    """Classic recursive adaptive Simpson quadrature (iterative stack form)."""
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fb, fm, whole, tol, 0)]
    while stack:
        a, b, fa, fb, fm, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth > 48 or abs(left + right - whole) <= 15.0 * tol:
            total += left + right + (left + right - whole) / 15.0
        else:
            stack.append((a, m, fa, fm, flm, left, 0.5 * tol, depth + 1))
            stack.append((m, b, fm, fb, frm, right, 0.5 * tol, depth + 1))
    return total


def real_axis_nodes(spec: StateSpec, lo: float, hi: float) -> List[float]:
    zs = states.nodes(spec, (lo, hi, -1e-9, 1e-9))
    return [z.real for z in zs]


def default_real_grid(spec: StateSpec, n: int = 2001,
                      node_guard: float = DEFAULT_NODE_GUARD) -> np.ndarray:
    """Real-line grid over the state's natural span, dodging psi nodes.

    The span covers essentially all probability: +-8/alpha for the
    oscillator, the box for the well, four spatial periods for scattering
    states.  Points within node_guard of a node are excluded; each node-free
    segment gets its own linspace share, proportional to its length.
    """
    if isinstance(spec, HarmonicOscillator):
        lo, hi = -8.0 / spec.alpha, 8.0 / spec.alpha
    elif isinstance(spec, InfiniteSquareWell):
        lo, hi = 0.0, spec.a
    elif isinstance(spec, (PotentialStep, ConstantPotentialWave)):
        lo, hi = 0.0, 4.0 * math.pi / spec.k
    else:
        raise TypeError(f"not a StateSpec: {spec!r}")

    cuts = real_axis_nodes(spec, lo, hi)
    edges = sorted(set([lo, hi] + cuts))

    def is_node(e: float) -> bool:
        return any(abs(e - c) < 1e-12 for c in cuts)

    segments: List[Tuple[float, float]] = []
    for i in range(len(edges) - 1):
        a = edges[i] + (node_guard if is_node(edges[i]) else 0.0)
        b = edges[i + 1] - (node_guard if is_node(edges[i + 1]) else 0.0)
        if b > a:
            segments.append((a, b))
    total = sum(b - a for a, b in segments)
    pts: List[np.ndarray] = []
    remaining = n
    for idx, (a, b) in enumerate(segments):
        if idx == len(segments) - 1:
            m = remaining
        else:
            m = max(2, round(n * (b - a) / total))
        remaining -= m
        pts.append(np.linspace(a, b, m))
    return np.concatenate(pts)


def _segment_slices(spec: StateSpec, points: np.ndarray) -> List[slice]:
    cuts = real_axis_nodes(spec, float(points[0]) - 1.0, float(points[-1]) + 1.0)
    inner = [c for c in cuts if points[0] < c < points[-1]]
    bounds = [0]
    for c in inner:
        bounds.append(int(np.searchsorted(points, c)))
    bounds.append(len(points))
    return [slice(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)
            if bounds[i + 1] > bounds[i]]


def born_from_velocity(
    spec: StateSpec,
    points: Sequence[float],
    anchor: Optional[float] = None,
    node_guard: float = DEFAULT_NODE_GUARD,
) -> RealLineGrid:
    """P(x_r) from exp(-(2m/hbar) int xdot_i dx_r), normalized on the grid.

    The exponent integral diverges logarithmically at each node, so the line
    is processed per node-free segment; each segment's free constant is fixed
    by matching psi*psi at one interior point (the segment midpoint, or the
    anchor for the segment containing it).
    """
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) <= 0):
        raise ValueError("grid points must be strictly increasing")
    dist = states.node_distance(spec, pts.astype(complex))
    if np.any(dist < node_guard * (1.0 - 1e-9)):
        bad = pts[np.argmin(dist)]
        raise NodeOnGrid(f"grid point {bad:g} lies within {node_guard:g} of a node")
    if anchor is not None and not np.any(np.isclose(pts, anchor, rtol=0, atol=1e-12)):
        raise ValueError("anchor must be one of the grid points")

    u = spec.units
    coeff = -2.0 * u.mass / u.hbar
    values = np.empty_like(pts)
    f = lambda xr: _xidot(spec, xr)
    for seg in _segment_slices(spec, pts):
        seg_pts = pts[seg]
        increments = np.array(
            [_adaptive_simpson(f, seg_pts[i], seg_pts[i + 1]) for i in range(len(seg_pts) - 1)]
        )
        log_raw = coeff * np.concatenate([[0.0], np.cumsum(increments)])
        if anchor is not None and seg_pts[0] - 1e-12 <= anchor <= seg_pts[-1] + 1e-12:
            ref = int(np.argmin(np.abs(seg_pts - anchor)))
        else:
            ref = len(seg_pts) // 2
        shift = math.log(born_direct(spec, float(seg_pts[ref]))) - log_raw[ref]
        values[seg] = np.exp(log_raw + shift)
    grid = RealLineGrid(pts, values, normalized=False)
    return grid.normalize()


def born_direct_grid(spec: StateSpec, points: Sequence[float]) -> RealLineGrid:
    pts = np.asarray(points, dtype=float)
    vals = np.array([born_direct(spec, float(p)) for p in pts])
    return RealLineGrid(pts, vals, normalized=False)


def expectation(
    spec: StateSpec,
    observable: Callable[[float, complex], complex],
    grid: RealLineGrid,
) -> complex:
    """Trapezoid integral of observable(x_r, xdot(x_r)) against a normalized P."""
    if not grid.normalized:
        raise ValueError("expectation needs a normalized grid")
    ovals = np.array(
        [observable(float(xr), velocity(spec, complex(xr, 0.0), node_guard=0.0))
         for xr in grid.points],
        dtype=complex,
    )
    return complex(np.trapezoid(ovals * grid.values, grid.points))
