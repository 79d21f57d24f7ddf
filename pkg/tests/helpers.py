"""Shared numerical utilities for the test suite."""

from __future__ import annotations

import cmath
import math
from typing import List, Tuple

import numpy as np
from scipy.spatial import cKDTree

from cqtraj import states
from cqtraj.states import (
    ConstantPotentialWave,
    HarmonicOscillator,
    InfiniteSquareWell,
    PotentialStep,
    StateSpec,
)


def catalog_states() -> List[StateSpec]:
    """One representative of each closed-form family."""
    return [
        HarmonicOscillator(n=0),
        HarmonicOscillator(n=1),
        InfiniteSquareWell(n=1, a=math.pi),
        PotentialStep(k=1.0, r=1.0 / math.sqrt(2.0)),
        ConstantPotentialWave(k=1.0),
    ]


def sample_window(spec: StateSpec) -> Tuple[float, float, float, float]:
    if isinstance(spec, HarmonicOscillator):
        s = 2.5 / spec.alpha
        return (-s, s, -s, s)
    if isinstance(spec, InfiniteSquareWell):
        return (0.05 * spec.a, 0.95 * spec.a, -1.0, 1.0)
    return (0.0, 2.0 * math.pi / spec.k, -1.0, 1.0)


def random_offnode_points(spec: StateSpec, rng: np.random.Generator, n: int,
                          min_node_distance: float = 0.05) -> np.ndarray:
    """n random complex points in the state's natural window, off the nodes
    and away from classical turning points (where E = V)."""
    xr0, xr1, xi0, xi1 = sample_window(spec)
    e = states.energy(spec)
    out: List[complex] = []
    while len(out) < n:
        z = complex(rng.uniform(xr0, xr1), rng.uniform(xi0, xi1))
        if states.node_distance(spec, z) < min_node_distance:
            continue
        v_pot = states.evaluate(spec, z).V
        if abs(e - v_pot) < 1e-3 * max(1.0, abs(e)):
            continue
        out.append(z)
    return np.array(out, dtype=complex)


def polyline_length(x: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(x))))


def _directed_hausdorff(p: np.ndarray, q: np.ndarray) -> float:
    """max over points of p of the exact distance to the polyline q.

    The nearest segment is found among the few segments adjacent to the
    nearest vertex (valid because both curves are densely sampled), so the
    whole computation vectorizes.
    """
    tree = cKDTree(np.column_stack([q.real, q.imag]))
    _, idxs = tree.query(np.column_stack([p.real, p.imag]), k=6)
    m = len(q)
    best = np.full(len(p), np.inf)
    for col in range(idxs.shape[1]):
        # windows around several near vertices: where the polyline revisits a
        # neighborhood (e.g. a loop overshoot), the single nearest vertex can
        # belong to the wrong pass
        for off in range(-3, 3):
            j = np.clip(idxs[:, col] + off, 0, m - 2)
            a, b = q[j], q[j + 1]
            ab = b - a
            denom = np.abs(ab) ** 2
            ap = p - a
            t = np.zeros(len(p))
            nz = denom > 0
            t[nz] = (ap[nz].real * ab[nz].real + ap[nz].imag * ab[nz].imag) / denom[nz]
            t = np.clip(t, 0.0, 1.0)
            best = np.minimum(best, np.abs(p - (a + t * ab)))
    return float(np.max(best))


def polyline_hausdorff(p: np.ndarray, q: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two densely sampled polylines."""
    return max(_directed_hausdorff(p, q), _directed_hausdorff(q, p))


def ho1_analytic_loop(a_label: float, t: np.ndarray, x0: complex) -> np.ndarray:
    """Closed-form oscillator n=1 loop (alpha = omega = 1): x^2 - 1 = A e^{2it}.

    The square-root branch is tracked by continuity from x0, which must
    satisfy x0^2 - 1 = A.
    """
    w = 1.0 + a_label * np.exp(2j * np.asarray(t, dtype=float))
    out = np.empty(len(w), dtype=complex)
    prev = complex(x0)
    for i, wi in enumerate(w):
        root = cmath.sqrt(wi)
        out[i] = root if abs(root - prev) <= abs(-root - prev) else -root
        prev = out[i]
    return out
