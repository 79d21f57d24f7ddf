"""Unit tests for Born-density recovery from the velocity field."""

import math

import numpy as np
import pytest

from cqtraj.born import (
    RealLineGrid,
    born_direct,
    born_direct_grid,
    born_from_velocity,
    default_real_grid,
    expectation,
)
from cqtraj.errors import NodeOnGrid
from cqtraj.states import HarmonicOscillator, InfiniteSquareWell, PotentialStep


def _max_dev(spec, n=601):
    pts = default_real_grid(spec, n)
    pv = born_from_velocity(spec, pts)
    pd = born_direct_grid(spec, pts).normalize()
    return float(np.max(np.abs(pv.values - pd.values))), float(np.max(pd.values))


def test_recovery_oscillator():
    for n in (0, 1, 2):
        dev, peak = _max_dev(HarmonicOscillator(n=n))
        assert dev <= 1e-10 * peak


def test_recovery_well_and_step():
    dev, peak = _max_dev(InfiniteSquareWell(n=2, a=math.pi))
    assert dev <= 1e-10 * peak
    dev, peak = _max_dev(PotentialStep(k=1.0, r=0.5))
    assert dev <= 1e-10 * peak


def test_born_direct_values():
    spec = HarmonicOscillator(n=1)
    # psi = 2x e^{-x^2/2}: density ratio between two abscissae is exact
    r = born_direct(spec, math.sqrt(3.0)) / born_direct(spec, math.sqrt(2.0))
    assert r == pytest.approx(1.5 * math.exp(-1.0))


def test_default_grid_avoids_nodes():
    spec = HarmonicOscillator(n=3)
    pts = default_real_grid(spec, 801)
    assert np.all(np.diff(pts) > 0)
    from cqtraj.states import node_distance

    assert float(np.min(node_distance(spec, pts.astype(complex)))) >= 1e-3 * (1 - 1e-9)


def test_node_on_grid_rejected():
    spec = HarmonicOscillator(n=1)
    with pytest.raises(NodeOnGrid):
        born_from_velocity(spec, np.linspace(-1.0, 1.0, 21))  # contains x=0


def test_anchor_must_be_grid_point():
    spec = HarmonicOscillator(n=0)
    pts = np.linspace(-3.0, 3.0, 201)
    with pytest.raises(ValueError):
        born_from_velocity(spec, pts, anchor=0.123456)
    born_from_velocity(spec, pts, anchor=float(pts[100]))


def test_normalization_and_moments():
    spec = HarmonicOscillator(n=0)
    pts = default_real_grid(spec, 2001)
    grid = born_from_velocity(spec, pts)
    assert np.trapezoid(grid.values, grid.points) == pytest.approx(1.0, abs=1e-12)
    mean = expectation(spec, lambda xr, v: xr, grid)
    var = expectation(spec, lambda xr, v: xr * xr, grid)
    assert abs(mean) < 1e-12
    assert var.real == pytest.approx(0.5, abs=1e-9)  # <x^2> = 1/(2 alpha^2)
    # on the real axis the ground-state velocity is purely imaginary
    vbar = expectation(spec, lambda xr, v: v, grid)
    assert abs(vbar.real) < 1e-12


def test_expectation_requires_normalized_grid():
    spec = HarmonicOscillator(n=0)
    raw = born_direct_grid(spec, np.linspace(-3.0, 3.0, 101))
    with pytest.raises(ValueError):
        expectation(spec, lambda xr, v: xr, raw)


def test_grid_must_increase():
    spec = HarmonicOscillator(n=0)
    with pytest.raises(ValueError):
        born_from_velocity(spec, np.array([0.0, 1.0, 0.5]))


def test_realline_grid_normalize_idempotent_scale():
    g = RealLineGrid(np.linspace(0, 1, 11), np.full(11, 3.0)).normalize()
    assert np.allclose(g.values, 1.0)
    assert g.normalized
