"""Unit tests for the velocity field and trajectory integration."""

import math

import numpy as np
import pytest

from cqtraj import dynamics, states
from cqtraj.dynamics import (
    IntegratorSettings,
    complex_energy,
    detect_loop,
    find_real_crossings,
    integrate_path,
    integrate_trajectory,
    path_constant,
    velocity,
    velocity_alt,
)
from cqtraj.errors import NodeProximity
from cqtraj.states import HarmonicOscillator, InfiniteSquareWell, PotentialStep

from helpers import catalog_states, random_offnode_points

HO0 = HarmonicOscillator(n=0)
HO1 = HarmonicOscillator(n=1)


def test_velocity_ho1_closed_form():
    # psi = 2x e^{-x^2/2}  =>  xdot = (1/i)(1/x - x) = i (x - 1/x)
    for x in (1.5 + 0.0j, 0.7 + 0.9j, -2.0 + 0.3j):
        assert velocity(HO1, x) == pytest.approx(1j * (x - 1.0 / x))


def test_velocity_raises_inside_node_guard():
    with pytest.raises(NodeProximity):
        velocity(HO1, 1e-4 + 0j)
    velocity(HO1, 1e-4 + 0j, node_guard=0.0)  # guard can be disabled


def test_velocity_alt_agrees():
    rng = np.random.default_rng(7)
    for spec in catalog_states():
        for x in random_offnode_points(spec, rng, 50):
            v = velocity(spec, complex(x), node_guard=0.0)
            assert velocity_alt(spec, complex(x)) == pytest.approx(v, rel=1e-12)


def test_complex_energy_identity():
    rng = np.random.default_rng(11)
    for spec in catalog_states():
        e = states.energy(spec)
        for x in random_offnode_points(spec, rng, 50):
            assert complex_energy(spec, complex(x)) == pytest.approx(e, abs=1e-10 * max(1, e))


def test_ground_state_trajectories_are_circles():
    # xdot = i x: the seed just rotates, period 2 pi
    traj = integrate_trajectory(HO0, 1.0 + 0.5j, (0.0, 2.0 * math.pi))
    ts = np.linspace(0.0, 2.0 * math.pi, 101)
    expected = (1.0 + 0.5j) * np.exp(1j * ts)
    assert np.max(np.abs(traj.sample(ts) - expected)) < 1e-8
    assert traj.diagnostics["path_constant_drift"] < 1e-8


def test_first_excited_half_period_antipode():
    x0 = 1.5 + 0.0j
    traj = integrate_trajectory(HO1, x0, (0.0, 2.0 * math.pi))
    assert complex(traj.sample(math.pi)) == pytest.approx(-x0, abs=1e-7)
    assert complex(traj.sample(2.0 * math.pi)) == pytest.approx(x0, abs=1e-7)


def test_path_constants_catalog():
    assert path_constant(HO0, 0.6 + 0.8j) == pytest.approx(1.0)
    assert path_constant(HO1, math.sqrt(3.0) + 0j) == pytest.approx(2.0)
    well = InfiniteSquareWell(n=1, a=math.pi)
    assert path_constant(well, math.pi / 2 + 0j) == pytest.approx(0.0, abs=1e-12)
    step = PotentialStep(k=1.0, r=0.5)
    # on the real axis at 2kx = pi the constant hits its ceiling 1 + r
    assert path_constant(step, math.pi / 2 + 0j) == pytest.approx(1.5)


def test_path_constant_drift_along_trajectories():
    for spec, seed, span in (
        (HO1, 2.0 + 0.0j, (0.0, 2.0 * math.pi)),
        (InfiniteSquareWell(n=1, a=math.pi), 1.0 + 0.2j, (0.0, 10.0)),
        (PotentialStep(k=1.0, r=0.5), 0.5 + 0.1j, (0.0, 10.0)),
    ):
        traj = integrate_trajectory(spec, seed, span)
        assert traj.diagnostics["path_constant_drift"] < 1e-8


def test_integrate_path_is_arc_length_parameterized():
    curve = integrate_path(HO0, 1.0 + 0.0j, 3.0, arc_step=0.01)
    seg = np.abs(np.diff(curve.x))
    ds = np.diff(curve.s)
    assert np.max(np.abs(seg - ds)) < 1e-6  # unit speed up to sampling error
    # the ground-state path through 1 is the unit circle
    assert np.max(np.abs(np.abs(curve.x) - 1.0)) < 1e-6


def test_detect_loop_period():
    traj, period = detect_loop(HO0, 1.2 + 0.0j, horizon=10.0)
    assert period == pytest.approx(2.0 * math.pi, abs=1e-6)
    traj, period = detect_loop(HO1, math.sqrt(3.0) + 0j, horizon=10.0)
    assert period == pytest.approx(2.0 * math.pi, abs=1e-6)


def test_crossings_ho1_outer_loop_defined():
    cs = find_real_crossings(HO1, math.sqrt(3.0) + 0j, horizon=10.0)
    assert cs.verdict.kind == "defined"
    assert cs.loop_period == pytest.approx(2.0 * math.pi, abs=1e-6)
    xs = sorted(c.x_r0 for c in cs.crossings)
    assert xs == pytest.approx([-math.sqrt(3.0), math.sqrt(3.0)], abs=1e-7)


def test_crossings_ho1_subnest_overdetermined():
    # label 0.5 < 1: the loop crosses at sqrt(1.5) and sqrt(0.5) with
    # conflicting boundary values
    cs = find_real_crossings(HO1, math.sqrt(1.5) + 0j, horizon=10.0)
    assert cs.verdict.kind == "overdetermined"
    xs = sorted(c.x_r0 for c in cs.crossings)
    assert xs == pytest.approx([math.sqrt(0.5), math.sqrt(1.5)], abs=1e-7)


def test_crossings_well_high_curves_unreached():
    well = InfiniteSquareWell(n=1, a=math.pi)
    # cosh(2 x_i) + cos(2 x_r) > 2 never reaches the axis
    cs = find_real_crossings(well, 1.2 + 1.5j, horizon=20.0)
    assert cs.verdict.kind == "unreached"
    assert cs.crossings == ()


def test_crossings_step_defined_constant_f():
    step = PotentialStep(k=1.0, r=1.0 / math.sqrt(2.0))
    cs = find_real_crossings(step, 0.8 + 0.0j, horizon=40.0)
    assert cs.verdict.kind == "defined"
    assert cs.verdict.f == pytest.approx(1.0, rel=1e-6)


def test_trajectory_rejects_bad_span_and_node_seed():
    with pytest.raises(ValueError):
        integrate_trajectory(HO0, 1.0, (1.0, 1.0))
    with pytest.raises(NodeProximity):
        integrate_trajectory(HO1, 5e-4 + 0j, (0.0, 1.0))


def test_rk4_fallback_matches_rk45():
    settings = IntegratorSettings(method="rk4", max_step=1e-3)
    traj4 = integrate_trajectory(HO0, 1.0 + 0.0j, (0.0, 1.0), settings)
    traj5 = integrate_trajectory(HO0, 1.0 + 0.0j, (0.0, 1.0))
    assert complex(traj4.x[-1]) == pytest.approx(complex(traj5.x[-1]), abs=1e-9)
