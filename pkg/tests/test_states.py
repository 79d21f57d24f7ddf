"""Unit tests for the closed-form state catalog."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqtraj import states
from cqtraj.errors import ParseError, ValidationError
from cqtraj.states import (
    ConstantPotentialWave,
    HarmonicOscillator,
    InfiniteSquareWell,
    PotentialStep,
    UnitSystem,
)


def test_oscillator_ground_state_closed_form():
    spec = HarmonicOscillator(n=0)
    for x in (0.3 + 0.7j, -1.2 + 0.1j, 2.0 - 0.5j):
        s = states.evaluate(spec, x)
        assert s.psi == pytest.approx(cmath.exp(-0.5 * x * x))
        assert s.dpsi == pytest.approx(-x * cmath.exp(-0.5 * x * x))
        assert s.V == pytest.approx(0.5 * x * x)
    assert states.energy(spec) == pytest.approx(0.5)


def test_oscillator_first_excited_closed_form():
    spec = HarmonicOscillator(n=1)
    x = 0.9 - 0.4j
    s = states.evaluate(spec, x)
    assert s.psi == pytest.approx(2.0 * x * cmath.exp(-0.5 * x * x))
    assert s.dpsi == pytest.approx((2.0 - 2.0 * x * x) * cmath.exp(-0.5 * x * x))
    assert states.energy(spec) == pytest.approx(1.5)


def test_oscillator_alpha_consistency_enforced():
    with pytest.raises(ValidationError):
        HarmonicOscillator(n=0, alpha=2.0, omega=1.0)
    HarmonicOscillator(n=0, alpha=2.0, omega=4.0)  # alpha^2 = m omega / hbar


def test_well_closed_form_and_energy():
    spec = InfiniteSquareWell(n=2, a=math.pi)
    x = 1.0 + 0.3j
    s = states.evaluate(spec, x)
    amp = math.sqrt(2.0 / math.pi)
    assert s.psi == pytest.approx(amp * cmath.sin(2.0 * x))
    assert s.dpsi == pytest.approx(2.0 * amp * cmath.cos(2.0 * x))
    assert states.energy(spec) == pytest.approx(2.0)


def test_step_and_wave_closed_forms():
    step = PotentialStep(k=2.0, r=0.5)
    x = 0.4 + 0.2j
    s = states.evaluate(step, x)
    assert s.psi == pytest.approx(cmath.exp(2j * x) + 0.5 * cmath.exp(-2j * x))
    wave = ConstantPotentialWave(k=3.0, v0=1.0)
    s = states.evaluate(wave, x)
    assert s.psi == pytest.approx(cmath.exp(3j * x))
    assert states.energy(wave) == pytest.approx(4.5 + 1.0)


def test_psi_second_matches_finite_difference():
    h = 1e-5
    for spec in (HarmonicOscillator(n=2), InfiniteSquareWell(n=3, a=2.0),
                 PotentialStep(k=1.0, r=0.3)):
        x = 0.7 + 0.4j
        num = (states.evaluate(spec, x + h).psi - 2.0 * states.evaluate(spec, x).psi
               + states.evaluate(spec, x - h).psi) / h**2
        assert states.psi_second(spec, x) == pytest.approx(num, rel=1e-5)


def test_nodes_are_zeros_of_psi():
    for spec in (HarmonicOscillator(n=3), InfiniteSquareWell(n=2, a=math.pi),
                 PotentialStep(k=1.0, r=1.0 / math.sqrt(2.0))):
        zs = states.nodes(spec, (-10.0, 10.0, -2.0, 2.0))
        assert zs, f"no nodes found for {spec}"
        for z in zs:
            scale = max(1.0, abs(states.evaluate(spec, z + 0.5).psi))
            assert abs(states.evaluate(spec, z).psi) < 1e-12 * scale


def test_well_node_lattice():
    spec = InfiniteSquareWell(n=2, a=2.0)
    zs = states.nodes(spec, (0.0, 2.0, -1.0, 1.0))
    assert [z.real for z in zs] == pytest.approx([0.0, 1.0, 2.0])


def test_node_distance_scalar_and_array():
    spec = HarmonicOscillator(n=1)  # single node at the origin
    assert states.node_distance(spec, 0.3 + 0.4j) == pytest.approx(0.5)
    arr = np.array([0.3 + 0.4j, 1.0 + 0.0j])
    assert states.node_distance(spec, arr) == pytest.approx([0.5, 1.0])
    assert math.isinf(states.node_distance(spec=ConstantPotentialWave(k=1.0), x=1j))


def test_parse_state_examples():
    spec = states.parse_state("ho:n=1,alpha=1,omega=1")
    assert spec == HarmonicOscillator(n=1)
    spec = states.parse_state("well:n=2,a=3.5")
    assert spec == InfiniteSquareWell(n=2, a=3.5)
    spec = states.parse_state("step:k=2,r=0.5")
    assert spec == PotentialStep(k=2.0, r=0.5)
    spec = states.parse_state("wave:k=1.5")
    assert spec == ConstantPotentialWave(k=1.5)


def test_parse_state_rejects_garbage():
    for bad in ("nope:n=1", "ho:n=1.5", "well:n=1", "ho:n=1,bogus=2", "step:k=1,r=1.2"):
        with pytest.raises((ParseError, ValidationError)):
            states.parse_state(bad)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=0, max_value=6),
    omega=st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
)
def test_format_parse_round_trip_oscillator(n, omega):
    spec = HarmonicOscillator(n=n, alpha=math.sqrt(omega), omega=omega)
    assert states.parse_state(states.format_state(spec)) == spec


@settings(max_examples=40, deadline=None)
@given(
    k=st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
    r=st.floats(min_value=0.0, max_value=0.99, allow_nan=False),
)
def test_format_parse_round_trip_step(k, r):
    spec = PotentialStep(k=k, r=r)
    assert states.parse_state(states.format_state(spec)) == spec


def test_units_propagate():
    u = UnitSystem(hbar=2.0, mass=3.0)
    spec = states.parse_state("well:n=1,a=1,hbar=2,mass=3")
    assert spec.units == u
    assert states.energy(spec) == pytest.approx(math.pi**2 * 4.0 / 6.0)
