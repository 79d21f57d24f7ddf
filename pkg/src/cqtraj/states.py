"""Closed-form catalog of stationary states, evaluable at complex positions.

Every state supplies psi, dpsi/dx, the potential V and the real energy E at
arbitrary complex x (the eigenfunctions are continued analytically; they are
entire functions, so evaluation never fails).  Conventions are unnormalized:

    harmonic oscillator   psi_n = H_n(alpha x) exp(-alpha^2 x^2 / 2)
    infinite square well  psi_n = sqrt(2/a) sin(n pi x / a)
    potential step        psi   = exp(ikx) + r exp(-ikx)   (V = 0 region)
    constant-V wave       psi   = exp(ikx)
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0.0 and self.mass > 0.0):
            raise ValidationError("hbar and mass must be positive")


@dataclass(frozen=True)
class WavefunctionSample:
    psi: complex
    dpsi: complex
    V: complex
    E: float


@dataclass(frozen=True)
class HarmonicOscillator:
    n: int
    alpha: float = 1.0
    omega: float = 1.0
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self):
        problems = []
        if int(self.n) != self.n or self.n < 0:
            problems.append("harmonic oscillator n must be a non-negative integer")
        if self.alpha <= 0.0:
            problems.append("alpha must be positive")
        if self.omega <= 0.0:
            problems.append("omega must be positive")
        if not problems:
            target = self.units.mass * self.omega / self.units.hbar
            if abs(self.alpha**2 - target) > 1e-12 * max(1.0, target):
                problems.append(
                    "alpha^2 = %g but m*omega/hbar = %g" % (self.alpha**2, target)
                )
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class InfiniteSquareWell:
    n: int
    a: float
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self):
        problems = []
        if int(self.n) != self.n or self.n < 1:
            problems.append("square well n must be a positive integer")
        if self.a <= 0.0:
            problems.append("well width a must be positive")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class PotentialStep:
    k: float
    r: float
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self):
        problems = []
        if self.k <= 0.0:
            problems.append("wavenumber k must be positive")
        if not (0.0 <= self.r < 1.0):
            problems.append("reflection amplitude r must satisfy 0 <= r < 1")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class ConstantPotentialWave:
    k: float
    v0: float = 0.0
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValidationError("wavenumber k must be positive")


StateSpec = Union[HarmonicOscillator, InfiniteSquareWell, PotentialStep, ConstantPotentialWave]


@lru_cache(maxsize=64)
def _hermite_roots(n: int) -> Tuple[float, ...]:
    if n == 0:
        return ()
    return tuple(np.polynomial.hermite.hermgauss(n)[0])


def _hermite_pair(n: int, u: complex) -> Tuple[complex, complex]:
    """H_n(u) and H_{n-1}(u), physicists' convention, three-term recurrence."""
    if n == 0:
        return 1.0 + 0j, 0j
    hm, h = 1.0 + 0j, 2.0 * u
    for k in range(1, n):
        hm, h = h, 2.0 * u * h - 2.0 * k * hm
    return h, hm


def energy(spec: StateSpec) -> float:
    u = spec.units
    if isinstance(spec, HarmonicOscillator):
        return (spec.n + 0.5) * u.hbar * spec.omega
    if isinstance(spec, InfiniteSquareWell):
        return spec.n**2 * math.pi**2 * u.hbar**2 / (2.0 * u.mass * spec.a**2)
    if isinstance(spec, PotentialStep):
        return u.hbar**2 * spec.k**2 / (2.0 * u.mass)
    if isinstance(spec, ConstantPotentialWave):
        return u.hbar**2 * spec.k**2 / (2.0 * u.mass) + spec.v0
    raise TypeError(f"not a StateSpec: {spec!r}")


def evaluate(spec: StateSpec, x: complex) -> WavefunctionSample:
    """psi, dpsi/dx, V and E at a complex position."""
    x = complex(x)
    u = spec.units
    if isinstance(spec, HarmonicOscillator):
        a = spec.alpha
        w = a * x
        hn, hnm1 = _hermite_pair(spec.n, w)
        g = cmath.exp(-0.5 * w * w)
        psi = hn * g
        dpsi = a * (2.0 * spec.n * hnm1 - w * hn) * g
        V = 0.5 * u.mass * spec.omega**2 * x * x
        return WavefunctionSample(psi, dpsi, V, energy(spec))
    if isinstance(spec, InfiniteSquareWell):
        c = spec.n * math.pi / spec.a
        amp = math.sqrt(2.0 / spec.a)
        psi = amp * cmath.sin(c * x)
        dpsi = amp * c * cmath.cos(c * x)
        return WavefunctionSample(psi, dpsi, 0.0 + 0j, energy(spec))
    if isinstance(spec, PotentialStep):
        k = spec.k
        ep = cmath.exp(1j * k * x)
        em = cmath.exp(-1j * k * x)
        psi = ep + spec.r * em
        dpsi = 1j * k * (ep - spec.r * em)
        return WavefunctionSample(psi, dpsi, 0.0 + 0j, energy(spec))
    if isinstance(spec, ConstantPotentialWave):
        psi = cmath.exp(1j * spec.k * x)
        return WavefunctionSample(psi, 1j * spec.k * psi, complex(spec.v0), energy(spec))
    raise TypeError(f"not a StateSpec: {spec!r}")


def psi_second(spec: StateSpec, x: complex, sample: WavefunctionSample | None = None) -> complex:
    """d^2 psi / dx^2 via the eigenvalue relation psi'' = -(2m/hbar^2)(E - V) psi."""
    s = sample if sample is not None else evaluate(spec, x)
    u = spec.units
    return -(2.0 * u.mass / u.hbar**2) * (s.E - s.V) * s.psi


def nodes(spec: StateSpec, window: Tuple[float, float, float, float]) -> List[complex]:
    """All zeros of psi inside the rectangle (xr_min, xr_max, xi_min, xi_max)."""
    xr0, xr1, xi0, xi1 = window
    out: List[complex] = []
    if isinstance(spec, HarmonicOscillator):
        if xi0 <= 0.0 <= xi1:
            for root in _hermite_roots(spec.n):
                z = root / spec.alpha
                if xr0 <= z <= xr1:
                    out.append(complex(z, 0.0))
    elif isinstance(spec, InfiniteSquareWell):
        if xi0 <= 0.0 <= xi1:
            step = spec.a / spec.n
            j0 = math.ceil(xr0 / step - 1e-12)
            j1 = math.floor(xr1 / step + 1e-12)
            for j in range(j0, j1 + 1):
                out.append(complex(j * step, 0.0))
    elif isinstance(spec, PotentialStep):
        if spec.r > 0.0:
            # exp(2ikx) = -r  =>  x = (2j+1) pi/(2k) + i ln(1/r)/(2k)
            yi = -math.log(spec.r) / (2.0 * spec.k)
            if xi0 <= yi <= xi1:
                step = math.pi / spec.k
                off = math.pi / (2.0 * spec.k)
                j0 = math.ceil((xr0 - off) / step - 1e-12)
                j1 = math.floor((xr1 - off) / step + 1e-12)
                for j in range(j0, j1 + 1):
                    out.append(complex(off + j * step, yi))
    return sorted(out, key=lambda z: (z.real, z.imag))


def node_distance(spec: StateSpec, x):
    """Distance from x to the nearest zero of psi (inf if none exist).

    Accepts a complex scalar or a complex ndarray.
    """
    xr = np.real(x)
    xi = np.imag(x)
    if isinstance(spec, HarmonicOscillator):
        roots = _hermite_roots(spec.n)
        if not roots:
            return np.full_like(np.asarray(xr, dtype=float), np.inf) if np.ndim(x) else math.inf
        d = np.min(
            [np.hypot(xr - root / spec.alpha, xi) for root in roots], axis=0
        )
        return float(d) if np.ndim(x) == 0 else d
    if isinstance(spec, InfiniteSquareWell):
        step = spec.a / spec.n
        t = np.mod(xr, step)
        dr = np.minimum(t, step - t)
        d = np.hypot(dr, xi)
        return float(d) if np.ndim(x) == 0 else d
    if isinstance(spec, PotentialStep):
        if spec.r == 0.0:
            return np.full_like(np.asarray(xr, dtype=float), np.inf) if np.ndim(x) else math.inf
        yi = -math.log(spec.r) / (2.0 * spec.k)
        step = math.pi / spec.k
        t = np.mod(xr - 0.5 * step, step)
        dr = np.minimum(t, step - t)
        d = np.hypot(dr, xi - yi)
        return float(d) if np.ndim(x) == 0 else d
    if isinstance(spec, ConstantPotentialWave):
        return np.full_like(np.asarray(xr, dtype=float), np.inf) if np.ndim(x) else math.inf
    raise TypeError(f"not a StateSpec: {spec!r}")


# -- compact state strings -------------------------------------------------

_TAGS = {"ho", "well", "step", "wave"}


def parse_state(text: str, hbar: float = 1.0, mass: float = 1.0) -> StateSpec:
    """Parse a compact state string such as ``ho:n=1,alpha=1,omega=1``."""
    text = text.strip()
    tag, _, rest = text.partition(":")
    tag = tag.strip().lower()
    if tag not in _TAGS:
        raise ParseError(f"unknown state tag {tag!r} in {text!r}")
    kv = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ParseError(f"malformed key=value item {item!r} in {text!r}")
            key = key.strip().lower()
            try:
                kv[key] = float(val)
            except ValueError as exc:
                raise ParseError(f"bad numeric value in {item!r}") from exc
    units = UnitSystem(hbar=kv.pop("hbar", hbar), mass=kv.pop("mass", mass))

    def take_int(key, default=None):
        if key in kv:
            v = kv.pop(key)
            if v != int(v):
                raise ParseError(f"{key} must be an integer in {text!r}")
            return int(v)
        if default is None:
            raise ParseError(f"missing required field {key!r} in {text!r}")
        return default

    try:
        if tag == "ho":
            n = take_int("n", 0)
            omega = kv.pop("omega", 1.0)
            alpha = kv.pop("alpha", math.sqrt(units.mass * omega / units.hbar))
            spec: StateSpec = HarmonicOscillator(n=n, alpha=alpha, omega=omega, units=units)
        elif tag == "well":
            n = take_int("n", 1)
            if "a" not in kv:
                raise ParseError(f"square well needs a width, e.g. well:n=1,a=3.14159")
            spec = InfiniteSquareWell(n=n, a=kv.pop("a"), units=units)
        elif tag == "step":
            spec = PotentialStep(k=kv.pop("k", 1.0), r=kv.pop("r", 1.0 / math.sqrt(2.0)), units=units)
        else:
            spec = ConstantPotentialWave(k=kv.pop("k", 1.0), v0=kv.pop("v0", 0.0), units=units)
    except ValidationError:
        raise
    if kv:
        raise ParseError(f"unknown fields {sorted(kv)} for state tag {tag!r}")
    return spec


def format_state(spec: StateSpec) -> str:
    """Inverse of :func:`parse_state` (canonical form, used in output headers)."""
    u = spec.units
    suffix = ""
    if (u.hbar, u.mass) != (1.0, 1.0):
        suffix = f",hbar={u.hbar!r},mass={u.mass!r}"
    if isinstance(spec, HarmonicOscillator):
        return f"ho:n={spec.n},alpha={spec.alpha!r},omega={spec.omega!r}" + suffix
    if isinstance(spec, InfiniteSquareWell):
        return f"well:n={spec.n},a={spec.a!r}" + suffix
    if isinstance(spec, PotentialStep):
        return f"step:k={spec.k!r},r={spec.r!r}" + suffix
    return f"wave:k={spec.k!r},v0={spec.v0!r}" + suffix
