"""Initial data construction: base bump, backward-scattered bubbles, sums.

A bubble with weight c and delay a is ``c * exp(-i a Laplacian) phi``: under
the free flow it refocuses into ``c * phi`` at time t = a.  Profiles are
finite sums of bubbles with strictly increasing delays; the classic choice
is weight ``1/n^2`` with delay ``base**n``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fields import Field
from .grid import Geometry, frequency_lattice, transform_forward
from .propagate import free_propagate

GAUSSIAN = "gaussian"


class ContainmentWarning(UserWarning):
    """A constructed state likely spills outside (half of) the box."""


@dataclass(frozen=True)
class BaseSpec:
    kind: str = GAUSSIAN
    amplitude: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind != GAUSSIAN:
            raise ValueError(f"unknown base kind {self.kind!r}")
        if self.amplitude <= 0 or self.width <= 0:
            raise ValueError("base amplitude and width must be positive")


@dataclass(frozen=True)
class Bubble:
    weight: float
    delay: float


@dataclass(frozen=True)
class ProfileSpec:
    base: BaseSpec
    bubbles: tuple[Bubble, ...]
    geometry: Geometry

    def __post_init__(self):
        delays = [b.delay for b in self.bubbles]
        if any(w <= 0 for w in (b.weight for b in self.bubbles)):
            raise ValueError("bubble weights must be positive")
        if any(a < 0 for a in delays):
            raise ValueError("bubble delays must be >= 0")
        if any(b >= a for a, b in zip(delays[1:], delays[:-1])):
            raise ValueError("bubble delays must be strictly increasing")
        object.__setattr__(self, "bubbles", tuple(self.bubbles))

    @property
    def max_delay(self) -> float:
        return max((b.delay for b in self.bubbles), default=0.0)


def power_delay_bubbles(count: int, base: float = 10.0) -> tuple[Bubble, ...]:
    """The classic weights/delays: weight 1/n^2, delay base**n, n = 1..count."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return tuple(Bubble(weight=1.0 / n**2, delay=base**n) for n in range(1, count + 1))


def make_base(kind: str, params: dict, geometry: Geometry) -> Field:
    """Build the base bump phi at time 0.

    The width must be resolved (>= 4 grid spacings) and contained
    (<= extent/8); violations raise ValueError.
    """
    spec = BaseSpec(kind=kind, **params)
    sigma = spec.width
    spacing = max(geometry.spacings)
    extent = geometry.lengths[0] if geometry.is_radial else min(geometry.lengths)
    if sigma < 4.0 * spacing:
        raise ValueError(
            f"base width {sigma:g} under-resolved: needs >= 4 spacings ({4*spacing:g})"
        )
    if sigma > extent / 8.0:
        raise ValueError(
            f"base width {sigma:g} too large for the box: needs <= extent/8 ({extent/8:g})"
        )
    if geometry.is_radial:
        r = geometry.radii()
        values = spec.amplitude * r * np.exp(-(r * r) / (2.0 * sigma * sigma))
    else:
        r_sq = np.zeros(geometry.sizes)
        for axis, x in enumerate(geometry.axes()):
            shape = [1] * geometry.dimension
            shape[axis] = geometry.sizes[axis]
            r_sq = r_sq + (x * x).reshape(shape)
        values = spec.amplitude * np.exp(-r_sq / (2.0 * sigma * sigma))
    return Field(geometry, 0.0, values)


def _support_radius(weights: np.ndarray, coords: np.ndarray, rel_cut: float) -> float:
    peak = weights.max()
    if peak == 0.0:
        return 0.0
    mask = weights > rel_cut * peak
    return float(np.abs(coords[mask]).max()) if mask.any() else 0.0


def spreading_radius(field: Field, t: float) -> float:
    """Estimated support radius of the free evolution at time |t|.

    Uses the field's own spatial support plus twice its spectral bandwidth
    times the elapsed time (the group velocity of mode k is 2k).
    """
    geom = field.geometry
    lattice = frequency_lattice(geom)
    coeffs = transform_forward(field.values, geom)
    k_mag = np.sqrt(lattice.k_squared)
    bandwidth = _support_radius(np.abs(coeffs), k_mag, rel_cut=1e-12)
    if geom.is_radial:
        spatial = _support_radius(np.abs(field.values), geom.radii(), rel_cut=1e-12)
    else:
        r_sq = np.zeros(geom.sizes)
        for axis, x in enumerate(geom.axes()):
            shape = [1] * geom.dimension
            shape[axis] = geom.sizes[axis]
            r_sq = r_sq + (x * x).reshape(shape)
        spatial = _support_radius(np.abs(field.values), np.sqrt(r_sq), rel_cut=1e-12)
    return spatial + 2.0 * bandwidth * abs(t)


def build_bubble(base: Field, weight: float, delay: float) -> Field:
    """One backward-scattered bubble: weight * free_propagate(base, -delay).

    Warns (does not fail) when the spreading radius estimate exceeds half
    the available extent, since wrap-around or wall reflection then pollutes
    the physical interpretation of long runs.
    """
    if delay < 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    geom = base.geometry
    half_extent = (geom.lengths[0] if geom.is_radial else min(geom.lengths) / 2.0)
    radius = spreading_radius(base, delay)
    if radius > half_extent:
        warnings.warn(
            f"bubble with delay {delay:g} spreads to radius ~{radius:.0f}, beyond "
            f"the contained radius {half_extent:g}; expect boundary artifacts",
            ContainmentWarning,
            stacklevel=2,
        )
    shifted = free_propagate(base, -delay)
    return Field(geom, 0.0, weight * shifted.values)


def build_profile(spec: ProfileSpec) -> Field:
    """Sum of all bubbles of the spec, at time 0."""
    base = make_base(spec.base.kind,
                     {"amplitude": spec.base.amplitude, "width": spec.base.width},
                     spec.geometry)
    total = np.zeros(spec.geometry.sizes, dtype=np.complex128)
    for bubble in spec.bubbles:
        total += build_bubble(base, bubble.weight, bubble.delay).values
    return Field(spec.geometry, 0.0, total)


@dataclass(frozen=True)
class ProfileDecomposition:
    below: Field
    at: Field
    above: Field


def decompose_profile(spec: ProfileSpec, n: int) -> ProfileDecomposition:
    """Split the profile at the 1-indexed bubble n: sums below/at/above."""
    if not (1 <= n <= len(spec.bubbles)):
        raise ValueError(f"n must be in [1, {len(spec.bubbles)}], got {n}")
    base = make_base(spec.base.kind,
                     {"amplitude": spec.base.amplitude, "width": spec.base.width},
                     spec.geometry)
    below = np.zeros(spec.geometry.sizes, dtype=np.complex128)
    above = np.zeros(spec.geometry.sizes, dtype=np.complex128)
    at = None
    for idx, bubble in enumerate(spec.bubbles, start=1):
        piece = build_bubble(base, bubble.weight, bubble.delay).values
        if idx <= n:
            below += piece
        else:
            above += piece
        if idx == n:
            at = piece
    geom = spec.geometry
    return ProfileDecomposition(
        below=Field(geom, 0.0, below),
        at=Field(geom, 0.0, at),
        above=Field(geom, 0.0, above),
    )
