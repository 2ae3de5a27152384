"""Complex field states and every norm the measurement harness reports.

All norms refer to the physical 3-d function ``u`` even in radial mode, where
the stored samples are ``v(r) = r*u(r)``: Lebesgue norms carry the
``4*pi*r^2`` weight and spectral norms the matching ``4*pi*h`` measure, so
that Parseval ties the two sides together exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .grid import Geometry, frequency_lattice, transform_forward

# Exponents of the three-norm bound on the sup norm used by
# interpolation_check; they must sum to one for scale consistency.
INTERP_EXP_L2 = 2.0 / 5.0
INTERP_EXP_GRAD = 6.0 / 25.0
INTERP_EXP_H4 = 9.0 / 25.0
assert abs(INTERP_EXP_L2 + INTERP_EXP_GRAD + INTERP_EXP_H4 - 1.0) < 1e-15

# Richardson weights recovering f(0) from the first three midpoint samples of
# an even function: Lagrange interpolation in r^2 at r/h = 1/2, 3/2, 5/2.
_ORIGIN_WEIGHTS = np.array([225.0 / 192.0, -25.0 / 128.0, 9.0 / 384.0])


@dataclass(frozen=True)
class Field:
    """A complex-valued state on a geometry at a fixed time."""

    geometry: Geometry
    time: float
    values: np.ndarray = dataclass_field(repr=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.complex128)
        if values.shape != self.geometry.sizes:
            raise ValueError(
                f"value shape {values.shape} does not match geometry sizes "
                f"{self.geometry.sizes}"
            )
        if not np.all(np.isfinite(values.view(np.float64))):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))

    def with_values(self, values: np.ndarray, time: float | None = None) -> "Field":
        return Field(self.geometry, self.time if time is None else time, values)

    def __sub__(self, other: "Field") -> "Field":
        if other.geometry != self.geometry:
            raise ValueError("cannot subtract fields on different geometries")
        return Field(self.geometry, self.time, self.values - other.values)

    def __add__(self, other: "Field") -> "Field":
        if other.geometry != self.geometry:
            raise ValueError("cannot add fields on different geometries")
        return Field(self.geometry, self.time, self.values + other.values)


def zero_field(geometry: Geometry, time: float = 0.0) -> Field:
    return Field(geometry, time, np.zeros(geometry.sizes, dtype=np.complex128))


def radial_profile(field: Field) -> np.ndarray:
    """Samples of the physical u(r) = v(r)/r in radial mode."""
    if not field.geometry.is_radial:
        raise ValueError("radial_profile is only defined in radial mode")
    return field.values / field.geometry.radii()


def origin_value(field: Field) -> complex:
    """Extrapolated u(0) in radial mode (even extension in r)."""
    u = radial_profile(field)
    return complex(np.dot(_ORIGIN_WEIGHTS, u[:3]))


def norm_lp(field: Field, p: float) -> float:
    """Lebesgue p-norm by the grid quadrature rule; p = inf gives max |u|."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    geom = field.geometry
    if geom.is_radial:
        r = geom.radii()
        u_abs = np.abs(field.values) / r
        if math.isinf(p):
            return float(max(u_abs.max(), abs(origin_value(field))))
        h = geom.spacings[0]
        integral = 4.0 * np.pi * h * np.sum(u_abs**p * r * r)
        return float(integral ** (1.0 / p))
    if math.isinf(p):
        return float(np.abs(field.values).max())
    integral = geom.cell_measure * np.sum(np.abs(field.values) ** p)
    return float(integral ** (1.0 / p))


def norm_sobolev(field: Field, s: float, homogeneous: bool = True) -> float:
    """Sobolev norm of order s >= 0, computed spectrally.

    Homogeneous: ``sqrt(measure * sum |k|^(2s) |c|^2)`` with the zero mode
    contributing nothing for s > 0.  Inhomogeneous: weight ``1 + |k|^(2s)``.
    """
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    geom = field.geometry
    lattice = frequency_lattice(geom)
    coeffs = transform_forward(field.values, geom)
    weight = lattice.multiplier(s)
    power = np.abs(coeffs) ** 2
    if homogeneous:
        total = float(np.sum(weight * power))
    else:
        total = float(np.sum(power) + np.sum(weight * power))
    return math.sqrt(lattice.spectral_measure * total)


def energy(field: Field) -> float:
    """Conserved energy: half the squared gradient norm plus a quarter of
    the fourth power of the L4 norm (gradient taken spectrally)."""
    grad = norm_sobolev(field, 1.0, homogeneous=True)
    l4 = norm_lp(field, 4.0)
    return 0.5 * grad**2 + 0.25 * l4**4


@dataclass(frozen=True)
class NormReport:
    """Bundle of the standard norms of one field."""

    l2: float
    linf: float
    l1: float
    lp: dict[float, float]
    hdot: dict[float, float]
    h_full: dict[float, float]
    energy: float


def norm_report(field: Field, ps=(), ss=()) -> NormReport:
    """Compute the standard norm bundle plus any requested extras."""
    lp = {4.0: norm_lp(field, 4.0)}
    for p in ps:
        lp[float(p)] = norm_lp(field, float(p))
    hdot = {}
    h_full = {}
    for s in ss:
        hdot[float(s)] = norm_sobolev(field, float(s), homogeneous=True)
        h_full[float(s)] = norm_sobolev(field, float(s), homogeneous=False)
    grad = norm_sobolev(field, 1.0, homogeneous=True)
    return NormReport(
        l2=norm_lp(field, 2.0),
        linf=norm_lp(field, math.inf),
        l1=norm_lp(field, 1.0),
        lp=lp,
        hdot=hdot,
        h_full=h_full,
        energy=0.5 * grad**2 + 0.25 * lp[4.0] ** 4,
    )


@dataclass(frozen=True)
class InterpolationCheck:
    """Outcome of the sup-norm interpolation bound on one field."""

    lhs: float
    rhs: float
    satisfied: bool

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs


def interpolation_check(field: Field) -> InterpolationCheck:
    """Check ``|f|_inf <= |f|_2^(2/5) |grad f|_2^(6/25) |f|_H4^(9/25)``.

    The H4 norm uses the inhomogeneous ``(1 + |k|^8)^(1/2)`` multiplier; the
    bound is tested with a 1e-9 rounding allowance and callers interested in
    the convention slack should compare lhs against rhs with their own factor.
    """
    lhs = norm_lp(field, math.inf)
    a1 = norm_lp(field, 2.0)
    a2 = norm_sobolev(field, 1.0, homogeneous=True)
    b = norm_sobolev(field, 4.0, homogeneous=False)
    rhs = a1**INTERP_EXP_L2 * a2**INTERP_EXP_GRAD * b**INTERP_EXP_H4
    return InterpolationCheck(lhs=lhs, rhs=rhs, satisfied=lhs <= rhs * (1.0 + 1e-9))
