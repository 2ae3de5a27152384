"""Discrete geometries, frequency lattices, and the spectral transform pair.

Two geometry modes are supported:

* ``periodic-cartesian``: a uniform grid on a d-dimensional box (d = 1, 2, 3)
  with periodic ends.  Samples live at ``x_j = -L/2 + j*dx`` and the transform
  is the discrete Fourier transform with angular wavenumbers ``2*pi*m/L``.
* ``radial-3d``: spherically symmetric 3-d fields stored through the
  auxiliary profile ``v(r) = r*u(r)`` on the interior midpoint grid
  ``r_j = (j + 1/2)*h`` with ``h = R/N``.  With Dirichlet ends at ``r = 0``
  and ``r = R`` the Laplacian acting on ``v`` is the plain second derivative,
  so the natural basis is the sine series ``sin(pi*m*r/R)`` and the transform
  is the type-II DST (whose internal FFT length ``2N`` stays a power of two).

Normalization convention, fixed once and used everywhere:

* periodic: the forward transform carries the ``1/N`` factor
  (``norm="forward"``), so a single mode ``exp(i k0 x)`` has unit coefficient
  at ``k0`` and Parseval reads ``sum|f|^2 = N * sum|c|^2``.
* radial: the orthonormal DST-II, so ``sum|v|^2 = sum|c|^2`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

PERIODIC = "periodic-cartesian"
RADIAL = "radial-3d"

_fft_workers = 1


def set_fft_workers(n: int) -> None:
    """Set the worker count passed to the multi-dimensional FFTs."""
    global _fft_workers
    if n < 1:
        raise ValueError(f"worker count must be >= 1, got {n}")
    _fft_workers = int(n)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Geometry:
    """Immutable descriptor of a discrete spatial domain."""

    dimension: int
    sizes: tuple[int, ...]
    lengths: tuple[float, ...]
    mode: str

    @property
    def is_radial(self) -> bool:
        return self.mode == RADIAL

    @property
    def point_count(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def spacings(self) -> tuple[float, ...]:
        if self.is_radial:
            return (self.lengths[0] / self.sizes[0],)
        return tuple(L / n for L, n in zip(self.lengths, self.sizes))

    @property
    def cell_measure(self) -> float:
        """Product of grid spacings (the 4*pi*r^2 weight is not included)."""
        return float(np.prod(self.spacings))

    @property
    def box_volume(self) -> float:
        if self.is_radial:
            raise ValueError("box_volume is defined for periodic geometries only")
        return float(np.prod(self.lengths))

    def axes(self) -> tuple[np.ndarray, ...]:
        """Per-axis sample coordinates, ascending."""
        if self.is_radial:
            h = self.spacings[0]
            return ((np.arange(self.sizes[0]) + 0.5) * h,)
        return tuple(
            (np.arange(n) - n // 2) * dx for n, dx in zip(self.sizes, self.spacings)
        )

    def radii(self) -> np.ndarray:
        """Radial sample coordinates (radial mode only)."""
        if not self.is_radial:
            raise ValueError("radii() is only defined in radial mode")
        return self.axes()[0]


def make_geometry(
    dimension: int,
    sizes,
    lengths,
    mode: str = PERIODIC,
) -> Geometry:
    """Validate and build a :class:`Geometry`.

    Raises ``ValueError`` for non-power-of-two sizes, nonpositive extents,
    unknown modes, or a radial request with more than one axis.
    """
    if mode not in (PERIODIC, RADIAL):
        raise ValueError(f"unknown geometry mode {mode!r}")
    if dimension not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {dimension}")
    sizes = tuple(int(n) for n in sizes)
    lengths = tuple(float(x) for x in lengths)
    if mode == RADIAL and dimension != 1:
        raise ValueError("radial-3d mode requires exactly one axis")
    if len(sizes) != dimension or len(lengths) != dimension:
        raise ValueError(
            f"expected {dimension} sizes and lengths, got {len(sizes)} and {len(lengths)}"
        )
    for n in sizes:
        if n < 8 or not _is_power_of_two(n):
            raise ValueError(f"axis size {n} must be a power of two >= 8")
    for L in lengths:
        if not (L > 0) or not np.isfinite(L):
            raise ValueError(f"axis extent {L} must be positive and finite")
    return Geometry(dimension, sizes, lengths, mode)


class FrequencyLattice:
    """Wavenumbers and spectral multiplier tables for one geometry.

    ``k_squared`` is the symbol of ``-Laplacian`` in the transform basis;
    ``multiplier(s)`` returns the ``|k|^(2s)`` table with the zero mode pinned
    to 0 for every ``s > 0`` (for ``s = 0`` the zero mode keeps weight 1).
    """

    def __init__(self, geometry: Geometry):
        self.geometry = geometry
        if geometry.is_radial:
            n = geometry.sizes[0]
            R = geometry.lengths[0]
            k = np.pi * np.arange(1, n + 1) / R
            self.k_axes = (k,)
            self.k_squared = k * k
        else:
            self.k_axes = tuple(
                2.0 * np.pi * scipy.fft.fftfreq(n, d=dx)
                for n, dx in zip(geometry.sizes, geometry.spacings)
            )
            k2 = np.zeros(geometry.sizes)
            for axis, k in enumerate(self.k_axes):
                shape = [1] * geometry.dimension
                shape[axis] = geometry.sizes[axis]
                k2 = k2 + (k * k).reshape(shape)
            self.k_squared = k2
        self._multipliers: dict[float, np.ndarray] = {}

    def multiplier(self, s: float) -> np.ndarray:
        """The ``|k|^(2s)`` table, cached per exponent."""
        if s < 0:
            raise ValueError(f"multiplier exponent s must be >= 0, got {s}")
        s = float(s)
        table = self._multipliers.get(s)
        if table is None:
            # 0**0 == 1.0 in numpy, which is exactly the s == 0 convention.
            table = self.k_squared**s
            self._multipliers[s] = table
        return table

    @property
    def spectral_measure(self) -> float:
        """Weight turning ``sum(table * |c|^2)`` into a squared L2 norm."""
        if self.geometry.is_radial:
            return 4.0 * np.pi * self.geometry.spacings[0]
        return self.geometry.box_volume


@lru_cache(maxsize=64)
def frequency_lattice(geometry: Geometry) -> FrequencyLattice:
    return FrequencyLattice(geometry)


def _check_shape(values: np.ndarray, geometry: Geometry) -> np.ndarray:
    values = np.asarray(values)
    if values.shape != geometry.sizes:
        raise ValueError(
            f"value shape {values.shape} does not match geometry sizes {geometry.sizes}"
        )
    return values


def transform_forward(values: np.ndarray, geometry: Geometry) -> np.ndarray:
    """Field samples to spectral coefficients (see module conventions)."""
    values = _check_shape(values, geometry)
    if geometry.is_radial:
        return scipy.fft.dst(values, type=2, norm="ortho")
    return scipy.fft.fftn(values, norm="forward", workers=_fft_workers)


def transform_inverse(coeffs: np.ndarray, geometry: Geometry) -> np.ndarray:
    """Spectral coefficients back to field samples."""
    coeffs = _check_shape(coeffs, geometry)
    if geometry.is_radial:
        return scipy.fft.idst(coeffs, type=2, norm="ortho")
    return scipy.fft.ifftn(coeffs, norm="forward", workers=_fft_workers)
