"""Exact free propagator and the split-step integrator for the cubic flow.

The equation integrated is ``i u_t + Laplacian(u) = |u|^2 u`` (defocusing,
cubic).  The free propagator multiplies mode k by ``exp(-i |k|^2 t)``, which
is the sign making ``u(t) = exp(i t Laplacian) u0`` solve the linear part.

Time stepping is Strang splitting: a half-step of the exact pointwise phase
``u -> u * exp(-i |u|^2 dt / 2)``, one exact linear step in the transform
basis, then the second half phase.  Both substeps preserve |u| pointwise /
spectrally, so mass is conserved to rounding; energy is conserved to O(dt^2).

In radial mode the state is ``v = r*u`` and the nonlinear phase uses
``|v/r|^2``, which is ``|u|^2`` at the sample points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .fields import Field
from .grid import Geometry, frequency_lattice, transform_forward, transform_inverse

logger = logging.getLogger(__name__)

DEALIAS_FRACTION = 2.0 / 3.0


class SolverAbort(RuntimeError):
    """Raised when a run trips the NaN guard or the conservation guard."""

    def __init__(self, message: str, step: int, time: float):
        super().__init__(f"{message} (step {step}, t = {time:g})")
        self.step = step
        self.time = time


@dataclass(frozen=True)
class SpongeConfig:
    """Absorbing layer near the outer radius (radial mode only)."""

    start_radius: float
    strength: float

    def __post_init__(self):
        if self.start_radius <= 0 or self.strength <= 0:
            raise ValueError("sponge start_radius and strength must be positive")


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    snapshot_stride: int = 1
    dealias: bool = True
    sponge: SpongeConfig | None = None
    splitting: str = "strang"
    mass_drift_tolerance: float = 1e-6

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        if self.splitting != "strang":
            raise ValueError(f"unsupported splitting {self.splitting!r}")


class Trajectory:
    """Snapshots of one run plus its per-step conservation log."""

    def __init__(self, geometry: Geometry, config: SolverConfig):
        self.geometry = geometry
        self.config = config
        self.snapshots: list[Field] = []
        self.step_times: list[float] = []
        self.mass_log: list[float] = []
        self.energy_log: list[float] = []

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.snapshots])

    @property
    def t_start(self) -> float:
        return self.snapshots[0].time

    @property
    def t_end(self) -> float:
        return self.snapshots[-1].time

    def __len__(self) -> int:
        return len(self.snapshots)

    def append(self, field: Field) -> None:
        if self.snapshots and field.time <= self.snapshots[-1].time:
            raise ValueError("snapshot times must be strictly increasing")
        self.snapshots.append(field)

    def snapshot_at(self, t: float, tol: float = 1e-9) -> Field:
        """The snapshot whose time matches t (within tol)."""
        times = self.times
        idx = int(np.argmin(np.abs(times - t)))
        if abs(times[idx] - t) > tol:
            raise ValueError(f"no snapshot at t = {t:g}; nearest is {times[idx]:g}")
        return self.snapshots[idx]

    def index_at(self, t: float, tol: float = 1e-9) -> int:
        times = self.times
        idx = int(np.argmin(np.abs(times - t)))
        if abs(times[idx] - t) > tol:
            raise ValueError(f"no snapshot at t = {t:g}; nearest is {times[idx]:g}")
        return idx


def free_propagate(field: Field, t: float) -> Field:
    """Exact linear evolution by time t (t may be negative)."""
    if t == 0.0:
        return field
    geom = field.geometry
    lattice = frequency_lattice(geom)
    coeffs = transform_forward(field.values, geom)
    coeffs = coeffs * np.exp(-1j * lattice.k_squared * t)
    return Field(geom, field.time + t, transform_inverse(coeffs, geom))


def free_propagate_values(values: np.ndarray, geometry: Geometry, t: float) -> np.ndarray:
    """free_propagate on a bare sample array (no Field bookkeeping)."""
    lattice = frequency_lattice(geometry)
    coeffs = transform_forward(values, geometry)
    coeffs *= np.exp(-1j * lattice.k_squared * t)
    return transform_inverse(coeffs, geometry)


def dealias_mask(geometry: Geometry) -> np.ndarray:
    """Two-thirds-rule mask in the transform basis (True = keep)."""
    lattice = frequency_lattice(geometry)
    if geometry.is_radial:
        k = lattice.k_axes[0]
        return np.abs(k) <= DEALIAS_FRACTION * np.abs(k).max()
    keep = np.ones(geometry.sizes, dtype=bool)
    for axis, k in enumerate(lattice.k_axes):
        shape = [1] * geometry.dimension
        shape[axis] = geometry.sizes[axis]
        keep &= (np.abs(k) <= DEALIAS_FRACTION * np.abs(k).max()).reshape(shape)
    return keep


def sponge_factor(geometry: Geometry, sponge: SpongeConfig, dt: float) -> np.ndarray:
    """Per-step damping multiplier exp(-dt*W(r)) of a smooth outer ramp."""
    if not geometry.is_radial:
        raise ValueError("sponge layers are only supported in radial mode")
    R = geometry.lengths[0]
    if sponge.start_radius >= R:
        raise ValueError("sponge start_radius must be smaller than the domain radius")
    r = geometry.radii()
    ramp = np.clip((r - sponge.start_radius) / (R - sponge.start_radius), 0.0, 1.0)
    return np.exp(-dt * sponge.strength * ramp * ramp)


class _StepContext:
    """Precomputed tables for repeated Strang steps at a fixed dt."""

    def __init__(self, geometry: Geometry, dt: float, dealias: bool,
                 sponge: SpongeConfig | None):
        self.geometry = geometry
        self.dt = dt
        lattice = frequency_lattice(geometry)
        self.linear_phase = np.exp(-1j * lattice.k_squared * dt)
        if dealias:
            self.linear_phase = self.linear_phase * dealias_mask(geometry)
        self.k_squared = lattice.k_squared
        if geometry.is_radial:
            self.inv_r_sq = 1.0 / geometry.radii() ** 2
        else:
            self.inv_r_sq = None
        self.sponge = sponge_factor(geometry, sponge, dt) if sponge else None
        self.measure = (4.0 * np.pi * geometry.spacings[0]
                        if geometry.is_radial else geometry.cell_measure)
        self.spectral_measure = lattice.spectral_measure

    def intensity(self, values: np.ndarray) -> np.ndarray:
        """|u|^2 at the sample points."""
        amp2 = values.real**2 + values.imag**2
        if self.inv_r_sq is not None:
            amp2 = amp2 * self.inv_r_sq
        return amp2

    def step(self, values: np.ndarray) -> np.ndarray:
        half = -0.5j * self.dt
        values = values * np.exp(half * self.intensity(values))
        coeffs = transform_forward(values, self.geometry)
        coeffs *= self.linear_phase
        values = transform_inverse(coeffs, self.geometry)
        values = values * np.exp(half * self.intensity(values))
        if self.sponge is not None:
            values = values * self.sponge
        return values

    def mass(self, values: np.ndarray) -> float:
        return self.measure * float(np.sum(values.real**2 + values.imag**2))

    def energy(self, values: np.ndarray) -> float:
        coeffs = transform_forward(values, self.geometry)
        grad_sq = self.spectral_measure * float(
            np.sum(self.k_squared * (coeffs.real**2 + coeffs.imag**2))
        )
        amp2 = self.intensity(values)
        if self.geometry.is_radial:
            r = self.geometry.radii()
            quartic = self.measure * float(np.sum(amp2 * amp2 * r * r))
        else:
            quartic = self.measure * float(np.sum(amp2 * amp2))
        return 0.5 * grad_sq + 0.25 * quartic


def nls_step(field: Field, dt: float, dealias: bool = True,
             sponge: SpongeConfig | None = None) -> Field:
    """One Strang step of the cubic defocusing flow."""
    if not (dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    ctx = _StepContext(field.geometry, dt, dealias, sponge)
    values = ctx.step(field.values)
    if not np.all(np.isfinite(values.view(np.float64))):
        raise SolverAbort("non-finite samples after step", step=1, time=field.time + dt)
    return Field(field.geometry, field.time + dt, values)


def evolve(initial: Field, config: SolverConfig) -> Trajectory:
    """Integrate to t_end, collecting snapshots every snapshot_stride steps.

    The conservation log holds mass and energy after every step; relative
    mass drift beyond config.mass_drift_tolerance or any non-finite sample
    aborts the run with a SolverAbort diagnostic.
    """
    geom = initial.geometry
    n_steps = int(round(config.t_end / config.dt))
    if abs(n_steps * config.dt - config.t_end) > 1e-9 * max(1.0, abs(config.t_end)):
        logger.warning(
            "t_end %g is not a multiple of dt %g; integrating %d steps to %g",
            config.t_end, config.dt, n_steps, n_steps * config.dt,
        )
    traj = Trajectory(geom, config)
    traj.append(initial)
    if n_steps == 0:
        return traj

    ctx = _StepContext(geom, config.dt, config.dealias, config.sponge)
    values = initial.values.copy()
    mass0 = ctx.mass(values)
    traj.step_times.append(initial.time)
    traj.mass_log.append(mass0)
    traj.energy_log.append(ctx.energy(values))

    check_drift = config.sponge is None and mass0 > 0.0
    for step in range(1, n_steps + 1):
        values = ctx.step(values)
        t = initial.time + step * config.dt
        mass = ctx.mass(values)
        if not math.isfinite(mass):
            raise SolverAbort("non-finite samples detected", step=step, time=t)
        if check_drift:
            drift = abs(mass - mass0) / mass0
            if drift > config.mass_drift_tolerance:
                raise SolverAbort(
                    f"mass drift {drift:.3e} exceeds tolerance "
                    f"{config.mass_drift_tolerance:.3e}",
                    step=step, time=t,
                )
        traj.step_times.append(t)
        traj.mass_log.append(mass)
        traj.energy_log.append(ctx.energy(values))
        if step % config.snapshot_stride == 0 or step == n_steps:
            traj.append(Field(geom, t, values.copy()))
    return traj


def free_evolve(initial: Field, config: SolverConfig) -> Trajectory:
    """Exact linear trajectory on the same snapshot grid as evolve."""
    geom = initial.geometry
    n_steps = int(round(config.t_end / config.dt))
    traj = Trajectory(geom, config)
    traj.append(initial)
    ctx = _StepContext(geom, config.dt, dealias=False, sponge=None)
    traj.step_times.append(initial.time)
    traj.mass_log.append(ctx.mass(initial.values))
    traj.energy_log.append(ctx.energy(initial.values))
    for step in range(config.snapshot_stride, n_steps + 1, config.snapshot_stride):
        t = step * config.dt
        traj.append(free_propagate(initial, t))
    if n_steps > 0 and traj.t_end < initial.time + n_steps * config.dt - 1e-12:
        traj.append(free_propagate(initial, n_steps * config.dt))
    return traj


def strang_order_ratio(initial: Field, config: SolverConfig,
                       refinement: int = 8) -> tuple[float, float, float]:
    """Self-convergence diagnostic: errors at dt and dt/2 against a fine
    reference at dt/refinement, and their ratio (4-ish for second order)."""
    if refinement < 8:
        raise ValueError("reference must be at least 8x finer than dt")
    from .fields import norm_lp  # local import to avoid cycle at module load

    finals = {}
    for scale in (1, 2, refinement):
        cfg = SolverConfig(
            dt=config.dt / scale, t_end=config.t_end,
            snapshot_stride=10**9, dealias=config.dealias, sponge=config.sponge,
            mass_drift_tolerance=config.mass_drift_tolerance,
        )
        finals[scale] = evolve(initial, cfg).snapshots[-1]
    e_coarse = norm_lp(finals[1] - finals[refinement], 2.0)
    e_fine = norm_lp(finals[2] - finals[refinement], 2.0)
    return e_coarse, e_fine, e_coarse / e_fine
