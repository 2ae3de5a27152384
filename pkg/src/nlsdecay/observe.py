"""Time-dependent measurements on trajectories.

Covers the norm time series, the final-state estimator with its Cauchy-gap
resolution floor, the convergence distance to the estimated free evolution,
the truncated spacetime L5 tail, and the windowed Duhamel decomposition of
the nonlinear part.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .fields import Field, norm_lp, norm_sobolev, energy as field_energy
from .grid import frequency_lattice, transform_forward, transform_inverse
from .propagate import Trajectory, free_propagate

logger = logging.getLogger(__name__)


def _norm_value(field: Field, token: str) -> float:
    if token == "l2":
        return norm_lp(field, 2.0)
    if token == "l1":
        return norm_lp(field, 1.0)
    if token == "l4":
        return norm_lp(field, 4.0)
    if token == "linf":
        return norm_lp(field, math.inf)
    if token == "energy":
        return field_energy(field)
    if token.startswith("lp:"):
        return norm_lp(field, float(token[3:]))
    if token.startswith("hdot:"):
        return norm_sobolev(field, float(token[5:]), homogeneous=True)
    if token.startswith("h:"):
        return norm_sobolev(field, float(token[2:]), homogeneous=False)
    raise ValueError(f"unknown norm request {token!r}")


@dataclass(frozen=True)
class ObservableSeries:
    """Per-snapshot records of requested norms."""

    times: np.ndarray
    records: dict[str, np.ndarray]
    run_id: str = ""
    config_hash: str = ""

    def column(self, name: str) -> np.ndarray:
        return self.records[name]

    @property
    def columns(self) -> list[str]:
        return list(self.records)


def measure(trajectory: Trajectory, requests) -> ObservableSeries:
    """Evaluate the requested norm tokens on every snapshot."""
    if len(trajectory) == 0:
        raise ValueError("trajectory has no snapshots")
    requests = list(requests)
    records = {token: np.empty(len(trajectory)) for token in requests}
    for i, snap in enumerate(trajectory.snapshots):
        for token in requests:
            records[token][i] = _norm_value(snap, token)
    for token, col in records.items():
        if not np.all(np.isfinite(col)):
            raise ValueError(f"non-finite entries in series {token!r}")
    return ObservableSeries(times=trajectory.times, records=records)


@dataclass(frozen=True)
class ScatterReport:
    """Final-state estimate plus the series measured against it."""

    u_plus: Field
    cauchy_gap: float
    probe_times: tuple[float, float]
    truncation_horizon: float
    convergence_times: np.ndarray | None = None
    convergence_values: np.ndarray | None = None
    tail_s: np.ndarray | None = None
    tail_values: np.ndarray | None = None

    def __post_init__(self):
        if self.cauchy_gap < 0:
            raise ValueError("cauchy_gap must be >= 0")
        if self.convergence_values is not None and np.any(self.convergence_values < 0):
            raise ValueError("convergence distances must be >= 0")
        if self.tail_values is not None:
            diffs = np.diff(self.tail_values)
            if np.any(diffs > 1e-12 * max(1.0, float(self.tail_values.max()))):
                raise ValueError("tail series must be nonincreasing in s")

    @property
    def at_floor(self) -> np.ndarray:
        """Mask of convergence entries at or below the resolution floor."""
        if self.convergence_values is None:
            raise ValueError("convergence series not computed")
        return self.convergence_values <= self.cauchy_gap


def estimate_final_state(trajectory: Trajectory, t1: float, t2: float) -> ScatterReport:
    """Estimate the final free state from two late probes.

    u_plus is the backward-propagated state at the later probe; the gap
    between the two backward-propagated probes is the resolution floor for
    every subsequent convergence measurement.
    """
    if t1 >= t2:
        raise ValueError(f"probe times must satisfy t1 < t2, got {t1} >= {t2}")
    if t2 > trajectory.t_end + 1e-9 or t1 < trajectory.t_start - 1e-9:
        raise ValueError("probe times outside the trajectory")
    if t1 < 0.5 * t2:
        logger.warning("early probe t1 = %g below t2/2 = %g; gap may be pessimistic",
                       t1, 0.5 * t2)
    w2 = free_propagate(trajectory.snapshot_at(t2), -t2)
    w1 = free_propagate(trajectory.snapshot_at(t1), -t1)
    gap = norm_sobolev(w2 - w1, 0.5, homogeneous=True)
    return ScatterReport(
        u_plus=w2,
        cauchy_gap=gap,
        probe_times=(t1, t2),
        truncation_horizon=trajectory.t_end,
    )


def convergence_distance(trajectory: Trajectory, u_plus: Field,
                         sample_times) -> tuple[np.ndarray, np.ndarray]:
    """Distance of u(t) to the free evolution of u_plus, in the critical norm.

    Computed spectrally: one forward transform per sample, no inverse.
    """
    geom = trajectory.geometry
    lattice = frequency_lattice(geom)
    half_weight = lattice.multiplier(0.5)
    measure_w = lattice.spectral_measure
    plus_coeffs = transform_forward(u_plus.values, geom)
    times = np.asarray(sample_times, dtype=float)
    values = np.empty_like(times)
    for i, t in enumerate(times):
        snap = trajectory.snapshot_at(t)
        diff = plus_coeffs * np.exp(-1j * lattice.k_squared * (t - u_plus.time))
        diff -= transform_forward(snap.values, geom)
        values[i] = math.sqrt(
            measure_w * float(np.sum(half_weight * (diff.real**2 + diff.imag**2)))
        )
    return times, values


def spacetime_tail(trajectory: Trajectory, s_values) -> tuple[np.ndarray, np.ndarray]:
    """Truncated L5 spacetime norm of the tail [s, t_end], per requested s.

    Each s snaps to the nearest snapshot time (returned in the first array);
    the integral is the trapezoid rule over snapshots.  A tail on a positive
    interval covered by fewer than 8 snapshots raises; s = t_end returns 0.
    """
    times = trajectory.times
    n = len(times)
    l5_pow = np.array([norm_lp(snap, 5.0) ** 5 for snap in trajectory.snapshots])
    # cumulative trapezoid integral from each snapshot to the end
    cells = 0.5 * (l5_pow[1:] + l5_pow[:-1]) * np.diff(times)
    tail_integral = np.zeros(n)
    tail_integral[:-1] = np.cumsum(cells[::-1])[::-1]

    s_req = np.atleast_1d(np.asarray(s_values, dtype=float))
    s_out = np.empty_like(s_req)
    out = np.empty_like(s_req)
    for i, s in enumerate(s_req):
        if s < times[0] - 1e-9 or s > times[-1] + 1e-9:
            raise ValueError(f"tail start {s:g} outside trajectory")
        idx = int(np.argmin(np.abs(times - s)))
        if idx < n - 1 and n - idx < 8:
            raise ValueError(
                f"tail from s = {s:g} spans only {n - idx} snapshots; "
                "snapshot stride too coarse"
            )
        s_out[i] = times[idx]
        out[i] = tail_integral[idx] ** 0.2
    return s_out, out


def scatter_report(trajectory: Trajectory, t1: float, t2: float,
                   sample_times, s_values) -> ScatterReport:
    """Full scattering report: estimator, convergence series, tail series."""
    partial = estimate_final_state(trajectory, t1, t2)
    conv_t, conv_v = convergence_distance(trajectory, partial.u_plus, sample_times)
    tail_s, tail_v = spacetime_tail(trajectory, s_values)
    return ScatterReport(
        u_plus=partial.u_plus,
        cauchy_gap=partial.cauchy_gap,
        probe_times=partial.probe_times,
        truncation_horizon=partial.truncation_horizon,
        convergence_times=conv_t,
        convergence_values=conv_v,
        tail_s=tail_s,
        tail_values=tail_v,
    )


@dataclass(frozen=True)
class DuhamelReport:
    """Windowed decomposition of the nonlinear part at one evaluation time."""

    eval_time: float
    m: float
    windows: tuple[float, ...]
    u_l: Field
    parts: tuple[Field, ...]
    residual_l2: float
    state_l2: float

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.windows[1:], self.windows[:-1])):
            raise ValueError("window boundaries must be strictly increasing")

    @property
    def residual_relative(self) -> float:
        return self.residual_l2 / self.state_l2 if self.state_l2 > 0 else 0.0


def default_duhamel_windows(t_start: float, t: float, delay: float,
                            m: float) -> tuple[float, ...]:
    """Five-window layout around one refocus time: a slab just after the
    start, the approach, the interaction window of half-width m, the
    departure up to twice the delay, and the recent past."""
    bounds = (t_start, t_start + m, delay - m, delay + m, 2.0 * delay - m, t)
    if any(b >= a for a, b in zip(bounds[1:], bounds[:-1])):
        raise ValueError(
            f"window layout {bounds} is not increasing; need m < delay/2 and "
            f"t > 2*delay - m"
        )
    return bounds


def _nonlinearity(values: np.ndarray, geom) -> np.ndarray:
    amp2 = values.real**2 + values.imag**2
    if geom.is_radial:
        amp2 = amp2 / geom.radii() ** 2
    return amp2 * values


def duhamel_decompose(trajectory: Trajectory, t: float, m: float,
                      windows=None, delay: float | None = None) -> DuhamelReport:
    """Split the nonlinear part at time t into the five window integrals.

    Each part is ``-i * integral over the window of the cubic term propagated
    freely to t``, by the trapezoid rule over stored snapshots; boundaries
    must land on snapshot times.  The linear part plus the five parts
    reconstructs u(t) up to quadrature error.
    """
    geom = trajectory.geometry
    if windows is None:
        if delay is None:
            raise ValueError("either explicit windows or a delay is required")
        windows = default_duhamel_windows(trajectory.t_start, t, delay, m)
    windows = tuple(float(b) for b in windows)
    if len(windows) != 6:
        raise ValueError(f"expected 6 window boundaries, got {len(windows)}")
    if abs(windows[0] - trajectory.t_start) > 1e-9 or abs(windows[-1] - t) > 1e-9:
        raise ValueError("windows must partition [trajectory start, t]")

    eval_idx = trajectory.index_at(t)
    bound_idx = [trajectory.index_at(b) for b in windows]
    if any(j <= i for i, j in zip(bound_idx[:-1], bound_idx[1:])):
        raise ValueError("each window needs at least one snapshot interval")

    times = trajectory.times
    lattice = frequency_lattice(geom)
    k2 = lattice.k_squared

    # trapezoid weights per snapshot within one window
    def window_weights(i0: int, i1: int) -> np.ndarray:
        seg = times[i0:i1 + 1]
        w = np.zeros(len(seg))
        d = np.diff(seg)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
        return w

    spectral_parts = []
    for i0, i1 in zip(bound_idx[:-1], bound_idx[1:]):
        if i1 - i0 < 2:
            logger.warning("window [%g, %g] has only %d snapshot intervals",
                           times[i0], times[i1], i1 - i0)
        acc = np.zeros(geom.sizes, dtype=np.complex128)
        for idx, w in zip(range(i0, i1 + 1), window_weights(i0, i1)):
            cubic = _nonlinearity(trajectory.snapshots[idx].values, geom)
            acc += w * np.exp(-1j * k2 * (t - times[idx])) * transform_forward(cubic, geom)
        spectral_parts.append(acc)

    parts = tuple(
        Field(geom, t, transform_inverse(-1j * acc, geom)) for acc in spectral_parts
    )
    u_l = free_propagate(trajectory.snapshots[0], t - trajectory.t_start)
    state = trajectory.snapshots[eval_idx]
    recon = u_l.values + sum(p.values for p in parts)
    residual = norm_lp(Field(geom, t, state.values - recon), 2.0)
    return DuhamelReport(
        eval_time=t,
        m=m,
        windows=windows,
        u_l=u_l,
        parts=parts,
        residual_l2=residual,
        state_l2=norm_lp(state, 2.0),
    )
