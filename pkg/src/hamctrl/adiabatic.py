"""STIRAP population transfer in a resonantly driven three-level Lambda system.

Levels are ``|1>, |2>, |3>`` (indices 0, 1, 2). The pump ``Omega_1`` couples
1-2 and the Stokes field ``Omega_2`` couples 2-3. In the counter-intuitive
order the Stokes pulse peaks first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import basis_ket, dagger, eigh_sorted
from .dynamics import ControlSystem, PulseSchedule, propagate_ket

LAMBDA_PUMP = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
LAMBDA_STOKES = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class StirapParams:
    omega0: float = 10.0
    width: float = 1.0
    delay: float = 1.2
    t0: float = 0.0
    tf: float = 10.0
    slices: int = 2000

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        if not self.tf > self.t0:
            raise ValueError("tf must exceed t0")
        if self.slices < 10:
            raise ValueError("need at least 10 slices")
        for name, t in (("Stokes", self.stokes_peak), ("pump", self.pump_peak)):
            if not self.t0 <= t <= self.tf:
                raise ValueError(f"{name} peak at t={t:g} lies outside [{self.t0:g}, {self.tf:g}]")

    @property
    def center(self) -> float:
        return (self.t0 + self.tf) / 2

    @property
    def stokes_peak(self) -> float:
        return self.center - self.delay / 2

    @property
    def pump_peak(self) -> float:
        return self.center + self.delay / 2

    @property
    def dt(self) -> float:
        return (self.tf - self.t0) / self.slices

    def scaled(self, factor: float) -> StirapParams:
        """Same pulse shape stretched in time by ``factor``."""
        return StirapParams(self.omega0, self.width * factor, self.delay * factor,
                            self.t0 * factor, self.tf * factor, self.slices)

    def pump(self, t) -> np.ndarray:
        return self.omega0 * np.exp(-((np.asarray(t) - self.pump_peak) ** 2) / (2 * self.width**2))

    def stokes(self, t) -> np.ndarray:
        return self.omega0 * np.exp(-((np.asarray(t) - self.stokes_peak) ** 2) / (2 * self.width**2))


@dataclass
class EigenFrame:
    times: np.ndarray
    eigenvalues: np.ndarray  # (samples, N), columns follow continuous curves
    eigenvectors: np.ndarray  # (samples, N, N), column n is |Psi_n(t)>


@dataclass
class StirapResult:
    efficiency: float
    max_intermediate: float
    dark_overlap_min: float
    times: np.ndarray
    populations: np.ndarray
    dark_overlap: np.ndarray = field(repr=False, default=None)


def lambda_rwa(omega1: float, omega2: float) -> np.ndarray:
    """RWA Hamiltonian ``-[[0, W1, 0], [W1, 0, W2], [0, W2, 0]]``."""
    if not (np.isfinite(omega1) and np.isfinite(omega2)):
        raise ValueError("Rabi frequencies must be finite")
    return -(omega1 * LAMBDA_PUMP + omega2 * LAMBDA_STOKES)


def lambda_system() -> ControlSystem:
    """Drift-free Lambda system whose fields are (pump, Stokes)."""
    return ControlSystem(np.zeros((3, 3)), (-LAMBDA_PUMP, -LAMBDA_STOKES), ("pump", "stokes"))


def mixing_angle(omega1: float, omega2: float) -> float:
    if omega1 == 0 and omega2 == 0:
        raise ValueError("mixing angle undefined when both fields vanish")
    return math.atan2(abs(omega1), abs(omega2))


def dark_state(omega1: float, omega2: float) -> np.ndarray:
    """``cos(theta)|1> - sin(theta)|3>``."""
    theta = mixing_angle(omega1, omega2)
    return np.array([math.cos(theta), 0.0, -math.sin(theta)], dtype=complex)


def stirap_schedule(p: StirapParams) -> PulseSchedule:
    """Two-field schedule (pump, Stokes) sampled at slice midpoints."""
    t = p.t0 + p.dt * (np.arange(p.slices) + 0.5)
    return PulseSchedule(np.column_stack([p.pump(t), p.stokes(t)]), p.dt, p.t0)


def eigenframe(hamiltonians, times=None) -> EigenFrame:
    """Instantaneous eigendecomposition tracked continuously along a path.

    Curves are matched to the previous sample by maximal overlap, so level
    crossings do not swap labels. Each eigenvector's phase is aligned with its
    predecessor so consecutive overlaps are real and non-negative.
    """
    hs = np.asarray(hamiltonians, dtype=complex)
    if hs.ndim != 3 or len(hs) == 0:
        raise ValueError("need a non-empty stack of Hamiltonians")
    times = np.arange(len(hs), dtype=float) if times is None else np.asarray(times, dtype=float)
    vals, vecs = eigh_sorted(hs)
    out_vals = np.empty_like(vals)
    out_vecs = np.empty_like(vecs)
    out_vals[0], out_vecs[0] = vals[0], vecs[0]
    for k in range(1, len(hs)):
        overlap = dagger(out_vecs[k - 1]) @ vecs[k]
        _, cols = linear_sum_assignment(-np.abs(overlap))
        v = vecs[k][:, cols]
        ov = np.einsum("in,in->n", out_vecs[k - 1].conj(), v)
        phase = np.where(np.abs(ov) > 1e-14, ov / np.where(ov == 0, 1, np.abs(ov)), 1)
        out_vecs[k] = v / phase
        out_vals[k] = vals[k][cols]
    return EigenFrame(times, out_vals, out_vecs)


def adiabaticity_margin(frame: EigenFrame, track: int | None = None, gap_floor: float = 0.1) -> float:
    """Largest ``|<Psi_n|d Psi_track/dt>| / |e_n - e_track|`` along the path.

    ``track`` defaults to the middle curve (the dark state of a Lambda
    system). Only samples whose smallest gap to the tracked curve is at least
    ``gap_floor`` times the largest such gap are scored, so pulse tails where
    every field is negligible do not dominate. Small values mean the tracked
    state is followed adiabatically.
    """
    n_samples, n = frame.eigenvalues.shape
    if n_samples < 2:
        raise ValueError("need at least two samples")
    track = n // 2 if track is None else track
    others = [m for m in range(n) if m != track]
    if not others:
        return 0.0
    gaps = np.abs(frame.eigenvalues[:, others] - frame.eigenvalues[:, [track]])
    min_gap = gaps.min(axis=1)
    scored = min_gap >= gap_floor * min_gap.max()
    worst = 0.0
    for k in range(n_samples - 1):
        if not scored[k]:
            continue
        if min_gap[k] < 1e-12:
            raise ValueError(f"spectral gap closes at t={frame.times[k]:g}")
        dtk = frame.times[k + 1] - frame.times[k]
        dpsi = (frame.eigenvectors[k + 1][:, track] - frame.eigenvectors[k][:, track]) / dtk
        for j, m in enumerate(others):
            worst = max(worst, abs(np.vdot(frame.eigenvectors[k][:, m], dpsi)) / gaps[k, j])
    return worst


def stirap_frame(p: StirapParams) -> EigenFrame:
    t = p.t0 + p.dt * np.arange(p.slices + 1)
    hs = np.array([lambda_rwa(a, b) for a, b in zip(p.pump(t), p.stokes(t))])
    return eigenframe(hs, t)


def simulate_stirap(p: StirapParams) -> StirapResult:
    sched = stirap_schedule(p)
    traj = propagate_ket(lambda_system(), sched, basis_ket(0, 3))
    pops = traj.populations()
    t = traj.times
    states = np.asarray(traj.states)
    dark = np.full(len(t), np.nan)
    for k, (w1, w2) in enumerate(zip(p.pump(t), p.stokes(t))):
        if w1 != 0 or w2 != 0:
            dark[k] = abs(np.vdot(dark_state(w1, w2), states[k])) ** 2
    dark_min = float(np.nanmin(dark)) if np.any(np.isfinite(dark)) else float("nan")
    return StirapResult(
        efficiency=float(pops[-1, 2]),
        max_intermediate=float(np.max(pops[:, 1])),
        dark_overlap_min=dark_min,
        times=t,
        populations=pops,
        dark_overlap=dark,
    )
