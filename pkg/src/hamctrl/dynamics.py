"""Closed and open propagation under piecewise-constant controls.

Field value ``values[k, m]`` of a :class:`PulseSchedule` applies on the
half-open interval ``[t0 + k*dt, t0 + (k+1)*dt)``. Trajectories record the
state at slice boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    as_hermitian,
    as_matrix,
    check_normalized,
    dagger,
    expm_skew,
    is_unitary,
    ket,
    pure_state_density,
    validate_density,
)


@dataclass(frozen=True, eq=False)
class ControlSystem:
    """Drift ``H_S`` plus control Hamiltonians ``H_m``: ``H = H_S + sum f_m H_m``."""

    drift: np.ndarray
    controls: tuple[np.ndarray, ...] = ()
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        drift = as_hermitian(self.drift, "drift")
        controls = tuple(as_hermitian(c, f"control[{i}]") for i, c in enumerate(self.controls))
        for i, c in enumerate(controls):
            if c.shape != drift.shape:
                raise ValueError(
                    f"control[{i}] has shape {c.shape} but drift has shape {drift.shape}"
                )
        labels = tuple(self.labels) or tuple(f"f{i + 1}" for i in range(len(controls)))
        if len(labels) != len(controls):
            raise ValueError("labels must match the number of controls")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls)


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Piecewise-constant fields on a uniform grid; ``values`` has shape (K, M)."""

    values: np.ndarray
    dt: float
    t0: float = 0.0
    f_max: float | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError("values must be a (K, M) array")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if self.f_max is not None and values.size and np.max(np.abs(values)) > self.f_max * (1 + 1e-12):
            raise ValueError(f"field amplitude exceeds f_max={self.f_max}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, n_slices: int, n_controls: int, dt: float, t0: float = 0.0) -> PulseSchedule:
        return cls(np.zeros((n_slices, n_controls)), dt, t0)

    @property
    def n_slices(self) -> int:
        return self.values.shape[0]

    @property
    def n_controls(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        return self.n_slices * self.dt

    def boundaries(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_slices + 1)

    def midpoints(self) -> np.ndarray:
        return self.t0 + self.dt * (np.arange(self.n_slices) + 0.5)

    def with_values(self, values) -> PulseSchedule:
        return PulseSchedule(values, self.dt, self.t0, self.f_max)


@dataclass(frozen=True, eq=False)
class LindbladChannel:
    operator: np.ndarray
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "operator", as_matrix(self.operator, "jump operator"))
        if not self.rate >= 0:
            raise ValueError(f"Lindblad rate must be non-negative, got {self.rate}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[np.ndarray] = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def populations(self) -> np.ndarray:
        """Basis-state populations, shape (samples, N)."""
        s = np.asarray(self.states)
        if s.ndim == 2:
            return np.abs(s) ** 2
        return np.real(np.diagonal(s, axis1=1, axis2=2))


def _check_schedule(sys: ControlSystem, sched: PulseSchedule) -> None:
    if sched.n_slices and sched.n_controls != sys.n_controls:
        raise ValueError(
            f"schedule has {sched.n_controls} fields but system has {sys.n_controls} controls"
        )


def slice_hamiltonian(sys: ControlSystem, f) -> np.ndarray:
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != sys.n_controls:
        raise ValueError(f"expected {sys.n_controls} field values, got {f.size}")
    h = sys.drift.copy()
    for fm, hm in zip(f, sys.controls):
        h = h + fm * hm
    return h


def slice_hamiltonians(sys: ControlSystem, sched: PulseSchedule) -> np.ndarray:
    """Stack of slice Hamiltonians, shape (K, N, N)."""
    _check_schedule(sys, sched)
    h = np.broadcast_to(sys.drift, (sched.n_slices, sys.dim, sys.dim)).copy()
    if sys.n_controls:
        ctrl = np.asarray(sys.controls)
        h = h + np.einsum("km,mij->kij", sched.values, ctrl)
    return h


def slice_propagators(sys: ControlSystem, sched: PulseSchedule) -> np.ndarray:
    """``exp(-i dt H_k)`` for every slice, shape (K, N, N)."""
    if sched.n_slices == 0:
        return np.zeros((0, sys.dim, sys.dim), dtype=complex)
    return expm_skew(slice_hamiltonians(sys, sched), sched.dt)


def total_propagator(sys: ControlSystem, sched: PulseSchedule) -> np.ndarray:
    """Time-ordered product ``U_K ... U_1`` (later slices on the left)."""
    u = np.eye(sys.dim, dtype=complex)
    for uk in slice_propagators(sys, sched):
        u = uk @ u
    return u


def _record_indices(n_slices: int, record_every: int) -> set[int]:
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    idx = set(range(0, n_slices + 1, record_every))
    idx.add(n_slices)
    return idx


def propagate_ket(sys: ControlSystem, sched: PulseSchedule, psi0, record_every: int = 1) -> Trajectory:
    psi = ket(psi0)
    if psi.size != sys.dim:
        raise ValueError(f"state has dimension {psi.size}, system has {sys.dim}")
    check_normalized(psi)
    keep = _record_indices(sched.n_slices, record_every)
    times = sched.boundaries()
    traj = Trajectory(times=times[sorted(keep)], states=[psi.copy()])
    for k, uk in enumerate(slice_propagators(sys, sched), start=1):
        psi = uk @ psi
        if k in keep:
            traj.states.append(psi.copy())
    return traj


def propagate_density(sys: ControlSystem, sched: PulseSchedule, rho0, record_every: int = 1) -> Trajectory:
    rho = validate_density(rho0, 1e-9)
    if rho.shape[0] != sys.dim:
        raise ValueError(f"state has dimension {rho.shape[0]}, system has {sys.dim}")
    keep = _record_indices(sched.n_slices, record_every)
    times = sched.boundaries()
    traj = Trajectory(times=times[sorted(keep)], states=[rho.copy()])
    for k, uk in enumerate(slice_propagators(sys, sched), start=1):
        rho = uk @ rho @ dagger(uk)
        if k in keep:
            traj.states.append(rho.copy())
    return traj


def liouvillian(h: np.ndarray, channels: list[LindbladChannel]) -> np.ndarray:
    """Superoperator of the Lindblad master equation acting on row-major vec(rho).

    Uses ``vec(A X B) = (A kron B^T) vec(X)`` for row-major vectorisation.
    """
    n = h.shape[0]
    eye = np.eye(n)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for ch in channels:
        if ch.rate == 0:
            continue
        op = ch.operator
        if op.shape != h.shape:
            raise ValueError(f"jump operator shape {op.shape} does not match {h.shape}")
        lhl = dagger(op) @ op
        gen = gen + ch.rate * (
            np.kron(op, op.conj()) - 0.5 * np.kron(lhl, eye) - 0.5 * np.kron(eye, lhl.T)
        )
    return gen


def propagate_open(
    sys: ControlSystem,
    sched: PulseSchedule,
    channels: list[LindbladChannel],
    rho0,
    substeps: int = 10,
    record_every: int = 1,
) -> Trajectory:
    """Integrate the Lindblad equation with fixed-step RK4, ``substeps`` per slice."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    for ch in channels:
        if not isinstance(ch, LindbladChannel):
            raise TypeError("channels must be LindbladChannel instances")
    rho = validate_density(rho0, 1e-9)
    n = sys.dim
    if rho.shape[0] != n:
        raise ValueError(f"state has dimension {rho.shape[0]}, system has {n}")
    keep = _record_indices(sched.n_slices, record_every)
    times = sched.boundaries()
    traj = Trajectory(times=times[sorted(keep)], states=[rho.copy()])
    v = rho.reshape(-1)
    h = sched.dt / substeps
    for k, hk in enumerate(slice_hamiltonians(sys, sched), start=1):
        gen = liouvillian(hk, channels)
        for _ in range(substeps):
            k1 = gen @ v
            k2 = gen @ (v + 0.5 * h * k1)
            k3 = gen @ (v + 0.5 * h * k2)
            k4 = gen @ (v + h * k3)
            v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if k in keep:
            traj.states.append(v.reshape(n, n).copy())
    return traj


def gate_fidelity(u, target) -> float:
    """Phase-insensitive overlap ``|Tr[target^dag u]|^2 / N^2``."""
    u, target = as_matrix(u, "u"), as_matrix(target, "target")
    if u.shape != target.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {target.shape}")
    if not (is_unitary(u) and is_unitary(target)):
        raise ValueError("gate_fidelity requires unitary inputs")
    n = u.shape[0]
    return float(min(1.0, abs(np.trace(dagger(target) @ u)) ** 2 / n**2))


def transfer_fidelity(rho, target_pure) -> float:
    """Population ``<target|rho|target>`` of a pure target state."""
    rho = np.asarray(rho, dtype=complex)
    psi = ket(target_pure)
    check_normalized(psi)
    if rho.ndim == 1:
        rho = pure_state_density(rho)
    if rho.shape[0] != psi.size:
        raise ValueError(f"dimension mismatch: {rho.shape} vs target of size {psi.size}")
    val = float(np.real(psi.conj() @ rho @ psi))
    if -1e-10 <= val < 0:
        return 0.0
    if 1 < val <= 1 + 1e-10:
        return 1.0
    return val
