"""Rotating frame, frequency-selective RWA controls and SU(2) pulse synthesis.

Rotation convention: a Pauli-normalised generator ``G`` (eigenvalues +-1)
driven with area ``c`` produces ``exp(-i c G / 2)``, so a pi rotation has
``c = pi``. The matching control Hamiltonian is ``G / 2`` and the area is
``c = integral f dt`` (``c = f t`` for a constant field).

With ``H = Omega * x_12`` a complete 1 -> 2 transfer needs ``Omega T = pi/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    as_hermitian,
    as_matrix,
    dagger,
    expm_skew,
    is_unitary,
)
from .dynamics import ControlSystem, PulseSchedule, propagate_ket

Pair = tuple[int, int]


@dataclass
class TransitionTable:
    """Energies of the drift (ascending) with the transition frequencies and dipoles.

    Levels are 0-based; every key ``(n, n2)`` has ``n2 > n``.
    """

    energies: np.ndarray
    eigenvectors: np.ndarray
    frequencies: dict[Pair, float] = field(default_factory=dict)
    dipoles: dict[Pair, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class ShapedFieldComponent:
    """One frequency component ``A(t) cos(omega t + phase)``.

    ``envelope`` is ``("constant", amplitude)`` or
    ``("gaussian", peak, center, width)``.
    """

    pair: Pair
    envelope: tuple
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        n, n2 = self.pair
        if not n2 > n:
            raise ValueError(f"pair {self.pair} must satisfy n' > n")
        kind = self.envelope[0]
        if kind == "gaussian":
            if len(self.envelope) != 4 or not self.envelope[3] > 0:
                raise ValueError("gaussian envelope needs (peak, center, width > 0)")
        elif kind != "constant" or len(self.envelope) != 2:
            raise ValueError(f"unknown envelope {self.envelope!r}")

    def amplitude(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.envelope[0] == "constant":
            return np.full_like(t, float(self.envelope[1]))
        _, peak, center, width = self.envelope
        return peak * np.exp(-((t - center) ** 2) / (2 * width**2))

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.amplitude(t) * np.cos(self.frequency * t + self.phase)


@dataclass(frozen=True)
class RotationStep:
    """Rotation by area ``coefficient`` about generator ``generator``.

    ``amplitude * duration`` equals ``coefficient``.
    """

    generator: str
    coefficient: float
    duration: float
    amplitude: float

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if not self.duration > 0 and self.coefficient != 0:
            raise ValueError("zero-duration step with nonzero coefficient")
        if self.duration > 0 and abs(self.amplitude * self.duration - self.coefficient) > 1e-12 * max(1.0, abs(self.coefficient)):
            raise ValueError("amplitude * duration must equal coefficient")

    @classmethod
    def from_coefficient(cls, generator: str, coefficient: float, f_max: float = 1.0) -> RotationStep:
        duration = abs(coefficient) / f_max
        amp = coefficient / duration if duration > 0 else 0.0
        return cls(generator, coefficient, duration, amp)


GENERATORS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
SYNTH_ORDER = ("x", "y")  # field index of each generator in synthesised schedules


def transition_table(h_s, dipoles: dict[Pair, float] | None = None) -> TransitionTable:
    h_s = as_hermitian(h_s, "H_S")
    energies, vecs = np.linalg.eigh(h_s)
    if np.any(np.diff(energies) <= 1e-10):
        raise ValueError("degenerate drift energies: frequency addressing is ill-defined")
    n = len(energies)
    freqs = {(a, b): float(energies[b] - energies[a]) for a in range(n) for b in range(a + 1, n)}
    dip = {}
    for pair, d in (dipoles or {}).items():
        pair = tuple(pair)
        if pair not in freqs:
            raise ValueError(f"dipole given for invalid pair {pair}")
        if not d > 0:
            raise ValueError(f"dipole for {pair} must be positive")
        dip[pair] = float(d)
    return TransitionTable(energies=energies, eigenvectors=vecs, frequencies=freqs, dipoles=dip)


def strong_regularity(table: TransitionTable, separation: float = 0.0) -> tuple[bool, list[tuple[Pair, Pair]]]:
    """All transition frequencies pairwise separated by more than ``separation``."""
    items = sorted(table.frequencies.items())
    bad = []
    for i, (p, w) in enumerate(items):
        for q, w2 in items[i + 1:]:
            if abs(w - w2) <= separation:
                bad.append((p, q))
    return not bad, bad


def realize_field(components: list[ShapedFieldComponent], t0: float, dt: float, n_slices: int) -> PulseSchedule:
    """Sample the multi-frequency field at slice midpoints onto a one-field schedule."""
    if n_slices < 1:
        raise ValueError("need at least one slice")
    t = t0 + dt * (np.arange(n_slices) + 0.5)
    f = np.zeros(n_slices)
    for c in components:
        f = f + c(t)
    return PulseSchedule(f[:, None], dt, t0)


def transition_x(n: int, n2: int, dim: int) -> np.ndarray:
    x = np.zeros((dim, dim), dtype=complex)
    x[n, n2] = x[n2, n] = 1
    return x


def transition_y(n: int, n2: int, dim: int) -> np.ndarray:
    """``i(|n><n'| - |n'><n|)``; for a qubit this is ``-sigma_y``."""
    y = np.zeros((dim, dim), dtype=complex)
    y[n, n2] = 1j
    y[n2, n] = -1j
    return y


def rabi_frequency(table: TransitionTable, pair: Pair, amplitude: float) -> float:
    if pair not in table.dipoles:
        raise ValueError(f"no dipole moment for pair {pair}")
    return amplitude * table.dipoles[pair] / 2


def rwa_hamiltonian(table: TransitionTable, drives) -> np.ndarray:
    """Drift-free RWA control Hamiltonian in the eigenbasis of ``H_S``.

    ``drives`` is an iterable of ``(pair, omega, phase)`` with ``omega`` the
    Rabi frequency of that transition.
    """
    n = table.dim
    h = np.zeros((n, n), dtype=complex)
    for pair, omega, phase in drives:
        pair = tuple(pair)
        if pair not in table.frequencies:
            raise ValueError(f"unknown transition {pair}")
        a, b = pair
        h = h + omega * (math.cos(phase) * transition_x(a, b, n) + math.sin(phase) * transition_y(a, b, n))
    return h


def rotating_frame(h_c, h_s, t: float) -> np.ndarray:
    """Interaction-picture operator ``U_S(t)^dag H_C U_S(t)``, ``U_S = exp(-i t H_S)``."""
    h_c = as_matrix(h_c, "H_C")
    h_s = as_hermitian(h_s, "H_S")
    if h_c.shape != h_s.shape:
        raise ValueError(f"dimension mismatch: {h_c.shape} vs {h_s.shape}")
    u = expm_skew(h_s, t)
    return dagger(u) @ h_c @ u


@dataclass
class RwaProbeReport:
    times: np.ndarray
    populations_lab: np.ndarray
    populations_rwa: np.ndarray

    @property
    def deviation(self) -> np.ndarray:
        return np.max(np.abs(self.populations_lab - self.populations_rwa), axis=1)

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation))


def rwa_consistency_probe(
    table: TransitionTable,
    drive: tuple[Pair, float, float],
    duration: float,
    n_slices: int,
    initial_level: int = 0,
) -> RwaProbeReport:
    """Compare lab-frame and RWA propagation of a resonant constant-envelope drive.

    ``drive`` is ``(pair, omega, phase)``; the lab field amplitude is
    ``2 omega / d`` at the transition frequency. Populations are compared in
    the drift eigenbasis, which the rotating frame leaves unchanged.
    """
    pair, omega, phase = tuple(drive[0]), float(drive[1]), float(drive[2])
    if pair not in table.frequencies:
        raise ValueError(f"unknown transition {pair}")
    n = table.dim
    d = table.dipoles.get(pair, 1.0)
    dt = duration / n_slices
    h_s = np.diag(table.energies).astype(complex)
    comp = ShapedFieldComponent(pair, ("constant", 2 * omega / d), table.frequencies[pair], phase)
    field_sched = realize_field([comp], 0.0, dt, n_slices)
    lab = ControlSystem(h_s, (d * transition_x(*pair, n),))
    psi0 = np.zeros(n, dtype=complex)
    psi0[initial_level] = 1
    p_lab = propagate_ket(lab, field_sched, psi0).populations()

    rwa = ControlSystem(np.zeros((n, n)), (rwa_hamiltonian(table, [(pair, 1.0, phase)]),))
    rwa_sched = PulseSchedule(np.full((n_slices, 1), omega), dt)
    p_rwa = propagate_ket(rwa, rwa_sched, psi0).populations()
    return RwaProbeReport(field_sched.boundaries(), p_lab, p_rwa)


def _rotation(generator: str, c: float) -> np.ndarray:
    return expm_skew(GENERATORS[generator] / 2, c)


def reconstruct(steps: list[RotationStep]) -> np.ndarray:
    """Product of the step rotations, first step applied first."""
    u = np.eye(2, dtype=complex)
    for s in steps:
        u = _rotation(s.generator, s.coefficient) @ u
    return u


# Rotation by 2pi/3 about (1,1,1): maps sigma_x -> sigma_y -> sigma_z -> sigma_x.
_CYCLE = expm_skew((SIGMA_X + SIGMA_Y + SIGMA_Z) / (2 * np.sqrt(3)), 2 * np.pi / 3)


def decompose_su2(u, f_max: float = 1.0) -> list[RotationStep]:
    """Y-X-Y Euler angles of a 2x2 unitary.

    Returns steps ``[y(c1), x(c2), y(c3)]`` in time order, i.e.
    ``exp(-i c3 Y/2) exp(-i c2 X/2) exp(-i c1 Y/2) = u`` up to global phase.
    """
    u = as_matrix(u, "u")
    if u.shape != (2, 2):
        raise ValueError("decompose_su2 needs a 2x2 matrix")
    if not is_unitary(u, 1e-10):
        raise ValueError("decompose_su2 needs a unitary matrix")
    # Conjugating by the cycle turns the Y-X-Y problem into Z-Y-Z
    v = _CYCLE @ u @ dagger(_CYCLE)
    v = v / np.sqrt(np.linalg.det(v))
    a, b = v[0, 0], v[1, 0]
    beta = 2 * math.atan2(abs(b), abs(a))
    arg_a = float(np.angle(a)) if abs(a) > 1e-12 else 0.0
    arg_b = float(np.angle(b)) if abs(b) > 1e-12 else 0.0
    alpha = -arg_a + arg_b
    gamma = -arg_a - arg_b
    coeffs = [(_wrap(gamma)), beta, (_wrap(alpha))]
    return [RotationStep.from_coefficient(g, c, f_max) for g, c in zip(("y", "x", "y"), coeffs)]


def _wrap(angle: float) -> float:
    w = math.remainder(angle, 2 * math.pi)
    return 0.0 if abs(w) < 1e-15 else w


def pulses_from_steps(steps: list[RotationStep], f_max: float, dt: float = 1.0,
                      generators: tuple[str, ...] = SYNTH_ORDER) -> PulseSchedule:
    """Turn rotation steps into contiguous bang-style slices.

    Each step runs at ``sign(c) f_max`` for ``|c| / f_max``, rounded up to
    whole slices with the amplitude rescaled so the area stays exactly ``c``.
    Field ``m`` drives ``generators[m] / 2``.
    """
    if not f_max > 0:
        raise ValueError("f_max must be positive")
    rows = []
    for s in steps:
        if s.generator not in generators:
            raise ValueError(f"generator {s.generator!r} not among {generators}")
        if s.coefficient == 0:
            continue
        if s.duration == 0:
            raise ValueError("zero-duration step with nonzero coefficient")
        n = max(1, math.ceil(abs(s.coefficient) / f_max / dt - 1e-9))
        amp = s.coefficient / (n * dt)
        row = np.zeros(len(generators))
        row[generators.index(s.generator)] = amp
        rows.extend([row] * n)
    values = np.array(rows) if rows else np.zeros((0, len(generators)))
    return PulseSchedule(values, dt)


def synthesis_system(generators: tuple[str, ...] = SYNTH_ORDER) -> ControlSystem:
    """Drift-free qubit whose control ``m`` is ``generators[m] / 2``."""
    return ControlSystem(np.zeros((2, 2)), tuple(GENERATORS[g] / 2 for g in generators), generators)
