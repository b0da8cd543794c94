"""Gradient optimal control of piecewise-constant fields.

The objective is ``J = A - C`` where ``A`` is either the final expectation
``Tr[A rho(t_F)]`` or the gate fidelity ``|Tr[W^dag U]|^2 / N^2`` and
``C = sum_m (lambda_m / 2) sum_k f_mk^2 dt`` is the field-energy penalty.
States are always generated by exact propagation, so the dynamical
constraint term is identically zero; the costate obtained by propagating
the objective operator backwards gives the stationarity conditions.

Slice derivatives are exact: for ``H = V diag(l) V^dag`` the derivative of
``exp(-i dt H)`` along ``H_m`` is ``V (G * (V^dag H_m V)) V^dag`` with
``G_ab = (e^{-i dt l_a} - e^{-i dt l_b}) / (l_a - l_b)`` and
``G_aa = -i dt e^{-i dt l_a}``.
"""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .core import as_hermitian, as_matrix, dagger, is_unitary, validate_density
from .dynamics import ControlSystem, PulseSchedule, slice_hamiltonians, total_propagator

log = logging.getLogger(__name__)


class NumericalError(ArithmeticError):
    pass


class ObjectiveKind(str, enum.Enum):
    OBSERVABLE = "OBSERVABLE"
    GATE = "GATE"


@dataclass(eq=False)
class ObjectiveSpec:
    kind: ObjectiveKind
    target: np.ndarray
    rho0: np.ndarray | None = None
    penalties: np.ndarray | None = None

    def __post_init__(self):
        self.kind = ObjectiveKind(self.kind)
        if self.kind is ObjectiveKind.OBSERVABLE:
            self.target = as_hermitian(self.target, "observable")
            if self.rho0 is None:
                raise ValueError("observable objective needs an initial state")
            self.rho0 = validate_density(self.rho0, 1e-9)
            if self.rho0.shape != self.target.shape:
                raise ValueError("observable and initial state dimensions differ")
        else:
            self.target = as_matrix(self.target, "target gate")
            if not is_unitary(self.target):
                raise ValueError("target gate is not unitary")
        if self.penalties is not None:
            self.penalties = np.asarray(self.penalties, dtype=float).reshape(-1)
            if np.any(self.penalties < 0):
                raise ValueError("penalty weights must be non-negative")

    @classmethod
    def observable(cls, a, rho0, penalties=None) -> ObjectiveSpec:
        return cls(ObjectiveKind.OBSERVABLE, a, rho0, penalties)

    @classmethod
    def gate(cls, u, penalties=None) -> ObjectiveSpec:
        return cls(ObjectiveKind.GATE, u, None, penalties)

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    def lambdas(self, n_controls: int) -> np.ndarray:
        if self.penalties is None:
            return np.zeros(n_controls)
        if self.penalties.size == 1:
            return np.full(n_controls, float(self.penalties[0]))
        if self.penalties.size != n_controls:
            raise ValueError(f"expected {n_controls} penalty weights, got {self.penalties.size}")
        return self.penalties


@dataclass
class ObjectiveValue:
    a_term: float
    c_term: float

    @property
    def j(self) -> float:
        return self.a_term - self.c_term


@dataclass
class AdjointTrajectory:
    """Forward states before each slice and costates after it.

    ``forward[k]`` is the state at ``t_k``; ``costates[k]`` is the objective
    operator propagated back to ``t_k`` (``costates[K]`` is the target).
    """

    forward: list[np.ndarray]
    costates: list[np.ndarray]


@dataclass
class OptimizeOptions:
    max_iter: int = 500
    step: float = 1.0
    line_search: bool = True
    tol_grad: float = 1e-8
    min_step: float = 1e-12
    grow: float = 2.0
    seed: int | None = None


@dataclass
class OptimizationReport:
    iterations: int = 0
    j_history: list[float] = field(default_factory=list)
    a_history: list[float] = field(default_factory=list)
    c_history: list[float] = field(default_factory=list)
    final_a: float = float("nan")
    final_cost: float = float("nan")
    converged: bool = False
    stop_reason: str = ""
    wall_time: float = 0.0


def field_energy_cost(sched: PulseSchedule, lambdas) -> float:
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if lam.size != sched.n_controls:
        raise ValueError(f"expected {sched.n_controls} penalty weights, got {lam.size}")
    if np.any(lam < 0):
        raise ValueError("penalty weights must be non-negative")
    return float(np.sum(lam / 2 * np.sum(sched.values**2, axis=0)) * sched.dt)


def _slice_data(sys: ControlSystem, sched: PulseSchedule):
    h = slice_hamiltonians(sys, sched)
    vals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * sched.dt * vals)
    props = (vecs * phases[:, None, :]) @ dagger(vecs)
    return vals, vecs, phases, props


def _divided_differences(vals: np.ndarray, phases: np.ndarray, dt: float) -> np.ndarray:
    """Kernel ``G_ab`` for every slice, shape (K, N, N)."""
    la = vals[:, :, None]
    lb = vals[:, None, :]
    diff = la - lb
    pa = phases[:, :, None]
    pb = phases[:, None, :]
    near = np.abs(diff) < 1e-10
    safe = np.where(near, 1.0, diff)
    g = (pa - pb) / safe
    diag = -1j * dt * (pa + pb) / 2
    return np.where(near, diag, g)


def evaluate_objective(sys: ControlSystem, sched: PulseSchedule, obj: ObjectiveSpec) -> ObjectiveValue:
    if obj.dim != sys.dim:
        raise ValueError(f"objective dimension {obj.dim} != system dimension {sys.dim}")
    u = total_propagator(sys, sched)
    if obj.kind is ObjectiveKind.OBSERVABLE:
        rho = u @ obj.rho0 @ dagger(u)
        a = float(np.real(np.trace(obj.target @ rho)))
    else:
        a = float(abs(np.trace(dagger(obj.target) @ u)) ** 2 / sys.dim**2)
    c = field_energy_cost(sched, obj.lambdas(sys.n_controls)) if sched.n_slices else 0.0
    return ObjectiveValue(a, c)


def adjoint_trajectory(sys: ControlSystem, sched: PulseSchedule, obj: ObjectiveSpec) -> AdjointTrajectory:
    _, _, _, props = _slice_data(sys, sched)
    return _sweeps(props, obj, sys.dim)


def _sweeps(props: np.ndarray, obj: ObjectiveSpec, n: int) -> AdjointTrajectory:
    k_total = len(props)
    if obj.kind is ObjectiveKind.OBSERVABLE:
        fwd = [obj.rho0]
        for u in props:
            fwd.append(u @ fwd[-1] @ dagger(u))
        back = [obj.target]
        for u in props[::-1]:
            back.append(dagger(u) @ back[-1] @ u)
    else:
        fwd = [np.eye(n, dtype=complex)]
        for u in props:
            fwd.append(u @ fwd[-1])
        back = [obj.target]
        for u in props[::-1]:
            back.append(dagger(u) @ back[-1])
    back.reverse()
    assert len(fwd) == len(back) == k_total + 1
    return AdjointTrajectory(forward=fwd, costates=back)


def gradient(sys: ControlSystem, sched: PulseSchedule, obj: ObjectiveSpec) -> np.ndarray:
    """``dJ/df_mk`` with shape (K, M)."""
    if obj.dim != sys.dim:
        raise ValueError(f"objective dimension {obj.dim} != system dimension {sys.dim}")
    k_total, m_total = sched.n_slices, sys.n_controls
    grad = np.zeros((k_total, m_total))
    if k_total == 0 or m_total == 0:
        return grad
    vals, vecs, phases, props = _slice_data(sys, sched)
    kernel = _divided_differences(vals, phases, sched.dt)
    ctrl = np.asarray(sys.controls)
    # dU_k/df_mk = V_k (G_k * V_k^dag H_m V_k) V_k^dag
    hm_eig = np.einsum("kai,mij,kjb->kmab", dagger(vecs), ctrl, vecs)
    du = np.einsum("kia,kmab,kjb->kmij", vecs, kernel[:, None] * hm_eig, vecs.conj())
    adj = _sweeps(props, obj, sys.dim)
    fwd = np.asarray(adj.forward[:-1])
    back = np.asarray(adj.costates[1:])
    if obj.kind is ObjectiveKind.OBSERVABLE:
        # d Tr[B U rho U^dag] = 2 Re Tr[B dU rho U^dag]
        right = fwd @ dagger(props)
        grad = 2 * np.real(np.einsum("kij,kmjl,kli->km", back, du, right))
    else:
        n = sys.dim
        u_total = adj.forward[-1]
        g = np.trace(dagger(obj.target) @ u_total)
        # back[k]^dag = W^dag U_K ... U_{k+1}; dg = Tr[back^dag dU fwd]
        dg = np.einsum("kij,kmjl,kli->km", dagger(back), du, fwd)
        grad = 2 * np.real(np.conj(g) * dg) / n**2
    lam = obj.lambdas(m_total)
    grad = grad - lam[None, :] * sched.values * sched.dt
    return grad


def optimize(sys: ControlSystem, sched0: PulseSchedule, obj: ObjectiveSpec,
             opts: OptimizeOptions | None = None) -> tuple[PulseSchedule, OptimizationReport]:
    """Gradient ascent on ``J`` with backtracking (Armijo, factor 0.5) line search.

    After an accepted step the trial step grows by ``opts.grow``. Stops at
    ``max_iter``, when ``max|grad| < tol_grad`` or when the step underflows.
    """
    opts = opts or OptimizeOptions()
    if opts.max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    t_start = time.perf_counter()
    report = OptimizationReport()
    sched = sched0
    val = evaluate_objective(sys, sched, obj)
    _check_finite(val, 0)
    report.j_history.append(val.j)
    report.a_history.append(val.a_term)
    report.c_history.append(val.c_term)
    step = opts.step
    for it in range(1, opts.max_iter + 1):
        g = gradient(sys, sched, obj)
        gnorm = float(np.max(np.abs(g), initial=0.0))
        if gnorm < opts.tol_grad:
            report.converged = True
            report.stop_reason = "gradient"
            break
        g2 = float(np.sum(g * g))
        accepted = False
        while step >= opts.min_step:
            trial = sched.with_values(sched.values + step * g)
            tval = evaluate_objective(sys, trial, obj)
            _check_finite(tval, it)
            if not opts.line_search or tval.j >= val.j + 1e-4 * step * g2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            report.stop_reason = "step underflow"
            break
        sched, val = trial, tval
        report.iterations = it
        report.j_history.append(val.j)
        report.a_history.append(val.a_term)
        report.c_history.append(val.c_term)
        log.debug("iter %d J=%.10f step=%.3e |g|=%.3e", it, val.j, step, gnorm)
        step *= opts.grow
    else:
        report.stop_reason = "max_iter"
    report.final_a = val.a_term
    report.final_cost = val.c_term
    report.wall_time = time.perf_counter() - t_start
    return sched, report


def _check_finite(val: ObjectiveValue, it: int) -> None:
    if not (np.isfinite(val.a_term) and np.isfinite(val.c_term)):
        raise NumericalError(f"non-finite objective at iteration {it}")


def random_fields(n_slices: int, n_controls: int, amplitude: float, seed: int) -> np.ndarray:
    """Uniform random initial fields in ``[-amplitude, amplitude]``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-amplitude, amplitude, size=(n_slices, n_controls))
