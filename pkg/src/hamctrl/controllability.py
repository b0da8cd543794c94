"""Dynamical Lie algebra of a control-linear system and controllability verdicts.

The algebra generated by ``{iH_S, iH_1, ..., iH_M}`` is built breadth-first:
commutators of newly admitted elements with the whole current basis are
projected onto the orthogonal complement of the span (real Hilbert-Schmidt
inner product) and admitted when the remainder exceeds ``tol``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import dagger, hs_inner
from .dynamics import ControlSystem


class Verdict(str, enum.Enum):
    FULL_U = "FULL_U"
    FULL_SU = "FULL_SU"
    NOT_FULL = "NOT_FULL"


@dataclass
class LieBasis:
    dim_hilbert: int
    generators_used: int
    basis: list[np.ndarray] = field(default_factory=list)
    closed: bool = False

    @property
    def dimension(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class ControllabilityVerdict:
    kind: Verdict
    lie_dimension: int
    required: int
    dim_hilbert: int

    def __str__(self) -> str:
        return f"{self.kind.value} dim={self.lie_dimension} required={self.required} N={self.dim_hilbert}"


def _real_inner(a: np.ndarray, b: np.ndarray) -> float:
    # Tr[a^dag b] is real on anti-Hermitian matrices; keep the real part only
    return float(np.real(np.vdot(a, b)))


def _residual(x: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    # modified Gram-Schmidt, two passes
    r = x
    for _ in range(2):
        for b in basis:
            r = r - _real_inner(b, r) * b
    return r


def _norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def generate_lie_algebra(sys: ControlSystem, max_depth: int | None = None, tol: float = 1e-9) -> LieBasis:
    """Orthonormal basis of the Lie algebra generated by ``i H_S`` and ``i H_m``."""
    n = sys.dim
    if max_depth is None:
        max_depth = 2 * n * n
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    gens = [sys.drift, *sys.controls]
    gens = [1j * g for g in gens if _norm(g) > 0]
    if not gens:
        raise ValueError("generator set is empty (all operators vanish)")

    full = n * n
    out = LieBasis(dim_hilbert=n, generators_used=len(gens))
    frontier = []
    for g in gens:
        r = _residual(g / _norm(g), out.basis)
        if _norm(r) > tol:
            r = r / _norm(r)
            out.basis.append(r)
            frontier.append(r)

    depth = 0
    while frontier and out.dimension < full:
        if depth >= max_depth:
            return out
        depth += 1
        new = []
        for x in frontier:
            for y in list(out.basis):
                c = x @ y - y @ x
                cn = _norm(c)
                if cn <= tol:
                    continue
                r = _residual(c / cn, out.basis)
                if _norm(r) > tol:
                    r = r / _norm(r)
                    # commutators of anti-Hermitian matrices stay anti-Hermitian
                    r = (r - dagger(r)) / 2
                    r = r / _norm(r)
                    out.basis.append(r)
                    new.append(r)
                    if out.dimension >= full:
                        break
            if out.dimension >= full:
                break
        frontier = new
    out.closed = True
    return out


def identity_residual(lie: LieBasis) -> float:
    """Norm of the part of ``iI/sqrt(N)`` lying outside the algebra's span."""
    n = lie.dim_hilbert
    unit = 1j * np.eye(n) / np.sqrt(n)
    return _norm(_residual(unit, lie.basis))


def is_controllable(sys: ControlSystem, tol: float = 1e-9, max_depth: int | None = None) -> ControllabilityVerdict:
    lie = generate_lie_algebra(sys, max_depth=max_depth, tol=tol)
    n = sys.dim
    dim = lie.dimension
    if dim == n * n:
        return ControllabilityVerdict(Verdict.FULL_U, dim, n * n, n)
    if dim == n * n - 1 and identity_residual(lie) > 1 - tol:
        # i*I orthogonal to the span: the algebra is su(N)
        return ControllabilityVerdict(Verdict.FULL_SU, dim, n * n - 1, n)
    return ControllabilityVerdict(Verdict.NOT_FULL, dim, n * n - 1, n)


def orthogonality_check(controls, tol: float = 1e-9) -> tuple[bool, np.ndarray]:
    """Gram matrix ``G_mn = Tr[H_m^dag H_n]`` and whether it is ``const * delta_mn``."""
    ops = [np.asarray(c, dtype=complex) for c in controls]
    if not ops:
        raise ValueError("need at least one control operator")
    m = len(ops)
    gram = np.array([[hs_inner(ops[i], ops[j]) for j in range(m)] for i in range(m)])
    diag = np.real(np.diag(gram))
    scale = float(np.max(np.abs(diag)))
    if scale == 0:
        return False, gram
    off = gram - np.diag(np.diag(gram))
    ok = bool(np.max(np.abs(off), initial=0.0) <= tol * scale and np.ptp(diag) <= tol * scale)
    return ok, gram
