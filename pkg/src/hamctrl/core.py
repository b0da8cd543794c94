"""Dense complex-matrix primitives shared by every other module.

Conventions
-----------
* hbar = 1; energies and times are dimensionless.
* Matrices are plain ``numpy`` complex arrays in row-major (C) order.
* Level ``n`` is the ``n``-th basis vector (0-based in code). For qubits
  ``sigma_z |0> = +|0>``.
* Eigenvalues are returned in ascending order; each eigenvector's phase is
  fixed so that its largest-magnitude component is real and positive.
"""
from __future__ import annotations

import numpy as np

ATOL = 1e-10

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DensityError(ValueError):
    """Raised when a matrix fails the density-operator invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid density operator: " + "; ".join(self.violations))


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a: np.ndarray, rtol: float = 1e-12) -> bool:
    a = np.asarray(a)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= rtol * scale)


def as_hermitian(h, name: str = "operator", rtol: float = 1e-12) -> np.ndarray:
    m = as_matrix(h, name)
    if not is_hermitian(m, rtol):
        raise ValueError(f"{name} is not Hermitian")
    return m


def is_unitary(u: np.ndarray, atol: float = 1e-8) -> bool:
    u = np.asarray(u)
    n = u.shape[0]
    return bool(np.max(np.abs(dagger(u) @ u - np.eye(n))) <= atol)


def commutator(a, b) -> np.ndarray:
    """Return ``ab - ba``."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    _same_dim(a, b)
    return a @ b - b @ a


def fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    vecs = np.array(vecs, dtype=complex)
    idx = np.argmax(np.abs(vecs), axis=-2)
    pivots = np.take_along_axis(vecs, idx[..., None, :], axis=-2)
    phase = np.where(np.abs(pivots) > 0, pivots / np.where(pivots == 0, 1, np.abs(pivots)), 1)
    return vecs / phase


def eigh_sorted(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix (or stack) with fixed phases."""
    vals, vecs = np.linalg.eigh(h)
    return vals, fix_phases(vecs)


def expm_skew(h, s: float) -> np.ndarray:
    """Return ``exp(-i s H)`` for Hermitian ``H``.

    Computed by diagonalising ``H`` so the result is unitary to machine
    precision. ``h`` may also be a stack of shape ``(K, N, N)``.
    """
    if not np.isfinite(s):
        raise ValueError("s must be finite")
    h = np.asarray(h, dtype=complex)
    if h.ndim == 2:
        as_hermitian(h)
    elif not is_hermitian(h):
        raise ValueError("operator stack is not Hermitian")
    vals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * s * vals)
    return (vecs * phases[..., None, :]) @ dagger(vecs)


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr[a^dagger b]``."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    _same_dim(a, b)
    return complex(np.vdot(a, b))


def expectation(a, rho) -> float:
    a, rho = np.asarray(a, dtype=complex), np.asarray(rho, dtype=complex)
    _same_dim(a, rho)
    val = np.trace(a @ rho)
    if abs(val.imag) > ATOL * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def ket(amplitudes, normalize: bool = False) -> np.ndarray:
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if normalize:
        psi = psi / np.linalg.norm(psi)
    return psi


def basis_ket(n: int, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return psi


def check_normalized(psi: np.ndarray, tol: float = ATOL) -> None:
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise ValueError(f"state not normalized (norm={np.linalg.norm(psi):.12g})")


def pure_state_density(psi) -> np.ndarray:
    psi = ket(psi)
    check_normalized(psi)
    return np.outer(psi, psi.conj())


def validate_density(m, tol: float = ATOL) -> np.ndarray:
    """Check the density-operator invariants and return the matrix.

    Raises :class:`DensityError` listing every violated invariant.
    """
    m = np.asarray(m, dtype=complex)
    problems = []
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DensityError([f"not square: shape {m.shape}"])
    if not np.all(np.isfinite(m)):
        raise DensityError(["non-finite entries"])
    herm_err = float(np.max(np.abs(m - dagger(m))))
    if herm_err > tol:
        problems.append(f"not Hermitian (max |rho - rho^dag| = {herm_err:.3e})")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        problems.append(f"trace {tr.real:.12g} != 1")
    evals = np.linalg.eigvalsh((m + dagger(m)) / 2)
    if evals[0] < -max(tol, 1e-9):
        problems.append(f"negative eigenvalue {evals[0]:.6g}")
    if problems:
        raise DensityError(problems)
    return m


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def is_generic_ensemble(rho, tol: float = 1e-9) -> bool:
    """True when all eigenvalues of ``rho`` are pairwise separated by > tol."""
    evals = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    return bool(np.all(np.diff(evals) > tol))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
