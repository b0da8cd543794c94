import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hamctrl.core import SIGMA_X, SIGMA_Z, basis_ket, pure_state_density, random_density, random_hermitian, random_unitary
from hamctrl.dynamics import (
    ControlSystem,
    LindbladChannel,
    PulseSchedule,
    gate_fidelity,
    propagate_density,
    propagate_ket,
    propagate_open,
    slice_hamiltonian,
    total_propagator,
    transfer_fidelity,
)
from oracles import scipy_time_ordered


def random_instance(seed, n=None, k=None, m=2):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 5))
    k = int(rng.integers(1, 51)) if k is None else k
    sys = ControlSystem(random_hermitian(n, rng), tuple(random_hermitian(n, rng) for _ in range(m)))
    sched = PulseSchedule(rng.normal(size=(k, m)), float(rng.uniform(0.01, 0.3)))
    return sys, sched, rng


def test_control_system_shape_checks():
    with pytest.raises(ValueError, match="shape"):
        ControlSystem(np.eye(3), (SIGMA_X,))
    with pytest.raises(ValueError, match="Hermitian"):
        ControlSystem(np.array([[0, 1], [0, 0]]))


def test_schedule_checks():
    with pytest.raises(ValueError):
        PulseSchedule(np.zeros((2, 1)), 0.0)
    with pytest.raises(ValueError):
        PulseSchedule([[np.nan]], 0.1)
    with pytest.raises(ValueError, match="f_max"):
        PulseSchedule([[2.0]], 0.1, f_max=1.0)


def test_slice_hamiltonian(qubit_system):
    np.testing.assert_array_equal(slice_hamiltonian(qubit_system, [0.0]), SIGMA_Z)
    np.testing.assert_array_equal(slice_hamiltonian(qubit_system, [2.0]), SIGMA_Z + 2 * SIGMA_X)
    with pytest.raises(ValueError):
        slice_hamiltonian(qubit_system, [1.0, 2.0])


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2), st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_slice_hamiltonian_linear(f, g):
    rng = np.random.default_rng(0)
    sys = ControlSystem(random_hermitian(3, rng), (random_hermitian(3, rng), random_hermitian(3, rng)))
    lhs = slice_hamiltonian(sys, np.add(f, g))
    rhs = slice_hamiltonian(sys, f) + slice_hamiltonian(sys, g) - sys.drift
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_total_propagator_examples():
    sys = ControlSystem(np.zeros((2, 2)), (SIGMA_X,))
    np.testing.assert_array_equal(total_propagator(sys, PulseSchedule.zeros(0, 1, 0.1)), np.eye(2))
    dt = 0.3
    u = total_propagator(sys, PulseSchedule([[np.pi / (2 * dt)]], dt))
    np.testing.assert_allclose(u, -1j * SIGMA_X, atol=1e-14)


def test_total_propagator_slice_splitting():
    sys, sched, _ = random_instance(3, n=3, k=5)
    fine = PulseSchedule(np.repeat(sched.values, 2, axis=0), sched.dt / 2)
    np.testing.assert_allclose(total_propagator(sys, fine), total_propagator(sys, sched), atol=1e-12)


def test_time_ordering_is_respected():
    sys = ControlSystem(np.zeros((2, 2)), (SIGMA_X, SIGMA_Z))
    sched = PulseSchedule([[1.0, 0.0], [0.0, 1.0]], 0.7)
    rev = PulseSchedule(sched.values[::-1], 0.7)
    u = total_propagator(sys, sched)
    # later slice on the left
    np.testing.assert_allclose(u, scipy_time_ordered(sys.drift, sys.controls, sched.values, 0.7), atol=1e-12)
    assert np.max(np.abs(u - total_propagator(sys, rev))) > 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_total_propagator_matches_pade(seed):
    sys, sched, _ = random_instance(seed)
    ref = scipy_time_ordered(sys.drift, sys.controls, sched.values, sched.dt)
    np.testing.assert_allclose(total_propagator(sys, sched), ref, atol=1e-10)


def test_propagate_ket_examples():
    sys = ControlSystem(np.zeros((2, 2)))
    sched = PulseSchedule.zeros(5, 0, 0.1)
    traj = propagate_ket(sys, sched, [1, 0])
    assert all(np.array_equal(s, [1, 0]) for s in traj.states)
    omega = 1.3
    sys = ControlSystem(omega / 2 * SIGMA_Z)
    psi0 = np.array([0.6, 0.8])
    traj = propagate_ket(sys, PulseSchedule.zeros(10, 0, 0.2), psi0)
    for t, s in zip(traj.times, traj.states):
        np.testing.assert_allclose(s, psi0 * np.exp([-1j * omega * t / 2, 1j * omega * t / 2]), atol=1e-12)
    np.testing.assert_allclose(traj.populations(), np.tile([0.36, 0.64], (11, 1)), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_propagate_ket_consistency(seed):
    sys, sched, rng = random_instance(seed)
    psi0 = rng.normal(size=sys.dim) + 1j * rng.normal(size=sys.dim)
    psi0 /= np.linalg.norm(psi0)
    traj = propagate_ket(sys, sched, psi0)
    assert len(traj.states) == sched.n_slices + 1
    np.testing.assert_allclose(traj.final, total_propagator(sys, sched) @ psi0, atol=1e-10)
    assert np.all(np.abs(np.linalg.norm(traj.states, axis=1) - 1) <= 1e-10)
    dens = propagate_density(sys, sched, pure_state_density(psi0))
    for psi, rho in zip(traj.states, dens.states):
        np.testing.assert_allclose(rho, np.outer(psi, psi.conj()), atol=1e-10)


def test_propagate_errors(qubit_system):
    sched = PulseSchedule.zeros(3, 1, 0.1)
    with pytest.raises(ValueError):
        propagate_ket(qubit_system, sched, [1, 0, 0])
    with pytest.raises(ValueError):
        propagate_ket(qubit_system, sched, [1, 1])
    with pytest.raises(ValueError):
        propagate_density(qubit_system, sched, np.eye(3) / 3)
    with pytest.raises(ValueError):
        propagate_ket(qubit_system, PulseSchedule.zeros(3, 2, 0.1), [1, 0])


def test_record_every(qubit_system):
    sched = PulseSchedule(np.ones((7, 1)), 0.1)
    traj = propagate_ket(qubit_system, sched, [1, 0], record_every=3)
    np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.7])
    assert len(traj.states) == 4


def test_maximally_mixed_is_stationary(rng):
    sys, sched, _ = random_instance(11, n=3)
    traj = propagate_density(sys, sched, np.eye(3) / 3)
    for rho in traj.states:
        np.testing.assert_allclose(rho, np.eye(3) / 3, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_density_spectrum_preserved(seed):
    sys, sched, rng = random_instance(seed)
    rho0 = random_density(sys.dim, rng)
    ev0 = np.linalg.eigvalsh(rho0)
    for rho in propagate_density(sys, sched, rho0).states:
        assert abs(np.trace(rho) - 1) <= 1e-9
        np.testing.assert_allclose(np.linalg.eigvalsh(rho), ev0, atol=1e-9)


def test_open_negative_rate():
    with pytest.raises(ValueError):
        LindbladChannel(SIGMA_X, -0.1)


def test_open_without_channels_matches_closed():
    sys, sched, rng = random_instance(5, n=3, k=20)
    rho0 = random_density(3, rng)
    closed = propagate_density(sys, sched, rho0)
    for channels in ([], [LindbladChannel(random_hermitian(3, rng), 0.0)]):
        opened = propagate_open(sys, sched, channels, rho0, substeps=100)
        for a, b in zip(closed.states, opened.states):
            np.testing.assert_allclose(a, b, atol=1e-8)


def test_amplitude_damping_law():
    gamma = 0.8
    t_final = 1 / gamma
    sys = ControlSystem(np.diag([0.0, 1.0]))
    sched = PulseSchedule.zeros(10, 0, t_final / 10)
    lower = np.array([[0, 1], [0, 0]])
    substeps = int(np.ceil(gamma * sched.dt / 0.01))
    traj = propagate_open(sys, sched, [LindbladChannel(lower, gamma)], np.diag([0.0, 1.0]), substeps)
    excited = traj.populations()[:, 1]
    expected = np.exp(-gamma * traj.times)
    assert abs(excited[-1] / expected[-1] - 1) <= 1e-4
    np.testing.assert_allclose(excited, expected, rtol=1e-4)
    for rho in traj.states:
        assert abs(np.trace(rho) - 1) <= 1e-8
        assert np.max(np.abs(rho - rho.conj().T)) <= 1e-8


def test_open_integrator_order():
    rng = np.random.default_rng(9)
    sys, sched, _ = random_instance(9, n=3, k=4)
    chans = [LindbladChannel(rng.normal(size=(3, 3)), 0.5), LindbladChannel(random_hermitian(3, rng), 0.3)]
    rho0 = random_density(3, rng)
    finals = [propagate_open(sys, sched, chans, rho0, s).final for s in (1, 2, 4)]
    d1 = np.max(np.abs(finals[0] - finals[1]))
    d2 = np.max(np.abs(finals[1] - finals[2]))
    # at least second order: halving the step cuts the change by >= 4
    assert d1 / d2 >= 4
    h = sched.dt / 2
    assert d2 <= 10 * h**2


def test_open_trace_preserved_with_drive(rng):
    sys, sched, _ = random_instance(21, n=2, k=30)
    ch = [LindbladChannel(np.array([[0, 1], [0, 0]]), 0.4), LindbladChannel(SIGMA_Z, 0.2)]
    traj = propagate_open(sys, sched, ch, np.diag([0.0, 1.0]), 5)
    assert all(abs(np.trace(r) - 1) <= 1e-8 for r in traj.states)


def test_gate_fidelity(rng):
    u = random_unitary(3, rng)
    assert gate_fidelity(u, u) == pytest.approx(1.0, abs=1e-14)
    assert gate_fidelity(np.exp(0.73j) * u, u) == pytest.approx(1.0, abs=1e-14)
    assert gate_fidelity(np.eye(2), SIGMA_X) == 0.0
    with pytest.raises(ValueError):
        gate_fidelity(2 * np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        gate_fidelity(np.eye(2), np.eye(3))


def test_transfer_fidelity(rng):
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi /= np.linalg.norm(psi)
    assert transfer_fidelity(pure_state_density(psi), psi) == pytest.approx(1.0, abs=1e-12)
    assert transfer_fidelity(np.diag([1.0, 0.0]), basis_ket(1, 2)) == 0.0
    assert transfer_fidelity(np.eye(2) / 2, psi[:2] / np.linalg.norm(psi[:2])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        transfer_fidelity(np.eye(2) / 2, [1, 0, 0])
