import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hamctrl.adiabatic import (
    StirapParams,
    adiabaticity_margin,
    dark_state,
    eigenframe,
    lambda_rwa,
    mixing_angle,
    simulate_stirap,
    stirap_frame,
    stirap_schedule,
)
from hamctrl.core import random_hermitian
from oracles import schrodinger_ode

# Canonical set integrated with K=20000 slices; the adaptive ODE oracle
# (test_reference_matches_ode_oracle) agrees to 1e-8.
REF_EFFICIENCY = 0.9912758531
REF_MAX_INTERMEDIATE = 0.0096789391


def test_lambda_rwa_examples():
    np.testing.assert_allclose(np.linalg.eigvalsh(lambda_rwa(3, 4)), [-5, 0, 5], atol=1e-12)
    np.testing.assert_array_equal(lambda_rwa(0, 0), np.zeros((3, 3)))
    h = lambda_rwa(1.3, 0.4)
    assert h[0, 1] == -1.3 and h[1, 2] == -0.4
    dark = np.array([0.4, 0.0, -1.3])
    assert np.max(np.abs(h @ dark)) <= 1e-12
    with pytest.raises(ValueError):
        lambda_rwa(np.nan, 1.0)


def test_lambda_rwa_spectrum_hundred_pairs():
    rng = np.random.default_rng(15)
    for w1, w2 in rng.normal(scale=5, size=(100, 2)):
        om = math.hypot(w1, w2)
        np.testing.assert_allclose(np.linalg.eigvalsh(lambda_rwa(w1, w2)), [-om, 0, om], atol=1e-12)


def test_mixing_angle_examples():
    assert mixing_angle(0, 2.0) == 0.0
    np.testing.assert_allclose(dark_state(0, 2.0), [1, 0, 0])
    assert mixing_angle(1.5, 1.5) == pytest.approx(np.pi / 4)
    assert mixing_angle(1.0, 0) == pytest.approx(np.pi / 2)
    np.testing.assert_allclose(dark_state(1.0, 0), [0, 0, -1], atol=1e-15)
    assert mixing_angle(-1.0, 1.0) == pytest.approx(np.pi / 4)
    with pytest.raises(ValueError):
        mixing_angle(0, 0)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_dark_state_is_null_vector(w1, w2):
    if math.hypot(w1, w2) < 1e-6:
        return
    d = dark_state(w1, w2)
    assert abs(np.linalg.norm(d) - 1) <= 1e-12
    assert d[1] == 0
    if w1 >= 0 and w2 >= 0:
        assert np.max(np.abs(lambda_rwa(w1, w2) @ d)) <= 1e-12 * max(1, abs(w1), abs(w2))


def test_params_validation():
    with pytest.raises(ValueError):
        StirapParams(width=0)
    with pytest.raises(ValueError):
        StirapParams(tf=0)
    with pytest.raises(ValueError):
        StirapParams(slices=5)
    with pytest.raises(ValueError, match="outside"):
        StirapParams(delay=30)


def test_schedule_examples():
    p = StirapParams()
    sched = stirap_schedule(p)
    assert sched.n_slices == 2000 and sched.n_controls == 2
    mids = sched.midpoints()
    assert mids[np.argmax(sched.values[:, 1])] < mids[np.argmax(sched.values[:, 0])]
    k = int(np.argmin(np.abs(mids - p.pump_peak)))
    assert sched.values[k, 0] == pytest.approx(10 * math.exp(-((mids[k] - p.pump_peak) ** 2) / 2))
    same = stirap_schedule(StirapParams(delay=0.0))
    np.testing.assert_array_equal(same.values[:, 0], same.values[:, 1])


def test_eigenframe_examples(rng):
    h = random_hermitian(3, rng)
    frame = eigenframe([h] * 5)
    for k in range(5):
        np.testing.assert_array_equal(frame.eigenvectors[k], frame.eigenvectors[0])
        np.testing.assert_array_equal(frame.eigenvalues[k], frame.eigenvalues[0])
    assert adiabaticity_margin(frame) == 0.0
    pair = eigenframe([h, -h])
    np.testing.assert_allclose(pair.eigenvalues[1], -pair.eigenvalues[0], atol=1e-12)
    for n in range(3):
        assert abs(np.vdot(pair.eigenvectors[0][:, n], pair.eigenvectors[1][:, n])) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        eigenframe([])
    with pytest.raises(ValueError):
        adiabaticity_margin(eigenframe([h]))


def test_eigenframe_tracks_crossing():
    # two levels cross at s = 0.5; curves must keep their identity
    hs = [np.diag([s, 1 - s, 5.0]) for s in np.linspace(0, 1, 11)]
    frame = eigenframe(hs)
    np.testing.assert_allclose(frame.eigenvalues[:, 0], np.linspace(0, 1, 11))
    np.testing.assert_allclose(frame.eigenvalues[-1], [1, 0, 5])


def test_stirap_frame_invariants():
    p = StirapParams(slices=400)
    frame = stirap_frame(p)
    for k in range(0, len(frame.times), 7):
        h = lambda_rwa(p.pump(frame.times[k]), p.stokes(frame.times[k]))
        v, e = frame.eigenvectors[k], frame.eigenvalues[k]
        assert np.max(np.abs(h @ v - v * e)) <= 1e-9
    ov = np.einsum("kin,kin->kn", frame.eigenvectors[:-1].conj(), frame.eigenvectors[1:])
    assert np.all(ov.real >= 0)
    assert np.max(np.abs(frame.eigenvalues[:, 1])) <= 1e-12
    assert np.max(np.abs(frame.eigenvectors[:, 1, 1])) <= 1e-12


def test_adiabaticity_margin_canonical_and_scaling():
    canonical = adiabaticity_margin(stirap_frame(StirapParams()))
    assert canonical < 0.1
    half = adiabaticity_margin(stirap_frame(StirapParams().scaled(0.5)))
    assert half / canonical == pytest.approx(2.0, rel=0.05)


def test_adiabaticity_margin_gap_closure():
    frame = eigenframe([np.diag([0.0, 0.0, 1.0]), np.diag([0.0, 0.0, 1.0])], [0.0, 1.0])
    with pytest.raises(ValueError, match="gap"):
        adiabaticity_margin(frame, track=0, gap_floor=0.0)


def test_reference_matches_ode_oracle():
    p = StirapParams()
    ts = np.linspace(p.t0, p.tf, 2001)
    psi = schrodinger_ode(lambda s: lambda_rwa(p.pump(s), p.stokes(s)), [1, 0, 0], (p.t0, p.tf), ts)
    pops = np.abs(psi) ** 2
    assert pops[-1, 2] == pytest.approx(REF_EFFICIENCY, abs=1e-8)
    assert pops[:, 1].max() == pytest.approx(REF_MAX_INTERMEDIATE, abs=1e-7)


def test_canonical_stirap():
    res = simulate_stirap(StirapParams())
    assert res.efficiency >= 0.99 and res.max_intermediate <= 0.02
    assert res.efficiency == pytest.approx(REF_EFFICIENCY, abs=1e-6)
    assert res.max_intermediate == pytest.approx(REF_MAX_INTERMEDIATE, abs=1e-5)
    assert res.dark_overlap_min >= 0.98
    assert np.all(res.populations >= -1e-12) and np.all(res.populations <= 1 + 1e-9)
    np.testing.assert_allclose(res.populations.sum(axis=1), 1, atol=1e-10)


def test_zero_fields_leave_ground_state():
    res = simulate_stirap(StirapParams(omega0=0.0, slices=50))
    assert res.efficiency == 0.0
    np.testing.assert_allclose(res.populations[-1], [1, 0, 0])


def test_intuitive_order_is_worse():
    canonical = simulate_stirap(StirapParams()).efficiency
    intuitive = simulate_stirap(StirapParams(delay=-1.2)).efficiency
    assert intuitive < canonical


def test_efficiency_monotone_in_duration():
    base = StirapParams()
    effs = [simulate_stirap(base.scaled(f)).efficiency for f in (0.5, 1.0, 2.0)]
    assert effs[0] <= effs[1] <= effs[2]
